#include <doctest.h>

#include "knot/curve.hpp"
#include "knot/moebius.hpp"
#include "knot/topology.hpp"

#include <cmath>

using knot::Index;
using knot::pi;
using knot::Vec3;

TEST_SUITE("topology") {

TEST_CASE("planar circle projects without crossings") {
  auto circle = knot::sample(knot::make_circle<double>(), 256);
  CHECK(knot::projection_crossings(circle, Vec3<double>(0, 0, 1)) == 0);
  // shared endpoints between adjacent segments never count as crossings,
  // even on a coarse polygon
  auto coarse = knot::sample(knot::make_circle<double>(), 8);
  CHECK(knot::projection_crossings(coarse, Vec3<double>(0, 0, 1)) == 0);

  // in-plane direction: the projected polygon collapses to a line
  CHECK_FALSE(knot::try_projection_crossings(circle, Vec3<double>(1, 0, 0)).has_value());
  CHECK_THROWS_AS(knot::projection_crossings(circle, Vec3<double>(1, 0, 0)),
                  knot::geometry_error);

  auto report = knot::crossing_stats(circle, 60);
  CHECK(report.min_count == 0);
  CHECK(report.mean_count == 0.0);  // convex planar curve: every projection is simple
  CHECK(report.directions_used == 60);
  CHECK(static_cast<int>(report.counts.size()) == 60);
  CHECK(report.directions.cols() == 60);
}

TEST_CASE("trefoil projections reach the crossing number") {
  auto trefoil = knot::sample(knot::make_torus_knot<double>(2, 3, 2.0, 1.0), 512);
  // the exact symmetry axis puts one crossing on shared sample vertices
  // (u = pi/2 and 3 pi/2 project to the same point): a degenerate diagram
  CHECK_THROWS_AS(knot::projection_crossings(trefoil, Vec3<double>(0, 0, 1)),
                  knot::geometry_error);
  CHECK(knot::projection_crossings(trefoil, Vec3<double>(0.02, 0.013, 1.0)) == 3);

  auto report = knot::crossing_stats(trefoil, 200);
  CHECK(report.min_count == 3);  // embedded trefoil: no projection shows fewer
  CHECK(report.mean_count >= 3.0);
  for (int c : report.counts) CHECK(c >= 3);
}

TEST_CASE("figure-eight projections reach four crossings") {
  auto fig8 = knot::sample(knot::make_figure_eight<double>(), 512);
  auto report = knot::crossing_stats(fig8, 200);
  CHECK(report.min_count == 4);
  for (int c : report.counts) CHECK(c >= 4);
}

TEST_CASE("counts are rotation invariant") {
  auto trefoil = knot::sample(knot::make_torus_knot<double>(2, 3, 2.0, 1.0), 384);
  knot::Mat3<double> R;
  double a = 0.9, b = 0.4;
  knot::Mat3<double> Rz, Rx;
  Rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  Rx << 1, 0, 0, 0, std::cos(b), -std::sin(b), 0, std::sin(b), std::cos(b);
  R = Rx * Rz;
  auto rotated = knot::apply_to_curve(knot::MoebiusMap<double>::rotation(R), trefoil);
  for (const auto& d : {Vec3<double>(0.1, -0.2, 0.97), Vec3<double>(0.3, -0.5, 0.81),
                        Vec3<double>(0.7, 0.7, 0.14)}) {
    Vec3<double> dn = d.normalized();
    CHECK(knot::projection_crossings(trefoil, dn) ==
          knot::projection_crossings(rotated, Vec3<double>(R * dn)));
  }
}

TEST_CASE("min count is monotone in the direction budget") {
  auto trefoil = knot::sample(knot::make_torus_knot<double>(2, 3, 2.0, 1.0), 256);
  auto small = knot::crossing_stats(trefoil, 50);
  auto large = knot::crossing_stats(trefoil, 150);
  CHECK(large.min_count <= small.min_count);  // shared deterministic prefix
  CHECK_THROWS_AS(knot::crossing_stats(trefoil, 10), std::invalid_argument);
}

TEST_CASE("random direction mode is seeded and comparable") {
  auto trefoil = knot::sample(knot::make_torus_knot<double>(2, 3, 2.0, 1.0), 256);
  auto r1 = knot::crossing_stats(trefoil, 60, 9, knot::DirectionMode::random);
  auto r2 = knot::crossing_stats(trefoil, 60, 9, knot::DirectionMode::random);
  CHECK(r1.counts == r2.counts);
  CHECK(r1.min_count >= 3);
}

TEST_CASE("energy-crossing bound reports") {
  knot::CrossingReport<double> crossings;
  crossings.min_count = 3;
  auto bound = knot::check_energy_crossing_bound(74.0, crossings);
  CHECK(bound.bound_satisfied);
  CHECK(bound.crossing_upper_from_energy ==
        doctest::Approx((74.0 - 4) / (2 * pi<double>())).epsilon(1e-14));
  CHECK_FALSE(bound.unknot_certified);
  CHECK(bound.bound_slack == doctest::Approx(74.0 - (6 * pi<double>() + 4)).epsilon(1e-12));

  crossings.min_count = 0;
  auto circle_bound = knot::check_energy_crossing_bound(4.00002, crossings);
  CHECK(circle_bound.bound_satisfied);
  CHECK(circle_bound.unknot_certified);  // 4 < 6 pi + 4

  auto low = knot::check_energy_crossing_bound(20.0, crossings);
  CHECK(low.unknot_certified);
  CHECK(low.threshold == doctest::Approx(6 * pi<double>() + 4).epsilon(1e-15));

  // an inconsistent pair is flagged, not silently accepted
  crossings.min_count = 5;
  CHECK_FALSE(knot::check_energy_crossing_bound(20.0, crossings).bound_satisfied);
}

TEST_CASE("knot count bounds") {
  auto [lo3, hi3] = knot::knot_count_bounds<double>(3);
  CHECK(lo3 == 8.0);
  CHECK(hi3 == 27648.0);
  auto [lo1, hi1] = knot::knot_count_bounds<double>(1);
  CHECK(lo1 == 2.0);
  CHECK(hi1 == 48.0);
  auto [lo10, hi10] = knot::knot_count_bounds<double>(10);
  CHECK(lo10 == 1024.0);
  CHECK(hi10 == 2.0 * std::pow(24.0, 10));
  CHECK(std::isfinite(knot::knot_count_bounds<double>(200).second));  // no overflow
  CHECK_THROWS_AS(knot::knot_count_bounds<double>(0), std::invalid_argument);
}

TEST_CASE("energy knot count bound") {
  auto bound = knot::energy_knot_count_bound(74.0);
  CHECK_FALSE(bound.below_minimum);
  CHECK(bound.value ==
        doctest::Approx(2 * std::pow(24.0, 70.0 / (2 * pi<double>()))).epsilon(1e-14));

  // below the circle energy no closed curve exists
  auto low = knot::energy_knot_count_bound(3.0);
  CHECK(low.below_minimum);
  CHECK(low.value == 1.0);

  // at the unknot threshold the bound admits at least the unknot
  CHECK(knot::energy_knot_count_bound(6 * pi<double>() + 4).value >= 1.0);

  // the printed decimal form is good to about half a percent at low energy
  double printed = 0.264 * std::pow(1.658, 10.0);
  CHECK(std::abs(knot::energy_knot_count_bound(10.0).value - printed) / printed < 5e-3);
}

}  // test suite
