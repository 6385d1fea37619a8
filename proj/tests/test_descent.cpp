#include <doctest.h>

#include "knot/curve.hpp"
#include "knot/descent.hpp"
#include "knot/energy.hpp"

#include <cmath>
#include <random>

using knot::Index;
using knot::pi;

namespace {

knot::Points<double> perturbed_trefoil(Index n, double amplitude) {
  auto base = knot::sample(knot::make_torus_knot<double>(2, 3, 2.0, 1.0), n);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  knot::Points<double> X = base.points;
  for (Index i = 0; i < n; ++i)
    X.col(i) += amplitude * knot::Vec3<double>(gauss(rng), gauss(rng), gauss(rng));
  return X;
}

}  // namespace

TEST_SUITE("descent") {

TEST_CASE("polygon functional equals the curve energy of its import") {
  knot::Points<double> X = perturbed_trefoil(64, 0.01);
  auto [value, ratio] = knot::detail::descent_energy(X);
  knot::QuadratureConfig<double> config;
  config.threads = 1;
  auto report = knot::energy(knot::from_points(X), config);
  CHECK(value == doctest::Approx(report.energy).epsilon(1e-13));
  CHECK(ratio > 0);
}

TEST_CASE("gradient matches central differences") {
  knot::Points<double> X = perturbed_trefoil(48, 0.01);
  knot::Points<double> G = knot::detail::descent_gradient(X);

  // translation invariance: the columns of the gradient sum to zero
  CHECK(G.rowwise().sum().norm() < 1e-10 * G.cwiseAbs().maxCoeff() * double(X.cols()));

  const double h = 1e-6;
  knot::Points<double> Gfd(3, X.cols());
  for (Index i = 0; i < X.cols(); ++i) {
    for (int c = 0; c < 3; ++c) {
      knot::Points<double> Xp = X, Xm = X;
      Xp(c, i) += h;
      Xm(c, i) -= h;
      Gfd(c, i) = (knot::detail::descent_energy(Xp).first -
                   knot::detail::descent_energy(Xm).first) /
                  (2 * h);
    }
  }
  double scale = Gfd.cwiseAbs().maxCoeff();
  double worst = 0;
  for (Index i = 0; i < X.cols(); ++i)
    for (int c = 0; c < 3; ++c)
      worst = std::max(worst, std::abs(G(c, i) - Gfd(c, i)) /
                                  std::max(std::abs(Gfd(c, i)), 1e-3 * scale));
  CHECK(worst < 1e-5);
}

TEST_CASE("the regular polygon is a critical point") {
  const Index n = 256;
  knot::Points<double> X(3, n);
  for (Index i = 0; i < n; ++i) {
    double u = 2 * pi<double>() * double(i) / double(n);
    X.col(i) = knot::Vec3<double>(std::cos(u), std::sin(u), 0.0);
  }
  knot::Points<double> G = knot::detail::descent_gradient(X);
  CHECK(G.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gauge fixing normalizes length and centroid, idempotently") {
  auto ellipse = knot::sample(knot::make_ellipse<double>(2.0, 1.0), 256);
  auto fixed = knot::gauge_fix(ellipse);
  CHECK(fixed.total_length == doctest::Approx(2 * pi<double>()).epsilon(1e-12));
  CHECK(fixed.points.rowwise().mean().norm() < 1e-12);
  // each pass re-measures arc length from the interpolant, so repeated fixes
  // settle to interpolation accuracy rather than reproducing points exactly
  auto again = knot::gauge_fix(fixed);
  CHECK((again.points - fixed.points).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("a circle terminates immediately") {
  knot::DescentConfig<double> config;
  config.n = 64;
  config.max_iters = 50;
  config.threads = 1;
  auto trace = knot::minimize(knot::make_circle<double>(), config);
  CHECK(trace.termination == "converged");
  CHECK(trace.records.size() <= 2);  // initial record, no real travel needed
  CHECK(std::abs(trace.measured_energy - 4.0) < 1e-3);

  auto check = knot::unknot_check_on_trace(trace);
  CHECK(check.certified);
  CHECK(check.first_iteration == 0);
}

TEST_CASE("short trefoil run descends strictly") {
  knot::DescentConfig<double> config;
  config.n = 96;
  config.max_iters = 300;
  config.threads = 1;
  auto trace = knot::minimize(knot::make_torus_knot<double>(2, 3, 2.0, 1.0), config);
  REQUIRE(trace.records.size() > 3);
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    CHECK(trace.records[k].energy < trace.records[k - 1].energy);
    CHECK(trace.records[k].step > 0);
    CHECK(trace.records[k].min_ratio >= config.min_separation);
  }
  CHECK(trace.final_energy == trace.records.back().energy);
  CHECK(trace.measured_n >= 2048);
  // a trefoil can never descend below the unknot threshold
  CHECK(trace.records.back().energy > 6 * pi<double>() + 4);
  CHECK_FALSE(knot::unknot_check_on_trace(trace).certified);
}

TEST_CASE("an ellipse rounds back to the circle") {
  knot::DescentConfig<double> config;
  config.n = 128;
  config.max_iters = 40000;
  config.threads = 1;
  auto trace = knot::minimize(knot::make_ellipse<double>(2.0, 1.0), config);
  CHECK(std::abs(trace.measured_energy - 4.0) < 1e-2);

  // circularity defect of the final polygon
  knot::Vec3<double> centroid = trace.final_curve.points.rowwise().mean();
  knot::Vector<double> radii(trace.final_curve.size());
  for (Index i = 0; i < trace.final_curve.size(); ++i)
    radii[i] = (trace.final_curve.points.col(i) - centroid).norm();
  double mean_r = radii.mean();
  CHECK((radii.array() - mean_r).abs().maxCoeff() / mean_r < 1e-2);

  for (std::size_t k = 1; k < trace.records.size(); ++k)
    CHECK(trace.records[k].energy < trace.records[k - 1].energy);
}

TEST_CASE("unknot certification scans the trace") {
  knot::MinimizeTrace<double> trace;
  for (int k = 0; k < 4; ++k) {
    knot::TraceRecord<double> rec;
    rec.iter = 10 * k;
    rec.energy = 30.0 - 3.5 * k;  // 30, 26.5, 23, 19.5
    trace.records.push_back(rec);
  }
  trace.final_energy = trace.records.back().energy;
  auto check = knot::unknot_check_on_trace(trace);
  CHECK(check.certified);
  CHECK(check.first_iteration == 30);  // 19.5 is the first value below 6 pi + 4
  CHECK(check.threshold == doctest::Approx(6 * pi<double>() + 4).epsilon(1e-15));
}

}  // test suite
