#pragma once

#include "knot/curve.hpp"
#include "knot/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace knot {

template <typename Scalar>
struct CrossingReport {
  std::vector<int> counts;       // per accepted direction, aggregation order fixed
  Points<Scalar> directions;     // the directions actually used, for replay
  int min_count = 0;             // upper bound on the knot's crossing number
  Scalar mean_count = 0;         // average crossing number estimate
  int directions_used = 0;
  int degenerate_rejections = 0;
};

template <typename Scalar>
struct BoundReport {
  Scalar energy = 0;
  Scalar crossing_upper_from_energy = 0;  // (E - 4) / (2 pi)
  bool unknot_certified = false;          // energy < 6 pi + 4
  Scalar threshold = 6 * pi<Scalar>() + 4;
  bool bound_satisfied = true;            // 2 pi min_count + 4 <= energy + tol
  Scalar bound_slack = 0;                 // energy - (2 pi min_count + 4)
};

enum class DirectionMode { low_discrepancy, random };

namespace detail {

// Equal-area sphere image of the plastic-ratio additive sequence. The index
// is unbounded, so any prefix is low discrepancy and degenerate draws can
// keep consuming the tail without disturbing earlier directions.
template <typename Scalar>
Vec3<Scalar> low_discrepancy_direction(Index k) {
  const Scalar a1 = Scalar(0.75487766624669276);  // 1/x with x^3 = x + 1
  const Scalar a2 = Scalar(0.56984029099805327);  // 1/x^2
  Scalar u = std::fmod(Scalar(0.5) + Scalar(k) * a1, Scalar(1));
  Scalar v = std::fmod(Scalar(0.5) + Scalar(k) * a2, Scalar(1));
  Scalar z = 1 - 2 * u;
  Scalar rho = std::sqrt(std::max(Scalar(0), 1 - z * z));
  Scalar phi = 2 * pi<Scalar>() * v;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

template <typename Scalar>
Vec3<Scalar> random_direction(std::mt19937_64& rng) {
  std::normal_distribution<Scalar> gauss(Scalar(0), Scalar(1));
  Vec3<Scalar> d(gauss(rng), gauss(rng), gauss(rng));
  while (d.norm() < Scalar(1e-6)) d = Vec3<Scalar>(gauss(rng), gauss(rng), gauss(rng));
  return d.normalized();
}

}  // namespace detail

// Transverse double points of the sample polygon projected along `direction`.
// Works on normalized plane coordinates with an orientation tolerance of
// 1e-12; intersections within 1e-9 of a segment endpoint, nearly parallel
// overlaps, and double points closer than 1e-9 all mark the direction
// degenerate (nullopt) so the caller can redraw.
template <typename Scalar>
std::optional<int> try_projection_crossings(const SampledCurve<Scalar>& curve,
                                            const Vec3<Scalar>& direction) {
  const Index n = curve.size();
  Vec3<Scalar> d = direction.normalized();
  Index least = 0;
  d.cwiseAbs().minCoeff(&least);
  Vec3<Scalar> b1 = Vec3<Scalar>::Unit(least).cross(d).normalized();
  Vec3<Scalar> b2 = d.cross(b1);

  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> q(2, n);
  for (Index i = 0; i < n; ++i) {
    q(0, i) = b1.dot(curve.points.col(i));
    q(1, i) = b2.dot(curve.points.col(i));
  }
  Eigen::Matrix<Scalar, 2, 1> lo = q.rowwise().minCoeff(), hi = q.rowwise().maxCoeff();
  Scalar diag = (hi - lo).norm();
  if (!(diag > Scalar(0))) return std::nullopt;
  q = (q.colwise() - (lo + hi) / 2) / diag;

  const Scalar tol_orient = Scalar(1e-12);
  const Scalar tol_endpoint = Scalar(1e-9);
  auto cross2 = [](const Eigen::Matrix<Scalar, 2, 1>& a,
                   const Eigen::Matrix<Scalar, 2, 1>& b) {
    return a.x() * b.y() - a.y() * b.x();
  };

  for (Index i = 0; i < n; ++i)
    if ((q.col((i + 1) % n) - q.col(i)).norm() < tol_endpoint) return std::nullopt;

  std::vector<Eigen::Matrix<Scalar, 2, 1>> hits;
  int count = 0;
  for (Index i = 0; i < n; ++i) {
    Index i2 = (i + 1) % n;
    for (Index j = i + 1; j < n; ++j) {
      Index j2 = (j + 1) % n;
      if (j == i2 || j2 == i) continue;  // adjacent segments share an endpoint
      Eigen::Matrix<Scalar, 2, 1> p1 = q.col(i), p2 = q.col(i2);
      Eigen::Matrix<Scalar, 2, 1> p3 = q.col(j), p4 = q.col(j2);
      Eigen::Matrix<Scalar, 2, 1> r = p2 - p1, s = p4 - p3;
      Scalar d1 = cross2(s, Eigen::Matrix<Scalar, 2, 1>(p1 - p3));
      Scalar d2 = cross2(s, Eigen::Matrix<Scalar, 2, 1>(p2 - p3));
      Scalar d3 = cross2(r, Eigen::Matrix<Scalar, 2, 1>(p3 - p1));
      Scalar d4 = cross2(r, Eigen::Matrix<Scalar, 2, 1>(p4 - p1));
      // Orientation signs are ambiguous only when a predicate sits inside
      // the tolerance band AND the other segment actually straddles (or is
      // itself ambiguous); far-apart near-parallel pairs stay fine.
      bool small1 = std::abs(d1) <= tol_orient || std::abs(d2) <= tol_orient;
      bool small2 = std::abs(d3) <= tol_orient || std::abs(d4) <= tol_orient;
      bool straddle1 = !small1 && (d1 > 0) != (d2 > 0);
      bool straddle2 = !small2 && (d3 > 0) != (d4 > 0);
      if (straddle1 && straddle2) {
        Scalar t = d1 / (d1 - d2);
        Scalar u = d3 / (d3 - d4);
        if (t < tol_endpoint || t > 1 - tol_endpoint || u < tol_endpoint ||
            u > 1 - tol_endpoint)
          return std::nullopt;
        Eigen::Matrix<Scalar, 2, 1> hit = p1 + t * r;
        for (const auto& other : hits)
          if ((hit - other).norm() < tol_endpoint) return std::nullopt;
        hits.push_back(hit);
        ++count;
      } else if ((small1 && (straddle2 || small2)) || (small2 && straddle1)) {
        return std::nullopt;
      }
    }
  }
  return count;
}

template <typename Scalar>
int projection_crossings(const SampledCurve<Scalar>& curve, const Vec3<Scalar>& direction) {
  auto c = try_projection_crossings(curve, direction);
  if (!c) throw geometry_error("degenerate projection direction; resample the direction");
  return *c;
}

// num_directions accepted projections; degenerate draws are replaced from the
// tail of the lattice (low-discrepancy mode) or by further seeded draws
// (random mode), and counted in degenerate_rejections.
template <typename Scalar>
CrossingReport<Scalar> crossing_stats(const SampledCurve<Scalar>& curve, int num_directions,
                                      unsigned long seed = 0,
                                      DirectionMode mode = DirectionMode::low_discrepancy) {
  if (num_directions < 50) throw std::invalid_argument("need at least 50 directions");
  CrossingReport<Scalar> report;
  report.counts.reserve(num_directions);
  report.directions.resize(3, num_directions);
  std::mt19937_64 rng(seed);
  Index tail = num_directions;  // replacement draws continue down the sequence
  long total = 0;
  int attempts_budget = num_directions;  // more rejections than draws: pathology

  for (int k = 0; k < num_directions; ++k) {
    std::optional<int> c;
    Vec3<Scalar> dir;
    Index idx = Index(k);
    for (;;) {
      dir = (mode == DirectionMode::low_discrepancy)
                ? detail::low_discrepancy_direction<Scalar>(idx)
                : detail::random_direction<Scalar>(rng);
      c = try_projection_crossings(curve, dir);
      if (c) break;
      ++report.degenerate_rejections;
      idx = tail++;
      if (--attempts_budget <= 0)
        throw geometry_error("excessive degeneracy rate in projection sampling");
    }
    report.counts.push_back(*c);
    report.directions.col(k) = dir;
    total += *c;
  }
  report.directions_used = num_directions;
  report.min_count = *std::min_element(report.counts.begin(), report.counts.end());
  report.mean_count = Scalar(total) / Scalar(num_directions);
  return report;
}

// Bound check: 2 pi c + 4 <= E, with unknottedness certified below 6 pi + 4.
template <typename Scalar>
BoundReport<Scalar> check_energy_crossing_bound(Scalar energy,
                                                const CrossingReport<Scalar>& crossings,
                                                Scalar tolerance = Scalar(0.1)) {
  BoundReport<Scalar> out;
  out.energy = energy;
  out.crossing_upper_from_energy = (energy - 4) / (2 * pi<Scalar>());
  out.unknot_certified = energy < out.threshold;
  Scalar floor = 2 * pi<Scalar>() * Scalar(crossings.min_count) + 4;
  out.bound_slack = energy - floor;
  out.bound_satisfied = floor <= energy + tolerance;
  return out;
}

// (2^n, 2 * 24^n) in floating point; exact to representation for small n and
// wide enough for any n asked here.
template <typename Scalar = double>
std::pair<Scalar, Scalar> knot_count_bounds(int n) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  return {std::pow(Scalar(2), Scalar(n)), 2 * std::pow(Scalar(24), Scalar(n))};
}

template <typename Scalar>
struct KnotCountBound {
  Scalar value = 0;
  bool below_minimum = false;  // M < 4: no closed curve exists at that energy
};

// 2 * 24^{-4/(2 pi)} * 24^{M/(2 pi)}, the count of knot types representable
// below energy M.
template <typename Scalar>
KnotCountBound<Scalar> energy_knot_count_bound(Scalar M) {
  KnotCountBound<Scalar> out;
  if (M < Scalar(4)) {
    out.value = Scalar(1);
    out.below_minimum = true;
    return out;
  }
  Scalar expo = (M - 4) / (2 * pi<Scalar>());
  out.value = 2 * std::pow(Scalar(24), expo);
  return out;
}

}  // namespace knot
