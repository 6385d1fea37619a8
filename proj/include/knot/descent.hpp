#pragma once

#include "knot/curve.hpp"
#include "knot/energy.hpp"
#include "knot/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace knot {

template <typename Scalar>
struct DescentConfig {
  Index n = 200;
  int max_iters = 20000;
  Scalar step_init = Scalar(0);  // <= 0: auto scale 1e-3 l^2 / E
  Scalar step_shrink = Scalar(0.5);
  Scalar step_grow = Scalar(1.1);
  Scalar grad_tol = Scalar(1e-4);  // stop when max|grad| < grad_tol E / l
  int resample_every = 10;
  Scalar min_separation = Scalar(0.02);  // floor on min chord/arc ratio
  int threads = 0;
};

template <typename Scalar>
struct TraceRecord {
  int iter = 0;
  Scalar energy = 0;
  Scalar step = 0;
  Scalar grad_norm = 0;
  Scalar min_ratio = 0;
};

template <typename Scalar>
struct MinimizeTrace {
  std::vector<TraceRecord<Scalar>> records;
  SampledCurve<Scalar> final_curve;
  std::string termination;
  Scalar final_energy = 0;     // last accepted value of the discrete functional
  Scalar measured_energy = 0;  // energy() of the spline-refined final curve
  Index measured_n = 0;
};

namespace detail {

// Discrete geometry of a closed polygon viewed on the uniform parameter grid
// h = 2 pi / N: centered first/second differences, chordal arc table.
template <typename Scalar>
struct PolygonGeometry {
  Scalar h, L;
  Points<Scalar> d, a, e;       // centered diff, second diff, forward edge
  Vector<Scalar> v, dl, s;      // |d|, edge lengths, chordal arc positions
};

template <typename Scalar>
PolygonGeometry<Scalar> polygon_geometry(const Points<Scalar>& X) {
  const Index n = X.cols();
  PolygonGeometry<Scalar> g;
  g.h = 2 * pi<Scalar>() / Scalar(n);
  g.d.resize(3, n);
  g.a.resize(3, n);
  g.e.resize(3, n);
  g.v.resize(n);
  g.dl.resize(n);
  g.s.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index ip = (i + 1) % n, im = (i + n - 1) % n;
    g.d.col(i) = (X.col(ip) - X.col(im)) / (2 * g.h);
    g.a.col(i) = (X.col(ip) - 2 * X.col(i) + X.col(im)) / (g.h * g.h);
    g.e.col(i) = X.col(ip) - X.col(i);
    g.v[i] = g.d.col(i).norm();
    g.dl[i] = g.e.col(i).norm();
  }
  Scalar cum = 0;
  for (Index i = 0; i < n; ++i) {
    g.s[i] = cum;
    cum += g.dl[i];
  }
  g.L = cum;
  return g;
}

// Value of the descent functional together with the embeddedness ratio.
// Identical to energy(from_points(X)).energy, but allocation-light for the
// inner loop.
template <typename Scalar>
std::pair<Scalar, Scalar> descent_energy(const Points<Scalar>& X) {
  const Index n = X.cols();
  auto g = polygon_geometry(X);
  const Scalar h2 = g.h * g.h;
  Scalar off = 0;
  Scalar min_ratio = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i) {
    Scalar row = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      Scalar c2 = (X.col(i) - X.col(j)).squaredNorm();
      Scalar A = std::abs(g.s[i] - g.s[j]);
      Scalar D = std::min(A, g.L - A);
      row += (Scalar(1) / c2 - Scalar(1) / (D * D)) * g.v[i] * g.v[j];
      Index gap = (i > j) ? i - j : j - i;
      gap = std::min(gap, n - gap);
      if (gap >= 2) min_ratio = std::min(min_ratio, std::sqrt(c2) / D);
    }
    off += row * h2;
  }
  Scalar diag = 0;
  for (Index i = 0; i < n; ++i) {
    Scalar q2 = g.d.col(i).cross(g.a.col(i)).squaredNorm();
    Scalar v2 = g.v[i] * g.v[i];
    diag += q2 / (v2 * v2);
  }
  diag *= h2 / Scalar(12);
  return {off + diag, min_ratio};
}

// Exact gradient of the descent functional with respect to the positions.
// The arc-distance part uses a cyclic difference array over the minimizing
// arc's edges; antipodal ties split the sensitivity evenly between the two
// arcs, which restores the symmetry of the round polygon.
template <typename Scalar>
Points<Scalar> descent_gradient(const Points<Scalar>& X) {
  const Index n = X.cols();
  auto g = polygon_geometry(X);
  const Scalar h = g.h, h2 = h * h;
  Points<Scalar> G = Points<Scalar>::Zero(3, n);

  Vector<Scalar> B(n);
  for (Index i = 0; i < n; ++i) {
    Vec3<Scalar> acc = Vec3<Scalar>::Zero();
    Scalar brow = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      Vec3<Scalar> diff = X.col(i) - X.col(j);
      Scalar c2 = diff.squaredNorm();
      Scalar A = std::abs(g.s[i] - g.s[j]);
      Scalar D = std::min(A, g.L - A);
      Scalar K = Scalar(1) / c2 - Scalar(1) / (D * D);
      acc += (-4 * g.v[i] * g.v[j] * h2 / (c2 * c2)) * diff;
      brow += K * g.v[j];
    }
    G.col(i) += acc;
    B[i] = 2 * h2 * brow;
  }
  for (Index i = 0; i < n; ++i) {
    Index ip = (i + 1) % n, im = (i + n - 1) % n;
    Vec3<Scalar> dir = (B[i] / (2 * h * g.v[i])) * g.d.col(i);
    G.col(ip) += dir;
    G.col(im) -= dir;
  }

  // arc-distance sensitivities, accumulated per edge
  Vector<Scalar> edge = Vector<Scalar>::Zero(n);
  Scalar tie_base = 0;
  const Scalar tie_tol = Scalar(1e-9) * g.L;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      Scalar A = g.s[j] - g.s[i];
      Scalar D = std::min(A, g.L - A);
      Scalar gij = 4 * g.v[i] * g.v[j] * h2 / (D * D * D);
      Scalar gap = A - (g.L - A);
      if (std::abs(gap) <= tie_tol) {
        tie_base += gij / 2;
      } else if (gap < 0) {
        edge[i] += gij;
        edge[j] -= gij;
      } else {
        edge[j] += gij;
        edge[0] += gij;
        edge[i] -= gij;
      }
    }
  }
  Scalar run = tie_base;
  for (Index k = 0; k < n; ++k) {
    run += edge[k];
    Vec3<Scalar> dir = run / g.dl[k] * g.e.col(k);
    G.col((k + 1) % n) += dir;
    G.col(k) -= dir;
  }

  // diagonal (curvature band) term
  for (Index i = 0; i < n; ++i) {
    Index ip = (i + 1) % n, im = (i + n - 1) % n;
    Vec3<Scalar> d = g.d.col(i), a = g.a.col(i);
    Vec3<Scalar> q = d.cross(a);
    Scalar v2 = g.v[i] * g.v[i];
    Scalar v4 = v2 * v2, v6 = v4 * v2;
    Vec3<Scalar> t_d = (h2 / 12) * (2 * a.cross(q) / v4 - 4 * q.squaredNorm() * d / v6);
    Vec3<Scalar> t_a = (h2 / 12) * (2 * q.cross(d) / v4);
    G.col(ip) += t_d / (2 * h) + t_a / h2;
    G.col(i) += -2 * t_a / h2;
    G.col(im) += -t_d / (2 * h) + t_a / h2;
  }
  return G;
}

// Center, scale to length 2 pi.
template <typename Scalar>
void gauge_points(Points<Scalar>& X) {
  Vec3<Scalar> centroid = X.rowwise().mean();
  X.colwise() -= centroid;
  Scalar L = 0;
  const Index n = X.cols();
  for (Index i = 0; i < n; ++i) L += (X.col((i + 1) % n) - X.col(i)).norm();
  X *= 2 * pi<Scalar>() / L;
}

// Re-uniformize in chordal arc length by periodic cubic splines.
template <typename Scalar>
Points<Scalar> resample_points(const Points<Scalar>& X) {
  const Index n = X.cols();
  Vector<Scalar> s(n);
  Scalar cum = 0;
  for (Index i = 0; i < n; ++i) {
    s[i] = cum;
    cum += (X.col((i + 1) % n) - X.col(i)).norm();
  }
  CurveSpline<Scalar> spline(s, X, cum);
  Points<Scalar> out(3, n);
  for (Index i = 0; i < n; ++i) out.col(i) = spline.eval(cum * Scalar(i) / Scalar(n));
  return out;
}

}  // namespace detail

// Exact gradient of the discrete energy with respect to the sample positions
// (speeds, arc table, and D recomputed from positions inside the functional).
template <typename Scalar>
Points<Scalar> energy_gradient(const SampledCurve<Scalar>& curve) {
  if (!curve.closed) throw std::invalid_argument("energy_gradient needs a closed curve");
  auto [e, ratio] = detail::descent_energy(curve.points);
  (void)e;
  if (ratio < Scalar(1e-4))
    throw geometry_error("self-intersection guard: min chord/arc ratio below 1e-4");
  return detail::descent_gradient(curve.points);
}

// Centroid to the origin, total length to 2 pi, samples uniform in arc.
template <typename Scalar>
SampledCurve<Scalar> gauge_fix(const SampledCurve<Scalar>& curve) {
  if (!curve.closed) throw std::invalid_argument("gauge_fix needs a closed curve");
  SampledCurve<Scalar> rs = resample_arclength(curve, curve.size());
  Vec3<Scalar> centroid = rs.points.rowwise().mean();
  Scalar sigma = 2 * pi<Scalar>() / rs.total_length;
  rs.points = (rs.points.colwise() - centroid) * sigma;
  rs.speeds *= sigma;
  rs.cum_arclength *= sigma;
  rs.curvatures /= sigma;
  rs.total_length = 2 * pi<Scalar>();
  return rs;
}

template <typename Scalar>
MinimizeTrace<Scalar> minimize(const SampledCurve<Scalar>& start,
                               const DescentConfig<Scalar>& config) {
  const Index n = config.n >= 8 ? config.n : start.size();
  SampledCurve<Scalar> prepared =
      (start.size() == n) ? start : resample_arclength(start, n);
  Points<Scalar> X = prepared.points;
  detail::gauge_points(X);
  X = detail::resample_points(X);
  detail::gauge_points(X);

  MinimizeTrace<Scalar> trace;
  auto [E, ratio] = detail::descent_energy(X);
  if (ratio < config.min_separation)
    throw geometry_error("degenerate start: below the separation guard");
  Scalar step = config.step_init > Scalar(0)
                    ? config.step_init
                    : Scalar(1e-3) * Scalar(4) * pi<Scalar>() * pi<Scalar>() / E;
  trace.records.push_back({0, E, step, Scalar(0), ratio});

  const Scalar l = 2 * pi<Scalar>();
  std::string reason = "max_iters";
  for (int it = 1; it <= config.max_iters; ++it) {
    if (config.resample_every > 0 && it % config.resample_every == 0) {
      Points<Scalar> Xr = detail::resample_points(X);
      detail::gauge_points(Xr);
      auto [Er, rr] = detail::descent_energy(Xr);
      // the spline redistribution is accepted only when it does not break
      // the monotone trace; near convergence it may be skipped harmlessly
      if (Er < E && rr >= config.min_separation) {
        X = Xr;
        E = Er;
        ratio = rr;
      }
    }
    Points<Scalar> G = detail::descent_gradient(X);
    Scalar gn = G.cwiseAbs().maxCoeff();
    if (gn < config.grad_tol * E / l) {
      reason = "converged";
      break;
    }
    bool accepted = false;
    bool barrier_seen = false;
    while (step > Scalar(1e-18)) {
      Points<Scalar> Xn = X - step * G;
      // Mesh guard: letting samples pile up is a spurious energy sink for the
      // discrete functional (collapsed edges zero out their quadrature
      // weights), and once arc gaps shrink toward rounding scale the arc term
      // loses all accuracy. Steps that crush the shortest edge below 1% of
      // the mean edge are rejected like any failed step.
      Scalar lp = 0, emin = std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < n; ++i) {
        Scalar el = (Xn.col((i + 1) % n) - Xn.col(i)).norm();
        lp += el;
        emin = std::min(emin, el);
      }
      if (emin < Scalar(1e-2) * lp / Scalar(n)) {
        step *= config.step_shrink;
        continue;
      }
      auto [En, rn] = detail::descent_energy(Xn);
      if (rn < config.min_separation) {
        barrier_seen = true;
        step *= config.step_shrink;
        continue;
      }
      // the functional is a sum of nonnegative terms; a negative or non-finite
      // value can only be numerical breakdown, never progress
      if (!(En >= Scalar(0))) {
        step *= config.step_shrink;
        continue;
      }
      if (En < E) {
        X = Xn;
        E = En;
        ratio = rn;
        step *= config.step_grow;
        accepted = true;
        break;
      }
      step *= config.step_shrink;
    }
    if (!accepted) {
      reason = barrier_seen ? "barrier" : "stalled";
      break;
    }
    trace.records.push_back({it, E, step, gn, ratio});
  }

  trace.termination = reason;
  trace.final_energy = E;
  trace.final_curve = from_points(X);

  // measure the converged shape with the exact-speed quadrature on a spline
  // refinement; the raw functional carries an O(1/N) chordal bias
  Index fine = std::max<Index>(2048, 4 * n);
  SampledCurve<Scalar> refined = resample_arclength(trace.final_curve, fine);
  QuadratureConfig<Scalar> qc;
  qc.threads = config.threads;
  trace.measured_energy = energy(refined, qc).energy;
  trace.measured_n = fine;
  return trace;
}

template <typename Scalar>
MinimizeTrace<Scalar> minimize(const ParamCurve<Scalar>& start,
                               const DescentConfig<Scalar>& config) {
  Index n = config.n >= 8 ? config.n : 200;
  return minimize(resample_arclength(sample(start, std::max<Index>(512, n)), n), config);
}

template <typename Scalar>
struct UnknotCheck {
  bool certified = false;
  int first_iteration = -1;
  Scalar threshold = 6 * pi<Scalar>() + 4;
  Scalar final_energy = 0;
};

// First iteration whose energy drops below 6 pi + 4; from there on the
// iterate is certifiably unknotted.
template <typename Scalar>
UnknotCheck<Scalar> unknot_check_on_trace(const MinimizeTrace<Scalar>& trace) {
  UnknotCheck<Scalar> out;
  out.final_energy = trace.final_energy;
  for (const auto& rec : trace.records) {
    if (rec.energy < out.threshold) {
      out.certified = true;
      out.first_iteration = rec.iter;
      break;
    }
  }
  return out;
}

}  // namespace knot
