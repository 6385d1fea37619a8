#pragma once

#include "knot/curve.hpp"
#include "knot/parallel.hpp"
#include "knot/types.hpp"

#include <cmath>
#include <limits>

namespace knot {

enum class DiagonalMode { limit, exclude_adjacent };

template <typename Scalar>
struct QuadratureConfig {
  Index n = 0;                                      // sample count (filled from the curve)
  Scalar epsilon = Scalar(0);                       // 0: full energy with diagonal treatment
  DiagonalMode diagonal_mode = DiagonalMode::limit;
  int threads = 0;                                  // 0: resolve from environment
};

template <typename Scalar>
struct EnergyReport {
  Scalar energy = Scalar(0);
  Scalar chord_term = Scalar(0);           // sum of 1/|chord|^2 terms (plus diagonal band)
  Scalar regularization_term = Scalar(0);  // sum of 1/D^2 terms, subtracted from chord_term
  QuadratureConfig<Scalar> config;
  Scalar error_estimate = Scalar(0);
};

template <typename Scalar>
Scalar arc_distance(Scalar s_u, Scalar s_v, Scalar total_length, bool closed) {
  Scalar d = std::abs(s_u - s_v);
  return closed ? std::min(d, total_length - d) : d;
}

// Kernel value at a sample pair, speeds included, quadrature weights not:
// off-diagonal (1/c^2 - 1/D^2) v_i v_j, diagonal limit kappa^2/12 v^2.
template <typename Scalar>
Scalar integrand(const SampledCurve<Scalar>& curve, const CurvatureSample<Scalar>& curvatures,
                 Index i, Index j) {
  if (i == j) {
    Scalar kv = curvatures.values[i] * curve.speeds[i];
    return kv * kv / Scalar(12);
  }
  Scalar c2 = (curve.points.col(i) - curve.points.col(j)).squaredNorm();
  if (c2 == Scalar(0))
    throw geometry_error("coincident distinct samples: curve self-intersects at resolution");
  Scalar D = arc_distance(curve.cum_arclength[i], curve.cum_arclength[j],
                          curve.total_length, curve.closed);
  return (Scalar(1) / c2 - Scalar(1) / (D * D)) * curve.speeds[i] * curve.speeds[j];
}

namespace detail {

// Trapezoid weights in the stored parameter (cyclic for closed curves).
template <typename Scalar>
Vector<Scalar> quadrature_weights(const Vector<Scalar>& params, bool closed, Scalar period) {
  Index n = params.size();
  Vector<Scalar> w(n);
  if (closed) {
    for (Index i = 0; i < n; ++i) {
      Scalar next = (i + 1 < n) ? params[i + 1] : params[0] + period;
      Scalar prev = (i > 0) ? params[i - 1] : params[n - 1] - period;
      w[i] = (next - prev) / 2;
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      Scalar next = (i + 1 < n) ? params[i + 1] : params[i];
      Scalar prev = (i > 0) ? params[i - 1] : params[i];
      w[i] = (next - prev) / 2;
    }
  }
  return w;
}

template <typename Scalar>
struct PairSums {
  Scalar chord = 0, reg = 0, diag = 0;
  Scalar min_ratio = std::numeric_limits<Scalar>::infinity();
  bool coincident = false;
};

// Double sum decomposed into rows. Row i accumulates j in ascending order and
// rows are folded in ascending i; the result is bitwise independent of the
// worker count. epsilon > 0 keeps only pairs with D >= epsilon and no
// diagonal; exclude_adjacent drops |i-j| <= 1 (cyclic) instead of using the
// diagonal limit.
template <typename Scalar>
PairSums<Scalar> pair_sums(const SampledCurve<Scalar>& curve, const Vector<Scalar>& curvatures,
                           const QuadratureConfig<Scalar>& config) {
  const Index n = curve.size();
  const Vector<Scalar> w =
      quadrature_weights<Scalar>(curve.params, curve.closed, 2 * pi<Scalar>());
  const bool truncated = config.epsilon > Scalar(0);
  const bool with_diag = !truncated && config.diagonal_mode == DiagonalMode::limit;
  const bool drop_adjacent = !truncated && config.diagonal_mode == DiagonalMode::exclude_adjacent;
  const int threads = resolve_threads(config.threads);

  Vector<Scalar> chord_rows(n), reg_rows(n), ratio_rows(n);
  Eigen::Matrix<bool, Eigen::Dynamic, 1> bad(n);

  // Both running sums are compensated: the chord and arc totals are large and
  // cancel against each other, so plain-accumulation residue would dominate
  // the scale invariance of the final difference.
  parallel_for(n, threads, [&](Index i) {
    Scalar crow = 0, ccomp = 0, rrow = 0, rcomp = 0;
    Scalar min_ratio = std::numeric_limits<Scalar>::infinity();
    bool coincident = false;
    const Scalar si = curve.cum_arclength[i];
    const Scalar vwi = curve.speeds[i] * w[i];
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      Index gap = (i > j) ? i - j : j - i;
      if (curve.closed) gap = std::min<Index>(gap, n - gap);
      if (drop_adjacent && gap <= 1) continue;
      Scalar c2 = (curve.points.col(i) - curve.points.col(j)).squaredNorm();
      Scalar D = arc_distance(si, curve.cum_arclength[j], curve.total_length, curve.closed);
      if (gap >= 2) {
        if (c2 == Scalar(0)) coincident = true;
        else min_ratio = std::min(min_ratio, std::sqrt(c2) / D);
      }
      if (truncated && D < config.epsilon) continue;
      Scalar vw = vwi * curve.speeds[j] * w[j];
      Scalar cy = vw / c2 - ccomp, ct = crow + cy;
      ccomp = (ct - crow) - cy;
      crow = ct;
      Scalar ry = vw / (D * D) - rcomp, rt = rrow + ry;
      rcomp = (rt - rrow) - ry;
      rrow = rt;
    }
    chord_rows[i] = crow;
    reg_rows[i] = rrow;
    ratio_rows[i] = min_ratio;
    bad[i] = coincident;
  });

  PairSums<Scalar> out;
  Scalar ccomp = 0, rcomp = 0;
  for (Index i = 0; i < n; ++i) {
    Scalar cy = chord_rows[i] - ccomp, ct = out.chord + cy;
    ccomp = (ct - out.chord) - cy;
    out.chord = ct;
    Scalar ry = reg_rows[i] - rcomp, rt = out.reg + ry;
    rcomp = (rt - out.reg) - ry;
    out.reg = rt;
    out.min_ratio = std::min(out.min_ratio, ratio_rows[i]);
    out.coincident |= bad[i];
  }
  if (with_diag) {
    for (Index i = 0; i < n; ++i) {
      Scalar kv = curvatures[i] * curve.speeds[i] * w[i];
      out.diag += kv * kv / Scalar(12);
    }
  }
  return out;
}

template <typename Scalar>
SampledCurve<Scalar> stride2(const SampledCurve<Scalar>& in) {
  Index n = in.size() / 2;
  SampledCurve<Scalar> out;
  out.closed = in.closed;
  out.total_length = in.total_length;
  out.length_error_estimate = in.length_error_estimate;
  out.points.resize(3, n);
  out.tangents.resize(3, n);
  out.speeds.resize(n);
  out.params.resize(n);
  out.curvatures.resize(n);
  out.cum_arclength.resize(n);
  for (Index i = 0; i < n; ++i) {
    out.points.col(i) = in.points.col(2 * i);
    out.tangents.col(i) = in.tangents.col(2 * i);
    out.speeds[i] = in.speeds[2 * i];
    out.params[i] = in.params[2 * i];
    out.curvatures[i] = in.curvatures[2 * i];
    out.cum_arclength[i] = in.cum_arclength[2 * i];
  }
  return out;
}

template <typename Scalar>
EnergyReport<Scalar> energy_impl(const SampledCurve<Scalar>& curve,
                                 QuadratureConfig<Scalar> config, bool with_estimate) {
  const Index n = curve.size();
  if (n < 8) throw std::invalid_argument("need N >= 8 samples");
  if (config.epsilon < Scalar(0) ||
      (config.epsilon > Scalar(0) && !(config.epsilon < curve.total_length / 2)))
    throw std::invalid_argument("epsilon must lie in [0, total_length/2)");
  config.n = n;

  auto sums = pair_sums<Scalar>(curve, curve.curvatures, config);
  if (sums.coincident)
    throw geometry_error("coincident distinct samples: curve self-intersects at resolution");
  if (sums.min_ratio < Scalar(1e-4))
    throw geometry_error("self-intersection guard: min chord/arc ratio below 1e-4");

  EnergyReport<Scalar> report;
  report.config = config;
  report.chord_term = sums.chord + sums.diag;
  report.regularization_term = sums.reg;
  report.energy = report.chord_term - report.regularization_term;

  if (with_estimate && n % 2 == 0 && n / 2 >= 8) {
    auto half = energy_impl(stride2(curve), config, false);
    report.error_estimate = std::abs(report.energy - half.energy);
  }
  return report;
}

}  // namespace detail

// Full energy of a closed sampled curve (config.epsilon == 0), or the
// truncated sum when epsilon > 0.
template <typename Scalar>
EnergyReport<Scalar> energy(const SampledCurve<Scalar>& curve,
                            const QuadratureConfig<Scalar>& config = {}) {
  if (!curve.closed)
    throw std::invalid_argument("energy() needs a closed curve; use open_energy()");
  return detail::energy_impl(curve, config, true);
}

template <typename Scalar>
EnergyReport<Scalar> truncated_energy(const SampledCurve<Scalar>& curve, Scalar epsilon,
                                      int threads = 0) {
  if (!(epsilon > Scalar(0)))
    throw std::invalid_argument("truncated_energy needs epsilon > 0");
  QuadratureConfig<Scalar> config;
  config.epsilon = epsilon;
  config.threads = threads;
  return energy(curve, config);
}

// The subtracted arc-distance integral, evaluated in closed form: for any
// closed curve of length l and cutoff epsilon the value is 4 - 2l/epsilon.
template <typename Scalar>
Scalar regularization_closed_form(Scalar total_length, Scalar epsilon) {
  if (!(epsilon > Scalar(0)) || !(epsilon < total_length / 2))
    throw std::invalid_argument("epsilon must lie in (0, total_length/2)");
  return Scalar(4) - 2 * total_length / epsilon;
}

// Direct numeric quadrature of the same term on the N-cell arc-length grid:
// 4-point Gauss-Legendre per cell of -1/D(w)^2 with the admissible region
// D >= epsilon split exactly at the cutoff. Cross-checks the closed form.
template <typename Scalar>
Scalar regularization_quadrature(Scalar total_length, Scalar epsilon, Index N) {
  if (!(epsilon > Scalar(0)) || !(epsilon < total_length / 2))
    throw std::invalid_argument("epsilon must lie in (0, total_length/2)");
  if (N < 8) throw std::invalid_argument("need N >= 8 cells");
  static const Scalar gx[4] = {Scalar(-0.8611363115940526), Scalar(-0.3399810435848563),
                               Scalar(0.3399810435848563), Scalar(0.8611363115940526)};
  static const Scalar gw[4] = {Scalar(0.3478548451374538), Scalar(0.6521451548625461),
                               Scalar(0.6521451548625461), Scalar(0.3478548451374538)};
  const Scalar l = total_length;
  const Scalar h = l / Scalar(N);
  auto panel = [&](Scalar a, Scalar b) {
    Scalar mid = (a + b) / 2, half = (b - a) / 2, acc = 0;
    for (int k = 0; k < 4; ++k) {
      Scalar wv = mid + half * gx[k];
      Scalar D = std::min(wv, l - wv);
      acc += gw[k] / (D * D);
    }
    return acc * half;
  };
  Scalar total = 0;
  for (Index c = 0; c < N; ++c) {
    Scalar a = h * Scalar(c), b = h * Scalar(c + 1);
    // clip [a,b] to the admissible set {w : epsilon <= w <= l - epsilon}
    Scalar lo = std::max(a, epsilon), hi = std::min(b, l - epsilon);
    if (lo < hi) total += panel(lo, hi);
  }
  return -l * total;
}

// Open curve through infinity: energy of the arc-length window around
// center_s, with the tail estimate |E(window) - E(window/2)| reported as
// error_estimate. Assumes arc-length parametrization (params == arc length),
// which is what puncture_at produces.
template <typename Scalar>
EnergyReport<Scalar> open_energy(const SampledCurve<Scalar>& curve, Scalar window,
                                 Scalar center_s, int threads = 0) {
  if (curve.closed) throw std::invalid_argument("open_energy needs an open curve");
  const Index n = curve.size();

  auto windowed = [&](Scalar half_width) {
    SampledCurve<Scalar> sub;
    sub.closed = false;
    std::vector<Index> keep;
    keep.reserve(n);
    for (Index i = 0; i < n; ++i)
      if (std::abs(curve.cum_arclength[i] - center_s) <= half_width) keep.push_back(i);
    Index m = static_cast<Index>(keep.size());
    if (m < 8) throw std::invalid_argument("window too small: fewer than 8 samples retained");
    sub.points.resize(3, m);
    sub.speeds.resize(m);
    sub.params.resize(m);
    sub.cum_arclength.resize(m);
    sub.tangents.resize(3, m);
    for (Index k = 0; k < m; ++k) {
      sub.points.col(k) = curve.points.col(keep[k]);
      sub.speeds[k] = curve.speeds[keep[k]];
      sub.params[k] = curve.params[keep[k]];
      sub.cum_arclength[k] = curve.cum_arclength[keep[k]];
      sub.tangents.col(k) = curve.tangents.col(keep[k]);
    }
    sub.total_length = sub.cum_arclength[m - 1] - sub.cum_arclength[0];
    sub.curvatures = detail::fd_curvature_open(sub.points, sub.cum_arclength);
    return sub;
  };

  Scalar max_half = std::min(center_s - curve.cum_arclength[0],
                             curve.cum_arclength[n - 1] - center_s);
  if (!(window > Scalar(0)) || window > max_half) window = max_half;

  QuadratureConfig<Scalar> config;
  config.threads = threads;

  SampledCurve<Scalar> full = windowed(window);
  config.n = full.size();
  auto sums = detail::pair_sums<Scalar>(full, full.curvatures, config);
  if (sums.coincident)
    throw geometry_error("coincident distinct samples on the open curve");

  EnergyReport<Scalar> report;
  report.config = config;
  report.chord_term = sums.chord + sums.diag;
  report.regularization_term = sums.reg;
  report.energy = report.chord_term - report.regularization_term;

  SampledCurve<Scalar> half = windowed(window / 2);
  auto hsums = detail::pair_sums<Scalar>(half, half.curvatures, config);
  Scalar e_half = hsums.chord + hsums.diag - hsums.reg;
  report.error_estimate = std::abs(report.energy - e_half);
  return report;
}

// Midpoint-centered overload for generic open arcs (straight segments etc).
template <typename Scalar>
EnergyReport<Scalar> open_energy(const SampledCurve<Scalar>& curve, Scalar window = Scalar(0),
                                 int threads = 0) {
  Scalar center = (curve.cum_arclength[0] + curve.cum_arclength[curve.size() - 1]) / 2;
  return open_energy(curve, window, center, threads);
}

// Open arc-length-parametrized curve from positions and arc positions.
template <typename Scalar>
SampledCurve<Scalar> make_open_arclength(const Points<Scalar>& P, const Vector<Scalar>& s) {
  Index n = P.cols();
  if (n < 8) throw std::invalid_argument("need N >= 8 samples");
  if (s.size() != n) throw std::invalid_argument("points/arc-length size mismatch");
  SampledCurve<Scalar> out;
  out.closed = false;
  out.points = P;
  out.params = s;
  out.cum_arclength = s;
  out.speeds = Vector<Scalar>::Ones(n);
  out.total_length = s[n - 1] - s[0];
  out.tangents.resize(3, n);
  for (Index i = 0; i < n; ++i) {
    Index a = (i > 0) ? i - 1 : i, b = (i + 1 < n) ? i + 1 : i;
    Vec3<Scalar> d = P.col(b) - P.col(a);
    Scalar nrm = d.norm();
    if (!(nrm > Scalar(0))) throw geometry_error("coincident neighbor samples");
    out.tangents.col(i) = d / nrm;
  }
  out.curvatures = detail::fd_curvature_open(P, s);
  return out;
}

// Convenience accessor used by guards and descent traces.
template <typename Scalar>
Scalar min_chord_arc_ratio(const SampledCurve<Scalar>& curve) {
  const Index n = curve.size();
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 2; j < n; ++j) {
      if (curve.closed && i == 0 && j == n - 1) continue;
      Scalar D = arc_distance(curve.cum_arclength[i], curve.cum_arclength[j],
                              curve.total_length, curve.closed);
      Scalar c = (curve.points.col(i) - curve.points.col(j)).norm();
      best = std::min(best, c / D);
    }
  return best;
}

}  // namespace knot
