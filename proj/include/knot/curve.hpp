#pragma once

#include "knot/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace knot {

// ---------------------------------------------------------------------------
// ParamCurve: closed curve as a trigonometric polynomial per coordinate,
//   gamma(u) = sum_k cos_coef.col(k) cos(k u) + sin_coef.col(k) sin(k u),
// period 2*pi. Column k holds the degree-k amplitudes; sin column 0 is dead.
// ---------------------------------------------------------------------------
template <typename Scalar>
struct ParamCurve {
  Points<Scalar> cos_coef;  // 3 x (K+1)
  Points<Scalar> sin_coef;  // 3 x (K+1)

  ParamCurve() = default;
  ParamCurve(Points<Scalar> c, Points<Scalar> s)
      : cos_coef(std::move(c)), sin_coef(std::move(s)) {
    if (cos_coef.cols() != sin_coef.cols())
      throw std::invalid_argument("coefficient blocks must have equal degree");
    if (cos_coef.cols() < 1)
      throw std::invalid_argument("curve needs at least the constant term");
    if (max_coefficient() == Scalar(0))
      throw std::invalid_argument("degenerate curve: all coefficients zero");
  }

  Index degree() const { return cos_coef.cols() - 1; }

  Scalar max_coefficient() const {
    return std::max(cos_coef.cwiseAbs().maxCoeff(), sin_coef.cwiseAbs().maxCoeff());
  }

  Vec3<Scalar> position(Scalar u) const {
    Vec3<Scalar> p = cos_coef.col(0);
    for (Index k = 1; k < cos_coef.cols(); ++k) {
      Scalar ku = Scalar(k) * u;
      p += cos_coef.col(k) * std::cos(ku) + sin_coef.col(k) * std::sin(ku);
    }
    return p;
  }

  Vec3<Scalar> derivative(Scalar u) const {
    Vec3<Scalar> p = Vec3<Scalar>::Zero();
    for (Index k = 1; k < cos_coef.cols(); ++k) {
      Scalar ku = Scalar(k) * u;
      p += Scalar(k) * (-cos_coef.col(k) * std::sin(ku) + sin_coef.col(k) * std::cos(ku));
    }
    return p;
  }

  Vec3<Scalar> second_derivative(Scalar u) const {
    Vec3<Scalar> p = Vec3<Scalar>::Zero();
    for (Index k = 1; k < cos_coef.cols(); ++k) {
      Scalar ku = Scalar(k) * u;
      p -= Scalar(k * k) * (cos_coef.col(k) * std::cos(ku) + sin_coef.col(k) * std::sin(ku));
    }
    return p;
  }
};

// ---------------------------------------------------------------------------
// SampledCurve: the unit all quadrature and descent operate on. params holds
// the parameter values u_i (uniform from sample(); equal to cum_arclength for
// arc-parametrized open curves). curvatures feed the diagonal limit of the
// energy kernel: exact when the generator is known, finite-difference else.
// ---------------------------------------------------------------------------
template <typename Scalar>
struct SampledCurve {
  Points<Scalar> points;
  Points<Scalar> tangents;
  Vector<Scalar> speeds;
  Vector<Scalar> cum_arclength;
  Vector<Scalar> params;
  Vector<Scalar> curvatures;
  Scalar total_length = Scalar(0);
  bool closed = true;
  Scalar length_error_estimate = Scalar(0);

  Index size() const { return points.cols(); }
};

template <typename Scalar>
struct CurvatureSample {
  Vector<Scalar> values;
};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

template <typename Scalar>
ParamCurve<Scalar> make_circle(Scalar radius = Scalar(1)) {
  if (!(radius > Scalar(0))) throw std::invalid_argument("radius must be positive");
  Points<Scalar> c = Points<Scalar>::Zero(3, 2), s = Points<Scalar>::Zero(3, 2);
  c(0, 1) = radius;
  s(1, 1) = radius;
  return ParamCurve<Scalar>(std::move(c), std::move(s));
}

template <typename Scalar>
ParamCurve<Scalar> make_ellipse(Scalar a, Scalar b) {
  if (!(a > Scalar(0)) || !(b > Scalar(0)))
    throw std::invalid_argument("semi-axes must be positive");
  Points<Scalar> c = Points<Scalar>::Zero(3, 2), s = Points<Scalar>::Zero(3, 2);
  c(0, 1) = a;
  s(1, 1) = b;
  return ParamCurve<Scalar>(std::move(c), std::move(s));
}

// (p,q) torus knot on the torus of radii (R, r), expanded into harmonics via
// product-to-sum:
//   x = R cos(pu) + r/2 [cos((q+p)u) + cos((q-p)u)]
//   y = R sin(pu) + r/2 [sin((q+p)u) - sin((q-p)u)]
//   z = r sin(qu)
template <typename Scalar>
ParamCurve<Scalar> make_torus_knot(int p, int q, Scalar R, Scalar r) {
  if (p < 1 || q < 1) throw std::invalid_argument("p,q must be >= 1");
  if (std::gcd(p, q) != 1) throw std::invalid_argument("p,q must be coprime");
  if (!(R > r) || !(r > Scalar(0)))
    throw std::invalid_argument("need R > r > 0");
  Index K = static_cast<Index>(q + p);
  Points<Scalar> c = Points<Scalar>::Zero(3, K + 1), s = Points<Scalar>::Zero(3, K + 1);
  c(0, p) += R;
  s(1, p) += R;
  s(2, q) += r;
  c(0, q + p) += r / 2;
  s(1, q + p) += r / 2;
  int d = q - p;  // may be zero or negative; cos is even, sin odd
  if (d >= 0) {
    c(0, d) += r / 2;
    if (d > 0) s(1, d) -= r / 2;
  } else {
    c(0, -d) += r / 2;
    s(1, -d) += r / 2;
  }
  return ParamCurve<Scalar>(std::move(c), std::move(s));
}

// (2 + cos 2u)(cos 3u, sin 3u), z = sin 4u: a standard figure-eight knot.
template <typename Scalar>
ParamCurve<Scalar> make_figure_eight() {
  Points<Scalar> c = Points<Scalar>::Zero(3, 6), s = Points<Scalar>::Zero(3, 6);
  c(0, 3) = Scalar(2);
  c(0, 5) = Scalar(0.5);
  c(0, 1) = Scalar(0.5);
  s(1, 3) = Scalar(2);
  s(1, 5) = Scalar(0.5);
  s(1, 1) = Scalar(0.5);
  s(2, 4) = Scalar(1);
  return ParamCurve<Scalar>(std::move(c), std::move(s));
}

// Seeded perturbed-circle generator for property corpora. Amplitudes decay
// like 1/k^2 so the curves stay smooth and rarely self-intersect; callers
// still reject non-embedded draws through the energy guard.
template <typename Scalar>
ParamCurve<Scalar> random_fourier_curve(std::mt19937_64& rng, int max_mode = 5,
                                        Scalar amplitude = Scalar(0.35)) {
  std::normal_distribution<Scalar> gauss(Scalar(0), Scalar(1));
  Points<Scalar> c = Points<Scalar>::Zero(3, max_mode + 1);
  Points<Scalar> s = Points<Scalar>::Zero(3, max_mode + 1);
  c(0, 1) = Scalar(1);
  s(1, 1) = Scalar(1);
  for (int k = 1; k <= max_mode; ++k) {
    Scalar sigma = amplitude / Scalar(k * k);
    for (int d = 0; d < 3; ++d) {
      c(d, k) += sigma * gauss(rng);
      s(d, k) += sigma * gauss(rng);
    }
  }
  return ParamCurve<Scalar>(std::move(c), std::move(s));
}

// ---------------------------------------------------------------------------
// Pointwise differential data
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar curvature_at(const ParamCurve<Scalar>& curve, Scalar u) {
  Vec3<Scalar> d1 = curve.derivative(u);
  Scalar v = d1.norm();
  if (v < Scalar(1e-9) * curve.max_coefficient())
    throw geometry_error("immersion failure: |gamma'| below threshold");
  return d1.cross(curve.second_derivative(u)).norm() / (v * v * v);
}

namespace detail {

// Cyclic finite differences on a uniform parameter grid; used whenever exact
// derivatives are unavailable (point clouds, transformed curves).
template <typename Scalar>
Vector<Scalar> fd_curvature_closed(const Points<Scalar>& P, Scalar h) {
  Index n = P.cols();
  Vector<Scalar> kap(n);
  for (Index i = 0; i < n; ++i) {
    Index ip = (i + 1) % n, im = (i + n - 1) % n;
    Vec3<Scalar> d1 = (P.col(ip) - P.col(im)) / (2 * h);
    Vec3<Scalar> d2 = (P.col(ip) - 2 * P.col(i) + P.col(im)) / (h * h);
    Scalar v = d1.norm();
    kap[i] = v > Scalar(0) ? d1.cross(d2).norm() / (v * v * v) : Scalar(0);
  }
  return kap;
}

// Nonuniform interior stencils with copied end values, per open-arc images.
template <typename Scalar>
Vector<Scalar> fd_curvature_open(const Points<Scalar>& P, const Vector<Scalar>& s) {
  Index n = P.cols();
  Vector<Scalar> kap = Vector<Scalar>::Zero(n);
  for (Index i = 1; i + 1 < n; ++i) {
    Scalar h1 = s[i] - s[i - 1], h2 = s[i + 1] - s[i];
    Vec3<Scalar> d1 = (P.col(i + 1) - P.col(i - 1)) / (h1 + h2);
    Vec3<Scalar> d2 = Scalar(2) *
                      (h1 * P.col(i + 1) - (h1 + h2) * P.col(i) + h2 * P.col(i - 1)) /
                      (h1 * h2 * (h1 + h2));
    Scalar v = d1.norm();
    kap[i] = v > Scalar(0) ? d1.cross(d2).norm() / (v * v * v) : Scalar(0);
  }
  if (n >= 2) {
    kap[0] = kap[1];
    kap[n - 1] = kap[n - 2];
  }
  return kap;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// sample(): uniform-in-u samples with exact derivatives and a composite
// Simpson arc-length table on an 8x refined grid. The 4x table built from the
// same evaluations supplies the reported length error estimate.
// ---------------------------------------------------------------------------
template <typename Scalar>
SampledCurve<Scalar> sample(const ParamCurve<Scalar>& curve, Index N) {
  if (N < 8) throw std::invalid_argument("need N >= 8 samples");
  const Scalar h = 2 * pi<Scalar>() / Scalar(N);
  const Scalar immersion_floor = Scalar(1e-9) * curve.max_coefficient();

  SampledCurve<Scalar> out;
  out.closed = true;
  out.points.resize(3, N);
  out.tangents.resize(3, N);
  out.speeds.resize(N);
  out.params.resize(N);
  out.curvatures.resize(N);
  out.cum_arclength.resize(N);

  for (Index i = 0; i < N; ++i) {
    Scalar u = h * Scalar(i);
    out.params[i] = u;
    Vec3<Scalar> p = curve.position(u);
    Vec3<Scalar> d1 = curve.derivative(u);
    Scalar v = d1.norm();
    if (v < immersion_floor)
      throw geometry_error("immersion failure at sample " + std::to_string(i));
    out.points.col(i) = p;
    out.speeds[i] = v;
    out.tangents.col(i) = d1 / v;
    out.curvatures[i] = d1.cross(curve.second_derivative(u)).norm() / (v * v * v);
  }

  // 8 panels per interval: Simpson weights 1 4 2 4 2 4 2 4 1 on step h/8.
  // The prefix sums are compensated so each table entry is correctly rounded;
  // plain accumulation leaves rounding residue that does not commute with
  // rescaling the curve, which shows up as spurious drift in the arc term.
  Scalar len4 = 0, cum = 0, comp = 0;
  for (Index i = 0; i < N; ++i) {
    Scalar u0 = h * Scalar(i);
    Scalar f[9];
    for (int k = 0; k <= 8; ++k)
      f[k] = curve.derivative(u0 + h * Scalar(k) / Scalar(8)).norm();
    Scalar s8 = f[0] + f[8] + 4 * (f[1] + f[3] + f[5] + f[7]) + 2 * (f[2] + f[4] + f[6]);
    s8 *= h / Scalar(24);
    Scalar s4 = f[0] + f[8] + 4 * (f[2] + f[6]) + 2 * f[4];
    s4 *= h / Scalar(12);
    out.cum_arclength[i] = cum;
    Scalar y = s8 - comp;
    Scalar t = cum + y;
    comp = (t - cum) - y;
    cum = t;
    len4 += s4;
  }
  out.total_length = cum;
  out.length_error_estimate = std::abs(cum - len4) / cum;
  return out;
}

// ---------------------------------------------------------------------------
// Periodic cubic spline (C^2, cyclic tridiagonal solved by Thomas plus a
// Sherman-Morrison correction). Knots need not be uniform.
// ---------------------------------------------------------------------------
template <typename Scalar>
class PeriodicSpline {
 public:
  PeriodicSpline() = default;

  PeriodicSpline(Vector<Scalar> knots, Vector<Scalar> values, Scalar period)
      : t_(std::move(knots)), y_(std::move(values)), T_(period) {
    const Index n = t_.size();
    if (n < 3) throw std::invalid_argument("spline needs >= 3 knots");
    h_.resize(n);
    for (Index i = 0; i + 1 < n; ++i) {
      h_[i] = t_[i + 1] - t_[i];
      if (!(h_[i] > Scalar(0))) throw std::invalid_argument("knots must increase");
    }
    h_[n - 1] = T_ - t_[n - 1] + t_[0];
    if (!(h_[n - 1] > Scalar(0))) throw std::invalid_argument("period too short");

    Vector<Scalar> dy(n), rhs(n), a(n), b(n), c(n);
    for (Index i = 0; i < n; ++i) dy[i] = (y_[(i + 1) % n] - y_[i]) / h_[i];
    for (Index i = 0; i < n; ++i) {
      Index im = (i + n - 1) % n;
      rhs[i] = dy[i] - dy[im];
      a[i] = h_[im] / 6;
      b[i] = (h_[im] + h_[i]) / 3;
      c[i] = h_[i] / 6;
    }

    Scalar alpha = a[0], beta = c[n - 1], gamma = -b[0];
    Vector<Scalar> bb = b;
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    auto thomas = [&](const Vector<Scalar>& r) {
      Vector<Scalar> cp(n), dp(n), x(n);
      cp[0] = c[0] / bb[0];
      dp[0] = r[0] / bb[0];
      for (Index i = 1; i < n; ++i) {
        Scalar m = bb[i] - a[i] * cp[i - 1];
        cp[i] = (i + 1 < n) ? c[i] / m : Scalar(0);
        dp[i] = (r[i] - a[i] * dp[i - 1]) / m;
      }
      x[n - 1] = dp[n - 1];
      for (Index i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
      return x;
    };
    Vector<Scalar> u = Vector<Scalar>::Zero(n);
    u[0] = gamma;
    u[n - 1] = beta;
    Vector<Scalar> x1 = thomas(rhs), x2 = thomas(u);
    Scalar fact = (x1[0] + alpha * x1[n - 1] / gamma) /
                  (Scalar(1) + x2[0] + alpha * x2[n - 1] / gamma);
    M_ = x1 - fact * x2;
  }

  Scalar eval(Scalar x) const {
    auto [i, dx, hh] = locate(x);
    Index n = t_.size();
    Scalar A = (hh - dx) / hh, B = dx / hh;
    return A * y_[i] + B * y_[(i + 1) % n] +
           ((A * A * A - A) * M_[i] + (B * B * B - B) * M_[(i + 1) % n]) * hh * hh / 6;
  }

  Scalar deriv(Scalar x) const {
    auto [i, dx, hh] = locate(x);
    Index n = t_.size();
    Scalar A = (hh - dx) / hh, B = dx / hh;
    return (y_[(i + 1) % n] - y_[i]) / hh -
           (3 * A * A - 1) * hh / 6 * M_[i] + (3 * B * B - 1) * hh / 6 * M_[(i + 1) % n];
  }

  Scalar second_deriv(Scalar x) const {
    auto [i, dx, hh] = locate(x);
    Index n = t_.size();
    Scalar A = (hh - dx) / hh, B = dx / hh;
    return A * M_[i] + B * M_[(i + 1) % n];
  }

 private:
  std::tuple<Index, Scalar, Scalar> locate(Scalar x) const {
    Index n = t_.size();
    Scalar xw = x - t_[0];
    xw -= std::floor(xw / T_) * T_;
    xw += t_[0];
    auto it = std::upper_bound(t_.data(), t_.data() + n, xw);
    Index i = std::max<Index>(0, (it - t_.data()) - 1);
    return {i, xw - t_[i], h_[i]};
  }

  Vector<Scalar> t_, y_, M_, h_;
  Scalar T_ = Scalar(0);
};

// Vector-valued convenience wrapper.
template <typename Scalar>
struct CurveSpline {
  PeriodicSpline<Scalar> x, y, z;

  CurveSpline(const Vector<Scalar>& knots, const Points<Scalar>& P, Scalar period)
      : x(knots, P.row(0).transpose(), period),
        y(knots, P.row(1).transpose(), period),
        z(knots, P.row(2).transpose(), period) {}

  Vec3<Scalar> eval(Scalar t) const { return {x.eval(t), y.eval(t), z.eval(t)}; }
  Vec3<Scalar> deriv(Scalar t) const { return {x.deriv(t), y.deriv(t), z.deriv(t)}; }
  Vec3<Scalar> second_deriv(Scalar t) const {
    return {x.second_deriv(t), y.second_deriv(t), z.second_deriv(t)};
  }
};

// ---------------------------------------------------------------------------
// resample_arclength(): N samples equally spaced in arc length via periodic
// spline interpolation of positions over the stored arc-length table. The
// output arc table is rebuilt from the interpolant itself (per-cell Gauss
// quadrature of the spline speed), so it stays consistent with the emitted
// point geometry even when the input table is a coarse chordal estimate, as
// with from_points(). Energy evaluation relies on that consistency: a claimed
// arc distance biased against the actual chords breaks the near-diagonal
// cancellation of the integrand.
// ---------------------------------------------------------------------------
template <typename Scalar>
SampledCurve<Scalar> resample_arclength(const SampledCurve<Scalar>& in, Index N) {
  if (N < 8) throw std::invalid_argument("need N >= 8 samples");
  if (!in.closed) throw std::invalid_argument("resample_arclength needs a closed curve");
  const Scalar L = in.total_length;
  CurveSpline<Scalar> spline(in.cum_arclength, in.points, L);

  SampledCurve<Scalar> out;
  out.closed = true;
  out.length_error_estimate = in.length_error_estimate;
  out.points.resize(3, N);
  out.tangents.resize(3, N);
  out.speeds.resize(N);
  out.params.resize(N);
  out.curvatures.resize(N);
  out.cum_arclength.resize(N);

  const Scalar scale = L / (2 * pi<Scalar>());  // du -> ds
  for (Index i = 0; i < N; ++i) {
    Scalar s = L * Scalar(i) / Scalar(N);
    Vec3<Scalar> p = spline.eval(s);
    Vec3<Scalar> d1 = spline.deriv(s);         // d/ds, |d1| ~ 1
    Vec3<Scalar> d2 = spline.second_deriv(s);  // d^2/ds^2
    Scalar v = d1.norm();
    if (!(v > Scalar(0))) throw geometry_error("resample hit a stationary point");
    out.points.col(i) = p;
    out.params[i] = 2 * pi<Scalar>() * Scalar(i) / Scalar(N);
    out.speeds[i] = v * scale;
    out.tangents.col(i) = d1 / v;
    out.curvatures[i] = d1.cross(d2).norm() / (v * v * v);
  }

  // True arc length of the interpolant over each output cell, 4-point Gauss.
  static const Scalar gx[2] = {Scalar(0.3399810435848563), Scalar(0.8611363115940526)};
  static const Scalar gw[2] = {Scalar(0.6521451548625461), Scalar(0.3478548451374538)};
  Scalar cum = 0;
  const Scalar cell = L / Scalar(N);
  for (Index i = 0; i < N; ++i) {
    out.cum_arclength[i] = cum;
    Scalar s0 = cell * Scalar(i), mid = s0 + cell / 2, half = cell / 2;
    Scalar acc = 0;
    for (int q = 0; q < 2; ++q)
      acc += gw[q] * (spline.deriv(mid - half * gx[q]).norm() +
                      spline.deriv(mid + half * gx[q]).norm());
    cum += acc * half;
  }
  out.total_length = cum;
  return out;
}

// Build a SampledCurve from bare positions (uniform parameter grid, cyclic
// finite differences). This is the polygon geometry the descent functional
// differentiates, and the loader path for "samples" JSON inputs.
template <typename Scalar>
SampledCurve<Scalar> from_points(const Points<Scalar>& P, bool closed = true) {
  Index n = P.cols();
  if (n < 8) throw std::invalid_argument("need N >= 8 samples");
  if (!closed) throw std::invalid_argument("from_points supports closed curves only");
  const Scalar h = 2 * pi<Scalar>() / Scalar(n);

  SampledCurve<Scalar> out;
  out.closed = true;
  out.points = P;
  out.tangents.resize(3, n);
  out.speeds.resize(n);
  out.params.resize(n);
  out.cum_arclength.resize(n);

  Scalar cum = 0;
  for (Index i = 0; i < n; ++i) {
    Index ip = (i + 1) % n, im = (i + n - 1) % n;
    Vec3<Scalar> d1 = (P.col(ip) - P.col(im)) / (2 * h);
    Scalar v = d1.norm();
    Scalar edge = (P.col(ip) - P.col(i)).norm();
    if (!(v > Scalar(0)) || !(edge > Scalar(0)))
      throw geometry_error("coincident neighbor samples");
    out.speeds[i] = v;
    out.tangents.col(i) = d1 / v;
    out.params[i] = h * Scalar(i);
    out.cum_arclength[i] = cum;
    cum += edge;
  }
  out.total_length = cum;
  out.curvatures = detail::fd_curvature_closed(P, h);
  return out;
}

}  // namespace knot
