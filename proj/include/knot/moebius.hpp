#pragma once

#include "knot/curve.hpp"
#include "knot/energy.hpp"
#include "knot/types.hpp"

#include <cmath>
#include <random>
#include <variant>
#include <vector>

namespace knot {

// R^3 plus the point at infinity.
template <typename Scalar>
struct ExtPoint {
  Vec3<Scalar> p = Vec3<Scalar>::Zero();
  bool infinite = false;

  static ExtPoint infinity() { return {Vec3<Scalar>::Zero(), true}; }
  static ExtPoint finite(const Vec3<Scalar>& x) { return {x, false}; }
};

template <typename Scalar>
struct Inversion {
  Vec3<Scalar> center;
  Scalar radius;
};

template <typename Scalar>
struct Translation {
  Vec3<Scalar> offset;
};

template <typename Scalar>
struct Rotation {
  Mat3<Scalar> matrix;
};

template <typename Scalar>
struct Scaling {
  Scalar factor;
};

template <typename Scalar>
using Primitive = std::variant<Inversion<Scalar>, Translation<Scalar>, Rotation<Scalar>,
                               Scaling<Scalar>>;

// Ordered list of primitives, applied left to right.
template <typename Scalar>
struct MoebiusMap {
  std::vector<Primitive<Scalar>> primitives;

  static MoebiusMap identity() { return {}; }
  static MoebiusMap inversion(const Vec3<Scalar>& c, Scalar r) {
    if (!(r > Scalar(0))) throw std::invalid_argument("inversion radius must be positive");
    return {{Inversion<Scalar>{c, r}}};
  }
  static MoebiusMap translation(const Vec3<Scalar>& t) { return {{Translation<Scalar>{t}}}; }
  static MoebiusMap rotation(const Mat3<Scalar>& R) {
    if ((R * R.transpose() - Mat3<Scalar>::Identity()).norm() > Scalar(1e-9))
      throw std::invalid_argument("rotation matrix is not orthonormal");
    return {{Rotation<Scalar>{R}}};
  }
  static MoebiusMap scaling(Scalar f) {
    if (!(f > Scalar(0))) throw std::invalid_argument("scale factor must be positive");
    return {{Scaling<Scalar>{f}}};
  }

  MoebiusMap then(const MoebiusMap& next) const {
    MoebiusMap out = *this;
    out.primitives.insert(out.primitives.end(), next.primitives.begin(),
                          next.primitives.end());
    return out;
  }
};

namespace detail {

template <typename Scalar>
ExtPoint<Scalar> apply_primitive(const Primitive<Scalar>& prim, const ExtPoint<Scalar>& x) {
  return std::visit(
      [&](const auto& p) -> ExtPoint<Scalar> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Inversion<Scalar>>) {
          if (x.infinite) return ExtPoint<Scalar>::finite(p.center);
          Vec3<Scalar> y = x.p - p.center;
          Scalar r2 = y.squaredNorm();
          if (r2 == Scalar(0)) return ExtPoint<Scalar>::infinity();
          return ExtPoint<Scalar>::finite(p.center + (p.radius * p.radius / r2) * y);
        } else if constexpr (std::is_same_v<T, Translation<Scalar>>) {
          if (x.infinite) return x;
          return ExtPoint<Scalar>::finite(x.p + p.offset);
        } else if constexpr (std::is_same_v<T, Rotation<Scalar>>) {
          if (x.infinite) return x;
          return ExtPoint<Scalar>::finite(p.matrix * x.p);
        } else {
          if (x.infinite) return x;
          return ExtPoint<Scalar>::finite(p.factor * x.p);
        }
      },
      prim);
}

}  // namespace detail

template <typename Scalar>
ExtPoint<Scalar> apply(const MoebiusMap<Scalar>& map, ExtPoint<Scalar> x) {
  for (const auto& prim : map.primitives) x = detail::apply_primitive(prim, x);
  return x;
}

template <typename Scalar>
Vec3<Scalar> apply(const MoebiusMap<Scalar>& map, const Vec3<Scalar>& x) {
  ExtPoint<Scalar> y = apply(map, ExtPoint<Scalar>::finite(x));
  if (y.infinite) throw geometry_error("point mapped to infinity");
  return y.p;
}

template <typename Scalar>
MoebiusMap<Scalar> inverse(const MoebiusMap<Scalar>& map) {
  MoebiusMap<Scalar> out;
  out.primitives.reserve(map.primitives.size());
  for (auto it = map.primitives.rbegin(); it != map.primitives.rend(); ++it) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Inversion<Scalar>>) {
            out.primitives.push_back(p);  // self-inverse
          } else if constexpr (std::is_same_v<T, Translation<Scalar>>) {
            out.primitives.push_back(Translation<Scalar>{-p.offset});
          } else if constexpr (std::is_same_v<T, Rotation<Scalar>>) {
            out.primitives.push_back(Rotation<Scalar>{p.matrix.transpose()});
          } else {
            out.primitives.push_back(Scaling<Scalar>{Scalar(1) / p.factor});
          }
        },
        *it);
  }
  return out;
}

// Pointwise linear expansion factor: product over primitives evaluated along
// the orbit of x. Inversion contributes r^2/|x-c|^2, scaling its factor,
// rigid motions 1.
template <typename Scalar>
Scalar conformal_factor(const MoebiusMap<Scalar>& map, const Vec3<Scalar>& x) {
  Scalar factor = Scalar(1);
  ExtPoint<Scalar> cur = ExtPoint<Scalar>::finite(x);
  for (const auto& prim : map.primitives) {
    if (cur.infinite) throw geometry_error("conformal factor at a pole");
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Inversion<Scalar>>) {
            Scalar r2 = (cur.p - p.center).squaredNorm();
            if (r2 == Scalar(0)) throw geometry_error("conformal factor at a pole");
            factor *= p.radius * p.radius / r2;
          } else if constexpr (std::is_same_v<T, Scaling<Scalar>>) {
            factor *= p.factor;
          }
        },
        prim);
    cur = detail::apply_primitive(prim, cur);
  }
  if (cur.infinite) throw geometry_error("conformal factor at a pole");
  return factor;
}

// Exact tangent pushforward: dI(x) t for inversion is
// (r^2/|y|^2)(t - 2 (y.t) y / |y|^2), y = x - c.
template <typename Scalar>
Vec3<Scalar> pushforward(const MoebiusMap<Scalar>& map, const Vec3<Scalar>& x,
                         const Vec3<Scalar>& t) {
  Vec3<Scalar> vec = t;
  ExtPoint<Scalar> cur = ExtPoint<Scalar>::finite(x);
  for (const auto& prim : map.primitives) {
    if (cur.infinite) throw geometry_error("pushforward at a pole");
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Inversion<Scalar>>) {
            Vec3<Scalar> y = cur.p - p.center;
            Scalar r2 = y.squaredNorm();
            if (r2 == Scalar(0)) throw geometry_error("pushforward at a pole");
            vec = (p.radius * p.radius / r2) * (vec - 2 * y.dot(vec) / r2 * y);
          } else if constexpr (std::is_same_v<T, Rotation<Scalar>>) {
            vec = p.matrix * vec;
          } else if constexpr (std::is_same_v<T, Scaling<Scalar>>) {
            vec *= p.factor;
          }
        },
        prim);
    cur = detail::apply_primitive(prim, cur);
  }
  return vec;
}

// |f(x) f(y) / |T(x)-T(y)|^2 - 1/|x-y|^2|; identically zero for exact Moebius
// maps, so the returned value is pure floating-point residue.
template <typename Scalar>
Scalar chord_identity_residual(const MoebiusMap<Scalar>& map, const Vec3<Scalar>& x,
                               const Vec3<Scalar>& y) {
  if ((x - y).squaredNorm() == Scalar(0))
    throw std::invalid_argument("chord identity needs distinct points");
  Vec3<Scalar> ix = apply(map, x), iy = apply(map, y);
  Scalar fx = conformal_factor(map, x), fy = conformal_factor(map, y);
  Scalar lhs = fx * fy / (ix - iy).squaredNorm();
  Scalar rhs = Scalar(1) / (x - y).squaredNorm();
  return std::abs(lhs - rhs);
}

namespace detail {

// Cumulative integral of periodic samples g_i on the uniform grid, via the
// antiderivative of the interpolating trigonometric polynomial. Direct real
// DFT; O(N^2) but exact to rounding for band-limited speeds and well under a
// second for the sample counts used here.
template <typename Scalar>
Vector<Scalar> spectral_cumulative(const Vector<Scalar>& g, Scalar period) {
  const Index n = g.size();
  const Index kmax = n / 2;
  const Scalar w0 = 2 * pi<Scalar>() / Scalar(n);  // grid angle step
  Vector<Scalar> a = Vector<Scalar>::Zero(kmax + 1), b = Vector<Scalar>::Zero(kmax + 1);
  for (Index k = 1; k <= kmax; ++k) {
    Scalar ca = 0, cb = 0;
    for (Index j = 0; j < n; ++j) {
      Scalar ang = w0 * Scalar(k) * Scalar(j);
      ca += g[j] * std::cos(ang);
      cb += g[j] * std::sin(ang);
    }
    Scalar norm = (2 * k == n) ? Scalar(1) / Scalar(n) : Scalar(2) / Scalar(n);
    a[k] = ca * norm;
    b[k] = cb * norm;
  }
  Scalar mean = g.sum() / Scalar(n);
  const Scalar scale = period / (2 * pi<Scalar>());
  Vector<Scalar> cum(n);
  for (Index i = 0; i < n; ++i) {
    Scalar u = w0 * Scalar(i);
    Scalar s = mean * u;
    for (Index k = 1; k <= kmax; ++k)
      s += (a[k] * std::sin(Scalar(k) * u) - b[k] * (std::cos(Scalar(k) * u) - 1)) / Scalar(k);
    cum[i] = s * scale;
  }
  return cum;
}

}  // namespace detail

// Image of a sampled curve under a Moebius map that keeps it bounded: points
// mapped, speeds scaled by the conformal factor, tangents pushed forward,
// arc-length table rebuilt from the new speeds, curvature refreshed by finite
// differences on the image.
template <typename Scalar>
SampledCurve<Scalar> apply_to_curve(const MoebiusMap<Scalar>& map,
                                    const SampledCurve<Scalar>& curve) {
  const Index n = curve.size();

  // pole-proximity guard
  for (const auto& prim : map.primitives) {
    if (const auto* inv = std::get_if<Inversion<Scalar>>(&prim)) {
      for (Index i = 0; i < n; ++i) {
        if ((curve.points.col(i) - inv->center).norm() < Scalar(1e-8) * inv->radius)
          throw geometry_error(
              "sample within 1e-8 r of an inversion center; use puncture_at");
      }
    }
  }

  SampledCurve<Scalar> out;
  out.closed = curve.closed;
  out.params = curve.params;
  out.length_error_estimate = curve.length_error_estimate;
  out.points.resize(3, n);
  out.tangents.resize(3, n);
  out.speeds.resize(n);
  for (Index i = 0; i < n; ++i) {
    Vec3<Scalar> x = curve.points.col(i);
    out.points.col(i) = apply(map, x);
    out.speeds[i] = conformal_factor(map, x) * curve.speeds[i];
    Vec3<Scalar> t = pushforward(map, x, Vec3<Scalar>(curve.tangents.col(i)));
    out.tangents.col(i) = t.normalized();
  }

  if (curve.closed) {
    out.cum_arclength = detail::spectral_cumulative(out.speeds, 2 * pi<Scalar>());
    Scalar mean = out.speeds.sum() / Scalar(n);
    out.total_length = mean * 2 * pi<Scalar>();
    out.curvatures =
        detail::fd_curvature_closed(out.points, 2 * pi<Scalar>() / Scalar(n));
  } else {
    out.cum_arclength.resize(n);
    Scalar cum = 0;
    out.cum_arclength[0] = 0;
    for (Index i = 1; i < n; ++i) {
      cum += (out.speeds[i - 1] + out.speeds[i]) / 2 * (curve.params[i] - curve.params[i - 1]);
      out.cum_arclength[i] = cum;
    }
    out.total_length = cum;
    out.curvatures = detail::fd_curvature_open(out.points, out.cum_arclength);
  }
  return out;
}

// Metadata for a punctured (sent through infinity) curve.
template <typename Scalar>
struct PuncturedCurve {
  SampledCurve<Scalar> curve;    // open, arc-length parametrized (chordal table)
  Scalar s0 = 0;                 // puncture arc position on the source curve
  Scalar inversion_radius = 0;
  Scalar removed_halfwidth = 0;  // arc neighborhood of s0 excluded before mapping
  Scalar center_s = 0;           // image arc position of the antipodal point
  Scalar max_window = 0;         // largest usable half-width about center_s
};

// Send gamma(s0) to infinity by sphere inversion. Sampling is geometrically
// graded toward the puncture (ratio 1.1, floor 1e-6 l) so the long straight
// tails of the image are resolved; the image arc table is the chordal
// cumulative sum, exact on the asymptotically straight tails.
template <typename Scalar>
PuncturedCurve<Scalar> puncture_at(const SampledCurve<Scalar>& curve, Scalar s0,
                                   Scalar inversion_radius = Scalar(0),
                                   Index base_samples = 1024) {
  if (!curve.closed) throw std::invalid_argument("puncture_at needs a closed curve");
  const Scalar L = curve.total_length;
  if (inversion_radius <= Scalar(0)) inversion_radius = L / (2 * pi<Scalar>());
  s0 -= std::floor(s0 / L) * L;

  // interpolate positions over the parameter, and parameter over arc length
  CurveSpline<Scalar> spline(curve.params, curve.points, 2 * pi<Scalar>());
  const Index n = curve.size();
  const Index refine = 64;
  const Index m = n * refine;
  Vector<Scalar> uf(m + 1), cumf(m + 1);
  {
    Scalar cum = 0;
    Scalar prev = spline.deriv(0).norm();
    uf[0] = 0;
    cumf[0] = 0;
    const Scalar hf = 2 * pi<Scalar>() / Scalar(m);
    for (Index i = 1; i <= m; ++i) {
      Scalar u = hf * Scalar(i);
      Scalar sp = spline.deriv(u).norm();
      cum += (prev + sp) / 2 * hf;
      uf[i] = u;
      cumf[i] = cum;
      prev = sp;
    }
  }
  const Scalar Lf = cumf[m];  // spline length; consistent with the spline geometry
  auto u_of_s = [&](Scalar s) {
    s = s / L * Lf;  // map the caller's arc scale onto the spline's
    s -= std::floor(s / Lf) * Lf;
    auto it = std::upper_bound(cumf.data(), cumf.data() + m + 1, s);
    Index i = std::clamp<Index>((it - cumf.data()) - 1, 0, m - 1);
    Scalar t = (s - cumf[i]) / (cumf[i + 1] - cumf[i]);
    return uf[i] + t * (uf[i + 1] - uf[i]);
  };

  // graded arc offsets from the puncture, both sides
  const Scalar tau0 = Scalar(1e-6) * L;
  const Scalar h_base = L / Scalar(base_samples);
  std::vector<Scalar> taus;
  for (Scalar t = tau0; t < L / 2; t = std::min(t * Scalar(1.1), t + h_base))
    taus.push_back(t);
  const Index half = static_cast<Index>(taus.size());
  const Index total = 2 * half;

  Vec3<Scalar> center = spline.eval(u_of_s(s0));
  const Scalar r2inv = inversion_radius * inversion_radius;

  Points<Scalar> img(3, total);
  Vector<Scalar> arc_pre(total);  // arc offset from s0 walking forward
  for (Index k = 0; k < total; ++k) {
    Scalar offset = (k < half) ? taus[k] : L - taus[total - 1 - k];
    arc_pre[k] = offset;
    Vec3<Scalar> p = spline.eval(u_of_s(s0 + offset));
    Vec3<Scalar> y = p - center;
    Scalar d2 = y.squaredNorm();
    if (d2 == Scalar(0)) throw geometry_error("degenerate puncture: point at center");
    img.col(k) = center + (r2inv / d2) * y;
  }

  Vector<Scalar> sch(total);
  sch[0] = 0;
  for (Index k = 1; k < total; ++k)
    sch[k] = sch[k - 1] + (img.col(k) - img.col(k - 1)).norm();

  PuncturedCurve<Scalar> out;
  out.curve = make_open_arclength(img, sch);
  out.s0 = s0;
  out.inversion_radius = inversion_radius;
  out.removed_halfwidth = tau0;
  Index anti = 0;
  (arc_pre.array() - L / 2).abs().minCoeff(&anti);
  out.center_s = sch[anti];
  out.max_window = std::min(out.center_s - sch[0], sch[total - 1] - out.center_s);
  return out;
}

template <typename Scalar>
EnergyReport<Scalar> open_energy(const PuncturedCurve<Scalar>& punctured,
                                 Scalar window = Scalar(0), int threads = 0) {
  return open_energy(punctured.curve, window, punctured.center_s, threads);
}

// Random inversion whose center sits outside 1.5x the curve's bounding
// sphere, so images stay bounded. Radii are drawn on the curve's own scale.
template <typename Scalar>
MoebiusMap<Scalar> random_bounded_inversion(const SampledCurve<Scalar>& curve,
                                            std::mt19937_64& rng) {
  Vec3<Scalar> centroid = curve.points.rowwise().mean();
  Scalar R = 0;
  for (Index i = 0; i < curve.size(); ++i)
    R = std::max(R, (curve.points.col(i) - centroid).norm());
  std::normal_distribution<Scalar> gauss(Scalar(0), Scalar(1));
  std::uniform_real_distribution<Scalar> unif(Scalar(0), Scalar(1));
  Vec3<Scalar> dir(gauss(rng), gauss(rng), gauss(rng));
  while (dir.norm() < Scalar(1e-6)) dir = Vec3<Scalar>(gauss(rng), gauss(rng), gauss(rng));
  dir.normalize();
  Vec3<Scalar> center = centroid + dir * R * (Scalar(1.5) + Scalar(2.5) * unif(rng));
  Scalar radius = R * (Scalar(0.5) + Scalar(1.5) * unif(rng));
  return MoebiusMap<Scalar>::inversion(center, radius);
}

}  // namespace knot
