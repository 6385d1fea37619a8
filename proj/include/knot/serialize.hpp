#pragma once

#include "knot/curve.hpp"
#include "knot/energy.hpp"
#include "knot/moebius.hpp"
#include "knot/topology.hpp"
#include "knot/descent.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace knot {

inline const char* tool_version() { return "0.1.0"; }

using json = nlohmann::json;

// --- curves -----------------------------------------------------------

template <typename Scalar>
json to_json(const ParamCurve<Scalar>& curve) {
  json cos_rows = json::array(), sin_rows = json::array();
  for (int r = 0; r < 3; ++r) {
    json cr = json::array(), sr = json::array();
    for (Index k = 0; k < curve.cos_coef.cols(); ++k) {
      cr.push_back(curve.cos_coef(r, k));
      sr.push_back(curve.sin_coef(r, k));
    }
    cos_rows.push_back(cr);
    sin_rows.push_back(sr);
  }
  return {{"kind", "fourier"}, {"cos", cos_rows}, {"sin", sin_rows}};
}

template <typename Scalar>
json to_json(const Points<Scalar>& points, bool closed) {
  json pts = json::array();
  for (Index i = 0; i < points.cols(); ++i)
    pts.push_back({points(0, i), points(1, i), points(2, i)});
  return {{"kind", "samples"}, {"points", pts}, {"closed", closed}};
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic> coeff_rows(const json& rows, const char* name) {
  require(rows.is_array() && rows.size() == 3, std::string(name) + " must hold 3 rows");
  const std::size_t cols = rows[0].size();
  require(cols >= 1, std::string(name) + " rows must be nonempty");
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> m(3, static_cast<Index>(cols));
  for (int r = 0; r < 3; ++r) {
    require(rows[r].is_array() && rows[r].size() == cols, "ragged coefficient rows");
    for (std::size_t k = 0; k < cols; ++k) {
      require(rows[r][k].is_number(), "coefficients must be numbers");
      m(r, static_cast<Index>(k)) = rows[r][k].template get<Scalar>();
    }
  }
  return m;
}

template <typename Scalar>
Vec3<Scalar> vec3_from_json(const json& v, const char* name) {
  require(v.is_array() && v.size() == 3, std::string(name) + " must be [x, y, z]");
  for (int r = 0; r < 3; ++r) require(v[r].is_number(), std::string(name) + " must be numeric");
  return {v[0].template get<Scalar>(), v[1].template get<Scalar>(),
          v[2].template get<Scalar>()};
}

}  // namespace detail

template <typename Scalar = double>
using LoadedCurve = std::variant<ParamCurve<Scalar>, SampledCurve<Scalar>>;

// Accepts both curve document kinds; malformed input throws
// std::invalid_argument with a parse diagnostic.
template <typename Scalar = double>
LoadedCurve<Scalar> curve_from_json(const json& doc) {
  detail::require(doc.is_object() && doc.contains("kind") && doc["kind"].is_string(),
                  "curve document needs a \"kind\" field");
  const std::string kind = doc["kind"].template get<std::string>();
  if (kind == "fourier") {
    detail::require(doc.contains("cos") && doc.contains("sin"),
                    "fourier curve needs \"cos\" and \"sin\"");
    ParamCurve<Scalar> out;
    out.cos_coef = detail::coeff_rows<Scalar>(doc["cos"], "cos");
    out.sin_coef = detail::coeff_rows<Scalar>(doc["sin"], "sin");
    detail::require(out.cos_coef.cols() == out.sin_coef.cols(),
                    "cos and sin must agree in length");
    detail::require(out.max_coefficient() > Scalar(0), "all coefficients are zero");
    return out;
  }
  if (kind == "samples") {
    detail::require(doc.contains("points") && doc["points"].is_array(),
                    "samples curve needs a \"points\" array");
    const auto& pts = doc["points"];
    detail::require(pts.size() >= 8, "need at least 8 sample points");
    Points<Scalar> P(3, static_cast<Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
      P.col(static_cast<Index>(i)) = detail::vec3_from_json<Scalar>(pts[i], "point");
    bool closed = true;
    if (doc.contains("closed")) {
      detail::require(doc["closed"].is_boolean(), "\"closed\" must be a boolean");
      closed = doc["closed"].template get<bool>();
    }
    return from_points<Scalar>(P, closed);
  }
  throw std::invalid_argument("unknown curve kind: " + kind);
}

// --- Moebius maps -----------------------------------------------------

template <typename Scalar>
json to_json(const MoebiusMap<Scalar>& map) {
  json list = json::array();
  for (const auto& prim : map.primitives) {
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, Inversion<Scalar>>) {
            list.push_back({{"kind", "inversion"},
                            {"center", {p.center.x(), p.center.y(), p.center.z()}},
                            {"radius", p.radius}});
          } else if constexpr (std::is_same_v<P, Translation<Scalar>>) {
            list.push_back({{"kind", "translation"},
                            {"offset", {p.offset.x(), p.offset.y(), p.offset.z()}}});
          } else if constexpr (std::is_same_v<P, Rotation<Scalar>>) {
            json rows = json::array();
            for (int r = 0; r < 3; ++r)
              rows.push_back({p.matrix(r, 0), p.matrix(r, 1), p.matrix(r, 2)});
            list.push_back({{"kind", "rotation"}, {"matrix", rows}});
          } else {
            list.push_back({{"kind", "scale"}, {"factor", p.factor}});
          }
        },
        prim);
  }
  return list;
}

template <typename Scalar = double>
MoebiusMap<Scalar> map_from_json(const json& doc) {
  detail::require(doc.is_array(), "map document must be a list of primitives");
  MoebiusMap<Scalar> out;
  for (const auto& item : doc) {
    detail::require(item.is_object() && item.contains("kind") && item["kind"].is_string(),
                    "map primitive needs a \"kind\" field");
    const std::string kind = item["kind"].template get<std::string>();
    if (kind == "inversion") {
      detail::require(item.contains("center") && item.contains("radius") &&
                          item["radius"].is_number(),
                      "inversion needs \"center\" and numeric \"radius\"");
      out = out.then(MoebiusMap<Scalar>::inversion(
          detail::vec3_from_json<Scalar>(item["center"], "center"),
          item["radius"].template get<Scalar>()));
    } else if (kind == "translation") {
      detail::require(item.contains("offset"), "translation needs \"offset\"");
      out = out.then(MoebiusMap<Scalar>::translation(
          detail::vec3_from_json<Scalar>(item["offset"], "offset")));
    } else if (kind == "rotation") {
      detail::require(item.contains("matrix") && item["matrix"].is_array() &&
                          item["matrix"].size() == 3,
                      "rotation needs a 3x3 \"matrix\"");
      Mat3<Scalar> R;
      for (int r = 0; r < 3; ++r)
        R.row(r) = detail::vec3_from_json<Scalar>(item["matrix"][r], "matrix row").transpose();
      out = out.then(MoebiusMap<Scalar>::rotation(R));
    } else if (kind == "scale") {
      detail::require(item.contains("factor") && item["factor"].is_number(),
                      "scale needs numeric \"factor\"");
      out = out.then(MoebiusMap<Scalar>::scaling(item["factor"].template get<Scalar>()));
    } else {
      throw std::invalid_argument("unknown map primitive kind: " + kind);
    }
  }
  return out;
}

// --- reports ----------------------------------------------------------

template <typename Scalar>
json to_json(const EnergyReport<Scalar>& report) {
  return {{"energy", report.energy},
          {"chord_term", report.chord_term},
          {"regularization_term", report.regularization_term},
          {"n", report.config.n},
          {"epsilon", report.config.epsilon},
          {"diagonal_mode", report.config.diagonal_mode == DiagonalMode::limit
                                ? "limit"
                                : "exclude_adjacent"},
          {"error_estimate", report.error_estimate}};
}

template <typename Scalar>
json to_json(const CrossingReport<Scalar>& report) {
  json dirs = json::array();
  for (Index i = 0; i < report.directions.cols(); ++i)
    dirs.push_back({report.directions(0, i), report.directions(1, i),
                    report.directions(2, i)});
  return {{"counts", report.counts},
          {"min_count", report.min_count},
          {"mean_count", report.mean_count},
          {"directions_used", report.directions_used},
          {"degenerate_rejections", report.degenerate_rejections},
          {"directions", dirs}};
}

template <typename Scalar>
json to_json(const BoundReport<Scalar>& report) {
  return {{"energy", report.energy},
          {"crossing_upper_from_energy", report.crossing_upper_from_energy},
          {"unknot_certified", report.unknot_certified},
          {"threshold", report.threshold},
          {"bound_satisfied", report.bound_satisfied},
          {"bound_slack", report.bound_slack}};
}

template <typename Scalar>
json to_json(const DescentConfig<Scalar>& config) {
  return {{"n", config.n},
          {"max_iters", config.max_iters},
          {"step_init", config.step_init},
          {"step_shrink", config.step_shrink},
          {"step_grow", config.step_grow},
          {"grad_tol", config.grad_tol},
          {"resample_every", config.resample_every},
          {"min_separation", config.min_separation},
          {"threads", config.threads}};
}

// --- run manifest -----------------------------------------------------

struct RunManifest {
  std::string subcommand;
  json config;  // full resolved configuration after flag/file merging
  unsigned long seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = tool_version();
  double duration_seconds = 0;
};

inline json to_json(const RunManifest& manifest) {
  return {{"subcommand", manifest.subcommand}, {"config", manifest.config},
          {"seed", manifest.seed},             {"inputs", manifest.inputs},
          {"outputs", manifest.outputs},       {"tool_version", manifest.version},
          {"duration_seconds", manifest.duration_seconds}};
}

// --- descent trace ----------------------------------------------------

template <typename Scalar>
std::string trace_csv(const std::vector<TraceRecord<Scalar>>& records) {
  std::ostringstream out;
  out.precision(17);
  out << "iter,energy,step,grad_norm,min_ratio\n";
  for (const auto& rec : records)
    out << rec.iter << ',' << rec.energy << ',' << rec.step << ',' << rec.grad_norm
        << ',' << rec.min_ratio << '\n';
  return out.str();
}

}  // namespace knot
