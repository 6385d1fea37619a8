#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace knot {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

// One sample per column, so a curve is a 3 x N dense matrix and whole-curve
// operations stay expression-friendly (colwise() etc).
template <typename Scalar>
using Points = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Guard trips: self-intersection at sample resolution, immersion failure,
// pole proximity. Distinct from std::invalid_argument (malformed input) so
// the CLI can map them to different exit codes.
struct geometry_error : std::runtime_error {
  explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

template <typename Scalar>
constexpr Scalar pi() {
  return static_cast<Scalar>(3.14159265358979323846264338327950288L);
}

}  // namespace knot
