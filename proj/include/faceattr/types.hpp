#ifndef FACEATTR_TYPES_HPP
#define FACEATTR_TYPES_HPP

#include <Eigen/Core>

namespace faceattr {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;

using Vec2 = Vec2T<double>;

/// Real-valued per-attribute network outputs.
using ScoreVector = Eigen::VectorXd;

/// Signed binary labels, one per attribute; entries are -1 or +1.
using AttributeVector = Eigen::VectorXi;

inline bool is_signed_binary(const AttributeVector& v) {
  return (v.array() == 1 || v.array() == -1).all();
}

}  // namespace faceattr

#endif
