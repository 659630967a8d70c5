#ifndef FACEATTR_GEOMETRY_HPP
#define FACEATTR_GEOMETRY_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>

#include <Eigen/Core>
#include <Eigen/LU>

#include "faceattr/errors.hpp"
#include "faceattr/types.hpp"

// Closed-form face alignment: landmarks -> rotated bounding box -> affine
// map from output pixels to source pixels. Pixel centers sit at integer
// coordinates, the origin is the top-left corner and y grows downward.
// Angles are degrees everywhere; radians appear only inside trig calls.

namespace faceattr {

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

template <typename Scalar = double>
struct LandmarksT {
  using Vec = Vec2T<Scalar>;
  Vec eye_right;
  Vec eye_left;
  Vec mouth_right;
  Vec mouth_left;
  std::optional<Vec> nose;  // parsed but unused by alignment
};

using Landmarks = LandmarksT<double>;

/// Rotated crop specification: corner coordinates plus an angle in degrees.
/// The angle rotates about the box center; alpha > 0 means the right eye
/// sits lower than the left eye in image coordinates.
template <typename Scalar = double>
struct AlignedBoxT {
  Scalar x_l, y_t, x_r, y_b;
  Scalar alpha = 0;

  Scalar width() const { return x_r - x_l; }
  Scalar height() const { return y_b - y_t; }
  Vec2T<Scalar> center() const {
    return {(x_l + x_r) / Scalar(2), (y_t + y_b) / Scalar(2)};
  }
};

using AlignedBox = AlignedBoxT<double>;

/// One random draw applied to an aligned box: angle offset in degrees,
/// shifts as fractions of the box width, a multiplicative scale factor,
/// blur sigma in output pixels and a mirror flag.
template <typename Scalar = double>
struct PerturbationT {
  Scalar r_alpha = 0;
  Scalar r_x = 0;
  Scalar r_y = 0;
  Scalar r_s = 1;
  Scalar sigma = 0;
  bool flip = false;
};

using Perturbation = PerturbationT<double>;

/// 2x3 affine map from OUTPUT pixel coordinates to SOURCE pixel coordinates
/// (inverse-warp convention).
template <typename Scalar = double>
struct AffineTransformT {
  Eigen::Matrix<Scalar, 2, 2> linear = Eigen::Matrix<Scalar, 2, 2>::Identity();
  Vec2T<Scalar> offset = Vec2T<Scalar>::Zero();

  Vec2T<Scalar> operator()(const Vec2T<Scalar>& p) const {
    return linear * p + offset;
  }

  Eigen::Matrix<Scalar, 2, 3> matrix() const {
    Eigen::Matrix<Scalar, 2, 3> m;
    m.template leftCols<2>() = linear;
    m.col(2) = offset;
    return m;
  }

  AffineTransformT inverse() const {
    Scalar det = linear.determinant();
    if (det == Scalar(0)) throw GeometryError("affine transform is singular");
    AffineTransformT inv;
    inv.linear = linear.inverse();
    inv.offset = -(inv.linear * offset);
    return inv;
  }

  /// Composition: (a * b)(p) == a(b(p)).
  friend AffineTransformT operator*(const AffineTransformT& a,
                                    const AffineTransformT& b) {
    AffineTransformT c;
    c.linear = a.linear * b.linear;
    c.offset = a.linear * b.offset + a.offset;
    return c;
  }

  static AffineTransformT identity() { return {}; }

  static AffineTransformT translation(Scalar dx, Scalar dy) {
    AffineTransformT t;
    t.offset = {dx, dy};
    return t;
  }

  /// Rotation by `deg` degrees about `pivot`.
  static AffineTransformT rotation(Scalar deg, const Vec2T<Scalar>& pivot =
                                                   Vec2T<Scalar>::Zero()) {
    Scalar rad = deg_to_rad(deg);
    AffineTransformT t;
    t.linear << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
    t.offset = pivot - t.linear * pivot;
    return t;
  }
};

using AffineTransform = AffineTransformT<double>;

template <typename Scalar>
Vec2T<Scalar> apply_affine(const AffineTransformT<Scalar>& t,
                           const Vec2T<Scalar>& p) {
  return t(p);
}

template <typename Scalar>
struct LandmarkGeometryT {
  Vec2T<Scalar> eye_center;
  Vec2T<Scalar> mouth_center;
  Scalar eye_mouth_distance;
};

using LandmarkGeometry = LandmarkGeometryT<double>;

/// Midpoints of the eye pair and the mouth corners, and their distance d.
/// Throws GeometryError when the midpoints coincide (d = 0).
template <typename Scalar>
LandmarkGeometryT<Scalar> landmark_geometry(const LandmarksT<Scalar>& lm) {
  LandmarkGeometryT<Scalar> g;
  g.eye_center = (lm.eye_right + lm.eye_left) / Scalar(2);
  g.mouth_center = (lm.mouth_right + lm.mouth_left) / Scalar(2);
  g.eye_mouth_distance = (g.eye_center - g.mouth_center).norm();
  if (!(g.eye_mouth_distance > Scalar(0)))
    throw GeometryError("degenerate landmarks: eye-mouth distance is zero");
  return g;
}

/// Square box of side 5.5*d around the eye center, with the eye line 45%
/// from the top, rotated by the eye angle atan(dy/dx). A vertical eye pair
/// gives alpha = +-90 by the sign of dy; coincident eyes give alpha = 0.
template <typename Scalar>
AlignedBoxT<Scalar> aligned_box(const LandmarksT<Scalar>& lm) {
  LandmarkGeometryT<Scalar> g = landmark_geometry(lm);
  Scalar w = Scalar(5.5) * g.eye_mouth_distance;
  Scalar dx = lm.eye_right.x() - lm.eye_left.x();
  Scalar dy = lm.eye_right.y() - lm.eye_left.y();
  Scalar alpha = 0;
  if (dx != Scalar(0) || dy != Scalar(0)) {
    // atan, not atan2: swapping the eye labels leaves the angle unchanged.
    alpha = rad_to_deg(std::atan(dy / dx));
    if (dx == Scalar(0)) alpha = std::copysign(Scalar(90), dy);
  }
  AlignedBoxT<Scalar> box;
  box.x_l = g.eye_center.x() - Scalar(0.5) * w;
  box.x_r = g.eye_center.x() + Scalar(0.5) * w;
  box.y_t = g.eye_center.y() - Scalar(0.45) * w;
  box.y_b = g.eye_center.y() + Scalar(0.55) * w;
  box.alpha = alpha;
  return box;
}

/// Shifts both x coordinates by r_x*w and both y coordinates by r_y*w (the
/// width on purpose; boxes from landmarks are square), adds the angle offset
/// and returns the output scale s = (out_size / w) * r_s.
template <typename Scalar>
std::pair<AlignedBoxT<Scalar>, Scalar> perturb_box(
    const AlignedBoxT<Scalar>& box, const PerturbationT<Scalar>& p,
    Scalar out_size) {
  Scalar w = box.width();
  AlignedBoxT<Scalar> out;
  out.x_l = box.x_l + p.r_x * w;
  out.x_r = box.x_r + p.r_x * w;
  out.y_t = box.y_t + p.r_y * w;
  out.y_b = box.y_b + p.r_y * w;
  out.alpha = box.alpha + p.r_alpha;
  Scalar scale = out_size / w * p.r_s;
  return {out, scale};
}

/// Affine map realizing the aligned crop: output pixel (u, v) in
/// [0,out_w) x [0,out_h) is scaled into box units, rotated by +alpha about
/// the box center and translated there. scale_x/scale_y are output pixels
/// per source pixel. flip mirrors u across the output's vertical axis
/// before mapping.
template <typename Scalar>
AffineTransformT<Scalar> box_to_affine(const AlignedBoxT<Scalar>& box,
                                       Scalar out_w, Scalar out_h, bool flip,
                                       Scalar scale_x, Scalar scale_y) {
  if (!(box.width() > Scalar(0)) || !(box.height() > Scalar(0)))
    throw GeometryError("aligned box has zero area");
  if (!(scale_x > Scalar(0)) || !(scale_y > Scalar(0)))
    throw GeometryError("non-positive crop scale");
  Scalar rad = deg_to_rad(box.alpha);
  Eigen::Matrix<Scalar, 2, 2> rot;
  rot << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);

  AffineTransformT<Scalar> t;
  t.linear = rot * Eigen::DiagonalMatrix<Scalar, 2>(Scalar(1) / scale_x,
                                                    Scalar(1) / scale_y);
  t.offset = box.center() - t.linear * Vec2T<Scalar>(out_w / Scalar(2),
                                                     out_h / Scalar(2));
  if (flip) {
    AffineTransformT<Scalar> mirror;
    mirror.linear << Scalar(-1), 0, 0, Scalar(1);
    mirror.offset = {out_w - Scalar(1), 0};
    t = t * mirror;
  }
  return t;
}

/// Scale derived from the box itself: out_w/w horizontally, out_h/h
/// vertically (anisotropic when the box is not square).
template <typename Scalar>
AffineTransformT<Scalar> box_to_affine(const AlignedBoxT<Scalar>& box,
                                       Scalar out_w, Scalar out_h,
                                       bool flip = false) {
  if (!(box.width() > Scalar(0)) || !(box.height() > Scalar(0)))
    throw GeometryError("aligned box has zero area");
  return box_to_affine(box, out_w, out_h, flip, out_w / box.width(),
                       out_h / box.height());
}

/// Uniform explicit scale, as produced by perturb_box.
template <typename Scalar>
AffineTransformT<Scalar> box_to_affine(const AlignedBoxT<Scalar>& box,
                                       Scalar out_w, Scalar out_h, bool flip,
                                       Scalar scale) {
  return box_to_affine(box, out_w, out_h, flip, scale, scale);
}

}  // namespace faceattr

#endif
