#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "faceattr/geometry.hpp"
#include "faceattr/rng.hpp"
#include "test_util.hpp"

using namespace faceattr;

namespace {

Landmarks square_face() {
  Landmarks lm;
  lm.eye_left = {80, 100};
  lm.eye_right = {120, 100};
  lm.mouth_left = {90, 160};
  lm.mouth_right = {110, 160};
  return lm;
}

}  // namespace

TEST_CASE("landmark_geometry midpoints and distance") {
  LandmarkGeometry g = landmark_geometry(square_face());
  CHECK(g.eye_center.x() == doctest::Approx(100).epsilon(1e-12));
  CHECK(g.eye_center.y() == doctest::Approx(100).epsilon(1e-12));
  CHECK(g.mouth_center.x() == doctest::Approx(100).epsilon(1e-12));
  CHECK(g.mouth_center.y() == doctest::Approx(160).epsilon(1e-12));
  CHECK(g.eye_mouth_distance == doctest::Approx(60).epsilon(1e-12));
}

TEST_CASE("landmark_geometry rejects coincident points") {
  Landmarks lm;
  lm.eye_left = lm.eye_right = lm.mouth_left = lm.mouth_right = {50, 50};
  CHECK_THROWS_AS(landmark_geometry(lm), GeometryError);
}

TEST_CASE("landmark_geometry 3-4-5 distance") {
  Landmarks lm;
  lm.eye_left = lm.eye_right = {0, 0};
  lm.mouth_left = lm.mouth_right = {3, 4};
  CHECK(landmark_geometry(lm).eye_mouth_distance == doctest::Approx(5).epsilon(1e-12));
}

TEST_CASE("aligned_box hand-evaluated coordinates") {
  AlignedBox box = aligned_box(square_face());
  CHECK(box.x_l == doctest::Approx(-65).epsilon(1e-12));
  CHECK(box.y_t == doctest::Approx(-48.5).epsilon(1e-12));
  CHECK(box.x_r == doctest::Approx(265).epsilon(1e-12));
  CHECK(box.y_b == doctest::Approx(281.5).epsilon(1e-12));
  CHECK(box.alpha == 0);
  CHECK(box.width() == doctest::Approx(330).epsilon(1e-12));
  CHECK(box.width() == doctest::Approx(box.height()).epsilon(1e-12));
}

TEST_CASE("aligned_box angle from tilted eyes") {
  Landmarks lm = square_face();
  lm.eye_left = {80, 100};
  lm.eye_right = {120, 110};
  AlignedBox box = aligned_box(lm);
  CHECK(box.alpha == doctest::Approx(rad_to_deg(std::atan(0.25))).epsilon(1e-12));
  CHECK(box.alpha == doctest::Approx(14.036243).epsilon(1e-5));
}

TEST_CASE("aligned_box vertical eye pair gives +-90 by dy sign") {
  Landmarks lm = square_face();
  lm.eye_left = {100, 90};
  lm.eye_right = {100, 110};
  CHECK(aligned_box(lm).alpha == doctest::Approx(90).epsilon(1e-12));
  std::swap(lm.eye_left, lm.eye_right);
  CHECK(aligned_box(lm).alpha == doctest::Approx(-90).epsilon(1e-12));
}

TEST_CASE("aligned_box rejects zero eye-mouth distance") {
  Landmarks lm;
  lm.eye_left = {0, 0};
  lm.eye_right = {10, 0};
  lm.mouth_left = {2, 0};
  lm.mouth_right = {8, 0};  // mouth midpoint == eye midpoint
  CHECK_THROWS_AS(aligned_box(lm), GeometryError);
}

TEST_CASE("aligned_box ratios and equivariances") {
  SeededRng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Landmarks lm = testutil::random_landmarks(rng);
    LandmarkGeometry g = landmark_geometry(lm);
    AlignedBox box = aligned_box(lm);

    CHECK(box.width() == doctest::Approx(box.height()).epsilon(1e-12));
    CHECK(box.width() == doctest::Approx(5.5 * g.eye_mouth_distance).epsilon(1e-12));
    double h = box.height();
    CHECK((g.eye_center.y() - box.y_t) / h == doctest::Approx(0.45).epsilon(1e-12));
    CHECK((box.y_b - g.eye_center.y()) / h == doctest::Approx(0.55).epsilon(1e-12));

    // Translation equivariance.
    Vec2 shift(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
    Landmarks moved = lm;
    moved.eye_left += shift;
    moved.eye_right += shift;
    moved.mouth_left += shift;
    moved.mouth_right += shift;
    AlignedBox moved_box = aligned_box(moved);
    CHECK(moved_box.x_l == doctest::Approx(box.x_l + shift.x()).epsilon(1e-9));
    CHECK(moved_box.y_b == doctest::Approx(box.y_b + shift.y()).epsilon(1e-9));
    CHECK(moved_box.alpha == doctest::Approx(box.alpha).epsilon(1e-12));

    // Uniform scaling about the origin scales the box size.
    double factor = rng.uniform(0.5, 2.0);
    Landmarks scaled = lm;
    scaled.eye_left *= factor;
    scaled.eye_right *= factor;
    scaled.mouth_left *= factor;
    scaled.mouth_right *= factor;
    CHECK(aligned_box(scaled).width() ==
          doctest::Approx(box.width() * factor).epsilon(1e-9));

    // Rigid rotation about the eye center adds to alpha (mod 180).
    double theta = rng.uniform(-20.0, 20.0);
    AffineTransform rot = AffineTransform::rotation(theta, g.eye_center);
    Landmarks rotated = lm;
    rotated.eye_left = rot(lm.eye_left);
    rotated.eye_right = rot(lm.eye_right);
    rotated.mouth_left = rot(lm.mouth_left);
    rotated.mouth_right = rot(lm.mouth_right);
    AlignedBox rotated_box = aligned_box(rotated);
    double expected = std::fmod(box.alpha + theta + 270.0, 180.0) - 90.0;
    CHECK(rotated_box.alpha == doctest::Approx(expected).epsilon(1e-7));
    CHECK(landmark_geometry(rotated).eye_mouth_distance ==
          doctest::Approx(g.eye_mouth_distance).epsilon(1e-9));
  }
}

TEST_CASE("perturb_box identity") {
  AlignedBox box = aligned_box(square_face());
  auto [moved, scale] = perturb_box(box, Perturbation{}, 224.0);
  CHECK(moved.x_l == box.x_l);
  CHECK(moved.x_r == box.x_r);
  CHECK(moved.y_t == box.y_t);
  CHECK(moved.y_b == box.y_b);
  CHECK(moved.alpha == box.alpha);
  CHECK(scale == doctest::Approx(224.0 / box.width()).epsilon(1e-12));
}

TEST_CASE("perturb_box shift and scale") {
  AlignedBox box{0, 0, 100, 100, 0};
  Perturbation p;
  p.r_x = 0.05;
  auto [moved, scale] = perturb_box(box, p, 224.0);
  CHECK(moved.x_l == doctest::Approx(5).epsilon(1e-12));
  CHECK(moved.x_r == doctest::Approx(105).epsilon(1e-12));
  CHECK(moved.y_t == doctest::Approx(0).epsilon(1e-12));
  CHECK(scale == doctest::Approx(2.24).epsilon(1e-12));
}

TEST_CASE("perturb_box angles add") {
  AlignedBox box{0, 0, 100, 100, -10};
  Perturbation p;
  p.r_alpha = 10;
  auto [moved, scale] = perturb_box(box, p, 224.0);
  CHECK(moved.alpha == doctest::Approx(0).epsilon(1e-12));
  CHECK(scale == doctest::Approx(2.24).epsilon(1e-12));
}

TEST_CASE("perturb_box y shift uses the width") {
  AlignedBox box{0, 0, 100, 200, 0};  // non-square on purpose
  Perturbation p;
  p.r_y = 0.1;
  auto [moved, scale] = perturb_box(box, p, 224.0);
  CHECK(moved.y_t == doctest::Approx(10).epsilon(1e-12));  // 0.1 * w, not h
  CHECK(moved.y_b == doctest::Approx(210).epsilon(1e-12));
  (void)scale;
}

TEST_CASE("box_to_affine identity case") {
  AlignedBox box{0, 0, 224, 224, 0};
  AffineTransform t = box_to_affine(box, 224.0, 224.0, false);
  CHECK(t.linear.isApprox(Eigen::Matrix2d::Identity(), 1e-12));
  CHECK(t.offset.norm() == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("box_to_affine flip is an involution") {
  AlignedBox box{10, 20, 150, 160, 25};
  AffineTransform plain = box_to_affine(box, 224.0, 224.0, false);
  AffineTransform flipped = box_to_affine(box, 224.0, 224.0, true);
  AffineTransform mirror;
  mirror.linear << -1, 0, 0, 1;
  mirror.offset = {223, 0};
  AffineTransform twice = flipped * mirror;  // mirroring input twice
  SeededRng rng(3);
  for (int i = 0; i < 50; ++i) {
    Vec2 p(rng.uniform(0.0, 224.0), rng.uniform(0.0, 224.0));
    CHECK((twice(p) - plain(p)).norm() == doctest::Approx(0).epsilon(1e-9));
  }
}

TEST_CASE("box_to_affine rotation by 90 maps x-axis onto y-axis") {
  AlignedBox box{-50, -50, 50, 50, 90};
  AffineTransform t = box_to_affine(box, 100.0, 100.0, false);
  // Output corners (pixel units); the output x direction must land on the
  // source y direction.
  Vec2 c0 = t(Vec2(0, 0));
  Vec2 c1 = t(Vec2(99, 0));
  Vec2 c2 = t(Vec2(0, 99));
  Vec2 c3 = t(Vec2(99, 99));
  Vec2 dx = c1 - c0;
  Vec2 dy = c2 - c0;
  CHECK(dx.x() == doctest::Approx(0).epsilon(1e-9));
  CHECK(dx.y() == doctest::Approx(99).epsilon(1e-9));
  CHECK(dy.x() == doctest::Approx(-99).epsilon(1e-9));
  CHECK(dy.y() == doctest::Approx(0).epsilon(1e-9));
  CHECK((c3 - c0 - dx - dy).norm() == doctest::Approx(0).epsilon(1e-9));
}

TEST_CASE("box_to_affine rejects zero-area boxes") {
  AlignedBox box{10, 10, 10, 50, 0};
  CHECK_THROWS_AS(box_to_affine(box, 224.0, 224.0, false), GeometryError);
}

TEST_CASE("box_to_affine round-trips through its inverse") {
  SeededRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Landmarks lm = testutil::random_landmarks(rng);
    AffineTransform t = box_to_affine(aligned_box(lm), 224.0, 224.0,
                                      rng.bernoulli(0.5));
    AffineTransform inv = t.inverse();
    for (int i = 0; i < 50; ++i) {
      Vec2 p(rng.uniform(0.0, 224.0), rng.uniform(0.0, 224.0));
      CHECK((inv(t(p)) - p).norm() < 1e-6);
      CHECK((t(inv(p)) - p).norm() < 1e-6);
    }
  }
}

TEST_CASE("apply_affine basics") {
  AffineTransform identity;
  CHECK((apply_affine(identity, Vec2(3, 7)) - Vec2(3, 7)).norm() == 0);

  AffineTransform shift = AffineTransform::translation(10, 20);
  CHECK((apply_affine(shift, Vec2(0, 0)) - Vec2(10, 20)).norm() == 0);

  AffineTransform rot = AffineTransform::rotation(90.0);
  CHECK((apply_affine(rot, Vec2(1, 0)) - Vec2(0, 1)).norm() < 1e-12);
}

TEST_CASE("affine composition is associative") {
  SeededRng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    AffineTransform a = AffineTransform::rotation(rng.uniform(-180.0, 180.0),
                                                  Vec2(rng.uniform(), rng.uniform()));
    AffineTransform b = AffineTransform::translation(rng.uniform(-5.0, 5.0),
                                                     rng.uniform(-5.0, 5.0));
    AffineTransform c = AffineTransform::rotation(rng.uniform(-90.0, 90.0));
    Vec2 p(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
    Vec2 left = ((a * b) * c)(p);
    Vec2 right = (a * (b * c))(p);
    CHECK((left - right).norm() < 1e-9);
    CHECK((a(b(c(p))) - left).norm() < 1e-9);
  }
}

TEST_CASE("aligned output makes the eyes horizontal") {
  // Fixes the rotation direction: warping with the aligned box must place
  // both eyes on the same output row, with the right eye to the right.
  SeededRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Landmarks lm = testutil::random_landmarks(rng);
    AlignedBox box = aligned_box(lm);
    AffineTransform to_source = box_to_affine(box, 224.0, 224.0, false);
    AffineTransform to_output = to_source.inverse();
    Vec2 left = to_output(lm.eye_left);
    Vec2 right = to_output(lm.eye_right);
    CHECK(left.y() == doctest::Approx(right.y()).epsilon(1e-6));
    CHECK(right.x() > left.x());
  }
}

TEST_CASE("upright faces place the eye line 45% from the top") {
  SeededRng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    Landmarks lm = testutil::random_landmarks(rng);
    // Level the eyes, keeping the rest of the layout random.
    lm.eye_right.y() = lm.eye_left.y();
    AlignedBox box = aligned_box(lm);
    REQUIRE(box.alpha == 0);
    AffineTransform to_output = box_to_affine(box, 224.0, 224.0, false).inverse();
    Vec2 eye_mid = to_output((lm.eye_left + lm.eye_right) / 2.0);
    CHECK(eye_mid.x() == doctest::Approx(112.0).epsilon(1e-6));
    CHECK(eye_mid.y() == doctest::Approx(0.45 * 224.0).epsilon(1e-6));
  }
}
