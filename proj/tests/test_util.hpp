#ifndef FACEATTR_TEST_UTIL_HPP
#define FACEATTR_TEST_UTIL_HPP

#include <filesystem>
#include <random>
#include <string>

#include "faceattr/geometry.hpp"
#include "faceattr/image.hpp"
#include "faceattr/rng.hpp"

namespace faceattr::testutil {

inline ImageF random_image(SeededRng& rng, int w, int h, int channels = 1) {
  ImageF img(w, h, channels);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = static_cast<float>(rng.uniform());
  return img;
}

/// Smooth low-frequency image, for resampling-tolerance checks.
inline ImageF smooth_image(SeededRng& rng, int w, int h, int channels = 1) {
  double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
  double px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28);
  ImageF img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = static_cast<float>(
            0.5 + 0.25 * std::sin(fx * 6.28 * x / w + px + c) +
            0.25 * std::cos(fy * 6.28 * y / h + py));
  return img;
}

/// Non-degenerate landmark set with a roughly face-like layout.
inline Landmarks random_landmarks(SeededRng& rng) {
  Landmarks lm;
  Vec2 eye_mid(rng.uniform(-100.0, 300.0), rng.uniform(-100.0, 300.0));
  double d = rng.uniform(10.0, 120.0);
  double angle = deg_to_rad(rng.uniform(-60.0, 60.0));
  Vec2 along(std::cos(angle), std::sin(angle));
  Vec2 down(-std::sin(angle), std::cos(angle));
  double eye_half = rng.uniform(0.3, 0.7) * d;
  double mouth_half = rng.uniform(0.2, 0.5) * d;
  lm.eye_left = eye_mid - eye_half * along;
  lm.eye_right = eye_mid + eye_half * along;
  Vec2 mouth_mid = eye_mid + d * down;
  lm.mouth_left = mouth_mid - mouth_half * along;
  lm.mouth_right = mouth_mid + mouth_half * along;
  lm.nose = eye_mid + 0.6 * d * down;
  return lm;
}

/// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("faceattr_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace faceattr::testutil

#endif
