#ifndef FACEATTR_IMAGE_HPP
#define FACEATTR_IMAGE_HPP

#include <cassert>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "faceattr/errors.hpp"

namespace faceattr {

/// Dense raster image: row-major, channel-interleaved real samples in [0,1].
/// 8-bit files are divided by 255 on load and rounded back on save.
template <typename Scalar = float>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, Scalar fill = Scalar(0))
      : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
      throw IoError("invalid image shape");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  Scalar& at(int x, int y, int c = 0) {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c < channels_);
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  Scalar at(int x, int y, int c = 0) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c < channels_);
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }
  const Scalar* row(int y) const {
    return data_.data() + static_cast<std::size_t>(y) * width_ * channels_;
  }

  /// Flat view over all samples.
  Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> samples() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> samples() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  /// Strided view of one channel, shaped height x width.
  auto plane(int c) const {
    using Stride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const Mat, 0, Stride>(
        data_.data() + c, height_, width_,
        Stride(static_cast<Eigen::Index>(width_) * channels_, channels_));
  }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<Scalar> data_;
};

using ImageF = Image<float>;

}  // namespace faceattr

#endif
