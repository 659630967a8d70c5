#ifndef FACEATTR_RASTER_HPP
#define FACEATTR_RASTER_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "faceattr/geometry.hpp"
#include "faceattr/image.hpp"
#include "faceattr/parallel.hpp"

// Pixel operations on Image: inverse-mapped affine warp with bilinear
// sampling, separable Gaussian blur, horizontal flip, bilinear rescale and
// rectangular crops. warp and gaussian_blur parallelize over output rows;
// results are bit-identical for any worker count.

namespace faceattr {

/// Bilinear sample at (x, y); coordinates outside [0,w-1]x[0,h-1] yield 0.
template <typename Scalar>
Scalar sample_bilinear(const Image<Scalar>& img, double x, double y, int c) {
  if (x < 0 || y < 0 || x > img.width() - 1 || y > img.height() - 1)
    return Scalar(0);
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  int x1 = std::min(x0 + 1, img.width() - 1);
  int y1 = std::min(y0 + 1, img.height() - 1);
  double fx = x - x0;
  double fy = y - y0;
  double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  return static_cast<Scalar>((1.0 - fy) * top + fy * bot);
}

/// Inverse warp: output pixel (u, v) is sampled at t(u, v) in the source.
template <typename Scalar>
Image<Scalar> warp(const Image<Scalar>& src, const AffineTransformT<double>& t,
                   int out_w, int out_h, int workers = 1) {
  if (src.empty()) throw IoError("warp: empty source image");
  if (out_w <= 0 || out_h <= 0) throw IoError("warp: empty output size");
  Image<Scalar> out(out_w, out_h, src.channels());
  const int channels = src.channels();
  parallel_for(static_cast<std::size_t>(out_h), workers, [&](std::size_t row) {
    int v = static_cast<int>(row);
    Scalar* dst = out.row(v);
    for (int u = 0; u < out_w; ++u) {
      Vec2 s = t(Vec2(u, v));
      for (int c = 0; c < channels; ++c)
        dst[u * channels + c] = sample_bilinear(src, s.x(), s.y(), c);
    }
  });
  return out;
}

/// Truncated, renormalized Gaussian taps for radius ceil(3*sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

/// Separable Gaussian blur with edge replication at the borders.
/// sigma = 0 returns the input unchanged.
template <typename Scalar>
Image<Scalar> gaussian_blur(const Image<Scalar>& src, double sigma,
                            int workers = 1) {
  if (sigma < 0) throw IoError("gaussian_blur: negative sigma");
  if (sigma == 0 || src.empty()) return src;
  std::vector<double> k = gaussian_kernel(sigma);
  int radius = static_cast<int>(k.size() / 2);
  const int w = src.width(), h = src.height(), channels = src.channels();

  Image<Scalar> tmp(w, h, channels);
  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row) {
    int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          int xi = std::clamp(x + i, 0, w - 1);
          acc += k[i + radius] * src.at(xi, y, c);
        }
        tmp.at(x, y, c) = static_cast<Scalar>(acc);
      }
    }
  });
  Image<Scalar> out(w, h, channels);
  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row) {
    int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          int yi = std::clamp(y + i, 0, h - 1);
          acc += k[i + radius] * tmp.at(x, yi, c);
        }
        out.at(x, y, c) = static_cast<Scalar>(acc);
      }
    }
  });
  return out;
}

/// Column reversal per channel.
template <typename Scalar>
Image<Scalar> hflip(const Image<Scalar>& src) {
  Image<Scalar> out(src.width(), src.height(), src.channels());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      for (int c = 0; c < src.channels(); ++c)
        out.at(x, y, c) = src.at(src.width() - 1 - x, y, c);
  return out;
}

/// Bilinear resize, expressed as a warp with a diagonal affine.
template <typename Scalar>
Image<Scalar> rescale(const Image<Scalar>& src, int out_w, int out_h,
                      int workers = 1) {
  if (out_w <= 0 || out_h <= 0) throw IoError("rescale: empty target size");
  if (out_w == src.width() && out_h == src.height()) return src;
  AffineTransform t;
  t.linear = Eigen::DiagonalMatrix<double, 2>(
      static_cast<double>(src.width()) / out_w,
      static_cast<double>(src.height()) / out_h);
  t.offset = Vec2(src.width() / 2.0, src.height() / 2.0) -
             t.linear * Vec2(out_w / 2.0, out_h / 2.0);
  return warp(src, t, out_w, out_h, workers);
}

/// Exact sub-rectangle copy; the rectangle must lie within bounds.
template <typename Scalar>
Image<Scalar> crop(const Image<Scalar>& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > src.width() ||
      y + h > src.height())
    throw IoError("crop: rectangle out of bounds");
  Image<Scalar> out(w, h, src.channels());
  for (int row = 0; row < h; ++row) {
    const Scalar* s = src.row(y + row) + static_cast<std::size_t>(x) * src.channels();
    std::copy(s, s + static_cast<std::size_t>(w) * src.channels(), out.row(row));
  }
  return out;
}

}  // namespace faceattr

#endif
