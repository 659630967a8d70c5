#include "faceattr/tta.hpp"

#include "faceattr/parallel.hpp"
#include "faceattr/raster.hpp"

namespace faceattr {

std::vector<ImageF> ten_crop_views(const ImageF& img) {
  constexpr int kRescaled = 256;
  constexpr int kCrop = 224;
  constexpr int kMargin = kRescaled - kCrop;  // 32

  ImageF big = rescale(img, kRescaled, kRescaled);
  std::vector<ImageF> views;
  views.reserve(10);
  const int offsets[5][2] = {
      {0, 0}, {kMargin, 0}, {0, kMargin}, {kMargin, kMargin},
      {kMargin / 2, kMargin / 2}};
  for (auto [x, y] : offsets) views.push_back(crop(big, x, y, kCrop, kCrop));
  for (int i = 0; i < 5; ++i) views.push_back(hflip(views[i]));
  return views;
}

std::vector<Perturbation> grid_perturbations(const TtaGrid& grid,
                                             int out_size) {
  if (grid.shifts.empty() || grid.scales.empty() || grid.angles.empty())
    throw Error("grid_perturbations: empty grid axis");
  std::vector<Perturbation> out;
  out.reserve(grid.size());
  for (double sx : grid.shifts)
    for (double sy : grid.shifts)
      for (double scale : grid.scales)
        for (double angle : grid.angles)
          for (int m = 0; m < (grid.mirror ? 2 : 1); ++m) {
            Perturbation p;
            p.r_x = sx / out_size;
            p.r_y = sy / out_size;
            p.r_s = scale;
            p.r_alpha = angle;
            p.sigma = 0.0;
            p.flip = m == 1;
            out.push_back(p);
          }
  return out;
}

std::vector<ImageF> render_views(const ImageF& img, const AlignedBox& box,
                                 const std::vector<Perturbation>& perturbations,
                                 int out_size, int workers) {
  std::vector<ImageF> views(perturbations.size());
  parallel_for(perturbations.size(), workers, [&](std::size_t i) {
    const Perturbation& p = perturbations[i];
    auto [moved, scale] = perturb_box(box, p, static_cast<double>(out_size));
    AffineTransform t =
        box_to_affine(moved, static_cast<double>(out_size),
                      static_cast<double>(out_size), p.flip, scale);
    views[i] = warp(img, t, out_size, out_size);
    if (p.sigma > 0) views[i] = gaussian_blur(views[i], p.sigma);
  });
  return views;
}

}  // namespace faceattr
