#ifndef FACEATTR_TTA_HPP
#define FACEATTR_TTA_HPP

#include <vector>

#include "faceattr/geometry.hpp"
#include "faceattr/image.hpp"

namespace faceattr {

/// Deterministic test-time transformation grid. Shifts are pixels at the
/// output resolution (converted to width fractions by grid_perturbations);
/// grid size is |shifts|^2 * |scales| * |angles| * (mirror ? 2 : 1),
/// 162 at the defaults.
struct TtaGrid {
  std::vector<double> shifts = {-10.0, 0.0, 10.0};
  std::vector<double> scales = {0.9, 1.0, 1.1};
  std::vector<double> angles = {-10.0, 0.0, 10.0};
  bool mirror = true;

  std::size_t size() const {
    return shifts.size() * shifts.size() * scales.size() * angles.size() *
           (mirror ? 2 : 1);
  }
};

/// Rescales to 256x256 and emits the four 224x224 corner crops plus the
/// center crop, then the horizontal flips of all five, in the fixed order
/// [TL, TR, BL, BR, C, flipped same order].
std::vector<ImageF> ten_crop_views(const ImageF& img);

/// Cartesian product of the grid, with sigma = 0 throughout and shifts
/// normalized by out_size. Enumeration order: shift_x outer, then shift_y,
/// scale, angle, and mirror innermost.
std::vector<Perturbation> grid_perturbations(const TtaGrid& grid,
                                             int out_size = 224);

/// One warped out_size x out_size view per perturbation
/// (perturb_box -> box_to_affine -> warp; blur only if sigma > 0).
std::vector<ImageF> render_views(const ImageF& img, const AlignedBox& box,
                                 const std::vector<Perturbation>& perturbations,
                                 int out_size = 224, int workers = 1);

}  // namespace faceattr

#endif
