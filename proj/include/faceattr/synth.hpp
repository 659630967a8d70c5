#ifndef FACEATTR_SYNTH_HPP
#define FACEATTR_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "faceattr/augment.hpp"
#include "faceattr/data.hpp"
#include "faceattr/geometry.hpp"
#include "faceattr/image.hpp"
#include "faceattr/types.hpp"

namespace faceattr {

/// Similarity transform placing the canonical face into the canvas:
/// canvas = center + scale * R(angle) * local. The local frame has its
/// origin at the eye midpoint, x to the right, y down, eye distance 2.
struct FacePlacement {
  double angle_deg = 0;
  double scale = 10;  // canvas pixels per local unit
  Vec2 center = {0, 0};

  Vec2 to_canvas(const Vec2& local) const;
  Vec2 to_local(const Vec2& canvas) const;
};

/// Desk-scale benchmark generator: a parameterized toy face (ellipse head,
/// eye disks, mouth bar) with up to 8 binary visual attributes, rendered at
/// a random rotation/scale/translation. Landmarks and labels are exact and
/// everything is seed-deterministic.
struct SynthConfig {
  int attribute_count = 8;
  int canvas = 128;             // square canvas, grayscale
  double rot_range = 25.0;      // placement angle ~ U(-r, r) degrees
  double scale_min = 9.0;       // pixels per local unit
  double scale_max = 13.0;
  double shift_range = 12.0;    // eye-mid offset from canvas center, U(-r, r)
  double det_size_factor = 1.4; // synthetic detector box vs head bbox
  double det_center_noise = 0.04;  // stddev, fraction of box size
  double det_size_noise = 0.06;    // stddev of the multiplicative size noise
  double landmark_noise = 0.04;    // "detected" landmark noise, fraction of d
  std::uint64_t seed = 1;
};

struct SynthSample {
  ImageF image;
  Landmarks landmarks;
  Landmarks noisy_landmarks;  // stands in for automatic landmark detection
  AttributeVector labels;
  FacePlacement placement;
  Rect detection;  // synthetic detector output (axis-aligned, noisy)
  double detection_confidence = 0;
};

/// Attribute names in label order (first `count` of the 8 defined ones).
std::vector<std::string> synth_attribute_names(int count);

std::vector<SynthSample> synth_generate(const SynthConfig& cfg, int count,
                                        int workers = 1);

/// Re-derives the labels from rendered pixels alone (probe points mapped
/// through the placement). Agrees with the constructed labels by design.
AttributeVector synth_oracle_labels(const ImageF& image,
                                    const FacePlacement& placement, int count);

/// Head coverage check: whether the landmark-aligned box contains the whole
/// head ellipse (including hat headroom) of the placed face.
bool synth_box_contains_head(const AlignedBox& box, const FacePlacement& placement);

/// Writes images plus the annotation files (attributes, landmarks,
/// detected landmarks, detections, partitions) under dir. Partition split:
/// first train_count records train, then val_count validation, rest test.
Dataset write_synth_dataset(const std::vector<SynthSample>& samples,
                            const SynthConfig& cfg, const std::string& dir,
                            int train_count, int val_count);

/// In-memory dataset over generated samples (no files touched); the loader
/// returned alongside serves images from memory.
std::pair<Dataset, ImageLoader> synth_in_memory_dataset(
    std::vector<SynthSample> samples, const SynthConfig& cfg, int train_count,
    int val_count);

}  // namespace faceattr

#endif
