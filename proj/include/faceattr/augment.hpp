#ifndef FACEATTR_AUGMENT_HPP
#define FACEATTR_AUGMENT_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "faceattr/data.hpp"
#include "faceattr/geometry.hpp"
#include "faceattr/image.hpp"
#include "faceattr/rng.hpp"

namespace faceattr {

/// Distribution parameters of the random perturbation layer. N(m, s) is
/// read as (mean, standard deviation).
struct PerturbConfig {
  double std_angle = 20.0;   // degrees
  double std_shift = 0.05;   // fraction of box width
  double mean_scale = 1.0;
  double std_scale = 0.1;
  double std_blur = 3.0;     // output pixels
  double flip_prob = 0.5;
  int out_w = 224;
  int out_h = 224;

  static PerturbConfig identity() {
    PerturbConfig cfg;
    cfg.std_angle = cfg.std_shift = cfg.std_scale = cfg.std_blur = 0.0;
    cfg.flip_prob = 0.0;
    return cfg;
  }
};

/// One draw of the perturbation layer. The scale draw is clamped to >= 0.1
/// against degenerate boxes; blur takes |N(0, std_blur)| (half-normal).
Perturbation sample_perturbation(const PerturbConfig& cfg, SeededRng& rng);

/// aligned_box -> perturb_box -> box_to_affine(flip) -> warp -> blur.
ImageF render_training_example(const ImageF& img, const Landmarks& lm,
                               const Perturbation& p, const PerturbConfig& cfg);

/// Identity-perturbation crop of the landmark-aligned box.
ImageF render_aligned(const ImageF& img, const Landmarks& lm, int out_w,
                      int out_h);

using ImageLoader =
    std::function<std::optional<ImageF>(const DatasetRecord&)>;

/// Reads record.image_path from disk; nullopt on failure.
ImageLoader disk_loader();

struct TrainingBatch {
  std::vector<ImageF> images;
  Eigen::MatrixXd labels;  // attributes x batch, entries +-1
  std::vector<std::size_t> record_indices;
};

/// One epoch of perturbed training examples over a record subset.
///
/// The visit order is a seed-determined shuffle and every record's
/// perturbation is a pure function of (seed, epoch, record index), so the
/// stream content is byte-identical for any worker count. Batches are
/// rendered by a producer pool and handed over through a bounded queue.
/// Unreadable images are skipped with a warning; skipped_count() reports
/// the total at end of epoch.
class EpochStream {
 public:
  EpochStream(const Dataset& dataset, std::vector<std::size_t> subset,
              const PerturbConfig& cfg, ImageLoader loader, std::uint64_t seed,
              int epoch, int batch_size = 64, int workers = 1,
              bool quiet = false);
  ~EpochStream();

  EpochStream(const EpochStream&) = delete;
  EpochStream& operator=(const EpochStream&) = delete;

  /// Next batch in deterministic order; nullopt at end of epoch.
  std::optional<TrainingBatch> next();

  /// Number of records skipped so far (complete once next() returned nullopt).
  int skipped_count() const;

  /// The seed-determined visit order this epoch (record indices).
  static std::vector<std::size_t> shuffled_order(
      std::vector<std::size_t> subset, std::uint64_t seed, int epoch);

  /// The perturbation drawn for (seed, epoch, record_index).
  static Perturbation record_perturbation(const PerturbConfig& cfg,
                                          std::uint64_t seed, int epoch,
                                          std::size_t record_index);

 private:
  void produce();

  const Dataset& dataset_;
  std::vector<std::size_t> order_;
  PerturbConfig cfg_;
  ImageLoader loader_;
  std::uint64_t seed_;
  int epoch_;
  int batch_size_;
  int workers_;
  bool quiet_;

  mutable std::mutex mutex_;
  std::condition_variable can_push_;
  std::condition_variable can_pop_;
  std::deque<TrainingBatch> queue_;
  bool done_ = false;
  bool stop_ = false;
  int skipped_ = 0;
  std::exception_ptr error_;
  std::thread producer_;
};

}  // namespace faceattr

#endif
