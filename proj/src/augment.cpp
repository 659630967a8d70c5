#include "faceattr/augment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "faceattr/image_io.hpp"
#include "faceattr/parallel.hpp"
#include "faceattr/raster.hpp"

namespace faceattr {

Perturbation sample_perturbation(const PerturbConfig& cfg, SeededRng& rng) {
  Perturbation p;
  p.r_alpha = rng.normal(0.0, cfg.std_angle);
  p.r_x = rng.normal(0.0, cfg.std_shift);
  p.r_y = rng.normal(0.0, cfg.std_shift);
  p.r_s = std::max(rng.normal(cfg.mean_scale, cfg.std_scale), 0.1);
  p.sigma = std::abs(rng.normal(0.0, cfg.std_blur));
  p.flip = rng.bernoulli(cfg.flip_prob);
  return p;
}

ImageF render_training_example(const ImageF& img, const Landmarks& lm,
                               const Perturbation& p, const PerturbConfig& cfg) {
  AlignedBox box = aligned_box(lm);
  auto [moved, scale] = perturb_box(box, p, static_cast<double>(cfg.out_w));
  AffineTransform t = box_to_affine(moved, static_cast<double>(cfg.out_w),
                                    static_cast<double>(cfg.out_h), p.flip,
                                    scale);
  ImageF out = warp(img, t, cfg.out_w, cfg.out_h);
  return gaussian_blur(out, p.sigma);
}

ImageF render_aligned(const ImageF& img, const Landmarks& lm, int out_w,
                      int out_h) {
  PerturbConfig cfg = PerturbConfig::identity();
  cfg.out_w = out_w;
  cfg.out_h = out_h;
  return render_training_example(img, lm, Perturbation{}, cfg);
}

ImageLoader disk_loader() {
  return [](const DatasetRecord& rec) -> std::optional<ImageF> {
    try {
      return read_image(rec.image_path);
    } catch (const IoError&) {
      return std::nullopt;
    }
  };
}

std::vector<std::size_t> EpochStream::shuffled_order(
    std::vector<std::size_t> subset, std::uint64_t seed, int epoch) {
  // Even stream labels are reserved for shuffles, odd ones for records.
  SeededRng rng(SeededRng::derive(seed, 2 * static_cast<std::uint64_t>(epoch),
                                  0x5AFEull));
  for (std::size_t i = subset.size(); i > 1; --i)
    std::swap(subset[i - 1], subset[rng.uniform_below(i)]);
  return subset;
}

Perturbation EpochStream::record_perturbation(const PerturbConfig& cfg,
                                              std::uint64_t seed, int epoch,
                                              std::size_t record_index) {
  SeededRng rng(SeededRng::derive(
      seed, 2 * static_cast<std::uint64_t>(epoch) + 1, record_index));
  return sample_perturbation(cfg, rng);
}

EpochStream::EpochStream(const Dataset& dataset, std::vector<std::size_t> subset,
                         const PerturbConfig& cfg, ImageLoader loader,
                         std::uint64_t seed, int epoch, int batch_size,
                         int workers, bool quiet)
    : dataset_(dataset),
      order_(shuffled_order(std::move(subset), seed, epoch)),
      cfg_(cfg),
      loader_(std::move(loader)),
      seed_(seed),
      epoch_(epoch),
      batch_size_(std::max(batch_size, 1)),
      workers_(std::max(workers, 1)),
      quiet_(quiet) {
  if (order_.empty()) throw Error("epoch_stream: empty dataset subset");
  producer_ = std::thread(&EpochStream::produce, this);
}

EpochStream::~EpochStream() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  can_push_.notify_all();
  if (producer_.joinable()) producer_.join();
}

void EpochStream::produce() {
  try {
    constexpr std::size_t kQueueCapacity = 4;
    std::size_t cursor = 0;
    while (cursor < order_.size()) {
      // Gather loadable records for one batch.
      std::vector<std::size_t> indices;
      std::vector<ImageF> sources;
      while (cursor < order_.size() &&
             indices.size() < static_cast<std::size_t>(batch_size_)) {
        std::size_t rec_idx = order_[cursor++];
        const DatasetRecord& rec = dataset_.records[rec_idx];
        std::optional<ImageF> img = loader_(rec);
        if (!img || !rec.landmarks) {
          {
            std::lock_guard lock(mutex_);
            ++skipped_;
          }
          if (!quiet_)
            std::cerr << "warning: skipping record '" << rec.id << "' ("
                      << (!rec.landmarks ? "no landmarks" : "unreadable image")
                      << ")\n";
          continue;
        }
        indices.push_back(rec_idx);
        sources.push_back(std::move(*img));
      }
      if (indices.empty()) break;

      TrainingBatch batch;
      batch.record_indices = indices;
      batch.images.resize(indices.size());
      batch.labels.resize(dataset_.attribute_names.size(), indices.size());
      parallel_for(indices.size(), workers_, [&](std::size_t i) {
        std::size_t rec_idx = indices[i];
        const DatasetRecord& rec = dataset_.records[rec_idx];
        Perturbation p = record_perturbation(cfg_, seed_, epoch_, rec_idx);
        batch.images[i] =
            render_training_example(sources[i], *rec.landmarks, p, cfg_);
        batch.labels.col(static_cast<Eigen::Index>(i)) =
            rec.attributes.cast<double>();
      });

      std::unique_lock lock(mutex_);
      can_push_.wait(lock, [&] { return queue_.size() < kQueueCapacity || stop_; });
      if (stop_) return;
      queue_.push_back(std::move(batch));
      lock.unlock();
      can_pop_.notify_one();
    }
  } catch (...) {
    std::lock_guard lock(mutex_);
    error_ = std::current_exception();
  }
  {
    std::lock_guard lock(mutex_);
    done_ = true;
  }
  can_pop_.notify_all();
}

std::optional<TrainingBatch> EpochStream::next() {
  std::unique_lock lock(mutex_);
  can_pop_.wait(lock, [&] { return !queue_.empty() || done_; });
  if (error_) std::rethrow_exception(error_);
  if (queue_.empty()) {
    if (!quiet_ && skipped_ > 0)
      std::cerr << "epoch " << epoch_ << ": skipped " << skipped_ << " of "
                << order_.size() << " records\n";
    return std::nullopt;
  }
  TrainingBatch batch = std::move(queue_.front());
  queue_.pop_front();
  lock.unlock();
  can_push_.notify_one();
  return batch;
}

int EpochStream::skipped_count() const {
  std::lock_guard lock(mutex_);
  return skipped_;
}

}  // namespace faceattr
