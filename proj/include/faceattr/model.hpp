#ifndef FACEATTR_MODEL_HPP
#define FACEATTR_MODEL_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "faceattr/augment.hpp"
#include "faceattr/data.hpp"
#include "faceattr/image.hpp"
#include "faceattr/types.hpp"

namespace faceattr {

/// Sum over attributes of 1/2 (s_j - t_j)^2 with targets +-1.
/// Returns the loss and its gradient w.r.t. the scores.
std::pair<double, ScoreVector> euclidean_loss(const ScoreVector& scores,
                                              const AttributeVector& target);

/// Sigmoid cross-entropy on logits against targets +-1 (mapped to {0,1}),
/// in the numerically stable form
/// sum_j max(z_j, 0) - z_j t_j + log(1 + exp(-|z_j|)).
std::pair<double, ScoreVector> sigmoid_xent_loss(const ScoreVector& logits,
                                                 const AttributeVector& target);

enum class LossKind { kEuclidean, kSigmoidXent };

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

/// Attribute classifier contract: deterministic per-attribute scores for a
/// crop. Scores are compared against tau = 0 downstream.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ScoreVector predict(const ImageF& image) const = 0;
  virtual int attribute_count() const = 0;
};

/// Mean of the member scores.
ScoreVector ensemble_scores(
    const std::vector<const Classifier*>& members, const ImageF& image);

/// Desk-scale stand-in network: the crop is rescaled to 32x32 grayscale,
/// flattened, passed through one tanh hidden layer and a linear output
/// layer with one score per attribute.
class ReferenceNet : public Classifier {
 public:
  static constexpr int kInputSide = 32;
  static constexpr int kInputDim = kInputSide * kInputSide;

  ReferenceNet(int attributes, int hidden_units, std::uint64_t seed);
  ReferenceNet() = default;

  ScoreVector predict(const ImageF& image) const override;
  int attribute_count() const override { return static_cast<int>(w_out_.rows()); }
  int hidden_units() const { return static_cast<int>(w_hidden_.rows()); }

  /// 32x32 grayscale column for one crop.
  static Eigen::VectorXd preprocess(const ImageF& image);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs,
                          Eigen::MatrixXd* hidden_out = nullptr) const;

  // Parameter access for the optimizer and checkpoint io.
  Eigen::MatrixXd w_hidden_, w_out_;
  Eigen::VectorXd b_hidden_, b_out_;
};

/// Training schedule: RMSProp updates with staged learning-rate drops on
/// validation plateau; stops after max_stage_drops drops. The snapshot with
/// the lowest validation loss is returned.
struct TrainPlan {
  LossKind loss = LossKind::kSigmoidXent;
  double learning_rate = 1e-3;
  double decay_factor = 0.1;
  int patience = 5;
  int max_stage_drops = 2;
  int max_epochs = 100;
  int batch_size = 64;
  int hidden_units = 64;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
};

struct LossCurvePoint {
  int epoch;
  double learning_rate;
  double train_loss;
  double validation_loss;
};

struct TrainResult {
  ReferenceNet model;  // best-validation snapshot
  std::vector<LossCurvePoint> curve;
  double best_validation_loss = 0;
  int best_epoch = -1;
  int stage_drops = 0;
};

/// Trains a fresh ReferenceNet on the train subset, evaluating on identity
/// aligned crops of the validation subset after every epoch.
/// Throws DivergenceError on NaN loss.
TrainResult train(const Dataset& dataset,
                  const std::vector<std::size_t>& train_subset,
                  const std::vector<std::size_t>& validation_subset,
                  const PerturbConfig& cfg, const TrainPlan& plan,
                  std::uint64_t seed, int workers = 1,
                  const ImageLoader& loader = disk_loader(),
                  bool quiet = false);

std::string loss_curve_csv(const std::vector<LossCurvePoint>& curve);

/// Checkpoint: versioned binary header (magic, version, dims) followed by
/// little-endian 64-bit floats; a JSON sidecar at path + ".json" records
/// the TrainPlan.
void save_checkpoint(const ReferenceNet& net, const std::string& path,
                     const TrainPlan& plan, std::uint64_t seed);
ReferenceNet load_checkpoint(const std::string& path,
                             TrainPlan* plan_out = nullptr);

}  // namespace faceattr

#endif
