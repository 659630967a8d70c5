#include "faceattr/model.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "faceattr/parallel.hpp"
#include "faceattr/raster.hpp"
#include "faceattr/rng.hpp"

namespace faceattr {

std::pair<double, ScoreVector> euclidean_loss(const ScoreVector& scores,
                                              const AttributeVector& target) {
  if (scores.size() != target.size())
    throw Error("euclidean_loss: length mismatch");
  ScoreVector grad = scores - target.cast<double>();
  double loss = 0.5 * grad.squaredNorm();
  return {loss, std::move(grad)};
}

std::pair<double, ScoreVector> sigmoid_xent_loss(const ScoreVector& logits,
                                                 const AttributeVector& target) {
  if (logits.size() != target.size())
    throw Error("sigmoid_xent_loss: length mismatch");
  double loss = 0;
  ScoreVector grad(logits.size());
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    double z = logits[j];
    double t = (target[j] + 1) * 0.5;
    loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    grad[j] = 1.0 / (1.0 + std::exp(-z)) - t;
  }
  return {loss, std::move(grad)};
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "euclidean") return LossKind::kEuclidean;
  if (name == "sigmoid" || name == "sigmoid-xent")
    return LossKind::kSigmoidXent;
  throw ConfigError("unknown loss '" + name + "'");
}

std::string to_string(LossKind kind) {
  return kind == LossKind::kEuclidean ? "euclidean" : "sigmoid-xent";
}

ScoreVector ensemble_scores(const std::vector<const Classifier*>& members,
                            const ImageF& image) {
  if (members.empty()) throw Error("ensemble_scores: empty ensemble");
  ScoreVector sum = members.front()->predict(image);
  for (std::size_t i = 1; i < members.size(); ++i) {
    ScoreVector s = members[i]->predict(image);
    if (s.size() != sum.size())
      throw Error("ensemble_scores: attribute count mismatch");
    sum += s;
  }
  return sum / static_cast<double>(members.size());
}

ReferenceNet::ReferenceNet(int attributes, int hidden_units,
                           std::uint64_t seed) {
  if (attributes < 1 || hidden_units < 1)
    throw ConfigError("ReferenceNet needs positive layer sizes");
  SeededRng rng(SeededRng::derive(seed, 0x1A17ull));
  auto init = [&rng](Eigen::MatrixXd& m, int fan_in) {
    double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = rng.normal(0.0, scale);
  };
  w_hidden_.resize(hidden_units, kInputDim);
  init(w_hidden_, kInputDim);
  b_hidden_ = Eigen::VectorXd::Zero(hidden_units);
  w_out_.resize(attributes, hidden_units);
  init(w_out_, hidden_units);
  b_out_ = Eigen::VectorXd::Zero(attributes);
}

Eigen::VectorXd ReferenceNet::preprocess(const ImageF& image) {
  ImageF small = image.width() == kInputSide && image.height() == kInputSide
                     ? image
                     : rescale(image, kInputSide, kInputSide);
  Eigen::VectorXd x(kInputDim);
  for (int y = 0; y < kInputSide; ++y)
    for (int x_pos = 0; x_pos < kInputSide; ++x_pos) {
      double v = 0;
      for (int c = 0; c < small.channels(); ++c) v += small.at(x_pos, y, c);
      x[y * kInputSide + x_pos] = v / small.channels();
    }
  return x;
}

Eigen::MatrixXd ReferenceNet::forward(const Eigen::MatrixXd& inputs,
                                      Eigen::MatrixXd* hidden_out) const {
  Eigen::MatrixXd hidden =
      ((w_hidden_ * inputs).colwise() + b_hidden_).array().tanh();
  Eigen::MatrixXd scores = (w_out_ * hidden).colwise() + b_out_;
  if (hidden_out) *hidden_out = std::move(hidden);
  return scores;
}

ScoreVector ReferenceNet::predict(const ImageF& image) const {
  return forward(preprocess(image));
}

namespace {

struct RmsPropState {
  Eigen::MatrixXd w_hidden, w_out;
  Eigen::VectorXd b_hidden, b_out;

  explicit RmsPropState(const ReferenceNet& net)
      : w_hidden(Eigen::MatrixXd::Zero(net.w_hidden_.rows(), net.w_hidden_.cols())),
        w_out(Eigen::MatrixXd::Zero(net.w_out_.rows(), net.w_out_.cols())),
        b_hidden(Eigen::VectorXd::Zero(net.b_hidden_.size())),
        b_out(Eigen::VectorXd::Zero(net.b_out_.size())) {}
};

template <typename Mat>
void rmsprop_step(Mat& param, Mat& cache, const Mat& grad, double lr,
                  double decay, double epsilon) {
  cache = decay * cache + (1.0 - decay) * grad.array().square().matrix();
  param -= lr *
           (grad.array() / (cache.array().sqrt() + epsilon)).matrix();
}

double batch_loss_and_grad(LossKind kind, const Eigen::MatrixXd& scores,
                           const Eigen::MatrixXd& targets,
                           Eigen::MatrixXd* grad_out) {
  // Per-example loss summed over attributes, averaged over the batch.
  double loss;
  if (kind == LossKind::kEuclidean) {
    Eigen::MatrixXd diff = scores - targets;
    loss = 0.5 * diff.squaredNorm();
    if (grad_out) *grad_out = std::move(diff);
  } else {
    Eigen::ArrayXXd z = scores.array();
    Eigen::ArrayXXd t = (targets.array() + 1.0) * 0.5;
    loss = (z.max(0.0) - z * t + (-z.abs()).exp().log1p()).sum();
    if (grad_out) *grad_out = (1.0 / (1.0 + (-z).exp()) - t).matrix();
  }
  double n = static_cast<double>(scores.cols());
  if (grad_out) *grad_out /= n;
  return loss / n;
}

}  // namespace

TrainResult train(const Dataset& dataset,
                  const std::vector<std::size_t>& train_subset,
                  const std::vector<std::size_t>& validation_subset,
                  const PerturbConfig& cfg, const TrainPlan& plan,
                  std::uint64_t seed, int workers, const ImageLoader& loader,
                  bool quiet) {
  if (train_subset.empty()) throw Error("train: empty training subset");
  if (validation_subset.empty()) throw Error("train: empty validation subset");
  if (plan.learning_rate < 0 || std::isnan(plan.learning_rate))
    throw ConfigError("learning rate must be >= 0");

  const int n_attrs = static_cast<int>(dataset.attribute_names.size());
  ReferenceNet net(n_attrs, plan.hidden_units, seed);
  RmsPropState cache(net);

  // Validation crops are deterministic; render them once up front.
  Eigen::MatrixXd val_inputs(ReferenceNet::kInputDim,
                             static_cast<Eigen::Index>(validation_subset.size()));
  Eigen::MatrixXd val_targets(n_attrs,
                              static_cast<Eigen::Index>(validation_subset.size()));
  {
    std::vector<Eigen::VectorXd> cols(validation_subset.size());
    parallel_for(validation_subset.size(), workers, [&](std::size_t i) {
      const DatasetRecord& rec = dataset.records[validation_subset[i]];
      std::optional<ImageF> img = loader(rec);
      if (!img || !rec.landmarks)
        throw Error("train: unreadable validation record '" + rec.id + "'");
      cols[i] = ReferenceNet::preprocess(
          render_aligned(*img, *rec.landmarks, cfg.out_w, cfg.out_h));
    });
    for (std::size_t i = 0; i < cols.size(); ++i) {
      val_inputs.col(static_cast<Eigen::Index>(i)) = cols[i];
      val_targets.col(static_cast<Eigen::Index>(i)) =
          dataset.records[validation_subset[i]].attributes.cast<double>();
    }
  }

  TrainResult result;
  result.best_validation_loss = std::numeric_limits<double>::infinity();
  ReferenceNet best = net;
  int since_improvement = 0;
  double lr = plan.learning_rate;

  for (int epoch = 0; epoch < plan.max_epochs; ++epoch) {
    EpochStream stream(dataset, train_subset, cfg, loader, seed, epoch,
                       plan.batch_size, workers, quiet);
    double train_loss_sum = 0;
    std::size_t train_batches = 0;
    while (auto batch = stream.next()) {
      Eigen::MatrixXd inputs(ReferenceNet::kInputDim,
                             static_cast<Eigen::Index>(batch->images.size()));
      std::vector<Eigen::VectorXd> cols(batch->images.size());
      parallel_for(batch->images.size(), workers, [&](std::size_t i) {
        cols[i] = ReferenceNet::preprocess(batch->images[i]);
      });
      for (std::size_t i = 0; i < cols.size(); ++i)
        inputs.col(static_cast<Eigen::Index>(i)) = cols[i];

      Eigen::MatrixXd hidden;
      Eigen::MatrixXd scores = net.forward(inputs, &hidden);
      Eigen::MatrixXd grad_scores;
      double loss =
          batch_loss_and_grad(plan.loss, scores, batch->labels, &grad_scores);
      if (!std::isfinite(loss))
        throw DivergenceError("train: loss diverged (epoch " +
                              std::to_string(epoch) + ")");
      train_loss_sum += loss;
      ++train_batches;

      Eigen::MatrixXd grad_w_out = grad_scores * hidden.transpose();
      Eigen::VectorXd grad_b_out = grad_scores.rowwise().sum();
      Eigen::MatrixXd grad_hidden =
          (net.w_out_.transpose() * grad_scores).array() *
          (1.0 - hidden.array().square());
      Eigen::MatrixXd grad_w_hidden = grad_hidden.matrix() * inputs.transpose();
      Eigen::VectorXd grad_b_hidden = grad_hidden.matrix().rowwise().sum();

      rmsprop_step(net.w_out_, cache.w_out, grad_w_out, lr, plan.rmsprop_decay,
                   plan.rmsprop_epsilon);
      rmsprop_step(net.b_out_, cache.b_out, grad_b_out, lr, plan.rmsprop_decay,
                   plan.rmsprop_epsilon);
      rmsprop_step(net.w_hidden_, cache.w_hidden, grad_w_hidden, lr,
                   plan.rmsprop_decay, plan.rmsprop_epsilon);
      rmsprop_step(net.b_hidden_, cache.b_hidden, grad_b_hidden, lr,
                   plan.rmsprop_decay, plan.rmsprop_epsilon);
    }

    double val_loss = batch_loss_and_grad(
        plan.loss, net.forward(val_inputs), val_targets, nullptr);
    if (!std::isfinite(val_loss))
      throw DivergenceError("train: validation loss diverged (epoch " +
                            std::to_string(epoch) + ")");
    result.curve.push_back({epoch, lr,
                            train_batches ? train_loss_sum / train_batches : 0.0,
                            val_loss});

    if (val_loss < result.best_validation_loss) {
      result.best_validation_loss = val_loss;
      result.best_epoch = epoch;
      best = net;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= plan.patience) {
      if (result.stage_drops >= plan.max_stage_drops) break;
      lr *= plan.decay_factor;
      ++result.stage_drops;
      since_improvement = 0;
    }
  }

  result.model = std::move(best);
  return result;
}

std::string loss_curve_csv(const std::vector<LossCurvePoint>& curve) {
  std::ostringstream out;
  out << "epoch,learning_rate,train_loss,validation_loss\n";
  char buf[128];
  for (const LossCurvePoint& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", p.epoch,
                  p.learning_rate, p.train_loss, p.validation_loss);
    out << buf;
  }
  return out.str();
}

namespace {

constexpr char kMagic[8] = {'F', 'A', 'T', 'T', 'R', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

void get_matrix(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get_f64(in);
}

}  // namespace

void save_checkpoint(const ReferenceNet& net, const std::string& path,
                     const TrainPlan& plan, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.attribute_count()));
  put_u32(out, static_cast<std::uint32_t>(ReferenceNet::kInputDim));
  put_u32(out, static_cast<std::uint32_t>(net.hidden_units()));
  put_matrix(out, net.w_hidden_);
  put_matrix(out, net.b_hidden_);
  put_matrix(out, net.w_out_);
  put_matrix(out, net.b_out_);
  if (!out) throw IoError("short write to " + path);
  out.close();

  nlohmann::json sidecar;
  sidecar["loss"] = to_string(plan.loss);
  sidecar["learning_rate"] = plan.learning_rate;
  sidecar["decay_factor"] = plan.decay_factor;
  sidecar["patience"] = plan.patience;
  sidecar["max_stage_drops"] = plan.max_stage_drops;
  sidecar["max_epochs"] = plan.max_epochs;
  sidecar["batch_size"] = plan.batch_size;
  sidecar["hidden_units"] = plan.hidden_units;
  sidecar["rmsprop_decay"] = plan.rmsprop_decay;
  sidecar["rmsprop_epsilon"] = plan.rmsprop_epsilon;
  sidecar["seed"] = seed;
  std::ofstream json_out(path + ".json", std::ios::binary);
  if (!json_out) throw IoError("cannot write " + path + ".json");
  json_out << sidecar.dump(2) << "\n";
}

ReferenceNet load_checkpoint(const std::string& path, TrainPlan* plan_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path);
  std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  std::uint32_t attrs = get_u32(in);
  std::uint32_t input_dim = get_u32(in);
  std::uint32_t hidden = get_u32(in);
  if (input_dim != ReferenceNet::kInputDim)
    throw IoError("checkpoint input dim mismatch");
  if (attrs == 0 || hidden == 0) throw IoError("corrupt checkpoint header");

  ReferenceNet net;
  net.w_hidden_.resize(hidden, input_dim);
  net.b_hidden_.resize(hidden);
  net.w_out_.resize(attrs, hidden);
  net.b_out_.resize(attrs);
  get_matrix(in, net.w_hidden_);
  Eigen::MatrixXd b1(hidden, 1), b2(attrs, 1);
  get_matrix(in, b1);
  net.b_hidden_ = b1.col(0);
  get_matrix(in, net.w_out_);
  get_matrix(in, b2);
  net.b_out_ = b2.col(0);
  if (!in) throw IoError("truncated checkpoint: " + path);

  if (plan_out) {
    std::ifstream json_in(path + ".json");
    if (json_in) {
      nlohmann::json sidecar = nlohmann::json::parse(json_in);
      plan_out->loss = loss_kind_from_string(sidecar.value("loss", "sigmoid-xent"));
      plan_out->learning_rate = sidecar.value("learning_rate", 1e-3);
      plan_out->decay_factor = sidecar.value("decay_factor", 0.1);
      plan_out->patience = sidecar.value("patience", 5);
      plan_out->max_stage_drops = sidecar.value("max_stage_drops", 2);
      plan_out->max_epochs = sidecar.value("max_epochs", 100);
      plan_out->batch_size = sidecar.value("batch_size", 64);
      plan_out->hidden_units = sidecar.value("hidden_units", 64);
      plan_out->rmsprop_decay = sidecar.value("rmsprop_decay", 0.9);
      plan_out->rmsprop_epsilon = sidecar.value("rmsprop_epsilon", 1e-8);
    }
  }
  return net;
}

}  // namespace faceattr
