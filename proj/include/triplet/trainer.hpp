#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <span>
#include <vector>

#include "triplet/eval.hpp"
#include "triplet/geometry.hpp"
#include "triplet/loss.hpp"
#include "triplet/mining.hpp"
#include "triplet/synthdata.hpp"

namespace triplet {

// Embedding model: z = W^T h(x), f = z / |z|. h is the identity, or
// tanh(W1^T x + b1) when a hidden layer is configured.
struct Model {
  Matrix hidden_weight;  // input_dim x hidden_dim; empty without a hidden layer
  Vector hidden_bias;
  Matrix weight;  // (hidden_dim or input_dim) x embed_dim

  bool has_hidden() const noexcept { return hidden_weight.size() > 0; }
  Eigen::Index input_dim() const noexcept { return has_hidden() ? hidden_weight.rows() : weight.rows(); }
  Eigen::Index embed_dim() const noexcept { return weight.cols(); }

  // Gaussian entries scaled by 1/sqrt(fan_in); zero biases.
  static Model init(Eigen::Index input_dim, Eigen::Index embed_dim, Eigen::Index hidden_dim, std::mt19937_64& rng) {
    if (input_dim < 1 || embed_dim < 2 || hidden_dim < 0) throw InvalidArgument("bad model dimensions");
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
      Matrix m(rows, cols);
      const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * gauss(rng);
      }
      return m;
    };
    Model m;
    if (hidden_dim > 0) {
      m.hidden_weight = fill(input_dim, hidden_dim);
      m.hidden_bias = Vector::Zero(hidden_dim);
      m.weight = fill(hidden_dim, embed_dim);
    } else {
      m.weight = fill(input_dim, embed_dim);
    }
    return m;
  }

  Model& operator-=(const Model& g) {
    if (has_hidden()) {
      hidden_weight -= g.hidden_weight;
      hidden_bias -= g.hidden_bias;
    }
    weight -= g.weight;
    return *this;
  }

  Model scaled(double c) const {
    Model m = *this;
    if (has_hidden()) {
      m.hidden_weight *= c;
      m.hidden_bias *= c;
    }
    m.weight *= c;
    return m;
  }
};

enum class GradMode { PostProjection, ThroughNormalization };

inline std::string_view to_string(GradMode g) {
  return g == GradMode::PostProjection ? "post" : "through";
}

// Rows of `inputs` are examples.
struct ForwardPass {
  Matrix hidden;  // activations feeding the output layer (the inputs themselves without a hidden layer)
  Matrix raw;     // unnormalized embeddings
  Vector norms;
  Matrix unit;    // normalized embeddings
};

inline ForwardPass forward_batch(const Model& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) throw DimensionMismatch(inputs.cols(), model.input_dim());
  ForwardPass fp;
  if (model.has_hidden()) {
    fp.hidden = ((inputs * model.hidden_weight).rowwise() + model.hidden_bias.transpose()).array().tanh().matrix();
  } else {
    fp.hidden = inputs;
  }
  fp.raw = fp.hidden * model.weight;
  fp.norms = fp.raw.rowwise().norm();
  fp.unit.resize(fp.raw.rows(), fp.raw.cols());
  for (Eigen::Index i = 0; i < fp.raw.rows(); ++i) {
    if (!(fp.norms[i] > kMinNorm)) throw DegenerateVector();
    fp.unit.row(i) = fp.raw.row(i) / fp.norms[i];
  }
  return fp;
}

inline UnitVector forward(const Model& model, const Vector& x) {
  if (x.size() != model.input_dim()) throw DimensionMismatch(x.size(), model.input_dim());
  if (model.has_hidden()) {
    const Vector h = (model.hidden_weight.transpose() * x + model.hidden_bias).array().tanh().matrix();
    return normalize(Vector(model.weight.transpose() * h));
  }
  return normalize(Vector(model.weight.transpose() * x));
}

inline std::vector<UnitVector> embed_all(const Model& model, std::span<const Vector> points) {
  std::vector<UnitVector> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(forward(model, x));
  return out;
}

namespace detail {

inline UnitVector unit_row(const ForwardPass& fp, Eigen::Index i) {
  return normalize(Vector(fp.unit.row(i).transpose()));
}

inline TripletFeatures triplet_features(const ForwardPass& fp, const MinedTriplet& t) {
  return {unit_row(fp, static_cast<Eigen::Index>(t.anchor)), unit_row(fp, static_cast<Eigen::Index>(t.positive)),
          unit_row(fp, static_cast<Eigen::Index>(t.negative))};
}

}  // namespace detail

// Mean loss over the triplets, evaluated at the model's current embeddings.
inline double batch_loss(const Model& model, const Matrix& inputs, std::span<const MinedTriplet> triplets,
                         const LossSpec& loss) {
  if (triplets.empty()) return 0.0;
  const ForwardPass fp = forward_batch(model, inputs);
  double total = 0.0;
  for (const auto& t : triplets) total += loss_value(coord_of(detail::triplet_features(fp, t)), loss);
  return total / static_cast<double>(triplets.size());
}

// Gradient of the mean triplet loss with respect to the unnormalized
// embeddings (one row per example). PostProjection hands the per-feature
// gradients straight to the raw embedding; ThroughNormalization applies the
// normalization Jacobian (I - f f^T) / |z|.
inline Matrix embedding_grads(const ForwardPass& fp, std::span<const MinedTriplet> triplets, const LossSpec& loss,
                              GradMode mode) {
  Matrix g = Matrix::Zero(fp.unit.rows(), fp.unit.cols());
  if (triplets.empty()) return g;
  const double w = 1.0 / static_cast<double>(triplets.size());
  for (const auto& t : triplets) {
    const FeatureGrads fg = feature_grads(detail::triplet_features(fp, t), loss);
    g.row(static_cast<Eigen::Index>(t.anchor)) += w * fg.g_a.transpose();
    g.row(static_cast<Eigen::Index>(t.positive)) += w * fg.g_p.transpose();
    g.row(static_cast<Eigen::Index>(t.negative)) += w * fg.g_n.transpose();
  }
  if (mode == GradMode::ThroughNormalization) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const auto f = fp.unit.row(i);
      g.row(i) = (g.row(i) - g.row(i).dot(f) * f) / fp.norms[i];
    }
  }
  return g;
}

// Parameter gradient of the mean triplet loss; same shape as the model.
inline Model backward(const Model& model, const Matrix& inputs, std::span<const MinedTriplet> triplets,
                      const LossSpec& loss, GradMode mode) {
  const ForwardPass fp = forward_batch(model, inputs);
  const Matrix g_raw = embedding_grads(fp, triplets, loss, mode);
  Model grad;
  grad.weight = fp.hidden.transpose() * g_raw;
  if (model.has_hidden()) {
    const Matrix g_hidden = (g_raw * model.weight.transpose()).array() * (1.0 - fp.hidden.array().square());
    grad.hidden_weight = inputs.transpose() * g_hidden;
    grad.hidden_bias = g_hidden.colwise().sum().transpose();
  }
  return grad;
}

struct TrainConfig {
  LossSpec loss = LossSpec::nca();
  MiningStrategy strategy = MiningStrategy::HardNegative;
  GradMode grad_mode = GradMode::ThroughNormalization;
  double learning_rate = 0.5;
  int epochs = 50;
  int classes_per_batch = 8;  // each selected class contributes exactly two examples
  int embed_dim = 8;
  int hidden_dim = 0;  // 0: a single linear layer
  std::uint64_t seed = 0;
  int snapshot_every = 10;

  void validate() const {
    loss.validate();
    if (!std::isfinite(learning_rate) || learning_rate < 0.0) throw InvalidArgument("learning rate must be >= 0");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (classes_per_batch < 2) throw InvalidArgument("classes_per_batch must be >= 2");
    if (embed_dim < 2) throw InvalidArgument("embed_dim must be >= 2");
    if (hidden_dim < 0) throw InvalidArgument("hidden_dim must be >= 0");
    if (snapshot_every < 1) throw InvalidArgument("snapshot_every must be >= 1");
  }
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double hard_fraction = 0.0;
  double recall_at_1 = 0.0;  // held-out queries against the held-out set, self excluded
  double collapse = 0.0;     // mean off-diagonal cosine of held-out embeddings
  std::optional<std::vector<MinedTriplet>> snapshot;  // last batch of the epoch, dataset indices
};

struct TrainResult {
  std::vector<EpochLog> logs;
  Model model;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> heldout_indices;
};

// Within each class, members alternate train / held-out in order of appearance.
inline void split_train_heldout(const LabeledDataset& data, std::vector<std::size_t>& train,
                                std::vector<std::size_t>& heldout) {
  train.clear();
  heldout.clear();
  for (const auto& [label, members] : data.by_class()) {
    for (std::size_t k = 0; k < members.size(); ++k) (k % 2 == 0 ? train : heldout).push_back(members[k]);
  }
  std::sort(train.begin(), train.end());
  std::sort(heldout.begin(), heldout.end());
}

// Draws `classes` distinct classes and two distinct members of each.
class PairSampler {
 public:
  PairSampler(const LabeledDataset& data, std::span<const std::size_t> pool, int classes) : classes_(classes) {
    std::map<Label, std::vector<std::size_t>> groups;
    for (std::size_t i : pool) groups[data.labels[i]].push_back(i);
    for (auto& [label, members] : groups) {
      if (members.size() >= 2) groups_.push_back(std::move(members));
    }
    if (groups_.size() < static_cast<std::size_t>(classes)) {
      throw InvalidArgument("need " + std::to_string(classes) + " classes with >= 2 training members, have " +
                            std::to_string(groups_.size()));
    }
  }

  std::vector<std::size_t> draw(std::mt19937_64& rng) const {
    std::vector<std::size_t> order(groups_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> out;
    out.reserve(2 * static_cast<std::size_t>(classes_));
    for (int c = 0; c < classes_; ++c) {
      const auto& members = groups_[order[static_cast<std::size_t>(c)]];
      std::uniform_int_distribution<std::size_t> first(0, members.size() - 1);
      std::uniform_int_distribution<std::size_t> second(0, members.size() - 2);
      const std::size_t i = first(rng);
      std::size_t j = second(rng);
      if (j >= i) ++j;
      out.push_back(members[i]);
      out.push_back(members[j]);
    }
    return out;
  }

 private:
  int classes_;
  std::vector<std::vector<std::size_t>> groups_;
};

inline Matrix stack_rows(const LabeledDataset& data, std::span<const std::size_t> idx) {
  Matrix m(static_cast<Eigen::Index>(idx.size()), data.dim());
  for (std::size_t r = 0; r < idx.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = data.points[idx[r]].transpose();
  return m;
}

inline Batch embed_subset(const Model& model, const LabeledDataset& data, std::span<const std::size_t> idx) {
  std::vector<UnitVector> e;
  std::vector<Label> l;
  for (std::size_t i : idx) {
    e.push_back(forward(model, data.points[i]));
    l.push_back(data.labels[i]);
  }
  return {std::move(e), std::move(l)};
}

// Plain SGD, momentum 0. Deterministic in (data, config).
inline TrainResult train(const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() < 4) throw InvalidArgument("dataset too small to train");
  TrainResult result;
  split_train_heldout(data, result.train_indices, result.heldout_indices);
  if (result.heldout_indices.size() < 2) throw InvalidArgument("held-out split needs at least two items");
  const PairSampler sampler(data, result.train_indices, config.classes_per_batch);

  std::mt19937_64 rng(config.seed);
  result.model = Model::init(data.dim(), config.embed_dim, config.hidden_dim, rng);
  Model& model = result.model;

  const std::size_t per_batch = 2 * static_cast<std::size_t>(config.classes_per_batch);
  const std::size_t batches = std::max<std::size_t>(1, result.train_indices.size() / per_batch);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t hard = 0, mined = 0;
    std::vector<MinedTriplet> last;
    std::vector<std::size_t> last_idx;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::vector<std::size_t> idx = sampler.draw(rng);
      const Matrix inputs = stack_rows(data, idx);
      const ForwardPass fp = forward_batch(model, inputs);
      std::vector<UnitVector> emb;
      std::vector<Label> labels;
      for (Eigen::Index i = 0; i < fp.unit.rows(); ++i) {
        emb.push_back(detail::unit_row(fp, i));
        labels.push_back(data.labels[idx[static_cast<std::size_t>(i)]]);
      }
      const Batch batch(std::move(emb), std::move(labels));
      const std::vector<MinedTriplet> triplets = mine(batch, config.strategy, rng());

      double batch_total = 0.0;
      for (const auto& t : triplets) {
        batch_total += loss_value(t.coord, config.loss);
        hard += is_hard(t.coord) ? 1 : 0;
      }
      mined += triplets.size();
      loss_sum += triplets.empty() ? 0.0 : batch_total / static_cast<double>(triplets.size());

      if (config.learning_rate > 0.0) {
        model -= backward(model, inputs, triplets, config.loss, config.grad_mode).scaled(config.learning_rate);
      }
      last = triplets;
      last_idx = idx;
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(batches);
    log.hard_fraction = mined == 0 ? 0.0 : static_cast<double>(hard) / static_cast<double>(mined);
    const Batch heldout = embed_subset(model, data, result.heldout_indices);
    log.recall_at_1 = recall_at_k(heldout, heldout, 1, true).recall;
    log.collapse = collapse_metric(heldout);
    if (epoch % config.snapshot_every == 0) {
      for (auto& t : last) {
        t.anchor = last_idx[t.anchor];
        t.positive = last_idx[t.positive];
        t.negative = last_idx[t.negative];
      }
      log.snapshot = std::move(last);
    }
    result.logs.push_back(std::move(log));
  }
  return result;
}

}  // namespace triplet
