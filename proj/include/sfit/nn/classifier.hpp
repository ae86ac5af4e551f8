#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sfit/hash.hpp"
#include "sfit/nn/layers.hpp"
#include "sfit/rng.hpp"
#include "sfit/tensor.hpp"

namespace sfit {

// Per-BN-layer channel statistics. "Stored" holds the running estimates
// accumulated during source training; "Current" is computed from a batch.
// std is always sqrt(variance + 1e-5), for both kinds.
template <typename T>
struct LayerStats {
  enum class Kind { Stored, Current };
  Tensor<T> mean;
  Tensor<T> std;
  int n_channels = 0;
  Kind kind = Kind::Stored;
};

// Everything a single inference pass exposes to the losses: the activations
// entering each BN layer (pre-normalization), the pooled last-layer feature
// vector, and the class probabilities.
template <typename T>
struct ClassifierTrace {
  std::vector<Tensor<T>> bn_inputs;
  Tensor<T> last_features;  // (N, feature_dim)
  Tensor<T> logits;         // (N, n_classes)
  Tensor<T> probs;          // (N, n_classes)
  int batch() const { return probs.size(0); }
};

// Gradients injected into a frozen classifier's backward pass, one slot per
// trace field. Empty tensors mean "no contribution".
template <typename T>
struct TraceGrads {
  std::vector<Tensor<T>> d_bn_inputs;
  Tensor<T> d_last_features;
  Tensor<T> d_logits;
};

struct ClassifierConfig {
  std::array<int, 3> widths{64, 128, 256};
  int n_classes = 10;
  int in_channels = 3;
  int kernel = 5;
  // Fixed input transform (x - mean) * scale applied before conv1; keeps
  // ingestion in plain [0,1] pixel space.
  float input_mean = 0.5f;
  float input_scale = 2.0f;
};

enum class TraceCapture { ProbsOnly, Full };

// Three conv->BN->ReLU blocks (maxpool after the first two), global average
// pool and a linear head. The three BN layers carry the stored statistics
// that stand in for the source domain's style.
template <typename T>
class Classifier {
 public:
  static constexpr int kBnLayers = 3;

  Classifier() = default;
  explicit Classifier(const ClassifierConfig& cfg)
      : cfg_(cfg),
        conv1_(cfg.in_channels, cfg.widths[0], cfg.kernel, 1, cfg.kernel / 2),
        conv2_(cfg.widths[0], cfg.widths[1], cfg.kernel, 1, cfg.kernel / 2),
        conv3_(cfg.widths[1], cfg.widths[2], cfg.kernel, 1, cfg.kernel / 2),
        bn1_(cfg.widths[0]),
        bn2_(cfg.widths[1]),
        bn3_(cfg.widths[2]),
        fc_(cfg.widths[2], cfg.n_classes) {}

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
    fc_.init(rng);
  }

  const ClassifierConfig& config() const { return cfg_; }
  int n_classes() const { return cfg_.n_classes; }
  int feature_dim() const { return cfg_.widths[2]; }

  void freeze() { frozen_ = true; }
  void unfreeze() { frozen_ = false; }
  bool frozen() const { return frozen_; }

  void mark_adabn() { adabn_adapted_ = true; }
  bool adabn_adapted() const { return adabn_adapted_; }

  // Inference-semantics forward: BN layers normalize with stored statistics
  // regardless of batch content. Caches are kept so a frozen backward pass
  // (backward_input) can follow.
  ClassifierTrace<T> forward(const Tensor<T>& x,
                             TraceCapture capture = TraceCapture::Full) {
    return run_forward(x, BnMode::Eval, capture);
  }

  // Training-semantics forward for source training / fine-tuning: BN uses
  // batch statistics and updates running estimates.
  Tensor<T> forward_train(const Tensor<T>& x) {
    if (frozen_)
      throw ContractError("classifier is frozen; training forward refused");
    return run_forward(x, BnMode::Train, TraceCapture::ProbsOnly).logits;
  }

  // AdaBN statistics pass: normalize by batch stats while accumulating a
  // cumulative average into the running slots. Parameters untouched.
  void forward_estimate(const Tensor<T>& x) {
    run_forward(x, BnMode::Estimate, TraceCapture::ProbsOnly);
  }

  void reset_bn_estimation() {
    bn1_.reset_estimation();
    bn2_.reset_estimation();
    bn3_.reset_estimation();
  }

  // Backward for the frozen path. Injects the given gradients at their trace
  // positions and returns d loss / d input. No parameter gradient is written.
  Tensor<T> backward_input(const TraceGrads<T>& tg) {
    Tensor<T> g = fc_.backward(tg.d_logits, false);
    if (!tg.d_last_features.empty()) g += tg.d_last_features;
    g = gap_.backward(g);
    g = relu3_.backward(g);
    g = bn3_.backward(g, false);
    if (has(tg, 2)) g += tg.d_bn_inputs[2];
    g = conv3_.backward(g, false);
    g = pool2_.backward(g);
    g = relu2_.backward(g);
    g = bn2_.backward(g, false);
    if (has(tg, 1)) g += tg.d_bn_inputs[1];
    g = conv2_.backward(g, false);
    g = pool1_.backward(g);
    g = relu1_.backward(g);
    g = bn1_.backward(g, false);
    if (has(tg, 0)) g += tg.d_bn_inputs[0];
    g = conv1_.backward(g, false);
    g *= static_cast<T>(cfg_.input_scale);
    return g;
  }

  // Backward for supervised training; accumulates parameter gradients.
  void backward_train(const Tensor<T>& d_logits) {
    Tensor<T> g = fc_.backward(d_logits, true);
    g = gap_.backward(g);
    g = relu3_.backward(g);
    g = bn3_.backward(g, true);
    g = conv3_.backward(g, true);
    g = pool2_.backward(g);
    g = relu2_.backward(g);
    g = bn2_.backward(g, true);
    g = conv2_.backward(g, true);
    g = pool1_.backward(g);
    g = relu1_.backward(g);
    g = bn1_.backward(g, true);
    conv1_.backward(g, true);
  }

  void zero_grad() {
    conv1_.zero_grad();
    conv2_.zero_grad();
    conv3_.zero_grad();
    bn1_.zero_grad();
    bn2_.zero_grad();
    bn3_.zero_grad();
    fc_.zero_grad();
  }

  void visit_params(const nn::ParamVisitor<T>& v) {
    conv1_.visit("conv1", v);
    bn1_.visit("bn1", v);
    conv2_.visit("conv2", v);
    bn2_.visit("bn2", v);
    conv3_.visit("conv3", v);
    bn3_.visit("bn3", v);
    fc_.visit("fc", v);
  }

  void visit_stats(const nn::ParamVisitor<T>& v) {
    bn1_.visit_stats("bn1", v);
    bn2_.visit_stats("bn2", v);
    bn3_.visit_stats("bn3", v);
  }

  void visit_all(const nn::ParamVisitor<T>& v) {
    visit_params(v);
    visit_stats(v);
  }

  // Hash over every parameter and running statistic; the freezing contract
  // checks compare this before and after generator training.
  std::uint64_t state_hash() {
    std::uint64_t h = 0xcbf29ce484222325ull;
    visit_all([&h](const std::string& name, Tensor<T>& w, Tensor<T>&) {
      h = fnv1a64(name, h);
      h = fnv1a64(w, h);
    });
    return h;
  }

  // Stored BN statistics; std is sqrt(running_var + eps).
  std::vector<LayerStats<T>> stored_stats() const {
    std::vector<LayerStats<T>> out;
    for (const auto* bn : {&bn1_, &bn2_, &bn3_}) {
      LayerStats<T> s;
      s.n_channels = bn->channels();
      s.kind = LayerStats<T>::Kind::Stored;
      s.mean = bn->running_mean();
      s.std = Tensor<T>({bn->channels()});
      for (int c = 0; c < bn->channels(); ++c)
        s.std[c] = std::sqrt(bn->running_var()[c] + nn::BatchNorm2d<T>::kEps);
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  static bool has(const TraceGrads<T>& tg, std::size_t i) {
    return tg.d_bn_inputs.size() > i && !tg.d_bn_inputs[i].empty();
  }

  ClassifierTrace<T> run_forward(const Tensor<T>& x, BnMode mode,
                                 TraceCapture capture) {
    if (x.rank() != 4 || x.size(1) != cfg_.in_channels)
      throw ContractError("classifier: input must be (N," +
                          std::to_string(cfg_.in_channels) + ",H,W), got " +
                          Tensor<T>::shape_str(x.shape()));
    Tensor<T> t = x;
    for (std::size_t i = 0; i < t.numel(); ++i)
      t[i] = (t[i] - static_cast<T>(cfg_.input_mean)) *
             static_cast<T>(cfg_.input_scale);

    ClassifierTrace<T> trace;
    const bool full = capture == TraceCapture::Full;
    if (full) trace.bn_inputs.resize(kBnLayers);

    t = conv1_.forward(t);
    if (full) trace.bn_inputs[0] = t;
    t = bn1_.forward(t, mode);
    t = relu1_.forward(t);
    t = pool1_.forward(t);

    t = conv2_.forward(t);
    if (full) trace.bn_inputs[1] = t;
    t = bn2_.forward(t, mode);
    t = relu2_.forward(t);
    t = pool2_.forward(t);

    t = conv3_.forward(t);
    if (full) trace.bn_inputs[2] = t;
    t = bn3_.forward(t, mode);
    t = relu3_.forward(t);

    Tensor<T> feat = gap_.forward(t);
    if (full) trace.last_features = feat;
    trace.logits = fc_.forward(feat);
    trace.probs = nn::softmax_rows(trace.logits);
    return trace;
  }

  ClassifierConfig cfg_;
  nn::Conv2d<T> conv1_, conv2_, conv3_;
  nn::BatchNorm2d<T> bn1_, bn2_, bn3_;
  nn::ReLU<T> relu1_, relu2_, relu3_;
  nn::MaxPool2d<T> pool1_{2}, pool2_{2};
  nn::GlobalAvgPool<T> gap_;
  nn::Linear<T> fc_;
  bool frozen_ = false;
  bool adabn_adapted_ = false;
};

// Channel-wise mean/std of one captured BN input over batch and spatial
// dimensions. std is sqrt(population variance + 1e-5), mirroring BN's own
// epsilon so that matching stored statistics exactly yields zero loss.
template <typename T>
LayerStats<T> current_stats(const ClassifierTrace<T>& trace, int layer) {
  if (layer < 0 || layer >= static_cast<int>(trace.bn_inputs.size()))
    throw ContractError("current_stats: no such BN layer " +
                        std::to_string(layer));
  const Tensor<T>& a = trace.bn_inputs[static_cast<std::size_t>(layer)];
  if (a.size(0) < 2)
    throw ContractError("current_stats: batch size must be >= 2");
  const int n = a.size(0), c = a.size(1);
  const std::size_t hw = static_cast<std::size_t>(a.size(2)) * a.size(3);
  const double m = static_cast<double>(n) * static_cast<double>(hw);
  LayerStats<T> s;
  s.n_channels = c;
  s.kind = LayerStats<T>::Kind::Current;
  s.mean = Tensor<T>({c});
  s.std = Tensor<T>({c});
  for (int ch = 0; ch < c; ++ch) {
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const T* p = &a.at(i, ch, 0, 0);
      for (std::size_t k = 0; k < hw; ++k) {
        sum += p[k];
        sq += static_cast<double>(p[k]) * p[k];
      }
    }
    const double mu = sum / m;
    const double var = std::max(0.0, sq / m - mu * mu);
    s.mean[ch] = static_cast<T>(mu);
    s.std[ch] = static_cast<T>(
        std::sqrt(var + static_cast<double>(nn::BatchNorm2d<T>::kEps)));
  }
  return s;
}

using ClassifierF = Classifier<float>;

}  // namespace sfit
