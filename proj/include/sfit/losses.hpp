#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sfit/nn/classifier.hpp"
#include "sfit/tensor.hpp"

namespace sfit {

template <typename T>
struct LossWeights {
  T content = T(1);
  T style = T(10);
  T entropy = static_cast<T>(0.1);

  void validate() const {
    if (content < T(0) || style < T(0) || entropy < T(0))
      throw ContractError("loss weights must be non-negative");
  }
};

template <typename T>
struct LossReport {
  T content = T(0);
  T style = T(0);
  T entropy = T(0);
  T total = T(0);
};

namespace detail {

constexpr double kProbFloor = 1e-8;
constexpr double kNormFloor = 1e-12;

}  // namespace detail

// Batch mean of the per-sample Euclidean distance between last-layer feature
// vectors of the translated and original images. The original trace is a
// constant target; no gradient flows into it.
template <typename T>
T content_loss(const ClassifierTrace<T>& translated,
               const ClassifierTrace<T>& original) {
  const Tensor<T>& ft = translated.last_features;
  const Tensor<T>& fo = original.last_features;
  if (ft.size(0) != fo.size(0))
    throw ContractError("content_loss: traces have different batch sizes");
  if (ft.size(1) != fo.size(1))
    throw ContractError("content_loss: traces have different feature dims");
  const int n = ft.size(0), d = ft.size(1);
  double acc = 0;
  for (int s = 0; s < n; ++s) {
    double sq = 0;
    for (int j = 0; j < d; ++j) {
      const double diff = static_cast<double>(ft.at(s, j)) - fo.at(s, j);
      sq += diff * diff;
    }
    acc += std::sqrt(sq);
  }
  return static_cast<T>(acc / n);
}

// d content_loss / d translated.last_features.
template <typename T>
Tensor<T> content_loss_grad(const ClassifierTrace<T>& translated,
                            const ClassifierTrace<T>& original) {
  const Tensor<T>& ft = translated.last_features;
  const Tensor<T>& fo = original.last_features;
  const int n = ft.size(0), d = ft.size(1);
  Tensor<T> g(ft.shape());
  for (int s = 0; s < n; ++s) {
    double sq = 0;
    for (int j = 0; j < d; ++j) {
      const double diff = static_cast<double>(ft.at(s, j)) - fo.at(s, j);
      sq += diff * diff;
    }
    const double norm = std::sqrt(sq);
    if (norm < detail::kNormFloor) continue;  // subgradient 0 at the tip
    const double k = 1.0 / (norm * n);
    for (int j = 0; j < d; ++j)
      g.at(s, j) =
          static_cast<T>((static_cast<double>(ft.at(s, j)) - fo.at(s, j)) * k);
  }
  return g;
}

// Layer-averaged distance between the translated batch's statistics and the
// stored BN statistics: (1/N) sum_n ||mu_cur - mu_stored|| + ||sd_cur -
// sd_stored||, each norm over channels.
template <typename T>
T style_loss(const ClassifierTrace<T>& translated,
             const std::vector<LayerStats<T>>& stored) {
  const std::size_t layers = stored.size();
  if (translated.bn_inputs.size() != layers)
    throw ContractError("style_loss: trace has " +
                        std::to_string(translated.bn_inputs.size()) +
                        " BN inputs, stored stats have " +
                        std::to_string(layers));
  double acc = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const LayerStats<T> cur = current_stats(translated, static_cast<int>(l));
    if (cur.n_channels != stored[l].n_channels)
      throw ContractError("style_loss: channel mismatch at layer " +
                          std::to_string(l) + ": batch has " +
                          std::to_string(cur.n_channels) + ", stored has " +
                          std::to_string(stored[l].n_channels));
    double mu = 0, sd = 0;
    for (int c = 0; c < cur.n_channels; ++c) {
      const double dm = static_cast<double>(cur.mean[c]) - stored[l].mean[c];
      const double ds = static_cast<double>(cur.std[c]) - stored[l].std[c];
      mu += dm * dm;
      sd += ds * ds;
    }
    acc += std::sqrt(mu) + std::sqrt(sd);
  }
  return static_cast<T>(acc / static_cast<double>(layers));
}

// d style_loss / d bn_inputs[l] for every layer.
template <typename T>
std::vector<Tensor<T>> style_loss_grads(
    const ClassifierTrace<T>& translated,
    const std::vector<LayerStats<T>>& stored) {
  const std::size_t layers = stored.size();
  std::vector<Tensor<T>> grads(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor<T>& a = translated.bn_inputs[l];
    const LayerStats<T> cur = current_stats(translated, static_cast<int>(l));
    const int n = a.size(0), c = a.size(1);
    const std::size_t hw = static_cast<std::size_t>(a.size(2)) * a.size(3);
    const double m = static_cast<double>(n) * static_cast<double>(hw);

    double mu_norm = 0, sd_norm = 0;
    for (int ch = 0; ch < c; ++ch) {
      const double dm = static_cast<double>(cur.mean[ch]) - stored[l].mean[ch];
      const double ds = static_cast<double>(cur.std[ch]) - stored[l].std[ch];
      mu_norm += dm * dm;
      sd_norm += ds * ds;
    }
    mu_norm = std::sqrt(mu_norm);
    sd_norm = std::sqrt(sd_norm);

    Tensor<T> g(a.shape());
    const double layer_scale = 1.0 / static_cast<double>(layers);
    for (int ch = 0; ch < c; ++ch) {
      const double dm = static_cast<double>(cur.mean[ch]) - stored[l].mean[ch];
      const double ds = static_cast<double>(cur.std[ch]) - stored[l].std[ch];
      const double gm =
          mu_norm < detail::kNormFloor ? 0.0 : dm / (mu_norm * m);
      const double gs_base =
          sd_norm < detail::kNormFloor
              ? 0.0
              : ds / (sd_norm * m * static_cast<double>(cur.std[ch]));
      for (int s = 0; s < n; ++s) {
        const T* pa = &a.at(s, ch, 0, 0);
        T* pg = &g.at(s, ch, 0, 0);
        for (std::size_t i = 0; i < hw; ++i)
          pg[i] = static_cast<T>(
              layer_scale *
              (gm + gs_base * (static_cast<double>(pa[i]) - cur.mean[ch])));
      }
    }
    grads[l] = std::move(g);
  }
  return grads;
}

// Batch mean of the Shannon entropy of each probability row, natural log,
// probabilities floored at 1e-8 before the log.
template <typename T>
T entropy_loss(const Tensor<T>& probs) {
  const int n = probs.size(0), c = probs.size(1);
  double acc = 0;
  for (int s = 0; s < n; ++s) {
    double sum = 0, h = 0;
    for (int j = 0; j < c; ++j) {
      const double p = probs.at(s, j);
      if (p < 0) throw ContractError("entropy_loss: negative probability");
      sum += p;
      h -= p * std::log(std::max(p, detail::kProbFloor));
    }
    if (std::abs(sum - 1.0) > 1e-5)
      throw ContractError("entropy_loss: probability row does not sum to 1");
    acc += h;
  }
  return static_cast<T>(acc / n);
}

// d entropy_loss / d logits, with the softmax Jacobian applied analytically.
template <typename T>
Tensor<T> entropy_loss_grad_logits(const Tensor<T>& probs) {
  const int n = probs.size(0), c = probs.size(1);
  Tensor<T> g(probs.shape());
  std::vector<double> v(static_cast<std::size_t>(c));
  for (int s = 0; s < n; ++s) {
    double dot = 0;
    for (int j = 0; j < c; ++j) {
      const double p = probs.at(s, j);
      // derivative of -p*log(max(p, floor)) with respect to p
      v[static_cast<std::size_t>(j)] =
          p > detail::kProbFloor ? -(std::log(p) + 1.0)
                                 : -std::log(detail::kProbFloor);
      dot += v[static_cast<std::size_t>(j)] * p;
    }
    for (int j = 0; j < c; ++j)
      g.at(s, j) = static_cast<T>(
          probs.at(s, j) * (v[static_cast<std::size_t>(j)] - dot) / n);
  }
  return g;
}

// Full objective for one batch: translate, trace both versions through the
// frozen classifier, combine the three terms. Gen is any callable model with
// forward(); an exact-identity stand-in satisfies it in tests.
template <typename T, typename Gen>
LossReport<T> total_loss(const Tensor<T>& x, Gen& gen, Classifier<T>& clf,
                         const LossWeights<T>& w) {
  w.validate();
  Tensor<T> translated = gen.forward(x);
  ClassifierTrace<T> trace_orig = clf.forward(x, TraceCapture::Full);
  ClassifierTrace<T> trace_trans = clf.forward(translated, TraceCapture::Full);
  LossReport<T> r;
  r.content = content_loss(trace_trans, trace_orig);
  r.style = style_loss(trace_trans, clf.stored_stats());
  r.entropy = entropy_loss(trace_trans.probs);
  r.total = w.content * r.content + w.style * r.style + w.entropy * r.entropy;
  return r;
}

// Same computation, but also backpropagates d total / d generator parameters
// into the generator's gradient buffers. Gradients flow through the frozen
// classifier into the generator only; the original-image trace stays
// constant.
template <typename T, typename Gen>
LossReport<T> total_loss_backward(const Tensor<T>& x, Gen& gen,
                                  Classifier<T>& clf,
                                  const LossWeights<T>& w) {
  w.validate();
  Tensor<T> translated = gen.forward(x);
  ClassifierTrace<T> trace_orig = clf.forward(x, TraceCapture::Full);
  // The translated forward must come last so the classifier's layer caches
  // describe it when backward_input runs.
  ClassifierTrace<T> trace_trans = clf.forward(translated, TraceCapture::Full);

  LossReport<T> r;
  r.content = content_loss(trace_trans, trace_orig);
  r.style = style_loss(trace_trans, clf.stored_stats());
  r.entropy = entropy_loss(trace_trans.probs);
  r.total = w.content * r.content + w.style * r.style + w.entropy * r.entropy;

  TraceGrads<T> tg;
  tg.d_logits = Tensor<T>(trace_trans.logits.shape());
  if (w.entropy > T(0)) {
    Tensor<T> ge = entropy_loss_grad_logits(trace_trans.probs);
    ge *= w.entropy;
    tg.d_logits += ge;
  }
  if (w.content > T(0)) {
    tg.d_last_features = content_loss_grad(trace_trans, trace_orig);
    tg.d_last_features *= w.content;
  }
  if (w.style > T(0)) {
    tg.d_bn_inputs = style_loss_grads(trace_trans, clf.stored_stats());
    for (auto& g : tg.d_bn_inputs) g *= w.style;
  }
  Tensor<T> d_translated = clf.backward_input(tg);
  gen.backward(d_translated);
  return r;
}

}  // namespace sfit
