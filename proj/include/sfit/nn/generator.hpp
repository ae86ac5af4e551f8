#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sfit/hash.hpp"
#include "sfit/nn/layers.hpp"
#include "sfit/rng.hpp"
#include "sfit/tensor.hpp"

namespace sfit {

struct GeneratorConfig {
  int base_width = 32;
  int n_blocks = 4;
  int channels = 3;
};

namespace nn {

template <typename T>
class ResBlock {
 public:
  ResBlock() = default;
  explicit ResBlock(int channels)
      : conv1_(channels, channels, 3, 1, 1),
        conv2_(channels, channels, 3, 1, 1),
        norm1_(channels),
        norm2_(channels) {}

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> t = norm1_.forward(conv1_.forward(x));
    t = relu_.forward(t);
    t = norm2_.forward(conv2_.forward(t));
    return x + t;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = norm2_.backward(gy);
    g = conv2_.backward(g);
    g = relu_.backward(g);
    g = norm1_.backward(g);
    g = conv1_.backward(g);
    return g + gy;  // skip connection
  }

  void zero_grad() {
    conv1_.zero_grad();
    conv2_.zero_grad();
    norm1_.zero_grad();
    norm2_.zero_grad();
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    conv1_.visit(prefix + ".conv1", v);
    norm1_.visit(prefix + ".norm1", v);
    conv2_.visit(prefix + ".conv2", v);
    norm2_.visit(prefix + ".norm2", v);
  }

 private:
  Conv2d<T> conv1_, conv2_;
  InstanceNorm2d<T> norm1_, norm2_;
  ReLU<T> relu_;
};

}  // namespace nn

// Residual image-to-image generator: two stride-2 down-convolutions, a stack
// of residual blocks, two up-convolutions, instance normalization throughout.
// The output is sigmoid-bounded to [0,1] around a logit-space skip from the
// input, and the final convolution is initialized at 0.1 scale, so a fresh
// generator is close to the identity map.
template <typename T>
class Generator {
 public:
  Generator() = default;
  explicit Generator(const GeneratorConfig& cfg)
      : cfg_(cfg),
        conv_in_(cfg.channels, w(), 7, 1, 3),
        down1_(w(), 2 * w(), 3, 2, 1),
        down2_(2 * w(), 4 * w(), 3, 2, 1),
        up1_(4 * w(), 2 * w(), 3, 2, 1, 1),
        up2_(2 * w(), w(), 3, 2, 1, 1),
        conv_out_(w(), cfg.channels, 7, 1, 3),
        norm_in_(w()),
        norm_d1_(2 * w()),
        norm_d2_(4 * w()),
        norm_u1_(2 * w()),
        norm_u2_(w()) {
    blocks_.reserve(static_cast<std::size_t>(cfg.n_blocks));
    for (int i = 0; i < cfg.n_blocks; ++i)
      blocks_.emplace_back(4 * w());
  }

  void init(Rng& rng) {
    conv_in_.init(rng);
    down1_.init(rng);
    down2_.init(rng);
    for (auto& b : blocks_) b.init(rng);
    up1_.init(rng);
    up2_.init(rng);
    conv_out_.init(rng, static_cast<T>(0.1));  // near-identity start
  }

  const GeneratorConfig& config() const { return cfg_; }

  // x in [0,1] -> translated image of identical shape in [0,1].
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> t = relu_in_.forward(norm_in_.forward(conv_in_.forward(x)));
    t = relu_d1_.forward(norm_d1_.forward(down1_.forward(t)));
    t = relu_d2_.forward(norm_d2_.forward(down2_.forward(t)));
    for (auto& b : blocks_) t = b.forward(t);
    t = relu_u1_.forward(norm_u1_.forward(up1_.forward(t)));
    t = relu_u2_.forward(norm_u2_.forward(up2_.forward(t)));
    t = conv_out_.forward(t);
    if (!t.same_shape(x))
      throw ContractError("generator produced a shape-changing pass");
    // Sigmoid around the input's logit keeps the map near identity where the
    // residual head is small, while staying strictly inside [0,1].
    Tensor<T> z(t.shape());
    for (std::size_t i = 0; i < z.numel(); ++i)
      z[i] = logit_clamped(x[i]) + t[i];
    return sig_.forward(z);
  }

  // Accumulates parameter gradients for the last forward pass. The gradient
  // with respect to the input image is not needed (images are data) and is
  // discarded.
  void backward(const Tensor<T>& gy) {
    Tensor<T> g = sig_.backward(gy);
    g = conv_out_.backward(g);
    g = norm_u2_.backward(relu_u2_.backward(g));
    g = up2_.backward(g);
    g = norm_u1_.backward(relu_u1_.backward(g));
    g = up1_.backward(g);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
      g = it->backward(g);
    g = norm_d2_.backward(relu_d2_.backward(g));
    g = down2_.backward(g);
    g = norm_d1_.backward(relu_d1_.backward(g));
    g = down1_.backward(g);
    g = norm_in_.backward(relu_in_.backward(g));
    conv_in_.backward(g);
  }

  void zero_grad() {
    conv_in_.zero_grad();
    down1_.zero_grad();
    down2_.zero_grad();
    for (auto& b : blocks_) b.zero_grad();
    up1_.zero_grad();
    up2_.zero_grad();
    conv_out_.zero_grad();
    norm_in_.zero_grad();
    norm_d1_.zero_grad();
    norm_d2_.zero_grad();
    norm_u1_.zero_grad();
    norm_u2_.zero_grad();
  }

  void visit_params(const nn::ParamVisitor<T>& v) {
    conv_in_.visit("conv_in", v);
    norm_in_.visit("norm_in", v);
    down1_.visit("down1", v);
    norm_d1_.visit("norm_d1", v);
    down2_.visit("down2", v);
    norm_d2_.visit("norm_d2", v);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].visit("block" + std::to_string(i), v);
    up1_.visit("up1", v);
    norm_u1_.visit("norm_u1", v);
    up2_.visit("up2", v);
    norm_u2_.visit("norm_u2", v);
    conv_out_.visit("conv_out", v);
  }

  std::uint64_t param_hash() {
    std::uint64_t h = 0xcbf29ce484222325ull;
    visit_params([&h](const std::string& name, Tensor<T>& w, Tensor<T>&) {
      h = fnv1a64(name, h);
      h = fnv1a64(w, h);
    });
    return h;
  }

 private:
  int w() const { return cfg_.base_width; }

  static T logit_clamped(T p) {
    const T lo = static_cast<T>(1e-3);
    p = std::min(std::max(p, lo), T(1) - lo);
    return std::log(p / (T(1) - p));
  }

  GeneratorConfig cfg_;
  nn::Conv2d<T> conv_in_;
  nn::Conv2d<T> down1_, down2_;
  std::vector<nn::ResBlock<T>> blocks_;
  nn::ConvTranspose2d<T> up1_, up2_;
  nn::Conv2d<T> conv_out_;
  nn::InstanceNorm2d<T> norm_in_, norm_d1_, norm_d2_, norm_u1_, norm_u2_;
  nn::ReLU<T> relu_in_, relu_d1_, relu_d2_, relu_u1_, relu_u2_;
  nn::Sigmoid<T> sig_;
};

using GeneratorF = Generator<float>;

}  // namespace sfit
