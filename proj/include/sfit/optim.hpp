#pragma once

#include <cmath>
#include <map>
#include <string>

#include "sfit/error.hpp"
#include "sfit/tensor.hpp"

namespace sfit {

// lr0 * (1 + cos(pi * step / total_steps)) / 2
template <typename T>
T cosine_schedule(long step, long total_steps, T lr0) {
  if (step < 0 || step > total_steps)
    throw ContractError("cosine_schedule: step " + std::to_string(step) +
                        " outside [0," + std::to_string(total_steps) + "]");
  const double phase = 3.14159265358979323846 * static_cast<double>(step) /
                       static_cast<double>(total_steps);
  return static_cast<T>(static_cast<double>(lr0) * (1.0 + std::cos(phase)) /
                        2.0);
}

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename T, typename Model>
T clip_global_norm(Model& model, T max_norm) {
  double sq = 0;
  model.visit_params([&sq](const std::string&, Tensor<T>&, Tensor<T>& g) {
    for (std::size_t i = 0; i < g.numel(); ++i)
      sq += static_cast<double>(g[i]) * g[i];
  });
  const double norm = std::sqrt(sq);
  if (norm > static_cast<double>(max_norm) && norm > 0) {
    const T scale = static_cast<T>(static_cast<double>(max_norm) / norm);
    model.visit_params([scale](const std::string&, Tensor<T>&, Tensor<T>& g) {
      g *= scale;
    });
  }
  return static_cast<T>(norm);
}

// SGD with classical momentum. State is keyed by parameter name, so one
// optimizer instance must stay with one model.
template <typename T>
class Sgd {
 public:
  explicit Sgd(T lr, T momentum = static_cast<T>(0.9))
      : lr_(lr), momentum_(momentum) {}

  void set_lr(T lr) { lr_ = lr; }
  T lr() const { return lr_; }

  template <typename Model>
  void step(Model& model) {
    model.visit_params(
        [this](const std::string& name, Tensor<T>& w, Tensor<T>& g) {
          Tensor<T>& v = velocity_[name];
          if (v.numel() != w.numel()) v = Tensor<T>(w.shape());
          for (std::size_t i = 0; i < w.numel(); ++i) {
            v[i] = momentum_ * v[i] + g[i];
            w[i] -= lr_ * v[i];
          }
        });
  }

 private:
  T lr_, momentum_;
  std::map<std::string, Tensor<T>> velocity_;
};

template <typename T>
class Adam {
 public:
  explicit Adam(T lr, T beta1 = static_cast<T>(0.9),
                T beta2 = static_cast<T>(0.999),
                T eps = static_cast<T>(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(T lr) { lr_ = lr; }
  T lr() const { return lr_; }

  template <typename Model>
  void step(Model& model) {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), t_);
    const double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), t_);
    model.visit_params(
        [this, bc1, bc2](const std::string& name, Tensor<T>& w, Tensor<T>& g) {
          Tensor<T>& m = m_[name];
          Tensor<T>& v = v_[name];
          if (m.numel() != w.numel()) {
            m = Tensor<T>(w.shape());
            v = Tensor<T>(w.shape());
          }
          for (std::size_t i = 0; i < w.numel(); ++i) {
            m[i] = beta1_ * m[i] + (T(1) - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (T(1) - beta2_) * g[i] * g[i];
            const double mhat = static_cast<double>(m[i]) / bc1;
            const double vhat = static_cast<double>(v[i]) / bc2;
            w[i] -= static_cast<T>(static_cast<double>(lr_) * mhat /
                                   (std::sqrt(vhat) + eps_));
          }
        });
  }

 private:
  T lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Tensor<T>> m_, v_;
};

}  // namespace sfit
