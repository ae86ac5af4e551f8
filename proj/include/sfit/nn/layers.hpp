#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sfit/rng.hpp"
#include "sfit/tensor.hpp"

namespace sfit::nn {

template <typename T>
using ParamVisitor =
    std::function<void(const std::string&, Tensor<T>&, Tensor<T>&)>;

template <typename T>
T kaiming_std(int fan_in) {
  return static_cast<T>(std::sqrt(2.0 / static_cast<double>(fan_in)));
}

template <typename T>
void fill_normal(Tensor<T>& t, Rng& rng, T stddev) {
  for (std::size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.normal()) * stddev;
}

// ---------------------------------------------------------------------------
// Conv2d: NCHW convolution via per-sample im2col + GEMM.
// Weight layout (out_c, in_c*k*k), which is exactly the GEMM lhs.
// ---------------------------------------------------------------------------
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad)
      : in_c_(in_c),
        out_c_(out_c),
        k_(kernel),
        stride_(stride),
        pad_(pad),
        w_({out_c, in_c * kernel * kernel}),
        b_({out_c}),
        gw_({out_c, in_c * kernel * kernel}),
        gb_({out_c}) {}

  void init(Rng& rng, T scale = T(1)) {
    fill_normal(w_, rng, kaiming_std<T>(in_c_ * k_ * k_) * scale);
    b_.set_zero();
  }

  int out_hw(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> forward(const Tensor<T>& x) {
    check_input(x);
    x_ = x;
    const int n = x.size(0), oh = out_hw(x.size(2)), ow = out_hw(x.size(3));
    Tensor<T> y({n, out_c_, oh, ow});
    ensure_col(oh * ow);
    auto wmat = w_.mat(out_c_, in_c_ * k_ * k_);
    for (int s = 0; s < n; ++s) {
      im2col(x, s, oh, ow);
      auto cmat = col_.mat(in_c_ * k_ * k_, oh * ow);
      auto ymat = y.sample(s);
      ymat.noalias() = wmat * cmat;
      for (int c = 0; c < out_c_; ++c) ymat.row(c).array() += b_[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads = true) {
    const int n = x_.size(0), oh = gy.size(2), ow = gy.size(3);
    Tensor<T> gx(x_.shape());
    ensure_col(oh * ow);
    Tensor<T> colg({in_c_ * k_ * k_, oh * ow});
    auto wmat = w_.mat(out_c_, in_c_ * k_ * k_);
    auto gwmat = gw_.mat(out_c_, in_c_ * k_ * k_);
    for (int s = 0; s < n; ++s) {
      auto gymat = gy.sample(s);
      if (param_grads) {
        im2col(x_, s, oh, ow);
        auto cmat = col_.mat(in_c_ * k_ * k_, oh * ow);
        gwmat.noalias() += gymat * cmat.transpose();
        for (int c = 0; c < out_c_; ++c) gb_[c] += gymat.row(c).sum();
      }
      auto cgmat = colg.mat(in_c_ * k_ * k_, oh * ow);
      cgmat.noalias() = wmat.transpose() * gymat;
      col2im(colg, gx, s, oh, ow);
    }
    return gx;
  }

  void zero_grad() {
    gw_.set_zero();
    gb_.set_zero();
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    v(prefix + ".w", w_, gw_);
    v(prefix + ".b", b_, gb_);
  }

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.size(1) != in_c_)
      throw ContractError("Conv2d: expected (N," + std::to_string(in_c_) +
                          ",H,W), got " + Tensor<T>::shape_str(x.shape()));
  }

  void ensure_col(int ohw) {
    const std::size_t need =
        static_cast<std::size_t>(in_c_ * k_ * k_) * ohw;
    if (col_.numel() != need) col_ = Tensor<T>({in_c_ * k_ * k_, ohw});
  }

  void im2col(const Tensor<T>& x, int s, int oh, int ow) {
    const int h = x.size(2), w = x.size(3);
    T* col = col_.data();
    const T* xs = x.data() + static_cast<std::size_t>(s) * x.sample_numel();
    for (int c = 0; c < in_c_; ++c)
      for (int kh = 0; kh < k_; ++kh)
        for (int kw = 0; kw < k_; ++kw) {
          for (int i = 0; i < oh; ++i) {
            const int ih = i * stride_ - pad_ + kh;
            T* dst = col + (static_cast<std::size_t>((c * k_ + kh) * k_ + kw) *
                                oh +
                            i) *
                               ow;
            if (ih < 0 || ih >= h) {
              std::fill(dst, dst + ow, T(0));
              continue;
            }
            const T* src = xs + (static_cast<std::size_t>(c) * h + ih) * w;
            for (int j = 0; j < ow; ++j) {
              const int iw = j * stride_ - pad_ + kw;
              dst[j] = (iw >= 0 && iw < w) ? src[iw] : T(0);
            }
          }
        }
  }

  void col2im(const Tensor<T>& colg, Tensor<T>& gx, int s, int oh, int ow) {
    const int h = gx.size(2), w = gx.size(3);
    const T* col = colg.data();
    T* xs = gx.data() + static_cast<std::size_t>(s) * gx.sample_numel();
    std::fill(xs, xs + gx.sample_numel(), T(0));
    for (int c = 0; c < in_c_; ++c)
      for (int kh = 0; kh < k_; ++kh)
        for (int kw = 0; kw < k_; ++kw)
          for (int i = 0; i < oh; ++i) {
            const int ih = i * stride_ - pad_ + kh;
            if (ih < 0 || ih >= h) continue;
            const T* src =
                col + (static_cast<std::size_t>((c * k_ + kh) * k_ + kw) * oh +
                       i) *
                          ow;
            T* dst = xs + (static_cast<std::size_t>(c) * h + ih) * w;
            for (int j = 0; j < ow; ++j) {
              const int iw = j * stride_ - pad_ + kw;
              if (iw >= 0 && iw < w) dst[iw] += src[j];
            }
          }
  }

  int in_c_ = 0, out_c_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  Tensor<T> w_, b_, gw_, gb_;
  Tensor<T> x_;    // forward cache
  Tensor<T> col_;  // im2col scratch
};

// ---------------------------------------------------------------------------
// ConvTranspose2d as zero-stuffed stride-1 convolution (fractionally strided).
// Doubles spatial size with kernel 3, stride 2, pad 1, output_pad 1.
// ---------------------------------------------------------------------------
template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(int in_c, int out_c, int kernel, int stride, int pad,
                  int output_pad)
      : stride_(stride),
        output_pad_(output_pad),
        conv_(in_c, out_c, kernel, 1, kernel - 1 - pad) {}

  void init(Rng& rng, T scale = T(1)) { conv_.init(rng, scale); }

  Tensor<T> forward(const Tensor<T>& x) {
    in_h_ = x.size(2);
    in_w_ = x.size(3);
    return conv_.forward(stuff(x));
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads = true) {
    return unstuff(conv_.backward(gy, param_grads));
  }

  void zero_grad() { conv_.zero_grad(); }
  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    conv_.visit(prefix, v);
  }

 private:
  Tensor<T> stuff(const Tensor<T>& x) const {
    const int n = x.size(0), c = x.size(1);
    const int zh = (x.size(2) - 1) * stride_ + 1 + output_pad_;
    const int zw = (x.size(3) - 1) * stride_ + 1 + output_pad_;
    Tensor<T> z({n, c, zh, zw});
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < x.size(2); ++i)
          for (int j = 0; j < x.size(3); ++j)
            z.at(s, ch, i * stride_, j * stride_) = x.at(s, ch, i, j);
    return z;
  }

  Tensor<T> unstuff(const Tensor<T>& gz) const {
    const int n = gz.size(0), c = gz.size(1);
    Tensor<T> gx({n, c, in_h_, in_w_});
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < in_h_; ++i)
          for (int j = 0; j < in_w_; ++j)
            gx.at(s, ch, i, j) = gz.at(s, ch, i * stride_, j * stride_);
    return gx;
  }

  int stride_ = 2, output_pad_ = 1;
  int in_h_ = 0, in_w_ = 0;
  Conv2d<T> conv_;
};

// ---------------------------------------------------------------------------
// BatchNorm2d. Three modes:
//   Train    - normalize by batch stats, EMA-update running stats.
//   Eval     - normalize by running stats (inference semantics).
//   Estimate - normalize by batch stats, cumulative-average running stats;
//              the AdaBN recalibration pass.
// Running variance stores the population (biased) variance.
// ---------------------------------------------------------------------------
enum class BnMode { Train, Eval, Estimate };

template <typename T>
class BatchNorm2d {
 public:
  static constexpr T kEps = static_cast<T>(1e-5);

  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels, T momentum = static_cast<T>(0.1))
      : c_(channels),
        momentum_(momentum),
        gamma_(Tensor<T>::full({channels}, T(1))),
        beta_({channels}),
        running_mean_({channels}),
        running_var_(Tensor<T>::full({channels}, T(1))),
        ggamma_({channels}),
        gbeta_({channels}) {}

  Tensor<T> forward(const Tensor<T>& x, BnMode mode) {
    const int n = x.size(0), h = x.size(2), w = x.size(3);
    const std::size_t m = static_cast<std::size_t>(n) * h * w;
    Tensor<T> y(x.shape());
    if (mode == BnMode::Eval) {
      for (int c = 0; c < c_; ++c) {
        const T inv = T(1) / std::sqrt(running_var_[c] + kEps);
        const T a = gamma_[c] * inv;
        const T b = beta_[c] - running_mean_[c] * a;
        apply_affine(x, y, c, a, b);
      }
      mode_ = mode;
      return y;
    }
    // Batch statistics path (Train / Estimate).
    mean_ = Tensor<T>({c_});
    invstd_ = Tensor<T>({c_});
    Tensor<T> var({c_});
    for (int c = 0; c < c_; ++c) {
      double sum = 0, sq = 0;
      for (int s = 0; s < n; ++s) {
        const T* p = &x.at(s, c, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
          sum += p[i];
          sq += static_cast<double>(p[i]) * p[i];
        }
      }
      const double mu = sum / static_cast<double>(m);
      const double v = std::max(0.0, sq / static_cast<double>(m) - mu * mu);
      mean_[c] = static_cast<T>(mu);
      var[c] = static_cast<T>(v);
      invstd_[c] = static_cast<T>(1.0 / std::sqrt(v + kEps));
    }
    if (mode == BnMode::Train) {
      for (int c = 0; c < c_; ++c) {
        running_mean_[c] = (T(1) - momentum_) * running_mean_[c] + momentum_ * mean_[c];
        running_var_[c] = (T(1) - momentum_) * running_var_[c] + momentum_ * var[c];
      }
    } else {
      ++est_batches_;
      const T f = T(1) / static_cast<T>(est_batches_);
      for (int c = 0; c < c_; ++c) {
        running_mean_[c] += (mean_[c] - running_mean_[c]) * f;
        running_var_[c] += (var[c] - running_var_[c]) * f;
      }
    }
    xhat_ = Tensor<T>(x.shape());
    for (int c = 0; c < c_; ++c) {
      const T inv = invstd_[c], mu = mean_[c];
      for (int s = 0; s < n; ++s) {
        const T* p = &x.at(s, c, 0, 0);
        T* ph = &xhat_.at(s, c, 0, 0);
        T* py = &y.at(s, c, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
          ph[i] = (p[i] - mu) * inv;
          py[i] = gamma_[c] * ph[i] + beta_[c];
        }
      }
    }
    mode_ = mode;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads = true) {
    const int n = gy.size(0), h = gy.size(2), w = gy.size(3);
    Tensor<T> gx(gy.shape());
    if (mode_ == BnMode::Eval) {
      for (int c = 0; c < c_; ++c) {
        const T a = gamma_[c] / std::sqrt(running_var_[c] + kEps);
        apply_affine(gy, gx, c, a, T(0));
      }
      return gx;
    }
    const T m = static_cast<T>(static_cast<std::size_t>(n) * h * w);
    for (int c = 0; c < c_; ++c) {
      double sum_gy = 0, sum_gy_xhat = 0;
      for (int s = 0; s < n; ++s) {
        const T* pg = &gy.at(s, c, 0, 0);
        const T* ph = &xhat_.at(s, c, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
          sum_gy += pg[i];
          sum_gy_xhat += static_cast<double>(pg[i]) * ph[i];
        }
      }
      if (param_grads) {
        gbeta_[c] += static_cast<T>(sum_gy);
        ggamma_[c] += static_cast<T>(sum_gy_xhat);
      }
      const T k1 = gamma_[c] * invstd_[c];
      const T mg = static_cast<T>(sum_gy) / m;
      const T mgx = static_cast<T>(sum_gy_xhat) / m;
      for (int s = 0; s < n; ++s) {
        const T* pg = &gy.at(s, c, 0, 0);
        const T* ph = &xhat_.at(s, c, 0, 0);
        T* px = &gx.at(s, c, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
          px[i] = k1 * (pg[i] - mg - ph[i] * mgx);
      }
    }
    return gx;
  }

  void reset_estimation() {
    est_batches_ = 0;
    running_mean_.set_zero();
    running_var_.set_zero();
  }

  void zero_grad() {
    ggamma_.set_zero();
    gbeta_.set_zero();
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    v(prefix + ".gamma", gamma_, ggamma_);
    v(prefix + ".beta", beta_, gbeta_);
  }

  // Running statistics are parameters of the checkpoint but not of the
  // optimizer; they get their own visitor.
  void visit_stats(const std::string& prefix, const ParamVisitor<T>& v) {
    static Tensor<T> no_grad;
    v(prefix + ".running_mean", running_mean_, no_grad);
    v(prefix + ".running_var", running_var_, no_grad);
  }

  int channels() const { return c_; }
  const Tensor<T>& running_mean() const { return running_mean_; }
  const Tensor<T>& running_var() const { return running_var_; }

 private:
  void apply_affine(const Tensor<T>& x, Tensor<T>& y, int c, T a, T b) const {
    const int n = x.size(0), h = x.size(2), w = x.size(3);
    for (int s = 0; s < n; ++s) {
      const T* p = &x.at(s, c, 0, 0);
      T* py = &y.at(s, c, 0, 0);
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
        py[i] = a * p[i] + b;
    }
  }

  int c_ = 0;
  T momentum_ = static_cast<T>(0.1);
  Tensor<T> gamma_, beta_, running_mean_, running_var_, ggamma_, gbeta_;
  Tensor<T> mean_, invstd_, xhat_;  // batch-stat caches
  BnMode mode_ = BnMode::Eval;
  long est_batches_ = 0;
};

// ---------------------------------------------------------------------------
// InstanceNorm2d with affine parameters; normalizes each (sample, channel)
// plane independently. Used inside the generator only.
// ---------------------------------------------------------------------------
template <typename T>
class InstanceNorm2d {
 public:
  static constexpr T kEps = static_cast<T>(1e-5);

  InstanceNorm2d() = default;
  explicit InstanceNorm2d(int channels)
      : c_(channels),
        gamma_(Tensor<T>::full({channels}, T(1))),
        beta_({channels}),
        ggamma_({channels}),
        gbeta_({channels}) {}

  Tensor<T> forward(const Tensor<T>& x) {
    const int n = x.size(0), h = x.size(2), w = x.size(3);
    const std::size_t m = static_cast<std::size_t>(h) * w;
    xhat_ = Tensor<T>(x.shape());
    invstd_ = Tensor<T>({n, c_});
    Tensor<T> y(x.shape());
    for (int s = 0; s < n; ++s)
      for (int c = 0; c < c_; ++c) {
        const T* p = &x.at(s, c, 0, 0);
        double sum = 0, sq = 0;
        for (std::size_t i = 0; i < m; ++i) {
          sum += p[i];
          sq += static_cast<double>(p[i]) * p[i];
        }
        const double mu = sum / static_cast<double>(m);
        const double v = std::max(0.0, sq / static_cast<double>(m) - mu * mu);
        const T inv = static_cast<T>(1.0 / std::sqrt(v + kEps));
        invstd_.at(s, c) = inv;
        T* ph = &xhat_.at(s, c, 0, 0);
        T* py = &y.at(s, c, 0, 0);
        for (std::size_t i = 0; i < m; ++i) {
          ph[i] = (p[i] - static_cast<T>(mu)) * inv;
          py[i] = gamma_[c] * ph[i] + beta_[c];
        }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads = true) {
    const int n = gy.size(0), h = gy.size(2), w = gy.size(3);
    const std::size_t m = static_cast<std::size_t>(h) * w;
    Tensor<T> gx(gy.shape());
    for (int s = 0; s < n; ++s)
      for (int c = 0; c < c_; ++c) {
        const T* pg = &gy.at(s, c, 0, 0);
        const T* ph = &xhat_.at(s, c, 0, 0);
        double sum_gy = 0, sum_gy_xhat = 0;
        for (std::size_t i = 0; i < m; ++i) {
          sum_gy += pg[i];
          sum_gy_xhat += static_cast<double>(pg[i]) * ph[i];
        }
        if (param_grads) {
          gbeta_[c] += static_cast<T>(sum_gy);
          ggamma_[c] += static_cast<T>(sum_gy_xhat);
        }
        const T k1 = gamma_[c] * invstd_.at(s, c);
        const T mg = static_cast<T>(sum_gy / static_cast<double>(m));
        const T mgx = static_cast<T>(sum_gy_xhat / static_cast<double>(m));
        T* px = &gx.at(s, c, 0, 0);
        for (std::size_t i = 0; i < m; ++i)
          px[i] = k1 * (pg[i] - mg - ph[i] * mgx);
      }
    return gx;
  }

  void zero_grad() {
    ggamma_.set_zero();
    gbeta_.set_zero();
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    v(prefix + ".gamma", gamma_, ggamma_);
    v(prefix + ".beta", beta_, gbeta_);
  }

 private:
  int c_ = 0;
  Tensor<T> gamma_, beta_, ggamma_, gbeta_;
  Tensor<T> xhat_, invstd_;
};

// ---------------------------------------------------------------------------
// Pointwise activations.
// ---------------------------------------------------------------------------
template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = x;
    for (std::size_t i = 0; i < y_.numel(); ++i)
      if (y_[i] < T(0)) y_[i] = T(0);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gx.numel(); ++i)
      gx[i] = y_[i] > T(0) ? gy[i] : T(0);
    return gx;
  }

 private:
  Tensor<T> y_;
};

template <typename T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = Tensor<T>(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i)
      y_[i] = T(1) / (T(1) + std::exp(-x[i]));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gx.numel(); ++i)
      gx[i] = gy[i] * y_[i] * (T(1) - y_[i]);
    return gx;
  }
  const Tensor<T>& output() const { return y_; }

 private:
  Tensor<T> y_;
};

// ---------------------------------------------------------------------------
// MaxPool2d, kernel == stride (non-overlapping), spatial dims must divide.
// ---------------------------------------------------------------------------
template <typename T>
class MaxPool2d {
 public:
  explicit MaxPool2d(int k = 2) : k_(k) {}

  Tensor<T> forward(const Tensor<T>& x) {
    const int n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
    if (h % k_ != 0 || w % k_ != 0)
      throw ContractError("MaxPool2d: spatial dims must be divisible by " +
                          std::to_string(k_));
    in_shape_ = x.shape();
    const int oh = h / k_, ow = w / k_;
    Tensor<T> y({n, c, oh, ow});
    argmax_.assign(y.numel(), 0);
    std::size_t o = 0;
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j, ++o) {
            T best = x.at(s, ch, i * k_, j * k_);
            std::size_t best_idx =
                index_of(x, s, ch, i * k_, j * k_);
            for (int di = 0; di < k_; ++di)
              for (int dj = 0; dj < k_; ++dj) {
                const T v = x.at(s, ch, i * k_ + di, j * k_ + dj);
                if (v > best) {
                  best = v;
                  best_idx = index_of(x, s, ch, i * k_ + di, j * k_ + dj);
                }
              }
            y[o] = best;
            argmax_[o] = best_idx;
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_);
    for (std::size_t o = 0; o < gy.numel(); ++o) gx[argmax_[o]] += gy[o];
    return gx;
  }

 private:
  static std::size_t index_of(const Tensor<T>& x, int n, int c, int h, int w) {
    return ((static_cast<std::size_t>(n) * x.size(1) + c) * x.size(2) + h) *
               x.size(3) +
           w;
  }
  int k_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
};

// ---------------------------------------------------------------------------
// Global average pool (N,C,H,W) -> (N,C).
// ---------------------------------------------------------------------------
template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    in_shape_ = x.shape();
    const int n = x.size(0), c = x.size(1);
    const std::size_t m = static_cast<std::size_t>(x.size(2)) * x.size(3);
    Tensor<T> y({n, c});
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const T* p = &x.at(s, ch, 0, 0);
        double sum = 0;
        for (std::size_t i = 0; i < m; ++i) sum += p[i];
        y.at(s, ch) = static_cast<T>(sum / static_cast<double>(m));
      }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_);
    const int n = gx.size(0), c = gx.size(1);
    const std::size_t m = static_cast<std::size_t>(gx.size(2)) * gx.size(3);
    const T inv = T(1) / static_cast<T>(m);
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        T* p = &gx.at(s, ch, 0, 0);
        const T g = gy.at(s, ch) * inv;
        for (std::size_t i = 0; i < m; ++i) p[i] = g;
      }
    return gx;
  }

 private:
  std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Fully connected layer, x:(N,in) -> y:(N,out).
// ---------------------------------------------------------------------------
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out)
      : in_(in), out_(out), w_({out, in}), b_({out}), gw_({out, in}),
        gb_({out}) {}

  void init(Rng& rng, T scale = T(1)) {
    fill_normal(w_, rng, kaiming_std<T>(in_) * scale);
    b_.set_zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    x_ = x;
    const int n = x.size(0);
    Tensor<T> y({n, out_});
    y.mat(n, out_).noalias() = x.mat(n, in_) * w_.mat(out_, in_).transpose();
    for (int s = 0; s < n; ++s)
      for (int o = 0; o < out_; ++o) y.at(s, o) += b_[o];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool param_grads = true) {
    const int n = gy.size(0);
    if (param_grads) {
      gw_.mat(out_, in_).noalias() +=
          gy.mat(n, out_).transpose() * x_.mat(n, in_);
      for (int s = 0; s < n; ++s)
        for (int o = 0; o < out_; ++o) gb_[o] += gy.at(s, o);
    }
    Tensor<T> gx({n, in_});
    gx.mat(n, in_).noalias() = gy.mat(n, out_) * w_.mat(out_, in_);
    return gx;
  }

  void zero_grad() {
    gw_.set_zero();
    gb_.set_zero();
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    v(prefix + ".w", w_, gw_);
    v(prefix + ".b", b_, gb_);
  }

 private:
  int in_ = 0, out_ = 0;
  Tensor<T> w_, b_, gw_, gb_;
  Tensor<T> x_;
};

// Row-wise softmax with log-sum-exp stabilization.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  const int n = logits.size(0), c = logits.size(1);
  Tensor<T> p(logits.shape());
  for (int s = 0; s < n; ++s) {
    T mx = logits.at(s, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(s, j));
    double z = 0;
    for (int j = 0; j < c; ++j) {
      const T e = std::exp(logits.at(s, j) - mx);
      p.at(s, j) = e;
      z += e;
    }
    const T inv = static_cast<T>(1.0 / z);
    for (int j = 0; j < c; ++j) p.at(s, j) *= inv;
  }
  return p;
}

// Mean cross-entropy over the batch; returns loss and d loss / d logits.
template <typename T>
std::pair<T, Tensor<T>> cross_entropy(const Tensor<T>& logits,
                                      const std::vector<int>& labels) {
  const int n = logits.size(0), c = logits.size(1);
  if (static_cast<int>(labels.size()) != n)
    throw ContractError("cross_entropy: labels/batch size mismatch");
  Tensor<T> p = softmax_rows(logits);
  double loss = 0;
  Tensor<T> g(logits.shape());
  const T invn = T(1) / static_cast<T>(n);
  for (int s = 0; s < n; ++s) {
    const int y = labels[static_cast<std::size_t>(s)];
    loss -= std::log(std::max(static_cast<double>(p.at(s, y)), 1e-12));
    for (int j = 0; j < c; ++j)
      g.at(s, j) = (p.at(s, j) - (j == y ? T(1) : T(0))) * invn;
  }
  return {static_cast<T>(loss / n), std::move(g)};
}

}  // namespace sfit::nn
