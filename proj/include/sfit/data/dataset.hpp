#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfit/error.hpp"
#include "sfit/rng.hpp"
#include "sfit/tensor.hpp"

namespace sfit {

enum class Split { Train, Test };

// Labeled image collection. Pixels are stored as bytes and materialized to
// float [0,1] per batch. Every label access goes through a counting guard so
// the unlabeled-adaptation contract ("the generator never sees target
// labels") is checkable, not just promised.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int channels, int height, int width, int n_classes,
          std::string domain_name, Split split)
      : c_(channels),
        h_(height),
        w_(width),
        n_classes_(n_classes),
        split_(split),
        domain_(std::move(domain_name)) {}

  // Appends one image given a float canvas in [0,1], quantizing to bytes.
  void append(const std::vector<float>& chw, int label) {
    if (static_cast<int>(chw.size()) != c_ * h_ * w_)
      throw ContractError("Dataset::append: canvas size mismatch");
    if (label < 0 || label >= n_classes_)
      throw ContractError("Dataset::append: label out of range");
    for (float v : chw) pixels_.push_back(quantize(v));
    labels_.push_back(label);
  }

  void append_u8(const std::uint8_t* chw, int label) {
    if (label < 0 || label >= n_classes_)
      throw ContractError("Dataset::append_u8: label out of range");
    pixels_.insert(pixels_.end(), chw, chw + image_bytes());
    labels_.push_back(label);
  }

  static std::uint8_t quantize(float v) {
    v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    return static_cast<std::uint8_t>(v * 255.f + 0.5f);
  }

  int count() const { return static_cast<int>(labels_.size()); }
  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  int n_classes() const { return n_classes_; }
  Split split() const { return split_; }
  const std::string& domain_name() const { return domain_; }
  std::size_t image_bytes() const {
    return static_cast<std::size_t>(c_) * h_ * w_;
  }

  // Float image in [0,1], shape (C,H,W).
  TensorF image(int i) const {
    TensorF t({c_, h_, w_});
    const std::uint8_t* p = pixels_.data() + image_bytes() * i;
    for (std::size_t k = 0; k < t.numel(); ++k)
      t[k] = static_cast<float>(p[k]) / 255.f;
    return t;
  }

  void fill_image(int i, float* dst) const {
    const std::uint8_t* p =
        pixels_.data() + image_bytes() * static_cast<std::size_t>(i);
    for (std::size_t k = 0; k < image_bytes(); ++k)
      dst[k] = static_cast<float>(p[k]) / 255.f;
  }

  // Guarded label access.
  int label(int i) const {
    ++label_reads_;
    return labels_[static_cast<std::size_t>(i)];
  }
  std::vector<int> labels() const {
    label_reads_ += labels_.size();
    return labels_;
  }
  std::uint64_t label_reads() const { return label_reads_; }

  // Raw pixel bytes; used by determinism checks.
  const std::vector<std::uint8_t>& pixel_bytes() const { return pixels_; }

  void validate() const {
    if (pixels_.size() != image_bytes() * labels_.size())
      throw ContractError("Dataset: pixel/label count mismatch");
  }

 private:
  int c_ = 0, h_ = 0, w_ = 0, n_classes_ = 0;
  Split split_ = Split::Train;
  std::string domain_;
  std::vector<std::uint8_t> pixels_;
  std::vector<int> labels_;
  mutable std::uint64_t label_reads_ = 0;
};

// Closed-set pair: both domains share one label set.
struct DomainPair {
  Dataset source;
  Dataset target;
  int shared_classes = 0;

  void validate() const {
    if (source.n_classes() != target.n_classes())
      throw ContractError("DomainPair: class sets differ");
  }
};

enum class StreamMode {
  Train,  // shuffled, short final batch dropped
  Eval    // dataset order, every sample exactly once
};

enum class Augment { None, CropFlip };

// One batch plus the dataset indices it came from. Labels are materialized
// lazily through the dataset guard.
struct Batch {
  TensorF images;
  std::vector<int> indices;
  const Dataset* source = nullptr;

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(source->label(i));
    return out;
  }
};

// Batch index plan for one epoch.
inline std::vector<std::vector<int>> batch_plan(
    int count, int batch_size, StreamMode mode,
    std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (mode == StreamMode::Train && batch_size < 2)
    throw ConfigError(
        "generator-training streams need batch size >= 2 (batch statistics)");
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    auto perm = rng.permutation(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      order[static_cast<std::size_t>(i)] =
          static_cast<int>(perm[static_cast<std::size_t>(i)]);
  }
  std::vector<std::vector<int>> plan;
  for (int start = 0; start < count; start += batch_size) {
    const int end = std::min(count, start + batch_size);
    if (mode == StreamMode::Train && end - start < batch_size) break;
    plan.emplace_back(order.begin() + start, order.begin() + end);
  }
  return plan;
}

// Materializes a batch; optional crop/flip augmentation (zero-padded random
// crop plus horizontal flip) draws from the supplied rng.
inline Batch make_batch(const Dataset& ds, const std::vector<int>& indices,
                        Augment augment = Augment::None, Rng* rng = nullptr) {
  const int b = static_cast<int>(indices.size());
  Batch out;
  out.images = TensorF({b, ds.channels(), ds.height(), ds.width()});
  out.indices = indices;
  out.source = &ds;
  for (int i = 0; i < b; ++i)
    ds.fill_image(indices[static_cast<std::size_t>(i)],
                  out.images.data() + out.images.sample_numel() * i);
  if (augment == Augment::CropFlip) {
    if (!rng) throw ContractError("crop_flip augmentation needs an rng");
    const int pad = 4, h = ds.height(), w = ds.width(), c = ds.channels();
    TensorF img({c, h, w});
    for (int i = 0; i < b; ++i) {
      const int dy = static_cast<int>(rng->below(2 * pad + 1)) - pad;
      const int dx = static_cast<int>(rng->below(2 * pad + 1)) - pad;
      const bool flip = rng->uniform() < 0.5;
      float* s = out.images.data() + out.images.sample_numel() * i;
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const int sy = y + dy;
            const int sx = flip ? w - 1 - (x + dx) : x + dx;
            img.at(ch, y, x) =
                (sy >= 0 && sy < h && sx >= 0 && sx < w)
                    ? s[(static_cast<std::size_t>(ch) * h + sy) * w + sx]
                    : 0.f;
          }
      std::copy(img.data(), img.data() + img.numel(), s);
    }
  }
  return out;
}

// Convenience epoch iterator over a plan.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, int batch_size, StreamMode mode,
              std::optional<std::uint64_t> shuffle_seed,
              Augment augment = Augment::None)
      : ds_(&ds),
        plan_(batch_plan(ds.count(), batch_size, mode, shuffle_seed)),
        augment_(augment),
        rng_(shuffle_seed ? *shuffle_seed ^ 0xa5a5a5a5ull : 0) {}

  std::size_t n_batches() const { return plan_.size(); }

  std::optional<Batch> next() {
    if (cursor_ >= plan_.size()) return std::nullopt;
    return make_batch(*ds_, plan_[cursor_++], augment_, &rng_);
  }

 private:
  const Dataset* ds_;
  std::vector<std::vector<int>> plan_;
  Augment augment_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

}  // namespace sfit
