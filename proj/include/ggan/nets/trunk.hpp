#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ggan/nn/attention.hpp"
#include "ggan/nn/blocks.hpp"

namespace ggan {

/// One (name, dims) entry per architecture-table row, batch dim omitted.
struct TraceRow {
  std::string name;
  std::vector<std::size_t> dims;
};

inline std::size_t log2_exact(std::size_t v, const char* what) {
  std::size_t k = 0, x = v;
  while (x > 1 && x % 2 == 0) {
    x /= 2;
    ++k;
  }
  if (x != 1) throw std::invalid_argument(std::string(what) + ": not a power of two");
  return k;
}

/// Discriminator feature trunk (the shared "D" of the first discriminator;
/// also the body of D2, Df and the evaluation classifier).
///
/// Input (N, H, H/2, 1) with H = 4 * 2^k. Downsampling blocks walk the
/// channel-multiplier ladder ending at 16, with the non-local block after
/// the first one; a trailing no-shortcut block, ReLU and global sum pooling
/// produce a (N, 16*ch) feature.
template <typename T>
class DTrunk {
 public:
  DTrunk() = default;
  DTrunk(std::size_t input_h, std::size_t ch, bool spectral, Rng& rng, const std::string& name)
      : h_(input_h), w_(input_h / 2), ch_(ch) {
    const std::size_t n_down = log2_exact(input_h, "trunk input height") - 2;
    if (input_h < 8) throw std::invalid_argument("trunk input height must be >= 8");
    static const std::size_t kFullLadder[6] = {1, 1, 2, 4, 8, 16};
    if (n_down > 6) throw std::invalid_argument("trunk supports at most 6 downsampling blocks");
    std::vector<std::size_t> ladder(kFullLadder + (6 - n_down), kFullLadder + 6);
    std::size_t ci = 1;
    for (std::size_t i = 0; i < n_down; ++i) {
      const std::size_t co = ladder[i] * ch;
      blocks_.emplace_back(ci, co, ResBlockDown<T>::Kind::Down, spectral, rng,
                           name + ".rb" + std::to_string(i));
      ci = co;
    }
    attn_ = NonLocalBlock<T>(ladder[0] * ch, spectral, rng, name + ".attn");
    tail_ = ResBlockDown<T>(16 * ch, 16 * ch, ResBlockDown<T>::Kind::NoShortcut, spectral, rng,
                            name + ".rb_tail");
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.ndim() != 4 || x.dim(1) != h_ || x.dim(2) != w_ || x.dim(3) != 1)
      throw std::invalid_argument("trunk: expected (N," + std::to_string(h_) + "," +
                                  std::to_string(w_) + ",1), got " + shape_string(x.shape()));
    Tensor<T> h = blocks_[0].forward(x, mode);
    trace_push("ResBlock D", h);
    h = attn_.forward(h, mode);
    trace_push("Non-local block", h);
    for (std::size_t i = 1; i < blocks_.size(); ++i) {
      h = blocks_[i].forward(h, mode);
      trace_push("ResBlock D", h);
    }
    h = tail_.forward(h, mode);
    trace_push("ResBlock (No Shortcut)", h);
    h = relu_.forward(h, mode);
    trace_push("ReLU", h);
    Tensor<T> pooled({h.dim(0), h.dim(3)});
    ops::global_sum_pool_forward(h, pooled);
    if (trace_) trace_->push_back({"Global sum pooling", {1, 1, pooled.dim(1)}});
    if (trace_) trace_->push_back({"Flatten", {pooled.dim(1)}});
    if (mode_caches(mode)) pre_pool_shape_ = h.shape();
    return pooled;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g(pre_pool_shape_);
    ops::global_sum_pool_backward(gy, g);
    g = relu_.backward(g);
    g = tail_.backward(g);
    for (std::size_t i = blocks_.size(); i-- > 1;) g = blocks_[i].backward(g);
    g = attn_.backward(g);
    return blocks_[0].backward(g);
  }

  void params(ParamRefs<T>& out) {
    for (auto& b : blocks_) b.params(out);
    attn_.params(out);
    tail_.params(out);
  }
  void state(StateRefs<T>& out) {
    for (auto& b : blocks_) b.state(out);
    attn_.state(out);
    tail_.state(out);
  }

  std::size_t feat_dim() const { return 16 * ch_; }
  std::size_t input_h() const { return h_; }
  NonLocalBlock<T>& attention() { return attn_; }
  void set_trace(std::vector<TraceRow>* t) { trace_ = t; }

 private:
  void trace_push(const char* name, const Tensor<T>& t) {
    if (trace_) trace_->push_back({name, {t.dim(1), t.dim(2), t.dim(3)}});
  }

  std::size_t h_ = 0, w_ = 0, ch_ = 0;
  std::vector<ResBlockDown<T>> blocks_;
  NonLocalBlock<T> attn_;
  ResBlockDown<T> tail_;
  Relu<T> relu_;
  std::vector<std::size_t> pre_pool_shape_;
  std::vector<TraceRow>* trace_ = nullptr;
};

}  // namespace ggan
