#pragma once

#include <string>
#include <vector>

#include "ggan/nets/trunk.hpp"
#include "ggan/nn/blocks.hpp"
#include "ggan/nn/mlp.hpp"

namespace ggan {

/// BigGAN-style spectrogram generator.
///
/// z(128) -> Dense -> (4,2,16ch) -> ResBlock-Up chain at 16ch -> non-local
/// -> ResBlock-Up to 1ch -> BN -> ReLU -> 3x3 conv to one channel -> Tanh.
/// The conditional variant swaps BN for class-conditional BN fed from a
/// shared label embedding (supervised baseline); the unconditional variant
/// is the one used inside the guided model, where conditioning enters
/// through the encoded latent instead.
template <typename T>
class Generator {
 public:
  static constexpr std::size_t kZDim = 128;

  Generator() = default;
  Generator(std::size_t out_h, std::size_t ch, bool conditional, std::size_t n_classes,
            std::size_t embed_dim, bool spectral, Rng& rng, const std::string& name)
      : h_(out_h), w_(out_h / 2), ch_(ch), conditional_(conditional) {
    const std::size_t n_up = log2_exact(out_h, "generator output height") - 2;
    if (n_up < 1) throw std::invalid_argument("generator output height must be >= 8");
    dense_ = Dense<T>(kZDim, 4 * 2 * 16 * ch, spectral, rng, name + ".dense");
    for (std::size_t i = 0; i + 1 < n_up; ++i)
      ups_.emplace_back(16 * ch, 16 * ch, conditional, embed_dim, spectral, rng,
                        name + ".rb" + std::to_string(i));
    attn_ = NonLocalBlock<T>(16 * ch, spectral, rng, name + ".attn");
    last_up_ = ResBlockUp<T>(16 * ch, ch, conditional, embed_dim, spectral, rng,
                             name + ".rb_last");
    bn_out_ = BatchNorm<T>(ch, name + ".bn_out");
    conv_out_ = Conv2d<T>(3, ch, 1, spectral, rng, name + ".conv_out");
    if (conditional_) embed_ = Embedding<T>(n_classes, embed_dim, rng, name + ".embed");
  }

  Tensor<T> forward(const Tensor<T>& z, Mode mode) {
    if (conditional_) throw std::invalid_argument("generator: conditional model needs labels");
    return run(z, nullptr, mode);
  }

  Tensor<T> forward(const Tensor<T>& z, const std::vector<int>& labels, Mode mode) {
    if (!conditional_) throw std::invalid_argument("generator: unconditional model given labels");
    Tensor<T> e = embed_.forward(labels);
    return run(z, &e, mode);
  }

  /// Returns gradient w.r.t. z; conditional embedding gradients are
  /// accumulated into the shared table.
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = tanh_.backward(gy);
    g = conv_out_.backward(g);
    g = relu_out_.backward(g);
    g = bn_out_.backward(g);
    Tensor<T> gembed;
    if (conditional_) {
      auto [gx, ge] = last_up_.backward_cond(g);
      g = std::move(gx);
      gembed = std::move(ge);
    } else {
      g = last_up_.backward(g);
    }
    g = attn_.backward(g);
    for (std::size_t i = ups_.size(); i-- > 0;) {
      if (conditional_) {
        auto [gx, ge] = ups_[i].backward_cond(g);
        g = std::move(gx);
        gembed += ge;
      } else {
        g = ups_[i].backward(g);
      }
    }
    if (conditional_) embed_.backward(gembed);
    g.set_shape({g.dim(0), 4 * 2 * 16 * ch_});
    return dense_.backward(g);
  }

  void params(ParamRefs<T>& out) {
    dense_.params(out);
    for (auto& b : ups_) b.params(out);
    attn_.params(out);
    last_up_.params(out);
    bn_out_.params(out);
    conv_out_.params(out);
    if (conditional_) embed_.params(out);
  }
  void state(StateRefs<T>& out) {
    dense_.state(out);
    for (auto& b : ups_) b.state(out);
    attn_.state(out);
    last_up_.state(out);
    bn_out_.state(out);
    conv_out_.state(out);
  }

  std::size_t out_h() const { return h_; }
  std::size_t out_w() const { return w_; }
  void set_trace(std::vector<TraceRow>* t) { trace_ = t; }

 private:
  Tensor<T> run(const Tensor<T>& z, const Tensor<T>* e, Mode mode) {
    if (z.ndim() != 2 || z.dim(1) != kZDim)
      throw std::invalid_argument("generator: z must be (N,128), got " + shape_string(z.shape()));
    Tensor<T> h = dense_.forward(z, mode);
    h.set_shape({z.dim(0), 4, 2, 16 * ch_});
    trace_push("Dense", h);
    for (auto& b : ups_) {
      h = e ? b.forward(h, *e, mode) : b.forward(h, mode);
      trace_push("ResBlock U", h);
    }
    h = attn_.forward(h, mode);
    trace_push("Non-local block", h);
    h = e ? last_up_.forward(h, *e, mode) : last_up_.forward(h, mode);
    trace_push("ResBlock U", h);
    h = bn_out_.forward(h, mode);
    h = relu_out_.forward(h, mode);
    trace_push("BN, ReLU", h);
    h = conv_out_.forward(h, mode);
    trace_push("Conv [3,3,1]", h);
    h = tanh_.forward(h, mode);
    trace_push("Tanh", h);
    return h;
  }

  void trace_push(const char* name, const Tensor<T>& t) {
    if (trace_) trace_->push_back({name, {t.dim(1), t.dim(2), t.dim(3)}});
  }

  std::size_t h_ = 0, w_ = 0, ch_ = 0;
  bool conditional_ = false;
  Dense<T> dense_;
  std::vector<ResBlockUp<T>> ups_;
  NonLocalBlock<T> attn_;
  ResBlockUp<T> last_up_;
  BatchNorm<T> bn_out_;
  Relu<T> relu_out_;
  Conv2d<T> conv_out_;
  Tanh<T> tanh_;
  Embedding<T> embed_;
  std::vector<TraceRow>* trace_ = nullptr;
};

}  // namespace ggan
