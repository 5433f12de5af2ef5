#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "ggan/ops/pool.hpp"
#include "ggan/nn/layers.hpp"

namespace ggan {

/// Generator ResBlock with nearest-neighbor x2 upsampling:
///   main:     BN/cBN -> ReLU -> upscale -> 3x3 conv -> BN/cBN -> ReLU -> 3x3 conv
///   shortcut: upscale -> 1x1 conv
/// Conditional blocks take a per-sample class embedding for their cBN gains.
template <typename T>
class ResBlockUp {
 public:
  ResBlockUp() = default;
  ResBlockUp(std::size_t ci, std::size_t co, bool conditional, std::size_t embed_dim,
             bool spectral, Rng& rng, const std::string& name)
      : conditional_(conditional) {
    if (conditional_) {
      cbn1_ = ConditionalBatchNorm<T>(ci, embed_dim, name + ".cbn1");
      cbn2_ = ConditionalBatchNorm<T>(co, embed_dim, name + ".cbn2");
    } else {
      bn1_ = BatchNorm<T>(ci, name + ".bn1");
      bn2_ = BatchNorm<T>(co, name + ".bn2");
    }
    conv1_ = Conv2d<T>(3, ci, co, spectral, rng, name + ".conv1");
    conv2_ = Conv2d<T>(3, co, co, spectral, rng, name + ".conv2");
    conv_sc_ = Conv2d<T>(1, ci, co, spectral, rng, name + ".sc");
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (conditional_) throw std::invalid_argument("resblock_up: conditional block needs a condition");
    return run(x, nullptr, mode);
  }

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& embed, Mode mode) {
    if (!conditional_)
      throw std::invalid_argument("resblock_up: condition supplied to unconditional block");
    return run(x, &embed, mode);
  }

  /// Unconditional backward.
  Tensor<T> backward(const Tensor<T>& gy) { return backward_impl(gy, nullptr); }

  /// Conditional backward; returns (gx, gembed).
  std::pair<Tensor<T>, Tensor<T>> backward_cond(const Tensor<T>& gy) {
    Tensor<T> gembed;
    Tensor<T> gx = backward_impl(gy, &gembed);
    return {std::move(gx), std::move(gembed)};
  }

  void params(ParamRefs<T>& out) {
    if (conditional_) {
      cbn1_.params(out);
      cbn2_.params(out);
    } else {
      bn1_.params(out);
      bn2_.params(out);
    }
    conv1_.params(out);
    conv2_.params(out);
    conv_sc_.params(out);
  }
  void state(StateRefs<T>& out) {
    if (conditional_) {
      cbn1_.state(out);
      cbn2_.state(out);
    } else {
      bn1_.state(out);
      bn2_.state(out);
    }
    conv1_.state(out);
    conv2_.state(out);
    conv_sc_.state(out);
  }

 private:
  Tensor<T> run(const Tensor<T>& x, const Tensor<T>* embed, Mode mode) {
    Tensor<T> h = conditional_ ? cbn1_.forward(x, *embed, mode) : bn1_.forward(x, mode);
    h = relu1_.forward(h, mode);
    Tensor<T> hu({h.dim(0), 2 * h.dim(1), 2 * h.dim(2), h.dim(3)});
    ops::upsample_nearest2x_forward(h, hu);
    h = conv1_.forward(hu, mode);
    h = conditional_ ? cbn2_.forward(h, *embed, mode) : bn2_.forward(h, mode);
    h = relu2_.forward(h, mode);
    h = conv2_.forward(h, mode);

    Tensor<T> sc({x.dim(0), 2 * x.dim(1), 2 * x.dim(2), x.dim(3)});
    ops::upsample_nearest2x_forward(x, sc);
    sc = conv_sc_.forward(sc, mode);
    h += sc;
    in_shape_ = x.shape();
    return h;
  }

  Tensor<T> backward_impl(const Tensor<T>& gy, Tensor<T>* gembed_out) {
    // shortcut branch
    Tensor<T> gsc = conv_sc_.backward(gy);
    Tensor<T> gx_sc(in_shape_);
    ops::upsample_nearest2x_backward(gsc, gx_sc);
    // main branch
    Tensor<T> g = conv2_.backward(gy);
    g = relu2_.backward(g);
    Tensor<T> ge2;
    if (conditional_) {
      auto [gx2, gemb2] = cbn2_.backward(g);
      g = std::move(gx2);
      ge2 = std::move(gemb2);
    } else {
      g = bn2_.backward(g);
    }
    g = conv1_.backward(g);
    Tensor<T> gmain(in_shape_);
    ops::upsample_nearest2x_backward(g, gmain);
    gmain = relu1_.backward(gmain);
    if (conditional_) {
      auto [gx1, gemb1] = cbn1_.backward(gmain);
      gmain = std::move(gx1);
      ge2 += gemb1;
      if (gembed_out) *gembed_out = std::move(ge2);
    } else {
      gmain = bn1_.backward(gmain);
    }
    gmain += gx_sc;
    return gmain;
  }

  bool conditional_ = false;
  BatchNorm<T> bn1_, bn2_;
  ConditionalBatchNorm<T> cbn1_, cbn2_;
  Conv2d<T> conv1_, conv2_, conv_sc_;
  Relu<T> relu1_, relu2_;
  std::vector<std::size_t> in_shape_;
};

/// Discriminator ResBlock.
///   Down:       main ReLU -> conv -> ReLU -> conv -> avgpool,
///               shortcut 1x1 conv -> avgpool, output = main + shortcut.
///   NoShortcut: main path only, no resampling (the trailing block of the
///               discriminator tables).
template <typename T>
class ResBlockDown {
 public:
  enum class Kind { Down, NoShortcut };

  ResBlockDown() = default;
  ResBlockDown(std::size_t ci, std::size_t co, Kind kind, bool spectral, Rng& rng,
               const std::string& name)
      : kind_(kind) {
    conv1_ = Conv2d<T>(3, ci, co, spectral, rng, name + ".conv1");
    conv2_ = Conv2d<T>(3, co, co, spectral, rng, name + ".conv2");
    if (kind_ == Kind::Down) conv_sc_ = Conv2d<T>(1, ci, co, spectral, rng, name + ".sc");
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (kind_ == Kind::Down && (x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0))
      throw std::invalid_argument("resblock_down: odd spatial dims " + shape_string(x.shape()));
    in_shape_ = x.shape();
    Tensor<T> h = relu1_.forward(x, mode);
    h = conv1_.forward(h, mode);
    h = relu2_.forward(h, mode);
    h = conv2_.forward(h, mode);
    if (kind_ == Kind::NoShortcut) return h;
    Tensor<T> hp({h.dim(0), h.dim(1) / 2, h.dim(2) / 2, h.dim(3)});
    ops::avgpool2x2_forward(h, hp);
    Tensor<T> sc = conv_sc_.forward(x, mode);
    Tensor<T> scp({sc.dim(0), sc.dim(1) / 2, sc.dim(2) / 2, sc.dim(3)});
    ops::avgpool2x2_forward(sc, scp);
    hp += scp;
    return hp;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g;
    Tensor<T> gx_sc;
    if (kind_ == Kind::Down) {
      Tensor<T> gfull({gy.dim(0), 2 * gy.dim(1), 2 * gy.dim(2), gy.dim(3)});
      ops::avgpool2x2_backward(gy, gfull);
      Tensor<T> gsc_full = gfull;
      gx_sc = conv_sc_.backward(gsc_full);
      g = std::move(gfull);
    } else {
      g = gy;
    }
    g = conv2_.backward(g);
    g = relu2_.backward(g);
    g = conv1_.backward(g);
    g = relu1_.backward(g);
    if (kind_ == Kind::Down) g += gx_sc;
    return g;
  }

  void params(ParamRefs<T>& out) {
    conv1_.params(out);
    conv2_.params(out);
    if (kind_ == Kind::Down) conv_sc_.params(out);
  }
  void state(StateRefs<T>& out) {
    conv1_.state(out);
    conv2_.state(out);
    if (kind_ == Kind::Down) conv_sc_.state(out);
  }

 private:
  Kind kind_ = Kind::Down;
  Conv2d<T> conv1_, conv2_, conv_sc_;
  Relu<T> relu1_, relu2_;
  std::vector<std::size_t> in_shape_;
};

}  // namespace ggan
