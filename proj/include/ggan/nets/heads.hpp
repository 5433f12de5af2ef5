#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ggan/nets/trunk.hpp"
#include "ggan/nn/mlp.hpp"

namespace ggan {

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t n = a.dim(0), fa = a.dim(1), fb = b.dim(1);
  Tensor<T> out({n, fa + fb});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < fa; ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < fb; ++j) out.at(i, fa + j) = b.at(i, j);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_cols(const Tensor<T>& x, std::size_t fa) {
  const std::size_t n = x.dim(0), fb = x.dim(1) - fa;
  Tensor<T> a({n, fa}), b({n, fb});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < fa; ++j) a.at(i, j) = x.at(i, j);
    for (std::size_t j = 0; j < fb; ++j) b.at(i, j) = x.at(i, fa + j);
  }
  return {std::move(a), std::move(b)};
}

/// Second discriminator: the unsupervised-BigGAN critic, trunk plus a
/// single dense score head.
template <typename T>
class D2Net {
 public:
  D2Net() = default;
  D2Net(std::size_t input_h, std::size_t ch, bool spectral, Rng& rng, const std::string& name)
      : trunk_(input_h, ch, spectral, rng, name + ".trunk"),
        head_(16 * ch, 1, spectral, rng, name + ".head") {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = trunk_.forward(x, mode);
    Tensor<T> s = head_.forward(h, mode);
    if (trace_) trace_->push_back({"Dense", {1}});
    return s;
  }

  Tensor<T> backward(const Tensor<T>& gy) { return trunk_.backward(head_.backward(gy)); }

  void params(ParamRefs<T>& out) {
    trunk_.params(out);
    head_.params(out);
  }
  void state(StateRefs<T>& out) {
    trunk_.state(out);
    head_.state(out);
  }

  DTrunk<T>& trunk() { return trunk_; }
  void set_trace(std::vector<TraceRow>* t) {
    trace_ = t;
    trunk_.set_trace(t);
  }

 private:
  DTrunk<T> trunk_;
  Dense<T> head_;
  std::vector<TraceRow>* trace_ = nullptr;
};

/// Feature-pair discriminator D_f. Owns its own spectrogram trunk; the
/// pooled trunk feature is concatenated with the 128-dim input feature
/// (encoded latent or extracted representation) before the dense head.
template <typename T>
class DFNet {
 public:
  DFNet() = default;
  DFNet(std::size_t input_h, std::size_t ch, std::size_t feature_dim, bool spectral, Rng& rng,
        const std::string& name)
      : trunk_(input_h, ch, spectral, rng, name + ".trunk"),
        fc1_(16 * ch + feature_dim, 128, spectral, rng, name + ".fc1"),
        fc2_(128, 1, spectral, rng, name + ".fc2"), feature_dim_(feature_dim) {}

  Tensor<T> forward(const Tensor<T>& feature, const Tensor<T>& x, Mode mode) {
    if (feature.ndim() != 2 || feature.dim(1) != feature_dim_)
      throw std::invalid_argument("d_f: feature must be (N," + std::to_string(feature_dim_) +
                                  "), got " + shape_string(feature.shape()));
    Tensor<T> pooled = trunk_.forward(x, mode);
    Tensor<T> cat = concat_cols(pooled, feature);
    if (trace_) trace_->push_back({"Concat with input feature", {cat.dim(1)}});
    Tensor<T> h = fc1_.forward(cat, mode);
    h = relu_.forward(h, mode);
    Tensor<T> s = fc2_.forward(h, mode);
    if (trace_) {
      trace_->push_back({"Dense", {128}});
      trace_->push_back({"ReLU", {128}});
      trace_->push_back({"Dense", {1}});
    }
    return s;
  }

  /// Full backward: (gfeature, gx).
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& gy) {
    Tensor<T> gcat = head_backward(gy);
    auto [gpooled, gfeature] = split_cols(gcat, trunk_.feat_dim());
    Tensor<T> gx = trunk_.backward(gpooled);
    return {std::move(gfeature), std::move(gx)};
  }

  /// Feature-side gradient only; skips the trunk (used when the sample side
  /// carries no gradient, e.g. real samples in the feature phase).
  Tensor<T> backward_feature(const Tensor<T>& gy) {
    Tensor<T> gcat = head_backward(gy);
    return split_cols(gcat, trunk_.feat_dim()).second;
  }

  void params(ParamRefs<T>& out) {
    trunk_.params(out);
    fc1_.params(out);
    fc2_.params(out);
  }
  void state(StateRefs<T>& out) {
    trunk_.state(out);
    fc1_.state(out);
    fc2_.state(out);
  }

  DTrunk<T>& trunk() { return trunk_; }
  void set_trace(std::vector<TraceRow>* t) {
    trace_ = t;
    trunk_.set_trace(t);
  }

 private:
  Tensor<T> head_backward(const Tensor<T>& gy) {
    Tensor<T> g = fc2_.backward(gy);
    g = relu_.backward(g);
    return fc1_.backward(g);
  }

  DTrunk<T> trunk_;
  Dense<T> fc1_, fc2_;
  Relu<T> relu_;
  std::size_t feature_dim_ = 0;
  std::vector<TraceRow>* trace_ = nullptr;
};

/// Supervised-BigGAN discriminator: trunk plus projection head,
/// score = dense(h) + <embed(y), h>.
template <typename T>
class ProjectionDiscriminator {
 public:
  ProjectionDiscriminator() = default;
  ProjectionDiscriminator(std::size_t input_h, std::size_t ch, std::size_t n_classes,
                          bool spectral, Rng& rng, const std::string& name)
      : trunk_(input_h, ch, spectral, rng, name + ".trunk"),
        head_(16 * ch, 1, spectral, rng, name + ".head"),
        embed_(n_classes, 16 * ch, rng, name + ".embed") {}

  Tensor<T> forward(const Tensor<T>& x, const std::vector<int>& labels, Mode mode) {
    Tensor<T> h = trunk_.forward(x, mode);
    Tensor<T> s = head_only(h, labels, mode);
    if (trace_) trace_->push_back({"Sum(embed(y)*h)+(dense->1)", {1}});
    return s;
  }

  /// The projection head on its own: dense(pooled) + <embed(label), pooled>.
  Tensor<T> head_only(const Tensor<T>& pooled, const std::vector<int>& labels, Mode mode) {
    Tensor<T> s = head_.forward(pooled, mode);
    Tensor<T> e = embed_.forward(labels);
    const std::size_t n = pooled.dim(0), f = pooled.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      T dot = T(0);
      for (std::size_t j = 0; j < f; ++j) dot += e.at(i, j) * pooled.at(i, j);
      s.at(i, 0) += dot;
    }
    if (mode_caches(mode)) {
      pooled_ = pooled;
      e_ = std::move(e);
    }
    return s;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gh = head_.backward(gy);
    const std::size_t n = gh.dim(0), f = gh.dim(1);
    Tensor<T> ge({n, f});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) {
        gh.at(i, j) += gy.at(i, 0) * e_.at(i, j);
        ge.at(i, j) = gy.at(i, 0) * pooled_.at(i, j);
      }
    embed_.backward(ge);
    return trunk_.backward(gh);
  }

  void params(ParamRefs<T>& out) {
    trunk_.params(out);
    head_.params(out);
    embed_.params(out);
  }
  void state(StateRefs<T>& out) {
    trunk_.state(out);
    head_.state(out);
  }

  DTrunk<T>& trunk() { return trunk_; }
  Embedding<T>& embedding() { return embed_; }
  Dense<T>& dense_head() { return head_; }
  void set_trace(std::vector<TraceRow>* t) {
    trace_ = t;
    trunk_.set_trace(t);
  }

 private:
  DTrunk<T> trunk_;
  Dense<T> head_;
  Embedding<T> embed_;
  Tensor<T> pooled_, e_;
  std::vector<TraceRow>* trace_ = nullptr;
};

}  // namespace ggan
