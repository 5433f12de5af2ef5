#pragma once

#include <string>
#include <vector>

#include "ggan/nn/layers.hpp"

namespace ggan {

/// Dense stack with ReLU between layers and a linear output, matching the
/// encoder / classifier / feature-extractor / discrimination-head tables.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<std::size_t>& dims, bool spectral, Rng& rng, const std::string& name) {
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
      layers_.emplace_back(dims[i], dims[i + 1], spectral, rng, name + ".fc" + std::to_string(i));
    relus_.resize(layers_.size() > 0 ? layers_.size() - 1 : 0);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(h, mode);
      if (i + 1 < layers_.size()) h = relus_[i].forward(h, mode);
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = gy;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      g = layers_[i].backward(g);
      if (i > 0) g = relus_[i - 1].backward(g);
    }
    return g;
  }

  void params(ParamRefs<T>& out) {
    for (auto& l : layers_) l.params(out);
  }
  void state(StateRefs<T>& out) {
    for (auto& l : layers_) l.state(out);
  }

  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }
  std::vector<Dense<T>>& layers() { return layers_; }

 private:
  std::vector<Dense<T>> layers_;
  std::vector<Relu<T>> relus_;
};

}  // namespace ggan
