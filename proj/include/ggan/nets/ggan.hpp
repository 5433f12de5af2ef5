#pragma once

#include <cstdint>
#include <string>

#include "ggan/nets/generator.hpp"
#include "ggan/nets/heads.hpp"
#include "ggan/nn/mlp.hpp"

namespace ggan {

/// The eight guided-GAN networks (nine parameter sets: the first
/// discriminator is the trunk D plus the discrimination head D').
///
/// Wiring: E(z,c) -> z_e; C_e classifies z_e; G(z_e) -> sample;
/// D extracts features shared by D', F, C_x and the mode-divergence loss;
/// D2 scores samples directly; F maps D-features into the latent space;
/// C_x classifies F-features; D_f scores (feature, sample) pairs through
/// its own trunk.
template <typename T>
struct GganModel {
  std::size_t h = 0, w = 0, ch = 0, n_classes = 0;

  Mlp<T> encoder;  // (128+n) -> 128 -> 128 -> 128
  Mlp<T> c_e;      // 128 -> 128 -> 128 -> n
  Generator<T> gen;
  DTrunk<T> d;     // feature part of D1
  Mlp<T> d_prime;  // 16ch -> 128 -> 128 -> 1
  D2Net<T> d2;
  Mlp<T> f;        // 16ch -> 256 -> 256 -> 128
  Mlp<T> c_x;      // 128 -> 128 -> 128 -> n
  DFNet<T> d_f;

  GganModel() = default;
  GganModel(std::size_t height, std::size_t channels, std::size_t classes,
            std::uint64_t init_seed)
      : h(height), w(height / 2), ch(channels), n_classes(classes) {
    Rng rng(init_seed);
    encoder = Mlp<T>({128 + classes, 128, 128, 128}, false, rng, "e");
    c_e = Mlp<T>({128, 128, 128, classes}, false, rng, "ce");
    gen = Generator<T>(height, channels, false, 0, 0, true, rng, "g");
    d = DTrunk<T>(height, channels, true, rng, "d");
    d_prime = Mlp<T>({16 * channels, 128, 128, 1}, true, rng, "dp");
    d2 = D2Net<T>(height, channels, true, rng, "d2");
    f = Mlp<T>({16 * channels, 256, 256, 128}, false, rng, "f");
    c_x = Mlp<T>({128, 128, 128, classes}, false, rng, "cx");
    d_f = DFNet<T>(height, channels, 128, true, rng, "df");
  }

  ParamRefs<T> params_d1() {
    ParamRefs<T> p;
    d.params(p);
    d_prime.params(p);
    return p;
  }
  ParamRefs<T> params_d2() {
    ParamRefs<T> p;
    d2.params(p);
    return p;
  }
  ParamRefs<T> params_df() {
    ParamRefs<T> p;
    d_f.params(p);
    return p;
  }
  ParamRefs<T> params_ecg() {
    ParamRefs<T> p;
    encoder.params(p);
    c_e.params(p);
    gen.params(p);
    return p;
  }
  ParamRefs<T> params_fc() {
    ParamRefs<T> p;
    f.params(p);
    c_x.params(p);
    return p;
  }
  ParamRefs<T> params_all() {
    ParamRefs<T> p;
    encoder.params(p);
    c_e.params(p);
    gen.params(p);
    d.params(p);
    d_prime.params(p);
    d2.params(p);
    f.params(p);
    c_x.params(p);
    d_f.params(p);
    return p;
  }
  StateRefs<T> state_all() {
    StateRefs<T> s;
    encoder.state(s);
    c_e.state(s);
    gen.state(s);
    d.state(s);
    d_prime.state(s);
    d2.state(s);
    f.state(s);
    c_x.state(s);
    d_f.state(s);
    return s;
  }

  /// z (N,128) and one-hot conditions (N,n) -> encoded latent (N,128).
  Tensor<T> encode(const Tensor<T>& z, const Tensor<T>& c_onehot, Mode mode) {
    return encoder.forward(concat_cols(z, c_onehot), mode);
  }

  /// Representation of a batch of samples: F(D(x)).
  Tensor<T> represent(const Tensor<T>& x, Mode mode) {
    return f.forward(d.forward(x, mode), mode);
  }

  /// Class logits of the representation probe, C_x(F(D(x))).
  Tensor<T> probe_logits(const Tensor<T>& x, Mode mode) {
    return c_x.forward(represent(x, mode), mode);
  }
};

}  // namespace ggan
