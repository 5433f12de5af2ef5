#pragma once

#include <cstdint>

#include "ggan/nets/generator.hpp"
#include "ggan/nets/heads.hpp"

namespace ggan {

/// Class-conditional baseline: cBN generator + projection discriminator.
template <typename T>
struct SupervisedBigGan {
  std::size_t h = 0, ch = 0, n_classes = 0;
  Generator<T> gen;
  ProjectionDiscriminator<T> disc;

  SupervisedBigGan() = default;
  SupervisedBigGan(std::size_t height, std::size_t channels, std::size_t classes,
                   std::uint64_t init_seed)
      : h(height), ch(channels), n_classes(classes) {
    Rng rng(init_seed);
    gen = Generator<T>(height, channels, true, classes, kEmbedDim, true, rng, "sg");
    disc = ProjectionDiscriminator<T>(height, channels, classes, true, rng, "sd");
  }

  ParamRefs<T> params_gen() {
    ParamRefs<T> p;
    gen.params(p);
    return p;
  }
  ParamRefs<T> params_disc() {
    ParamRefs<T> p;
    disc.params(p);
    return p;
  }
  StateRefs<T> state_all() {
    StateRefs<T> s;
    gen.state(s);
    disc.state(s);
    return s;
  }

  static constexpr std::size_t kEmbedDim = 128;
};

/// Unconditional baseline: BN generator + plain critic.
template <typename T>
struct UnsupervisedBigGan {
  std::size_t h = 0, ch = 0;
  Generator<T> gen;
  D2Net<T> disc;

  UnsupervisedBigGan() = default;
  UnsupervisedBigGan(std::size_t height, std::size_t channels, std::uint64_t init_seed)
      : h(height), ch(channels) {
    Rng rng(init_seed);
    gen = Generator<T>(height, channels, false, 0, 0, true, rng, "ug");
    disc = D2Net<T>(height, channels, true, rng, "ud");
  }

  ParamRefs<T> params_gen() {
    ParamRefs<T> p;
    gen.params(p);
    return p;
  }
  ParamRefs<T> params_disc() {
    ParamRefs<T> p;
    disc.params(p);
    return p;
  }
  StateRefs<T> state_all() {
    StateRefs<T> s;
    gen.state(s);
    disc.state(s);
    return s;
  }
};

template <typename T>
SupervisedBigGan<T> build_supervised_biggan(std::size_t height, std::size_t ch,
                                            std::size_t n_classes, std::uint64_t seed) {
  return SupervisedBigGan<T>(height, ch, n_classes, seed);
}

template <typename T>
UnsupervisedBigGan<T> build_unsupervised_biggan(std::size_t height, std::size_t ch,
                                                std::uint64_t seed) {
  return UnsupervisedBigGan<T>(height, ch, seed);
}

}  // namespace ggan
