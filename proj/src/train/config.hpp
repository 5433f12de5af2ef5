#pragma once

#include <cstdint>
#include <string>

#include "ggan/spectro/dataset.hpp"

namespace ggan::train {

/// All training hyperparameters. Defaults are the paper-scale settings;
/// `apply_toy_preset` switches to the desk-scale configuration used by the
/// smoke tests.
struct TrainingConfig {
  std::size_t k = 2;            // discriminator steps per iteration
  std::size_t batch = 64;       // m
  double lr_disc = 2e-4;
  double lr_other = 5e-4;
  bool equal_lr = false;        // ties lr_disc to lr_other
  double alpha = 1e-4;          // mode-divergence denominator guard
  std::size_t ch = 16;
  std::size_t n_classes = 10;
  std::size_t height = 256;     // width = height / 2
  std::size_t total_iters = 2000;
  std::uint64_t seed = 1;
  double beta1 = 0.0;
  double beta2 = 0.999;
  spectro::LatentKind latent = spectro::LatentKind::Uniform;
  double guidance_fraction = 0.05;
  bool stratified_guidance = false;
  std::size_t checkpoint_every = 500;
  std::size_t sample_every = 500;
  std::size_t samples_per_class = 4;
  bool prefetch = false;

  void apply_toy_preset() {
    ch = 4;
    height = 64;
    n_classes = 4;
    batch = 32;
    total_iters = 2000;
  }

  double effective_lr_disc() const { return equal_lr ? lr_other : lr_disc; }

  void validate() const;
  std::string to_text() const;
  std::uint64_t hash() const;

  static TrainingConfig from_text(const std::string& text);
  static TrainingConfig from_file(const std::string& path);
};

}  // namespace ggan::train
