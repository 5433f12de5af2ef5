#pragma once

#include <memory>
#include <string>

#include "ggan/losses.hpp"
#include "ggan/nets/biggan.hpp"
#include "ggan/nets/ggan.hpp"
#include "ggan/nn/adam.hpp"
#include "ggan/spectro/dataset.hpp"
#include "train/config.hpp"

namespace ggan::train {

/// Interleaved three-phase optimization: per iteration, k discriminator
/// steps, one generator-side step (E, C_e, G), one feature-side step
/// (F, C_x), each on a freshly sampled minibatch event.
class GganTrainer {
 public:
  GganTrainer(const TrainingConfig& cfg, const spectro::DatasetSplit& split);
  GganTrainer(const TrainingConfig& cfg, const spectro::CrossSplit& split);

  /// One full iteration (k+2 sampling events). Returns the logged bundle.
  loss::Bundle<float> iterate_once();

  /// Individual phases, exposed for instrumentation and tests. Each takes
  /// one sampling event's minibatches and applies exactly one optimizer
  /// step to its own parameter partition.
  void discriminator_phase(const spectro::MinibatchSet& b, loss::Bundle<float>& out);
  void generator_phase(const spectro::MinibatchSet& b, loss::Bundle<float>& out);
  void feature_phase(const spectro::MinibatchSet& b, loss::Bundle<float>& out);

  /// Full run: logging, periodic checkpoints and sample grids under
  /// `run_dir`. Halts with a diagnostic checkpoint on non-finite losses.
  void train(const std::string& run_dir);

  void save(const std::string& path) const;
  void load(const std::string& path);

  /// Per-condition sample grid at the current parameters (eval mode).
  Tensor<float> sample_class_grid(int label, std::size_t count, std::uint64_t stream) ;

  GganModel<float>& model() { return model_; }
  const TrainingConfig& config() const { return cfg_; }
  std::uint64_t iteration() const { return iteration_; }
  std::uint64_t next_event() const { return next_event_; }
  std::uint64_t sampling_events() const { return next_event_; }
  const spectro::BatchSampler& sampler() const { return sampler_; }

 private:
  void init_optimizers();
  spectro::MinibatchSet next_batch();

  TrainingConfig cfg_;
  GganModel<float> model_;
  spectro::BatchSampler sampler_;
  std::unique_ptr<spectro::Prefetcher> prefetcher_;
  Adam<float> opt_d1_, opt_d2_, opt_df_, opt_ecg_, opt_fc_;
  std::uint64_t iteration_ = 0;
  std::uint64_t next_event_ = 0;
};

/// Baseline trainers for the two BigGAN configurations: plain hinge GAN
/// with k discriminator steps per generator step.
struct BaselineResult {
  double final_d = 0, final_g = 0;
};

BaselineResult train_supervised_biggan(const TrainingConfig& cfg,
                                       const spectro::DatasetSplit& split,
                                       SupervisedBigGan<float>& model,
                                       const std::string& run_dir);
BaselineResult train_unsupervised_biggan(const TrainingConfig& cfg,
                                         const spectro::DatasetSplit& split,
                                         UnsupervisedBigGan<float>& model,
                                         const std::string& run_dir);

}  // namespace ggan::train
