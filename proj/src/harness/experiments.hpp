#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ggan/nets/ggan.hpp"
#include "ggan/spectro/dataset.hpp"
#include "train/config.hpp"

namespace ggan::harness {

/// Accuracy of the representation probe argmax C_x(F(D(x))) over a test set.
double probe_representation(GganModel<float>& model,
                            const std::vector<spectro::LabelledSample>& test);

/// Supervised baseline: the discriminator-trunk CNN trained on the guidance
/// subset only, scored on the test set.
double baseline_cnn(const std::vector<spectro::LabelledSample>& labelled,
                    const std::vector<spectro::LabelledSample>& test, std::size_t input_h,
                    std::size_t ch, std::size_t n_classes, std::size_t epochs,
                    std::uint64_t seed);

struct SweepSpec {
  train::TrainingConfig base;
  std::vector<double> fractions;   // e.g. 0.01 .. 0.05
  std::size_t repeats = 5;
  std::uint64_t base_seed = 1;
  std::size_t cnn_epochs = 40;
};

struct SweepRow {
  double fraction = 0;
  double ggan_mean = 0, ggan_std = 0;
  double cnn_mean = 0, cnn_std = 0;
  std::size_t repeats = 0;
};

/// Per fraction, `repeats` independent guidance resamplings; each retrains
/// the guided model on its split and the baseline CNN on the same labelled
/// subset, then scores both on the held-out test set. Rows come back sorted
/// by fraction.
std::vector<SweepRow> run_guidance_sweep(const SweepSpec& spec, const spectro::Dataset& pool,
                                         const std::string& out_dir, std::ostream* progress);

void write_sweep_table(const std::vector<SweepRow>& rows, const std::string& path);

/// Linear interpolation in the representation space:
/// G((1-t) F(D(x_a)) + t F(D(x_b))) at steps evenly spaced t in [0,1].
Tensor<float> interpolate_latent(GganModel<float>& model, const Tensor<float>& x_a,
                                 const Tensor<float>& x_b, std::size_t steps);

/// One row per sample: 128 feature values then the label, tab-separated,
/// order-preserving.
void export_embeddings(GganModel<float>& model,
                       const std::vector<spectro::LabelledSample>& samples,
                       const std::string& path);

struct CrossGuidanceResult {
  std::string run_dir;
  std::vector<double> centroid_mean;  // per condition, in frequency bins
  std::vector<double> centroid_std;
  double separation = 0;  // |mean gap| / max within-condition std
};

/// Cross-dataset guidance: unlabelled pool from one corpus, labels only from
/// a foreign corpus. Trains the guided model, writes per-condition sample
/// grids, and measures how far apart the generated conditions sit in
/// spectral-centroid terms.
CrossGuidanceResult cross_dataset_guidance(const train::TrainingConfig& cfg,
                                           const spectro::Dataset& pool,
                                           const spectro::Dataset& guidance,
                                           const std::string& run_dir,
                                           std::size_t grid_per_condition = 16);

/// Spectral centroid (in bin units) of one spectrogram's linear magnitudes.
double spectral_centroid(const Tensor<float>& values, const spectro::SpectroConfig& cfg);

}  // namespace ggan::harness
