#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "ggan/nets/ggan.hpp"
#include "ggan/spectro/dataset.hpp"
#include "train/classifier.hpp"

namespace ggan::metrics {

struct MetricReport {
  double is_mean = 0, is_std = 0;
  double fid = 0;
  double probe_accuracy = 0;
  std::size_t n_samples = 0;
  std::string classifier_id;
  std::uint64_t seed = 0;

  std::string to_line() const;
};

/// The generation-evaluation protocol: draw samples through E and G,
/// round-trip every spectrogram through phase reconstruction and
/// re-analysis (scoring audio, not raw arrays), score with the local
/// classifier against the equally round-tripped test reference, and attach
/// the representation-probe accuracy.
MetricReport evaluate_generation(GganModel<float>& model, train::ConvClassifier& classifier,
                                 const spectro::Dataset& reference, std::size_t n_samples,
                                 std::size_t invert_iters, std::uint64_t seed);

/// The same scoring for any sample source (baseline generators): the
/// callback returns a (count, H, W, 1) batch for the given rng.
using SampleFn = std::function<Tensor<float>(std::size_t count, Rng& rng)>;
MetricReport evaluate_samples(const SampleFn& sample, train::ConvClassifier& classifier,
                              const spectro::Dataset& reference, std::size_t n_samples,
                              std::size_t invert_iters, std::uint64_t seed);

/// Round-trip a batch of spectrogram values (N,H,W,1) through waveform
/// reconstruction and re-analysis.
Tensor<float> round_trip_batch(const Tensor<float>& values, const spectro::SpectroConfig& cfg,
                               std::size_t invert_iters);

}  // namespace ggan::metrics
