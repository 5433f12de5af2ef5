#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ggan/rng.hpp"
#include "ggan/spectro/spectrogram.hpp"
#include "ggan/tensor.hpp"

namespace ggan::spectro {

struct LabelledSample {
  Tensor<float> values;  // (H, W, 1)
  int label = 0;
};

struct Dataset {
  std::vector<LabelledSample> train;
  std::vector<LabelledSample> test;
  SpectroConfig cfg;
  std::size_t n_classes = 0;
};

/// Guidance split of a labelled pool: a seeded uniform subset keeps its
/// labels, the remainder becomes the unlabelled pool.
struct DatasetSplit {
  std::vector<std::size_t> labelled_indices;    // into pool.train, sorted
  std::vector<std::size_t> unlabelled_indices;  // the complement
  const Dataset* pool = nullptr;
  double fraction = 0;
  std::uint64_t seed = 0;

  std::size_t labelled_size() const { return labelled_indices.size(); }
  std::size_t unlabelled_size() const { return unlabelled_indices.size(); }
};

/// Uniform (default) or per-class stratified sampling of the guidance set.
DatasetSplit make_guidance_split(const Dataset& pool, double fraction, std::uint64_t seed,
                                 bool stratified = false);

/// Both sides see the whole pool (baseline trainers: the supervised GAN
/// reads the labelled side, the unsupervised one the unlabelled side).
DatasetSplit full_split(const Dataset& pool);

/// A split whose labelled side comes from a different corpus (the
/// cross-dataset guidance protocol). Unlabelled indices address `pool`,
/// labelled indices address `guidance`.
struct CrossSplit {
  const Dataset* pool = nullptr;
  const Dataset* guidance = nullptr;
};

/// Toy synthetic corpus: n classes of structured spectrograms built from
/// per-class harmonic stacks plus band-limited noise (style Harmonic), or
/// two broad spectral-centroid styles standing in for a binary attribute
/// such as speaker gender (style Centroid).
struct ToyConfig {
  std::size_t n_classes = 4;
  std::size_t per_class = 512;
  double test_fraction = 0.2;
  SpectroConfig spectro = SpectroConfig::toy();
  enum class Style { Harmonic, Centroid } style = Style::Harmonic;
};

Dataset make_toy_dataset(const ToyConfig& cfg, std::uint64_t seed);

/// Synthesize one toy waveform (exposed for round-trip tests).
Waveform toy_waveform(const ToyConfig& cfg, int label, Rng& rng);

/// Directory ingestion for spoken-digit style corpora: accepts
/// <root>/<digit>/*.wav and <root>/<digit>_*.wav layouts.
Dataset load_wav_directory(const std::string& root, const SpectroConfig& cfg,
                           double test_fraction, std::uint64_t seed);

/// On-disk dataset directory (meta.txt + train/ + test/ of .ggsp files).
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

/// One sampling event's worth of minibatches (the quadruple drawn by one
/// step of the training schedule): 2m latents, m conditions, 2m data
/// points, m labelled points.
struct MinibatchSet {
  Tensor<float> z;         // (2m, 128)
  Tensor<float> c_onehot;  // (m, n)
  std::vector<int> c_idx;
  Tensor<float> x;         // (2m, H, W, 1)
  Tensor<float> xl;        // (m, H, W, 1)
  Tensor<float> y_onehot;  // (m, n)
  std::vector<int> y_idx;
};

enum class LatentKind { Uniform, Gaussian };

/// Stateless per-event sampler: event e is a pure function of
/// (seed, e), so resumption only needs the event counter.
class BatchSampler {
 public:
  BatchSampler() = default;
  BatchSampler(const DatasetSplit& split, std::size_t m, std::size_t n_classes,
               LatentKind latent, std::uint64_t seed);
  BatchSampler(const CrossSplit& split, std::size_t m, std::size_t n_classes, LatentKind latent,
               std::uint64_t seed);

  MinibatchSet sample(std::uint64_t event_index) const;

  std::size_t batch_size() const { return m_; }
  std::size_t n_classes() const { return n_; }

 private:
  const Tensor<float>& unlabelled_at(std::size_t i) const;
  const LabelledSample& labelled_at(std::size_t i) const;

  const Dataset* pool_ = nullptr;
  const Dataset* guidance_ = nullptr;  // cross-dataset mode only
  std::vector<std::size_t> labelled_indices_, unlabelled_indices_;
  std::size_t m_ = 0, n_ = 0;
  LatentKind latent_ = LatentKind::Uniform;
  std::uint64_t seed_ = 0;
  std::size_t h_ = 0, w_ = 0;
};

/// Optional background producer of sampling events. The sequence of events
/// is identical with prefetch on or off; only the timing differs.
class Prefetcher {
 public:
  Prefetcher(const BatchSampler& sampler, std::uint64_t first_event, std::size_t depth);
  ~Prefetcher();

  /// Blocks until the next event in sequence is ready.
  MinibatchSet next();

 private:
  void run(std::uint64_t first_event);

  const BatchSampler& sampler_;
  std::size_t depth_;
  std::deque<MinibatchSet> queue_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::atomic<bool> stop_{false};
  std::thread worker_;
};

}  // namespace ggan::spectro
