#pragma once

#include <cstdint>
#include <string>

#include "ggan/tensor.hpp"

namespace ggan::spectro {

/// Analysis parameters and normalization bounds. Height is the number of
/// frequency bins kept (fft_size/2, Nyquist dropped), width the number of
/// time frames; spectrograms are frequency-major, H = 2W.
struct SpectroConfig {
  std::size_t height = 256;
  std::size_t width = 128;
  std::size_t sample_rate = 16000;
  std::size_t hop = 64;
  double min_db = -100.0;
  double max_db = 20.0;

  std::size_t fft_size() const { return 2 * height; }
  std::size_t required_samples() const { return fft_size() + (width - 1) * hop; }

  static SpectroConfig full() { return SpectroConfig{}; }
  static SpectroConfig toy() {
    SpectroConfig c;
    c.height = 64;
    c.width = 32;
    c.hop = 32;
    return c;
  }

  bool operator==(const SpectroConfig&) const = default;
};

/// Normalized log-magnitude time-frequency array, values in [-1, 1],
/// shape (H, W, 1), frequency-major.
struct Spectrogram {
  Tensor<float> values;
  SpectroConfig meta;

  Spectrogram() = default;
  explicit Spectrogram(const SpectroConfig& cfg)
      : values({cfg.height, cfg.width, 1}), meta(cfg) {}
};

struct Waveform {
  std::vector<double> samples;
  std::size_t sample_rate = 16000;
};

/// Inverse of the [-1,1] normalization, back to decibels.
Tensor<float> denormalize(const Spectrogram& spec);

/// Affine map from clipped decibels to [-1, 1].
Tensor<float> normalize_db(const Tensor<float>& db, const SpectroConfig& cfg);

/// Binary spectrogram file, magic "GGSP" (see README for the layout).
void write_spectrogram(const std::string& path, const Spectrogram& spec);
Spectrogram read_spectrogram(const std::string& path);

}  // namespace ggan::spectro
