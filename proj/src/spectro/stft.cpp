#include "ggan/spectro/stft.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "ggan/spectro/fft.hpp"

namespace ggan::spectro {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

/// Center-crop or center-pad to exactly `len` samples.
std::vector<double> fit_length(const std::vector<double>& x, std::size_t len) {
  std::vector<double> out(len, 0.0);
  if (x.size() >= len) {
    const std::size_t off = (x.size() - len) / 2;
    std::copy(x.begin() + off, x.begin() + off + len, out.begin());
  } else {
    const std::size_t off = (len - x.size()) / 2;
    std::copy(x.begin(), x.end(), out.begin() + off);
  }
  return out;
}

/// Windowed frames -> complex spectra, frames indexed [t][bin 0..N/2].
std::vector<std::vector<std::complex<double>>> analyze(const std::vector<double>& x,
                                                       const SpectroConfig& cfg,
                                                       const std::vector<double>& win) {
  const std::size_t n = cfg.fft_size();
  std::vector<std::vector<std::complex<double>>> frames(cfg.width);
  std::vector<std::complex<double>> buf(n);
  for (std::size_t t = 0; t < cfg.width; ++t) {
    const std::size_t off = t * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) buf[i] = {x[off + i] * win[i], 0.0};
    fft_inplace(buf, false);
    frames[t].assign(buf.begin(), buf.begin() + n / 2 + 1);
  }
  return frames;
}

/// Least-squares inverse of `analyze`: windowed overlap-add normalized by
/// the summed squared window.
std::vector<double> synthesize(const std::vector<std::vector<std::complex<double>>>& frames,
                               const SpectroConfig& cfg, const std::vector<double>& win) {
  const std::size_t n = cfg.fft_size();
  const std::size_t len = cfg.required_samples();
  std::vector<double> acc(len, 0.0), norm(len, 0.0);
  std::vector<std::complex<double>> buf(n);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t i = 0; i <= n / 2; ++i) buf[i] = frames[t][i];
    for (std::size_t i = 1; i < n / 2; ++i) buf[n - i] = std::conj(frames[t][i]);
    // a real signal needs real DC and Nyquist components
    buf[0] = {buf[0].real(), 0.0};
    buf[n / 2] = {buf[n / 2].real(), 0.0};
    fft_inplace(buf, true);
    const std::size_t off = t * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) {
      acc[off + i] += win[i] * buf[i].real();
      norm[off + i] += win[i] * win[i];
    }
  }
  for (std::size_t i = 0; i < len; ++i) acc[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
  return acc;
}

}  // namespace

Spectrogram stft_log_magnitude(const Waveform& wav, const SpectroConfig& cfg) {
  for (double s : wav.samples)
    if (!std::isfinite(s)) throw std::domain_error("stft: non-finite sample");
  if (wav.samples.size() < cfg.fft_size())
    throw std::length_error("stft: waveform shorter than one analysis frame (" +
                            std::to_string(wav.samples.size()) + " < " +
                            std::to_string(cfg.fft_size()) + ")");
  const std::vector<double> x = fit_length(wav.samples, cfg.required_samples());
  const std::vector<double> win = hann_window(cfg.fft_size());
  const auto frames = analyze(x, cfg, win);

  Spectrogram spec(cfg);
  spec.meta.sample_rate = wav.sample_rate;
  const double floor_amp = std::pow(10.0, cfg.min_db / 20.0);
  for (std::size_t h = 0; h < cfg.height; ++h)  // Nyquist bin dropped
    for (std::size_t t = 0; t < cfg.width; ++t) {
      const double mag = std::abs(frames[t][h]);
      double db = 20.0 * std::log10(mag > floor_amp ? mag : floor_amp);
      db = db < cfg.min_db ? cfg.min_db : (db > cfg.max_db ? cfg.max_db : db);
      spec.values.at(h, t, 0) =
          static_cast<float>(2.0 * (db - cfg.min_db) / (cfg.max_db - cfg.min_db) - 1.0);
    }
  return spec;
}

Waveform invert_spectrogram(const Spectrogram& spec, std::size_t iters,
                            std::vector<double>* inconsistency) {
  if (iters < 1) throw std::invalid_argument("invert_spectrogram: iters must be >= 1");
  const SpectroConfig& cfg = spec.meta;
  const Tensor<float> db = denormalize(spec);
  // target linear magnitudes, Nyquist forced silent
  std::vector<std::vector<double>> mag(cfg.width,
                                       std::vector<double>(cfg.fft_size() / 2 + 1, 0.0));
  for (std::size_t t = 0; t < cfg.width; ++t)
    for (std::size_t h = 0; h < cfg.height; ++h)
      mag[t][h] = std::pow(10.0, static_cast<double>(db.at(h, t, 0)) / 20.0);
  const std::vector<double> win = hann_window(cfg.fft_size());

  auto project_magnitude = [&](std::vector<std::vector<std::complex<double>>>& frames) {
    for (std::size_t t = 0; t < cfg.width; ++t)
      for (std::size_t h = 0; h < frames[t].size(); ++h) {
        const double a = std::abs(frames[t][h]);
        frames[t][h] = a > 1e-300 ? frames[t][h] * (mag[t][h] / a)
                                  : std::complex<double>(mag[t][h], 0.0);
      }
  };
  // Frobenius distance in the full mirrored spectrum (interior bins twice);
  // this is the metric in which alternating projection is non-increasing.
  auto distance_to_target = [&](const std::vector<std::vector<std::complex<double>>>& frames) {
    double d2 = 0;
    const std::size_t half = cfg.fft_size() / 2;
    for (std::size_t t = 0; t < cfg.width; ++t)
      for (std::size_t h = 0; h <= half; ++h) {
        const double d = std::abs(frames[t][h]) - mag[t][h];
        d2 += (h == 0 || h == half) ? d * d : 2.0 * d * d;
      }
    return std::sqrt(d2);
  };

  // zero-phase start
  std::vector<std::vector<std::complex<double>>> frames(
      cfg.width, std::vector<std::complex<double>>(cfg.fft_size() / 2 + 1));
  for (std::size_t t = 0; t < cfg.width; ++t)
    for (std::size_t h = 0; h < frames[t].size(); ++h) frames[t][h] = {mag[t][h], 0.0};

  std::vector<double> x;
  for (std::size_t it = 0; it < iters; ++it) {
    x = synthesize(frames, cfg, win);
    frames = analyze(x, cfg, win);
    if (inconsistency) inconsistency->push_back(distance_to_target(frames));
    project_magnitude(frames);
  }
  Waveform out;
  out.sample_rate = cfg.sample_rate;
  out.samples = std::move(x);
  return out;
}

double pearson(const Tensor<float>& a, const Tensor<float>& b) {
  const std::size_t n = a.numel();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db_ = b[i] - mb;
    sab += da * db_;
    saa += da * da;
    sbb += db_ * db_;
  }
  if (saa < 1e-30 || sbb < 1e-30) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ggan::spectro
