#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ggan/spectro/stft.hpp"
#include "ggan/spectro/wav.hpp"
#include "testutil.hpp"

using namespace ggan;
using namespace ggan::spectro;

namespace {

Waveform tone(double freq, double seconds, std::size_t sr, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  const std::size_t n = static_cast<std::size_t>(seconds * sr);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * 3.14159265358979323846 * freq * i / sr);
  return w;
}

}  // namespace

TEST_CASE("silence maps to the dB floor everywhere") {
  SpectroConfig cfg = SpectroConfig::full();
  Waveform w;
  w.samples.assign(16000, 0.0);
  Spectrogram s = stft_log_magnitude(w, cfg);
  for (std::size_t i = 0; i < s.values.numel(); ++i) CHECK(s.values[i] == -1.0f);
}

TEST_CASE("one second of 16 kHz audio yields a 256x128x1 spectrogram") {
  SpectroConfig cfg = SpectroConfig::full();
  REQUIRE(cfg.fft_size() == 512);
  REQUIRE(cfg.hop == 64);
  Waveform w = tone(440.0, 1.0, 16000);
  Spectrogram s = stft_log_magnitude(w, cfg);
  CHECK(s.values.shape() == std::vector<std::size_t>{256, 128, 1});
  // frame arithmetic: fitted length L satisfies (L - fft)/hop + 1 = 128
  CHECK((cfg.required_samples() - cfg.fft_size()) / cfg.hop + 1 == 128);
}

TEST_CASE("spectrogram values always land in [-1, 1]") {
  Rng rng(61);
  SpectroConfig cfg = SpectroConfig::toy();
  for (int trial = 0; trial < 20; ++trial) {
    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples.resize(cfg.required_samples());
    const double amp = std::pow(10.0, rng.uniform(-4, 2));  // wildly varying level
    for (auto& s : w.samples) s = amp * rng.uniform(-1, 1);
    Spectrogram sp = stft_log_magnitude(w, cfg);
    for (std::size_t i = 0; i < sp.values.numel(); ++i) {
      CHECK(sp.values[i] >= -1.0f);
      CHECK(sp.values[i] <= 1.0f);
    }
  }
}

TEST_CASE("stft input validation") {
  SpectroConfig cfg = SpectroConfig::toy();
  Waveform shorty;
  shorty.samples.assign(cfg.fft_size() - 1, 0.1);
  CHECK_THROWS_AS(stft_log_magnitude(shorty, cfg), std::length_error);
  Waveform bad;
  bad.samples.assign(cfg.required_samples(), 0.0);
  bad.samples[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(stft_log_magnitude(bad, cfg), std::domain_error);
}

TEST_CASE("denormalize endpoints and round trip") {
  SpectroConfig cfg = SpectroConfig::toy();
  Spectrogram s(cfg);
  s.values.fill(-1.0f);
  Tensor<float> db = denormalize(s);
  CHECK(db[0] == doctest::Approx(cfg.min_db));
  s.values.fill(1.0f);
  db = denormalize(s);
  CHECK(db[0] == doctest::Approx(cfg.max_db));

  Rng rng(62);
  Spectrogram r(cfg);
  for (std::size_t i = 0; i < r.values.numel(); ++i)
    r.values[i] = static_cast<float>(rng.uniform(-1, 1));
  Tensor<float> back = normalize_db(denormalize(r), cfg);
  CHECK(testutil::max_abs_diff(r.values, back) < 1e-6);

  s.values[3] = 1.5f;
  CHECK_THROWS_AS(denormalize(s), std::out_of_range);
}

TEST_CASE("all-floor spectrogram inverts to near silence") {
  SpectroConfig cfg = SpectroConfig::toy();
  Spectrogram s(cfg);
  s.values.fill(-1.0f);
  Waveform w = invert_spectrogram(s, 5);
  double rms = 0;
  for (double v : w.samples) rms += v * v;
  rms = std::sqrt(rms / w.samples.size());
  CHECK(rms < 1e-3);
}

TEST_CASE("pure tone round trip correlates at >= 0.9 after 60 iterations") {
  SpectroConfig cfg = SpectroConfig::full();
  Waveform w = tone(440.0, 1.0, 16000);
  Spectrogram original = stft_log_magnitude(w, cfg);
  Waveform rec = invert_spectrogram(original, 60);
  Spectrogram again = stft_log_magnitude(rec, cfg);
  CHECK(pearson(original.values, again.values) >= 0.9);
}

TEST_CASE("phase reconstruction inconsistency is non-increasing") {
  Rng rng(63);
  SpectroConfig cfg = SpectroConfig::toy();
  for (int trial = 0; trial < 3; ++trial) {
    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples.resize(cfg.required_samples());
    for (auto& s : w.samples) s = 0.3 * rng.uniform(-1, 1);
    Spectrogram sp = stft_log_magnitude(w, cfg);
    std::vector<double> trace;
    (void)invert_spectrogram(sp, 30, &trace);
    REQUIRE(trace.size() == 30);
    for (std::size_t i = 1; i < trace.size(); ++i)
      CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("ggsp file round trip is bit exact") {
  Rng rng(64);
  SpectroConfig cfg = SpectroConfig::toy();
  Spectrogram s(cfg);
  for (std::size_t i = 0; i < s.values.numel(); ++i)
    s.values[i] = static_cast<float>(rng.uniform(-1, 1));
  const std::string path = (std::filesystem::temp_directory_path() / "t.ggsp").string();
  write_spectrogram(path, s);
  Spectrogram r = read_spectrogram(path);
  CHECK(testutil::bit_equal(s.values, r.values));
  CHECK(r.meta == s.meta);
  std::remove(path.c_str());
}

TEST_CASE("ggsp payload size is H*W*4 plus header and metadata") {
  SpectroConfig cfg = SpectroConfig::full();
  Spectrogram s(cfg);
  const std::string path = (std::filesystem::temp_directory_path() / "t2.ggsp").string();
  write_spectrogram(path, s);
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  const auto size = static_cast<std::size_t>(is.tellg());
  is.seekg(4 + 2 + 12 + 256 * 128 * 4);
  std::uint32_t mlen = 0;
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  mlen = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  CHECK(size == 4 + 2 + 12 + 256 * 128 * 4 + 4 + mlen);
  std::remove(path.c_str());
}

TEST_CASE("truncated ggsp file raises a format error without partial values") {
  SpectroConfig cfg = SpectroConfig::toy();
  Spectrogram s(cfg);
  const std::string path = (std::filesystem::temp_directory_path() / "t3.ggsp").string();
  write_spectrogram(path, s);
  // cut the file in the middle of the payload
  std::ifstream is(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  is.close();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  os.close();
  CHECK_THROWS_AS(read_spectrogram(path), std::runtime_error);
  std::remove(path.c_str());

  std::ofstream bad(path, std::ios::binary);
  bad.write("NOPE", 4);
  bad.close();
  CHECK_THROWS_AS(read_spectrogram(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("wav write/read round trip") {
  Waveform w = tone(300.0, 0.05, 16000, 0.7);
  const std::string path = (std::filesystem::temp_directory_path() / "t.wav").string();
  write_wav(path, w);
  Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == 16000);
  double maxdiff = 0;
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    maxdiff = std::max(maxdiff, std::abs(w.samples[i] - r.samples[i]));
  CHECK(maxdiff < 1.0 / 32000.0);
  std::remove(path.c_str());
}
