#include "ggan/spectro/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace ggan::spectro {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void wr_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("wav: cannot open: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

  std::size_t pos = 12;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_len = 0;
  while (pos + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t len = rd_u32(data.data() + pos + 4);
    if (std::memcmp(id, "fmt ", 4) == 0 && pos + 8 + 16 <= data.size()) {
      const unsigned char* f = data.data() + pos + 8;
      const std::uint16_t format = rd_u16(f);
      if (format != 1) throw std::runtime_error("wav: only PCM supported: " + path);
      channels = rd_u16(f + 2);
      rate = rd_u32(f + 4);
      bits = rd_u16(f + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      pcm = data.data() + pos + 8;
      pcm_len = std::min<std::size_t>(len, data.size() - pos - 8);
    }
    pos += 8 + len + (len % 2);
  }
  if (!pcm || channels == 0 || bits != 16)
    throw std::runtime_error("wav: missing 16-bit PCM data chunk: " + path);

  const std::size_t frames = pcm_len / (2 * channels);
  Waveform out;
  out.sample_rate = rate;
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::int16_t s =
          static_cast<std::int16_t>(rd_u16(pcm + 2 * (i * channels + c)));
      acc += static_cast<double>(s) / 32768.0;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

void write_wav(const std::string& path, const Waveform& wav) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("wav: cannot open for write: " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(wav.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(wav.sample_rate);
  os.write("RIFF", 4);
  wr_u32(os, 36 + 2 * n);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wr_u32(os, 16);
  wr_u16(os, 1);  // PCM
  wr_u16(os, 1);  // mono
  wr_u32(os, rate);
  wr_u32(os, rate * 2);
  wr_u16(os, 2);
  wr_u16(os, 16);
  os.write("data", 4);
  wr_u32(os, 2 * n);
  for (double s : wav.samples) {
    const double clamped = std::max(-1.0, std::min(1.0, s));
    const std::int16_t v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    wr_u16(os, static_cast<std::uint16_t>(v));
  }
  if (!os) throw std::runtime_error("wav: write failed: " + path);
}

}  // namespace ggan::spectro
