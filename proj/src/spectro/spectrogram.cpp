#include "ggan/spectro/spectrogram.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ggan::spectro {

namespace {

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  if (!is.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error("ggsp: truncated file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("ggsp: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

Tensor<float> denormalize(const Spectrogram& spec) {
  Tensor<float> db(spec.values.shape());
  const double lo = spec.meta.min_db, hi = spec.meta.max_db;
  for (std::size_t i = 0; i < spec.values.numel(); ++i) {
    const float v = spec.values[i];
    if (v < -1.0f || v > 1.0f)
      throw std::out_of_range("denormalize: value outside [-1,1]: " + std::to_string(v));
    db[i] = static_cast<float>(lo + (static_cast<double>(v) + 1.0) * 0.5 * (hi - lo));
  }
  return db;
}

Tensor<float> normalize_db(const Tensor<float>& db, const SpectroConfig& cfg) {
  Tensor<float> out(db.shape());
  const double lo = cfg.min_db, hi = cfg.max_db;
  for (std::size_t i = 0; i < db.numel(); ++i) {
    double d = db[i];
    d = d < lo ? lo : (d > hi ? hi : d);
    out[i] = static_cast<float>(2.0 * (d - lo) / (hi - lo) - 1.0);
  }
  return out;
}

void write_spectrogram(const std::string& path, const Spectrogram& spec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ggsp: cannot open for write: " + path);
  os.write("GGSP", 4);
  put_u16(os, 1);
  put_u32(os, static_cast<std::uint32_t>(spec.values.dim(0)));
  put_u32(os, static_cast<std::uint32_t>(spec.values.dim(1)));
  put_u32(os, static_cast<std::uint32_t>(spec.values.dim(2)));
  for (std::size_t i = 0; i < spec.values.numel(); ++i) put_f32(os, spec.values[i]);
  std::ostringstream meta;
  meta << "sample_rate=" << spec.meta.sample_rate << "\n"
       << "fft_size=" << spec.meta.fft_size() << "\n"
       << "hop=" << spec.meta.hop << "\n"
       << "min_db=" << spec.meta.min_db << "\n"
       << "max_db=" << spec.meta.max_db << "\n";
  const std::string m = meta.str();
  put_u32(os, static_cast<std::uint32_t>(m.size()));
  os.write(m.data(), static_cast<std::streamsize>(m.size()));
  if (!os) throw std::runtime_error("ggsp: write failed: " + path);
}

Spectrogram read_spectrogram(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ggsp: cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "GGSP", 4) != 0)
    throw std::runtime_error("ggsp: bad magic in " + path);
  const std::uint16_t version = get_u16(is);
  if (version != 1) throw std::runtime_error("ggsp: unsupported version in " + path);
  const std::uint32_t h = get_u32(is), w = get_u32(is), c = get_u32(is);
  Spectrogram spec;
  spec.values = Tensor<float>({h, w, c});
  for (std::size_t i = 0; i < spec.values.numel(); ++i) spec.values[i] = get_f32(is);
  const std::uint32_t mlen = get_u32(is);
  std::string meta(mlen, '\0');
  if (!is.read(meta.data(), mlen)) throw std::runtime_error("ggsp: truncated metadata in " + path);
  std::map<std::string, std::string> kv;
  std::istringstream ms(meta);
  std::string line;
  while (std::getline(ms, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  spec.meta.height = h;
  spec.meta.width = w;
  if (kv.count("sample_rate")) spec.meta.sample_rate = std::stoul(kv["sample_rate"]);
  if (kv.count("hop")) spec.meta.hop = std::stoul(kv["hop"]);
  if (kv.count("min_db")) spec.meta.min_db = std::stod(kv["min_db"]);
  if (kv.count("max_db")) spec.meta.max_db = std::stod(kv["max_db"]);
  if (kv.count("fft_size") && std::stoul(kv["fft_size"]) != spec.meta.fft_size())
    throw std::runtime_error("ggsp: fft size inconsistent with height in " + path);
  return spec;
}

}  // namespace ggan::spectro
