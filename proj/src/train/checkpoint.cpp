#include "train/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ggan::train {

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_tensor(std::ostream& os, const Tensor<float>& t) {
  put_u64(os, t.numel());
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

void get_tensor(std::istream& is, Tensor<float>& t) {
  const std::uint64_t n = get_u64(is);
  if (n != t.numel())
    throw std::runtime_error("checkpoint: tensor size mismatch (" + std::to_string(n) +
                             " vs " + std::to_string(t.numel()) + ")");
  if (!is.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(n * sizeof(float))))
    throw std::runtime_error("checkpoint: truncated tensor payload");
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamRefs<float>& params, const StateRefs<float>& state,
                     const std::vector<Adam<float>*>& opts) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write("GGCK", 4);
  put_u64(os, 1);  // version
  put_u64(os, meta.config_hash);
  put_u64(os, meta.iteration);
  put_u64(os, meta.next_event);
  put_u64(os, params.size());
  for (const Param<float>* p : params) put_tensor(os, p->value);
  put_u64(os, state.size());
  for (const Tensor<float>* t : state) put_tensor(os, *t);
  put_u64(os, opts.size());
  for (Adam<float>* opt : opts) {
    put_u64(os, static_cast<std::uint64_t>(opt->steps()));
    auto moments = opt->moments();
    put_u64(os, moments.size());
    for (Tensor<float>* m : moments) put_tensor(os, *m);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "GGCK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (get_u64(is) != 1) throw std::runtime_error("checkpoint: unsupported version");
  CheckpointMeta meta;
  meta.config_hash = get_u64(is);
  meta.iteration = get_u64(is);
  meta.next_event = get_u64(is);
  return meta;
}

CheckpointMeta load_checkpoint(const std::string& path, std::uint64_t expected_config_hash,
                               const ParamRefs<float>& params, const StateRefs<float>& state,
                               const std::vector<Adam<float>*>& opts) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "GGCK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (get_u64(is) != 1) throw std::runtime_error("checkpoint: unsupported version");
  CheckpointMeta meta;
  meta.config_hash = get_u64(is);
  meta.iteration = get_u64(is);
  meta.next_event = get_u64(is);
  if (meta.config_hash != expected_config_hash)
    throw std::runtime_error("checkpoint: config hash mismatch; refusing to load " + path);
  if (get_u64(is) != params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (Param<float>* p : params) get_tensor(is, p->value);
  if (get_u64(is) != state.size()) throw std::runtime_error("checkpoint: state count mismatch");
  for (Tensor<float>* t : state) get_tensor(is, *t);
  if (get_u64(is) != opts.size()) throw std::runtime_error("checkpoint: optimizer count mismatch");
  for (Adam<float>* opt : opts) {
    opt->step_counter() = static_cast<std::int64_t>(get_u64(is));
    auto moments = opt->moments();
    if (get_u64(is) != moments.size())
      throw std::runtime_error("checkpoint: moment count mismatch");
    for (Tensor<float>* m : moments) get_tensor(is, *m);
  }
  return meta;
}

}  // namespace ggan::train
