#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ggan/rng.hpp"
#include "ggan/tensor.hpp"

namespace ggan {

/// Forward-pass mode.
///  Train:  cache for backward, use batch statistics, update running stats
///          and spectral-norm power vectors (once per optimization step).
///  Frozen: cache for backward, batch statistics, no state updates. Used
///          when gradients flow *through* a network that is not being
///          updated in the current phase.
///  Stats:  no caching, batch statistics, no state updates. Used to
///          synthesize samples inside other networks' update phases.
///  Eval:   no caching, running statistics, no state updates.
enum class Mode { Train, Frozen, Stats, Eval };

inline bool mode_caches(Mode m) { return m == Mode::Train || m == Mode::Frozen; }
inline bool mode_updates_state(Mode m) { return m == Mode::Train; }
inline bool mode_batch_stats(Mode m) { return m != Mode::Eval; }

/// Trainable tensor with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

/// Persistent non-trainable state (BN running stats, SN power vectors).
template <typename T>
using StateRefs = std::vector<Tensor<T>*>;

/// When false, layer backward passes skip accumulating parameter gradients
/// and only propagate input gradients. Training is single-threaded per
/// model, so a plain global flag is enough.
namespace detail {
inline bool& param_grads_flag() {
  static bool flag = true;
  return flag;
}
}  // namespace detail

inline bool param_grads_enabled() { return detail::param_grads_flag(); }

struct NoParamGrads {
  bool prev;
  NoParamGrads() : prev(detail::param_grads_flag()) { detail::param_grads_flag() = false; }
  ~NoParamGrads() { detail::param_grads_flag() = prev; }
  NoParamGrads(const NoParamGrads&) = delete;
  NoParamGrads& operator=(const NoParamGrads&) = delete;
};

/// Glorot-uniform init for a weight with the given fan counts.
template <typename T>
void glorot_init(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < w.numel(); ++i)
    w[i] = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
void normal_init(Tensor<T>& w, double stddev, Rng& rng) {
  for (std::size_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(rng.normal() * stddev);
}

/// FNV-1a over the raw bytes of a parameter set; used by tests and the
/// trainer to assert the per-phase update partition.
template <typename T>
std::uint64_t param_bytes_hash(const ParamRefs<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Param<T>* p : params) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    const std::size_t nb = p->value.numel() * sizeof(T);
    for (std::size_t i = 0; i < nb; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace ggan
