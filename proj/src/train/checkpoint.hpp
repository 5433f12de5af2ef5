#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ggan/nn/adam.hpp"
#include "ggan/nn/param.hpp"

namespace ggan::train {

struct CheckpointMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t iteration = 0;
  std::uint64_t next_event = 0;
};

/// Full training state: every parameter tensor, persistent layer state
/// (BN running statistics, spectral-norm power vectors), optimizer moments
/// and counters, plus the iteration and sampling-event counters that stand
/// in for RNG state (sampling is a pure function of seed and event index).
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamRefs<float>& params, const StateRefs<float>& state,
                     const std::vector<Adam<float>*>& opts);

/// Loads in place. Refuses files whose config hash does not match
/// `expected_config_hash`.
CheckpointMeta load_checkpoint(const std::string& path, std::uint64_t expected_config_hash,
                               const ParamRefs<float>& params, const StateRefs<float>& state,
                               const std::vector<Adam<float>*>& opts);

/// Reads just the header (for inspection).
CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace ggan::train
