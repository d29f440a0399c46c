#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "dybm/model.hpp"
#include "dybm/regularizers.hpp"

namespace dybm {

// Best-model pointer: a deep copy of the parameters plus the delay
// configuration it was scored with. Serialized to a little-endian binary
// format that round-trips every double bit-exactly.
struct Checkpoint {
  bool valid = false;
  ModelConfig model_config;
  RegMethod method = RegMethod::none;
  double reg_p = 0.0;
  Parameters params;
  std::vector<int> delays;           // effective (post-prune) per edge
  std::vector<int> original_delays;  // init-time snapshot
  std::vector<std::uint8_t> keep;    // prune state, all 1 when nothing pruned
  double epsilon = -std::numeric_limits<double>::infinity();
  double tnl = std::numeric_limits<double>::quiet_NaN();
  double onl = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t step = 0;
};

Checkpoint snapshot_model(const DybmModel& model, RegMethod method, double reg_p);

// Instantiate an inference-ready model: checkpoint parameters and delays,
// zeroed dynamic state.
DybmModel model_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dybm
