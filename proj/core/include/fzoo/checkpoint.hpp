#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fzoo/optimizers.hpp"
#include "fzoo/param_vector.hpp"

// Binary run checkpoints. Layout (all integers little-endian, doubles as
// IEEE-754 bit patterns):
//
//   "FZCK"  magic
//   u32     format version (currently 1)
//   u8      optimizer kind
//   u64     run seed
//   f64     eta, f64 epsilon
//   i32     n_directions
//   u64     batch_size
//   i64     step, i64 forward_passes, i64 degenerate_sigma_batches
//   str     optimizer name            (u64 length + bytes)
//   u64     shape count, then per shape: str name, u64 rows, u64 cols
//   f64[]   theta                     (u64 count + values)
//   f64[]   previous_losses, adam m, adam v
//   u64     FNV-1a hash of everything above
//
// Loading rejects wrong magic, unsupported versions, truncated files, and
// checksum mismatches with distinct messages.

namespace fzoo {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string optimizer_name;
  OptimizerKind kind = OptimizerKind::kFzoo;
  std::uint64_t run_seed = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  int n_directions = 0;
  std::uint64_t batch_size = 0;
  std::int64_t step = 0;
  std::int64_t forward_passes = 0;
  std::int64_t degenerate_sigma_batches = 0;
  std::vector<LayerShape> shapes;
  std::vector<double> theta;
  std::vector<double> previous_losses;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
};

Checkpoint make_checkpoint(const std::string& optimizer_name,
                           const OptimizerConfig& config,
                           const OptimizerState& state);

// Rebuilds the mutable run state; shapes come from the checkpoint itself.
OptimizerState restore_state(const Checkpoint& ckpt);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Human-readable view for `fzoo dump`.
nlohmann::json checkpoint_debug_json(const Checkpoint& ckpt);

}  // namespace fzoo
