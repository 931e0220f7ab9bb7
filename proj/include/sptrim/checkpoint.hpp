#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sptrim/model.hpp"

namespace sptrim {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::uint8_t> mask_bits;  // empty = no mask
  std::string stage;                    // "I", "II" or "III"
  std::string rng_state;

  Model to_model() const;
};

Checkpoint checkpoint_from_model(const Model& model, const std::string& stage,
                                 const std::string& rng_state);

// Binary layout: magic "SPTRIMCK1\n", u32 version, u32 JSON block length +
// block (config, stage, rng state, mask), u32 tensor count, then per tensor:
// u32 name length, name, u32 rank, u32 dims, float64 little-endian data.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sptrim
