#pragma once

#include <cstdint>
#include <vector>

#include "sptrim/grouping.hpp"
#include "sptrim/tensor.hpp"

namespace sptrim {

// Group soft-thresholding: group g maps to w_g * (||w_g|| - lambda) / ||w_g||
// when ||w_g|| > lambda, else to exactly 0. lambda = 0 is the identity.
Tensor prox_gl(const Tensor& w, const GroupPartition& part, double lambda);

// Group hard-thresholding: group g is kept verbatim iff ||w_g|| > sqrt(2*lambda),
// else set to exactly 0 (boundary groups are zeroed).
Tensor prox_gl0(const Tensor& w, const GroupPartition& part, double lambda);

// One scale a >= 0 per tensor plus a sign vector; coordinates with keep = 0
// reconstruct to exactly 0.
struct BinaryWeights {
  double scale = 0.0;
  std::vector<std::int8_t> signs;    // +1 / -1, sgn(0) = +1
  std::vector<std::uint8_t> keep;    // empty means all coordinates kept

  Tensor reconstruct(const std::vector<std::size_t>& shape) const;
};

// Closest point of R+ x {+-1}^D in Euclidean distance:
// a = mean(|w_j|), signs_j = +1 if w_j >= 0 else -1.
BinaryWeights binary_project(const Tensor& w);

// As binary_project but the mean runs over kept coordinates only.
// Throws ConfigError when no coordinate is kept.
BinaryWeights binary_project_masked(const Tensor& w,
                                    const std::vector<std::uint8_t>& keep);

// Channel-level wrapper: kept coordinates are those in groups whose mask bit
// is 1.
BinaryWeights binary_project_masked(const Tensor& w, const ChannelMask& mask,
                                    const GroupPartition& part);

// Expands a channel mask through a partition into per-coordinate keep flags.
std::vector<std::uint8_t> keep_flags(const ChannelMask& mask,
                                     const GroupPartition& part,
                                     std::size_t size);

}  // namespace sptrim
