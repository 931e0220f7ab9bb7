#pragma once

#include <cstdint>
#include <vector>

#include "sptrim/tensor.hpp"

namespace sptrim {

// Disjoint partition of a tensor's flat indices into G groups covering the
// whole index set.
struct GroupPartition {
  std::vector<std::vector<std::size_t>> groups;

  std::size_t group_count() const { return groups.size(); }
  std::size_t index_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
};

// Channel groups of a conv kernel [m, r, C, N]: group g is the slice
// W[:, :, g, :], so G = C and every group has m*r*N indices.
GroupPartition channel_partition(const std::vector<std::size_t>& kernel_shape);

// Filter groups of a conv kernel [m, r, C, N]: group g is W[:, :, :, g].
// Used only to extend the channel mask onto the first conv layer.
GroupPartition filter_partition(const std::vector<std::size_t>& kernel_shape);

// Splits a flat vector of length dim into num_groups contiguous groups of
// equal size (dim must be divisible).
GroupPartition contiguous_partition(std::size_t dim, std::size_t num_groups);

// Throws DimError unless groups are pairwise disjoint, in range, and cover
// every index of w.
void validate_partition(const GroupPartition& part, const Tensor& w);

double group_norm(const Tensor& w, const std::vector<std::size_t>& group);

// Sum of per-group Euclidean norms.
double group_lasso_norm(const Tensor& w, const GroupPartition& part);

// Number of groups with nonzero Euclidean norm.
std::size_t group_l0_norm(const Tensor& w, const GroupPartition& part);

// Percentage of groups with exactly-zero norm. Groups count as zero when
// their norm is <= zero_tol (default: exact zero, matching prox output).
double channel_sparsity(const Tensor& w, const GroupPartition& part,
                        double zero_tol = 0.0);

// One-decimal rounding used wherever sparsity percentages are reported.
// Half cases round away from zero (56.25 -> 56.3).
double round1(double x);

// Frozen 0/1 pruning pattern over the C channels; bit 1 = channel kept.
struct ChannelMask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  // Fraction of zero bits.
  double sparsity() const;
  double sparsity_percent() const { return 100.0 * sparsity(); }
  bool all_ones() const;
};

double channel_sparsity(const ChannelMask& mask);

// Bit g = 0 iff the group norm is <= zero_tol.
ChannelMask mask_from_groups(const Tensor& w, const GroupPartition& part,
                             double zero_tol = 0.0);

std::vector<std::vector<double>> extract_groups(const Tensor& w,
                                                const GroupPartition& part);
void scatter_groups(const std::vector<std::vector<double>>& values,
                    const GroupPartition& part, Tensor& out);

}  // namespace sptrim
