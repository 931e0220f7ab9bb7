#include "sptrim/grouping.hpp"

#include <cmath>
#include <string>

namespace sptrim {

GroupPartition channel_partition(const std::vector<std::size_t>& kernel_shape) {
  if (kernel_shape.size() != 4)
    throw DimError("channel_partition expects a rank-4 kernel [m, r, C, N]");
  const std::size_t m = kernel_shape[0], r = kernel_shape[1],
                    C = kernel_shape[2], N = kernel_shape[3];
  GroupPartition part;
  part.groups.resize(C);
  for (std::size_t g = 0; g < C; ++g) part.groups[g].reserve(m * r * N);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < r; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t o = 0; o < N; ++o) part.groups[c].push_back(idx++);
  return part;
}

GroupPartition filter_partition(const std::vector<std::size_t>& kernel_shape) {
  if (kernel_shape.size() != 4)
    throw DimError("filter_partition expects a rank-4 kernel [m, r, C, N]");
  const std::size_t m = kernel_shape[0], r = kernel_shape[1],
                    C = kernel_shape[2], N = kernel_shape[3];
  GroupPartition part;
  part.groups.resize(N);
  for (std::size_t g = 0; g < N; ++g) part.groups[g].reserve(m * r * C);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < r; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t o = 0; o < N; ++o) part.groups[o].push_back(idx++);
  return part;
}

GroupPartition contiguous_partition(std::size_t dim, std::size_t num_groups) {
  if (num_groups == 0 || dim % num_groups != 0)
    throw DimError("contiguous_partition: dim must divide into num_groups");
  const std::size_t d = dim / num_groups;
  GroupPartition part;
  part.groups.resize(num_groups);
  for (std::size_t g = 0; g < num_groups; ++g)
    for (std::size_t i = 0; i < d; ++i) part.groups[g].push_back(g * d + i);
  return part;
}

void validate_partition(const GroupPartition& part, const Tensor& w) {
  std::vector<std::uint8_t> seen(w.size(), 0);
  std::size_t covered = 0;
  for (const auto& group : part.groups) {
    for (std::size_t i : group) {
      if (i >= w.size())
        throw DimError("partition index " + std::to_string(i) +
                       " out of range for tensor of size " +
                       std::to_string(w.size()));
      if (seen[i]) throw DimError("partition groups overlap at index " +
                                  std::to_string(i));
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != w.size())
    throw DimError("partition does not cover the tensor index set");
}

double group_norm(const Tensor& w, const std::vector<std::size_t>& group) {
  double s = 0.0;
  for (std::size_t i : group) s += w[i] * w[i];
  return std::sqrt(s);
}

double group_lasso_norm(const Tensor& w, const GroupPartition& part) {
  double s = 0.0;
  for (const auto& group : part.groups) s += group_norm(w, group);
  return s;
}

std::size_t group_l0_norm(const Tensor& w, const GroupPartition& part) {
  std::size_t count = 0;
  for (const auto& group : part.groups)
    if (group_norm(w, group) != 0.0) ++count;
  return count;
}

double channel_sparsity(const Tensor& w, const GroupPartition& part,
                        double zero_tol) {
  std::size_t zeros = 0;
  for (const auto& group : part.groups)
    if (group_norm(w, group) <= zero_tol) ++zeros;
  return 100.0 * static_cast<double>(zeros) /
         static_cast<double>(part.group_count());
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

double ChannelMask::sparsity() const {
  if (bits.empty()) return 0.0;
  std::size_t zeros = 0;
  for (auto b : bits)
    if (b == 0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(bits.size());
}

bool ChannelMask::all_ones() const {
  for (auto b : bits)
    if (b == 0) return false;
  return true;
}

double channel_sparsity(const ChannelMask& mask) {
  return mask.sparsity_percent();
}

ChannelMask mask_from_groups(const Tensor& w, const GroupPartition& part,
                             double zero_tol) {
  ChannelMask mask;
  mask.bits.resize(part.group_count());
  for (std::size_t g = 0; g < part.group_count(); ++g)
    mask.bits[g] = group_norm(w, part.groups[g]) <= zero_tol ? 0 : 1;
  return mask;
}

std::vector<std::vector<double>> extract_groups(const Tensor& w,
                                                const GroupPartition& part) {
  validate_partition(part, w);
  std::vector<std::vector<double>> out(part.group_count());
  for (std::size_t g = 0; g < part.group_count(); ++g) {
    out[g].reserve(part.groups[g].size());
    for (std::size_t i : part.groups[g]) out[g].push_back(w[i]);
  }
  return out;
}

void scatter_groups(const std::vector<std::vector<double>>& values,
                    const GroupPartition& part, Tensor& out) {
  if (values.size() != part.group_count())
    throw DimError("scatter_groups: group count mismatch");
  for (std::size_t g = 0; g < part.group_count(); ++g) {
    if (values[g].size() != part.groups[g].size())
      throw DimError("scatter_groups: group size mismatch");
    for (std::size_t k = 0; k < values[g].size(); ++k)
      out[part.groups[g][k]] = values[g][k];
  }
}

}  // namespace sptrim
