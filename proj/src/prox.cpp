#include "sptrim/prox.hpp"

#include <cmath>

namespace sptrim {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("prox threshold must be >= 0");
}

}  // namespace

Tensor prox_gl(const Tensor& w, const GroupPartition& part, double lambda) {
  check_lambda(lambda);
  if (lambda == 0.0) return w;  // identity, bit-exact
  Tensor out = w;
  for (const auto& group : part.groups) {
    const double nrm = group_norm(w, group);
    if (nrm > lambda) {
      const double shrink = (nrm - lambda) / nrm;
      for (std::size_t i : group) out[i] = w[i] * shrink;
    } else {
      for (std::size_t i : group) out[i] = 0.0;
    }
  }
  return out;
}

Tensor prox_gl0(const Tensor& w, const GroupPartition& part, double lambda) {
  check_lambda(lambda);
  const double threshold = std::sqrt(2.0 * lambda);
  Tensor out = w;
  for (const auto& group : part.groups) {
    // Strict inequality: boundary groups (||w_g||^2 == 2*lambda) are zeroed.
    if (!(group_norm(w, group) > threshold))
      for (std::size_t i : group) out[i] = 0.0;
  }
  return out;
}

Tensor BinaryWeights::reconstruct(const std::vector<std::size_t>& shape) const {
  Tensor out(shape);
  if (out.size() != signs.size())
    throw DimError("BinaryWeights::reconstruct: shape/sign length mismatch");
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (!keep.empty() && keep[i] == 0)
      out[i] = 0.0;
    else
      out[i] = scale * static_cast<double>(signs[i]);
  }
  return out;
}

BinaryWeights binary_project(const Tensor& w) {
  if (w.size() == 0) throw DimError("binary_project: empty tensor");
  BinaryWeights bw;
  bw.signs.resize(w.size());
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    abs_sum += std::fabs(w[i]);
    bw.signs[i] = w[i] >= 0.0 ? 1 : -1;  // sgn(0) = +1
  }
  bw.scale = abs_sum / static_cast<double>(w.size());
  return bw;
}

BinaryWeights binary_project_masked(const Tensor& w,
                                    const std::vector<std::uint8_t>& keep) {
  if (keep.empty()) return binary_project(w);
  if (keep.size() != w.size())
    throw DimError("binary_project_masked: keep flag length mismatch");
  BinaryWeights bw;
  bw.signs.resize(w.size());
  bw.keep = keep;
  double abs_sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    bw.signs[i] = w[i] >= 0.0 ? 1 : -1;
    if (keep[i]) {
      abs_sum += std::fabs(w[i]);
      ++kept;
    }
  }
  if (kept == 0)
    throw ConfigError("binary_project_masked: every coordinate is masked");
  bw.scale = abs_sum / static_cast<double>(kept);
  return bw;
}

BinaryWeights binary_project_masked(const Tensor& w, const ChannelMask& mask,
                                    const GroupPartition& part) {
  return binary_project_masked(w, keep_flags(mask, part, w.size()));
}

std::vector<std::uint8_t> keep_flags(const ChannelMask& mask,
                                     const GroupPartition& part,
                                     std::size_t size) {
  if (mask.size() != part.group_count())
    throw DimError("keep_flags: mask length does not match group count");
  std::vector<std::uint8_t> keep(size, 1);
  for (std::size_t g = 0; g < part.group_count(); ++g)
    if (mask.bits[g] == 0)
      for (std::size_t i : part.groups[g]) keep[i] = 0;
  return keep;
}

}  // namespace sptrim
