#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sptrim/grouping.hpp"
#include "sptrim/nn.hpp"
#include "sptrim/tensor.hpp"

namespace sptrim {

struct ConvSpec {
  std::size_t m = 0, r = 0;  // kernel height (time) and width (frequency)
  std::size_t c = 0, n = 0;  // input channels, filters
  std::size_t s = 1, u = 1;  // strides in time and frequency
};

// Two conv layers, one max pool between them, one dense layer, softmax.
struct ModelConfig {
  std::size_t t = 0, f = 0;
  ConvSpec conv1;
  std::size_t pool_p = 1, pool_q = 1;
  ConvSpec conv2;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;

  // Desk-scale default that trains on one CPU core in minutes.
  static ModelConfig toy(std::size_t t = 32, std::size_t f = 16,
                         std::size_t num_classes = 4, std::uint64_t seed = 1);
  // The keyword-spotting shape (conv1 8x20, 64 channels into conv2, 12
  // classes). Constructible and shape-checked; not meant for CPU training.
  static ModelConfig paper_shaped(std::uint64_t seed = 1);

  void validate() const;

  // Spatial dims after conv1 / pool / conv2.
  std::array<std::size_t, 2> conv1_out() const;
  std::array<std::size_t, 2> pool_out() const;
  std::array<std::size_t, 2> conv2_out() const;
  std::size_t dense_in() const;
};

inline constexpr std::size_t kNumParamTensors = 6;
inline constexpr std::array<const char*, kNumParamTensors> kParamNames = {
    "conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b"};
inline constexpr std::size_t kConv1W = 0, kConv1B = 1, kConv2W = 2,
                             kConv2B = 3, kDenseW = 4, kDenseB = 5;

struct Model {
  ModelConfig config;
  std::array<Tensor, kNumParamTensors> params;
  std::optional<ChannelMask> mask;

  Tensor& param(std::size_t i) { return params[i]; }
  const Tensor& param(std::size_t i) const { return params[i]; }
};

// Deterministic init from config.seed: weights uniform in
// +-sqrt(6 / (fan_in + fan_out)), biases zero. No mask.
Model build_model(const ModelConfig& config);

// Partitions of the conv kernels used for penalties (conv2 channels) and for
// extending the mask onto conv1 (filters).
GroupPartition conv2_channel_partition(const ModelConfig& config);
GroupPartition conv1_filter_partition(const ModelConfig& config);

// Single example [t, f] -> logits [K].
Tensor forward(const Model& model, const Tensor& input);
// Batch of examples -> logits [B, K].
Tensor forward_batch(const Model& model,
                     const std::vector<const Tensor*>& batch);

struct BatchGrads {
  double loss = 0.0;                          // mean cross entropy
  std::array<Tensor, kNumParamTensors> grads;  // mean over the batch
};

BatchGrads loss_and_grads(const Model& model,
                          const std::vector<const Tensor*>& batch,
                          const std::vector<std::size_t>& labels);

// Zeroes conv2 channel slices, conv1 filters and their biases for masked
// channels, and stores the mask so forward passes multiply conv1 output by
// the 0/1 channel vector. Rejects an all-zero mask.
void apply_mask(Model& model, const ChannelMask& mask);

// Re-zeroes masked coordinates; called after every optimizer step so the
// pruning pattern survives training exactly.
void reapply_mask(Model& model);

// True iff every masked coordinate of the model is exactly zero.
bool masked_coords_zero(const Model& model);

// Mask bit g = 0 iff group g of w (under part) has exactly-zero norm.
ChannelMask mask_from_weights(const Tensor& w, const GroupPartition& part,
                              double zero_tol = 0.0);

// Replaces conv1, conv2 and dense weight tensors by their binary projections
// (scale x sign, masked channels pinned at zero). Biases stay float.
void binarize_model(Model& model);

}  // namespace sptrim
