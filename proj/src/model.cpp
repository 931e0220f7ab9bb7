#include "sptrim/model.hpp"

#include <cmath>
#include <string>

#include "sptrim/rng.hpp"

namespace sptrim {

ModelConfig ModelConfig::toy(std::size_t t, std::size_t f,
                             std::size_t num_classes, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.t = t;
  cfg.f = f;
  cfg.conv1 = {4, 4, 1, 16, 1, 1};
  cfg.pool_p = 2;
  cfg.pool_q = 2;
  cfg.conv2 = {3, 3, 16, 24, 1, 1};
  cfg.num_classes = num_classes;
  cfg.seed = seed;
  return cfg;
}

ModelConfig ModelConfig::paper_shaped(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.t = 98;
  cfg.f = 40;
  cfg.conv1 = {8, 20, 1, 64, 1, 1};
  cfg.pool_p = 2;
  cfg.pool_q = 2;
  cfg.conv2 = {4, 10, 64, 64, 1, 1};
  cfg.num_classes = 12;
  cfg.seed = seed;
  return cfg;
}

std::array<std::size_t, 2> ModelConfig::conv1_out() const {
  return {(t - conv1.m + 1) / conv1.s, (f - conv1.r + 1) / conv1.u};
}

std::array<std::size_t, 2> ModelConfig::pool_out() const {
  auto c1 = conv1_out();
  return {c1[0] / pool_p, c1[1] / pool_q};
}

std::array<std::size_t, 2> ModelConfig::conv2_out() const {
  auto p = pool_out();
  return {(p[0] - conv2.m + 1) / conv2.s, (p[1] - conv2.r + 1) / conv2.u};
}

std::size_t ModelConfig::dense_in() const {
  auto c2 = conv2_out();
  return c2[0] * c2[1] * conv2.n;
}

void ModelConfig::validate() const {
  if (t == 0 || f == 0) throw ConfigError("model: input dims must be positive");
  if (num_classes < 2) throw ConfigError("model: need at least 2 classes");
  if (conv1.c != 1) throw ConfigError("model: conv1 must have 1 input channel");
  if (conv1.n != conv2.c)
    throw ConfigError("model: conv1 filter count must equal conv2 channels");
  if (conv1.m == 0 || conv1.r == 0 || conv1.n == 0 || conv1.s == 0 ||
      conv1.u == 0 || conv2.m == 0 || conv2.r == 0 || conv2.n == 0 ||
      conv2.s == 0 || conv2.u == 0 || pool_p == 0 || pool_q == 0)
    throw ConfigError("model: all layer dims must be positive");
  if (conv1.m > t || conv1.r > f)
    throw ConfigError("model: conv1 kernel larger than input");
  auto c1 = conv1_out();
  if (c1[0] == 0 || c1[1] == 0) throw ConfigError("model: conv1 output empty");
  if (pool_p > c1[0] || pool_q > c1[1])
    throw ConfigError("model: pool window larger than conv1 output");
  auto po = pool_out();
  if (conv2.m > po[0] || conv2.r > po[1])
    throw ConfigError("model: conv2 kernel larger than pooled maps");
  auto c2 = conv2_out();
  if (c2[0] == 0 || c2[1] == 0) throw ConfigError("model: conv2 output empty");
}

namespace {

void glorot_fill(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = rng.uniform(-limit, limit);
}

// maps [T, F, C] += bias[c]
void add_channel_bias(Tensor& maps, const Tensor& bias) {
  const std::size_t C = maps.shape[2];
  for (std::size_t i = 0; i < maps.size(); i += C)
    for (std::size_t c = 0; c < C; ++c) maps[i + c] += bias[c];
}

Tensor channel_bias_grad(const Tensor& grad_maps) {
  const std::size_t C = grad_maps.shape[2];
  Tensor g({C});
  for (std::size_t i = 0; i < grad_maps.size(); i += C)
    for (std::size_t c = 0; c < C; ++c) g[c] += grad_maps[i + c];
  return g;
}

void scale_channels(Tensor& maps, const std::vector<std::uint8_t>& bits) {
  const std::size_t C = maps.shape[2];
  for (std::size_t i = 0; i < maps.size(); i += C)
    for (std::size_t c = 0; c < C; ++c)
      if (bits[c] == 0) maps[i + c] = 0.0;
}

struct ForwardCache {
  Tensor x0;       // [t, f, 1]
  Tensor h1;       // conv1 + bias (masked) [t1, f1, n]
  PoolResult pool; // pooled maps + argmax
  Tensor a2;       // conv2 + bias [t2, f2, N]
  Tensor logits;   // [K]
};

ForwardCache run_forward(const Model& model, const Tensor& input) {
  const ModelConfig& cfg = model.config;
  if (input.shape != std::vector<std::size_t>{cfg.t, cfg.f})
    throw DimError("forward: input must be [t, f]");
  ForwardCache cache;
  cache.x0 = Tensor({cfg.t, cfg.f, 1}, input.data);
  cache.h1 = conv2d_forward(cache.x0, model.param(kConv1W), cfg.conv1.s,
                            cfg.conv1.u);
  add_channel_bias(cache.h1, model.param(kConv1B));
  if (model.mask) scale_channels(cache.h1, model.mask->bits);
  cache.pool = maxpool_forward(cache.h1, cfg.pool_p, cfg.pool_q);
  cache.a2 = conv2d_forward(cache.pool.output, model.param(kConv2W),
                            cfg.conv2.s, cfg.conv2.u);
  add_channel_bias(cache.a2, model.param(kConv2B));
  Tensor flat({cache.a2.size()}, cache.a2.data);
  cache.logits =
      dense_forward(flat, model.param(kDenseW), model.param(kDenseB));
  return cache;
}

}  // namespace

Model build_model(const ModelConfig& config) {
  config.validate();
  Model model;
  model.config = config;
  const ConvSpec& c1 = config.conv1;
  const ConvSpec& c2 = config.conv2;
  model.param(kConv1W) = Tensor({c1.m, c1.r, c1.c, c1.n});
  model.param(kConv1B) = Tensor({c1.n});
  model.param(kConv2W) = Tensor({c2.m, c2.r, c2.c, c2.n});
  model.param(kConv2B) = Tensor({c2.n});
  model.param(kDenseW) = Tensor({config.dense_in(), config.num_classes});
  model.param(kDenseB) = Tensor({config.num_classes});

  Rng rng(config.seed);
  glorot_fill(model.param(kConv1W), c1.m * c1.r * c1.c, c1.m * c1.r * c1.n,
              rng);
  glorot_fill(model.param(kConv2W), c2.m * c2.r * c2.c, c2.m * c2.r * c2.n,
              rng);
  glorot_fill(model.param(kDenseW), config.dense_in(), config.num_classes,
              rng);
  return model;
}

GroupPartition conv2_channel_partition(const ModelConfig& config) {
  return channel_partition(
      {config.conv2.m, config.conv2.r, config.conv2.c, config.conv2.n});
}

GroupPartition conv1_filter_partition(const ModelConfig& config) {
  return filter_partition(
      {config.conv1.m, config.conv1.r, config.conv1.c, config.conv1.n});
}

Tensor forward(const Model& model, const Tensor& input) {
  return run_forward(model, input).logits;
}

Tensor forward_batch(const Model& model,
                     const std::vector<const Tensor*>& batch) {
  Tensor logits({batch.size(), model.config.num_classes});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Tensor one = forward(model, *batch[b]);
    for (std::size_t k = 0; k < one.size(); ++k)
      logits[b * one.size() + k] = one[k];
  }
  return logits;
}

BatchGrads loss_and_grads(const Model& model,
                          const std::vector<const Tensor*>& batch,
                          const std::vector<std::size_t>& labels) {
  if (batch.size() != labels.size())
    throw DimError("loss_and_grads: batch/label count mismatch");
  if (batch.empty()) throw DimError("loss_and_grads: empty batch");
  const ModelConfig& cfg = model.config;

  BatchGrads out;
  for (std::size_t i = 0; i < kNumParamTensors; ++i)
    out.grads[i] = Tensor(model.param(i).shape);

  for (std::size_t b = 0; b < batch.size(); ++b) {
    ForwardCache cache = run_forward(model, *batch[b]);
    XentResult xent = softmax_cross_entropy(cache.logits, labels[b]);
    out.loss += xent.loss;

    Tensor flat({cache.a2.size()}, cache.a2.data);
    DenseGrads dg =
        dense_backward(flat, model.param(kDenseW), xent.grad_logits);
    for (std::size_t i = 0; i < dg.grad_weight.size(); ++i)
      out.grads[kDenseW][i] += dg.grad_weight[i];
    for (std::size_t i = 0; i < dg.grad_bias.size(); ++i)
      out.grads[kDenseB][i] += dg.grad_bias[i];

    Tensor da2(cache.a2.shape, std::move(dg.grad_input.data));
    Tensor db2 = channel_bias_grad(da2);
    for (std::size_t i = 0; i < db2.size(); ++i) out.grads[kConv2B][i] += db2[i];
    ConvGrads cg2 = conv2d_backward(cache.pool.output, model.param(kConv2W),
                                    cfg.conv2.s, cfg.conv2.u, da2);
    for (std::size_t i = 0; i < cg2.grad_kernel.size(); ++i)
      out.grads[kConv2W][i] += cg2.grad_kernel[i];

    Tensor dh1 =
        maxpool_backward(cache.h1.shape, cache.pool.argmax, cg2.grad_input);
    if (model.mask) scale_channels(dh1, model.mask->bits);
    Tensor db1 = channel_bias_grad(dh1);
    for (std::size_t i = 0; i < db1.size(); ++i) out.grads[kConv1B][i] += db1[i];
    ConvGrads cg1 = conv2d_backward(cache.x0, model.param(kConv1W), cfg.conv1.s,
                                    cfg.conv1.u, dh1);
    for (std::size_t i = 0; i < cg1.grad_kernel.size(); ++i)
      out.grads[kConv1W][i] += cg1.grad_kernel[i];
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (auto& g : out.grads)
    for (double& v : g.data) v *= inv;
  return out;
}

void apply_mask(Model& model, const ChannelMask& mask) {
  if (mask.size() != model.config.conv2.c)
    throw DimError("apply_mask: mask length does not match channel count");
  bool any = false;
  for (auto b : mask.bits) any = any || (b != 0);
  if (!any) throw ConfigError("apply_mask: all channels masked");
  model.mask = mask;
  reapply_mask(model);
}

void reapply_mask(Model& model) {
  if (!model.mask) return;
  const auto& bits = model.mask->bits;
  const ConvSpec& c1 = model.config.conv1;
  const ConvSpec& c2 = model.config.conv2;
  Tensor& w1 = model.param(kConv1W);
  Tensor& b1 = model.param(kConv1B);
  Tensor& w2 = model.param(kConv2W);
  // conv1 kernel [m, r, 1, n]: filter g feeds channel g downstream.
  for (std::size_t i = 0; i < w1.size(); ++i)
    if (bits[i % c1.n] == 0) w1[i] = 0.0;
  for (std::size_t g = 0; g < c1.n; ++g)
    if (bits[g] == 0) b1[g] = 0.0;
  // conv2 kernel [m, r, C, N]: zero slice [:, :, g, :].
  for (std::size_t i = 0; i < w2.size(); ++i)
    if (bits[(i / c2.n) % c2.c] == 0) w2[i] = 0.0;
}

bool masked_coords_zero(const Model& model) {
  if (!model.mask) return true;
  const auto& bits = model.mask->bits;
  const ConvSpec& c1 = model.config.conv1;
  const ConvSpec& c2 = model.config.conv2;
  const Tensor& w1 = model.param(kConv1W);
  const Tensor& b1 = model.param(kConv1B);
  const Tensor& w2 = model.param(kConv2W);
  for (std::size_t i = 0; i < w1.size(); ++i)
    if (bits[i % c1.n] == 0 && w1[i] != 0.0) return false;
  for (std::size_t g = 0; g < c1.n; ++g)
    if (bits[g] == 0 && b1[g] != 0.0) return false;
  for (std::size_t i = 0; i < w2.size(); ++i)
    if (bits[(i / c2.n) % c2.c] == 0 && w2[i] != 0.0) return false;
  return true;
}

ChannelMask mask_from_weights(const Tensor& w, const GroupPartition& part,
                              double zero_tol) {
  return mask_from_groups(w, part, zero_tol);
}

void binarize_model(Model& model) {
  ChannelMask mask;
  if (model.mask)
    mask = *model.mask;
  else
    mask.bits.assign(model.config.conv2.c, 1);

  Tensor& w1 = model.param(kConv1W);
  Tensor& w2 = model.param(kConv2W);
  Tensor& wd = model.param(kDenseW);
  BinaryWeights b1 =
      binary_project_masked(w1, mask, conv1_filter_partition(model.config));
  BinaryWeights b2 =
      binary_project_masked(w2, mask, conv2_channel_partition(model.config));
  BinaryWeights bd = binary_project(wd);
  w1 = b1.reconstruct(w1.shape);
  w2 = b2.reconstruct(w2.shape);
  wd = bd.reconstruct(wd.shape);
}

}  // namespace sptrim
