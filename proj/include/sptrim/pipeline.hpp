#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sptrim/checkpoint.hpp"
#include "sptrim/data.hpp"
#include "sptrim/model.hpp"

namespace sptrim {

enum class Method { gl, rgsm, gsbc, bc, blended_bc, sgd };

Method parse_method(const std::string& name);
const char* method_name(Method m);

struct StageConfig {
  Method method = Method::rgsm;
  double lambda = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  double rho = 0.0;
  double eta = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t lr_drop_epoch = 0;  // 0 = no drop
  std::uint64_t seed = 1;

  // Checks the method/parameter convention: gl uses mu>0, lambda=beta=0;
  // rgsm uses lambda>0, beta>0, mu=0; gsbc uses lambda>0, beta=0, mu=0;
  // sgd/bc/blended_bc use lambda=beta=mu=0. Throws ConfigError.
  void validate(int stage) const;
};

// Learning rate at 1-based epoch index: eta, divided by 10 from
// lr_drop_epoch on.
double lr_at_epoch(const StageConfig& config, std::size_t epoch);

struct EpochRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;      // percent
  double channel_sparsity = 0.0;  // percent
  double lagrangian = 0.0;
  double r_prox = 0.0;
  double r_grad = 0.0;
};

struct StageSummary {
  std::string model;
  double beta = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double accuracy = 0.0;      // final-epoch validation accuracy, percent
  double ch_sparsity = 0.0;   // percent
};

struct StageReport {
  std::vector<EpochRow> rows;
  StageSummary summary;
  std::vector<std::uint8_t> mask_bits;  // 0/1 per channel (bar data)
};

struct StageResult {
  Checkpoint checkpoint;
  StageReport report;
};

// Stage I: cold-start channel pruning with gl, rgsm or gsbc. The final mask
// comes from u's zero groups (rgsm/gsbc) or from w's near-zero groups (gl,
// tolerance 1e-12).
StageResult run_stage1(const StageConfig& config, const ModelConfig& model_config,
                       const Dataset& dataset);

// Stage II: plain SGD on the unmasked weights at frozen sparsity.
StageResult run_stage2(const Checkpoint& stage1, const StageConfig& config,
                       const Dataset& dataset);

// Stage III: bc or blended_bc training warm-started from the Stage II
// floats; the result has scale x sign weights outside the mask.
StageResult run_stage3(const Checkpoint& stage2, const StageConfig& config,
                       const Dataset& dataset);

// Fresh random model wrapped in a Stage-I style checkpoint with an all-ones
// mask; running Stage II on it is ordinary training (the unpruned baseline).
Checkpoint cold_checkpoint(const ModelConfig& model_config, std::uint64_t seed);

// Top-1 accuracy (percent) over the validation split.
double evaluate(const Model& model, const Dataset& dataset);
double evaluate(const Checkpoint& ckpt, const Dataset& dataset);

// Writes <prefix>report.csv, <prefix>summary.json and <prefix>mask.json
// under out_dir. Byte-identical for identical reports.
void emit_report(const StageReport& report, const std::string& out_dir,
                 const std::string& prefix = "");

}  // namespace sptrim
