// Command-line entry point: synthetic data generation, the three training
// stages (separately or chained), evaluation and report emission.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sptrim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sptrim;

namespace {

struct TrainFlags {
  std::string data_path;
  std::string out_dir = "out";
  std::string method = "rgsm";
  StageConfig cfg;
};

void add_train_flags(CLI::App* cmd, TrainFlags& tf, bool with_method) {
  cmd->add_option("--data", tf.data_path, "feature file")->required();
  cmd->add_option("--out", tf.out_dir, "output directory");
  if (with_method) cmd->add_option("--method", tf.method, "training method");
  cmd->add_option("--lambda", tf.cfg.lambda, "prox threshold");
  cmd->add_option("--beta", tf.cfg.beta, "splitting coupling");
  cmd->add_option("--mu", tf.cfg.mu, "GL penalty weight");
  cmd->add_option("--rho", tf.cfg.rho, "BinaryConnect blending");
  cmd->add_option("--lr", tf.cfg.eta, "learning rate");
  cmd->add_option("--lr-drop-epoch", tf.cfg.lr_drop_epoch,
                  "epoch at which the learning rate drops by 10x (0 = never)");
  cmd->add_option("--epochs", tf.cfg.epochs, "training epochs");
  cmd->add_option("--batch-size", tf.cfg.batch_size, "minibatch size");
  cmd->add_option("--seed", tf.cfg.seed, "RNG seed");
  cmd->set_config("--config", "", "key-value config file (flags override)");
}

void print_report(const StageReport& report) {
  for (const EpochRow& r : report.rows)
    std::printf("epoch %zu  loss %.4f  val_acc %.2f%%  sparsity %.1f%%\n",
                r.epoch, r.train_loss, r.val_accuracy, r.channel_sparsity);
  std::printf("final: %s  accuracy %.2f%%  ch. sparsity %.1f%%\n",
              report.summary.model.c_str(), report.summary.accuracy,
              report.summary.ch_sparsity);
}

ModelConfig model_for(const Dataset& data, std::uint64_t seed) {
  return ModelConfig::toy(data.t, data.f, data.num_classes, seed);
}

int error_line(const char* kind, const std::exception& e) {
  nlohmann::json err{{"error", kind}, {"message", e.what()}};
  std::cerr << err.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured-sparsity training toolkit"};
  app.require_subcommand(1);

  // gen-data
  struct {
    std::string out = "features.bin";
    std::size_t classes = 4, per_class = 500, t = 32, f = 16;
    double noise_sigma = 0.5;
    std::uint64_t seed = 1;
  } gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate synthetic features");
  gen_cmd->add_option("--out", gen.out, "output feature file");
  gen_cmd->add_option("--classes", gen.classes, "number of classes");
  gen_cmd->add_option("--per-class", gen.per_class, "examples per class");
  gen_cmd->add_option("--time-dim", gen.t, "time dimension");
  gen_cmd->add_option("--freq-dim", gen.f, "frequency dimension");
  gen_cmd->add_option("--noise-sigma", gen.noise_sigma, "noise std");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->set_config("--config", "", "key-value config file (flags override)");

  // stage commands
  TrainFlags s1;
  s1.cfg.lambda = 0.9;
  s1.cfg.beta = 1.0;
  s1.cfg.eta = 0.02;
  s1.cfg.epochs = 30;
  CLI::App* s1_cmd = app.add_subcommand("stage1", "channel pruning from cold start");
  add_train_flags(s1_cmd, s1, true);

  TrainFlags s2;
  s2.method = "sgd";
  s2.cfg.method = Method::sgd;
  s2.cfg.eta = 0.02;
  s2.cfg.epochs = 12;
  std::string s2_ckpt;
  CLI::App* s2_cmd = app.add_subcommand("stage2", "float retraining under the frozen mask");
  add_train_flags(s2_cmd, s2, false);
  s2_cmd->add_option("--checkpoint", s2_ckpt, "stage 1 checkpoint")->required();

  TrainFlags s3;
  s3.method = "blended_bc";
  s3.cfg.rho = 1e-5;
  s3.cfg.eta = 0.02;
  s3.cfg.epochs = 12;
  std::string s3_ckpt;
  CLI::App* s3_cmd = app.add_subcommand("stage3", "weight binarization with warm start");
  add_train_flags(s3_cmd, s3, true);
  s3_cmd->add_option("--checkpoint", s3_ckpt, "stage 2 checkpoint")->required();

  // pipeline
  TrainFlags pl;
  pl.cfg.lambda = 0.9;
  pl.cfg.beta = 1.0;
  pl.cfg.eta = 0.02;
  pl.cfg.epochs = 30;
  struct {
    std::size_t stage2_epochs = 12, stage3_epochs = 12;
    double rho = 1e-5;
  } pls;
  CLI::App* pl_cmd = app.add_subcommand("pipeline", "run all three stages");
  add_train_flags(pl_cmd, pl, true);
  pl_cmd->add_option("--stage2-epochs", pls.stage2_epochs, "stage 2 epochs");
  pl_cmd->add_option("--stage3-epochs", pls.stage3_epochs, "stage 3 epochs");

  // eval / report
  std::string ev_ckpt, ev_data, rp_out = "out";
  CLI::App* ev_cmd = app.add_subcommand("eval", "validation accuracy of a checkpoint");
  ev_cmd->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev_cmd->add_option("--data", ev_data, "feature file")->required();
  CLI::App* rp_cmd = app.add_subcommand("report", "emit summary and mask for a checkpoint");
  rp_cmd->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  rp_cmd->add_option("--data", ev_data, "feature file")->required();
  rp_cmd->add_option("--out", rp_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      Dataset ds = generate_synthetic(gen.classes, gen.per_class, gen.t, gen.f,
                                      gen.noise_sigma, gen.seed);
      save_features(ds, gen.out);
      std::printf("wrote %zu examples to %s\n", ds.features.size(),
                  gen.out.c_str());
    } else if (s1_cmd->parsed()) {
      s1.cfg.method = parse_method(s1.method);
      Dataset ds = load_features(s1.data_path);
      StageResult res = run_stage1(s1.cfg, model_for(ds, s1.cfg.seed), ds);
      fs::create_directories(s1.out_dir);
      save_checkpoint((fs::path(s1.out_dir) / "stage1.ckpt").string(),
                      res.checkpoint);
      emit_report(res.report, s1.out_dir);
      print_report(res.report);
    } else if (s2_cmd->parsed()) {
      Dataset ds = load_features(s2.data_path);
      Checkpoint prev = load_checkpoint(s2_ckpt);
      StageResult res = run_stage2(prev, s2.cfg, ds);
      fs::create_directories(s2.out_dir);
      save_checkpoint((fs::path(s2.out_dir) / "stage2.ckpt").string(),
                      res.checkpoint);
      emit_report(res.report, s2.out_dir);
      print_report(res.report);
    } else if (s3_cmd->parsed()) {
      s3.cfg.method = parse_method(s3.method);
      Dataset ds = load_features(s3.data_path);
      Checkpoint prev = load_checkpoint(s3_ckpt);
      StageResult res = run_stage3(prev, s3.cfg, ds);
      fs::create_directories(s3.out_dir);
      save_checkpoint((fs::path(s3.out_dir) / "stage3.ckpt").string(),
                      res.checkpoint);
      emit_report(res.report, s3.out_dir);
      print_report(res.report);
    } else if (pl_cmd->parsed()) {
      pl.cfg.method = parse_method(pl.method);
      Dataset ds = load_features(pl.data_path);
      fs::create_directories(pl.out_dir);

      StageResult r1 = run_stage1(pl.cfg, model_for(ds, pl.cfg.seed), ds);
      save_checkpoint((fs::path(pl.out_dir) / "stage1.ckpt").string(),
                      r1.checkpoint);
      emit_report(r1.report, pl.out_dir, "stage1_");
      print_report(r1.report);

      StageConfig c2;
      c2.method = Method::sgd;
      c2.eta = pl.cfg.eta;
      c2.epochs = pls.stage2_epochs;
      c2.batch_size = pl.cfg.batch_size;
      c2.seed = pl.cfg.seed + 1;
      StageResult r2 = run_stage2(r1.checkpoint, c2, ds);
      save_checkpoint((fs::path(pl.out_dir) / "stage2.ckpt").string(),
                      r2.checkpoint);
      emit_report(r2.report, pl.out_dir, "stage2_");
      print_report(r2.report);

      StageConfig c3;
      c3.method = Method::blended_bc;
      c3.rho = pls.rho;
      c3.eta = pl.cfg.eta;
      c3.epochs = pls.stage3_epochs;
      c3.batch_size = pl.cfg.batch_size;
      c3.seed = pl.cfg.seed + 2;
      StageResult r3 = run_stage3(r2.checkpoint, c3, ds);
      save_checkpoint((fs::path(pl.out_dir) / "stage3.ckpt").string(),
                      r3.checkpoint);
      emit_report(r3.report, pl.out_dir, "stage3_");
      print_report(r3.report);

      // Fig.-3-style channel bar data for the whole run.
      emit_report(r3.report, pl.out_dir, "");
    } else if (ev_cmd->parsed()) {
      Dataset ds = load_features(ev_data);
      Checkpoint ckpt = load_checkpoint(ev_ckpt);
      nlohmann::json out{{"accuracy", evaluate(ckpt, ds)},
                         {"stage", ckpt.stage}};
      std::cout << out.dump() << '\n';
    } else if (rp_cmd->parsed()) {
      Dataset ds = load_features(ev_data);
      Checkpoint ckpt = load_checkpoint(ev_ckpt);
      StageReport report;
      report.mask_bits = ckpt.mask_bits;
      report.summary.model = "checkpoint stage " + ckpt.stage;
      report.summary.accuracy = evaluate(ckpt, ds);
      report.summary.ch_sparsity =
          round1(ChannelMask{ckpt.mask_bits}.sparsity_percent());
      emit_report(report, rp_out);
      std::printf("accuracy %.2f%%  ch. sparsity %.1f%%\n",
                  report.summary.accuracy, report.summary.ch_sparsity);
    }
  } catch (const ConfigError& e) {
    return error_line("config", e);
  } catch (const DimError& e) {
    return error_line("dim", e);
  } catch (const BadMagicError& e) {
    return error_line("bad_magic", e);
  } catch (const VersionError& e) {
    return error_line("version", e);
  } catch (const TruncatedError& e) {
    return error_line("truncated", e);
  } catch (const TensorCountError& e) {
    return error_line("tensor_count", e);
  } catch (const LabelRangeError& e) {
    return error_line("label_range", e);
  } catch (const IoError& e) {
    return error_line("io", e);
  } catch (const std::exception& e) {
    return error_line("internal", e);
  }
  return 0;
}
