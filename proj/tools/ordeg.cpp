// Command-line front end: dataset synthesis, training, evaluation,
// per-image prediction, and the guidance-rectifier demo. Exit codes:
// 0 ok, 2 usage, 3 io failure, 4 numeric failure, 5 corrupt artifact.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ordeg/cfpg.hpp"
#include "ordeg/dataset.hpp"
#include "ordeg/infer.hpp"
#include "ordeg/synthimg.hpp"
#include "ordeg/trainloop.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCorrupt = 5;

ordeg::TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ordeg::io_failure_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ordeg::out_of_range_error(std::string("config is not valid json: ") + e.what());
  }
  ordeg::TrainConfig cfg;
  if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("batch_per_type")) cfg.batch_per_type = j["batch_per_type"].get<int>();
  if (j.contains("weight_decay")) cfg.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("use_level")) cfg.use_level = j["use_level"].get<bool>();
  if (j.contains("use_scl")) cfg.use_scl = j["use_scl"].get<bool>();
  if (j.contains("top_k")) cfg.top_k = j["top_k"].get<int>();
  if (j.contains("gap")) cfg.gap = j["gap"].get<double>();
  if (j.contains("tau_scl")) cfg.tau_scl = j["tau_scl"].get<double>();
  if (j.contains("tau_w")) cfg.tau_w = j["tau_w"].get<double>();
  if (j.contains("d")) cfg.spec.d = j["d"].get<int>();
  if (j.contains("f")) cfg.spec.f = j["f"].get<double>();
  if (j.contains("hidden")) cfg.arch.hidden = j["hidden"].get<int>();
  cfg.arch.emb_dim = cfg.spec.d;
  cfg.validate();
  return cfg;
}

nlohmann::json prediction_to_json(const ordeg::LevelPrediction& pred) {
  nlohmann::json per;
  for (ordeg::DegradationType t : ordeg::kAllTypes) {
    const ordeg::TypePrediction& tp = pred.per_type[ordeg::type_index(t)];
    nlohmann::json e = {{"present", tp.present}, {"conf", tp.conf}};
    if (tp.present) {
      e["level_norm"] = tp.level_norm;
      e["level_raw"] = tp.level_raw;
    }
    per[ordeg::type_name(t)] = e;
  }
  return per;
}

int run(int argc, char** argv) {
  CLI::App app{"ordinal degradation representation toolkit"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "synthesize a labeled degradation dataset");
  std::string synth_input, synth_out;
  int synth_count = 0, synth_patch = 224, synth_levels = 21;
  double synth_mixture = 0.5;
  std::uint64_t synth_seed = 0;
  synth->add_option("--input", synth_input, "directory of clean .png images")->required();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_count, "number of records")->required();
  synth->add_option("--seed", synth_seed, "dataset seed")->required();
  synth->add_option("--mixture", synth_mixture, "fraction of mixed-degradation records (default 0.5)");
  synth->add_option("--patch", synth_patch, "patch size (default 224)");
  synth->add_option("--levels", synth_levels, "level grid size per type (default 21)");

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "train encoder and shift embeddings");
  std::string train_config, train_data, train_out, train_ablation, train_log;
  train_cmd->add_option("--config", train_config, "json training config")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--data", train_data, "training manifest")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
  train_cmd->add_option("--ablation", train_ablation, "loss configuration A|B|C|D")
      ->check(CLI::IsMember({"A", "B", "C", "D"}));
  train_cmd->add_option("--log", train_log, "per-epoch loss csv (default: <out>.losses.csv)");

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against a manifest");
  std::string eval_ckpt, eval_data, eval_report, eval_report_csv;
  ordeg::RegressionConfig eval_reg;
  bool eval_k_all = false;
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "evaluation manifest")->required();
  eval_cmd->add_option("--report", eval_report, "metrics report json path")->required();
  eval_cmd->add_option("--report-csv", eval_report_csv, "optional csv report path");
  eval_cmd->add_option("--top-k", eval_reg.k, "interpolation top-k (default 2)");
  eval_cmd->add_flag("--top-k-all", eval_k_all, "use every bin for interpolation");
  eval_cmd->add_option("--conf-threshold", eval_reg.conf_threshold, "presence threshold (default 0.5)");
  eval_cmd->add_option("--tau-w", eval_reg.tau_w, "weight softmax temperature (default 0.05)");

  // --- predict ---
  auto* predict_cmd = app.add_subcommand("predict", "predict degradations of one image");
  std::string pred_ckpt, pred_image;
  bool pred_json = false;
  ordeg::RegressionConfig pred_reg;
  predict_cmd->add_option("--ckpt", pred_ckpt, "checkpoint path")->required();
  predict_cmd->add_option("--image", pred_image, "png image path")->required();
  predict_cmd->add_flag("--json", pred_json, "machine-readable output on stdout");
  predict_cmd->add_option("--top-k", pred_reg.k, "interpolation top-k (default 2)");
  predict_cmd->add_option("--conf-threshold", pred_reg.conf_threshold, "presence threshold (default 0.5)");

  // --- cfpg-demo ---
  auto* demo = app.add_subcommand("cfpg-demo", "toy diffusion sampling with projection guidance");
  ordeg::CfpgParams demo_params;
  int demo_steps = 50;
  std::uint64_t demo_seed = 0;
  std::string demo_mode = "cfpg", demo_out;
  bool demo_compare = false;
  demo->add_option("--eta-par", demo_params.eta_par, "parallel scale (default 1.0)");
  demo->add_option("--eta-perp", demo_params.eta_perp, "orthogonal scale (default 0.6)");
  demo->add_option("--scale", demo_params.w, "guidance scale (default 5.5)");
  demo->add_option("--steps", demo_steps, "sampling steps (default 50)");
  demo->add_option("--seed", demo_seed, "sampling seed");
  demo->add_option("--mode", demo_mode, "cfpg | linear_cfg")->check(CLI::IsMember({"cfpg", "linear_cfg"}));
  demo->add_flag("--compare", demo_compare, "run both modes, print max per-step deviation");
  demo->add_option("--out", demo_out, "trajectory csv path");

  // --- gen-clean ---
  auto* gen = app.add_subcommand("gen-clean", "generate procedural clean images");
  std::string gen_out;
  int gen_count = 4, gen_size = 448;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--count", gen_count, "number of images (default 4)");
  gen->add_option("--size", gen_size, "image size (default 448)");
  gen->add_option("--seed", gen_seed, "generator seed");

  // --- dump-grid ---
  auto* dump = app.add_subcommand("dump-grid", "dump a checkpoint's bin grid geometry");
  std::string dump_ckpt, dump_type = "Blur", dump_prefix;
  dump->add_option("--ckpt", dump_ckpt, "checkpoint path")->required();
  dump->add_option("--type", dump_type, "degradation type")
      ->check(CLI::IsMember({"Blur", "Downsample", "Noisy", "JPEG"}));
  dump->add_option("--out", dump_prefix, "output path prefix (.json/.csv appended)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      app.exit(e);
      return kExitOk;
    }
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitUsage;
  }

  if (synth->parsed()) {
    ordeg::DatasetConfig cfg;
    cfg.count = synth_count;
    cfg.patch_size = synth_patch;
    cfg.mixture = synth_mixture;
    cfg.seed = synth_seed;
    cfg.levels_per_type = synth_levels;
    const ordeg::DatasetManifest m = ordeg::generate_dataset(synth_input, synth_out, cfg);
    std::cout << m.records.size() << "\n";
    return kExitOk;
  }

  if (train_cmd->parsed()) {
    ordeg::TrainConfig cfg = load_train_config(train_config);
    if (!train_ablation.empty()) cfg.apply_ablation(train_ablation[0]);
    const ordeg::DatasetManifest manifest = ordeg::load_manifest(train_data);
    std::vector<ordeg::EpochLog> log;
    const ordeg::Checkpoint ckpt = ordeg::train(cfg, manifest, &log);
    ordeg::save_checkpoint(ckpt, train_out);
    ordeg::save_loss_log(log, train_log.empty() ? train_out + ".losses.csv" : train_log);
    std::cerr << "trained " << cfg.epochs << " epochs on " << manifest.records.size() << " records\n";
    return kExitOk;
  }

  if (eval_cmd->parsed()) {
    const ordeg::Checkpoint ckpt = ordeg::load_checkpoint(eval_ckpt);
    if (eval_k_all) eval_reg.k = ordeg::num_bins(ckpt.gap);
    const ordeg::DatasetManifest manifest = ordeg::load_manifest(eval_data);
    const ordeg::MetricsReport rep = ordeg::evaluate(ckpt, manifest, eval_reg);
    std::ofstream f(eval_report, std::ios::binary);
    if (!f) throw ordeg::io_failure_error("cannot write report: " + eval_report);
    f << ordeg::report_to_json(rep).dump(2) << "\n";
    if (!eval_report_csv.empty()) {
      std::ofstream c(eval_report_csv, std::ios::binary);
      if (!c) throw ordeg::io_failure_error("cannot write report: " + eval_report_csv);
      c << ordeg::report_to_csv(rep);
    }
    std::cerr << "type_acc " << rep.type_acc_pct << "% mae_norm " << rep.mae_norm_macro << " srocc "
              << rep.srocc_macro << " pcc " << rep.pcc_macro << "\n";
    return kExitOk;
  }

  if (predict_cmd->parsed()) {
    const ordeg::Checkpoint ckpt = ordeg::load_checkpoint(pred_ckpt);
    const ordeg::Image img = ordeg::load_png(pred_image);
    const ordeg::LevelPrediction pred = ordeg::predict(ckpt, img, pred_reg);
    if (pred_json) {
      std::cout << prediction_to_json(pred).dump() << "\n";
    } else {
      for (ordeg::DegradationType t : ordeg::kAllTypes) {
        const ordeg::TypePrediction& tp = pred.per_type[ordeg::type_index(t)];
        std::printf("%-10s conf=%.3f %s", ordeg::type_name(t), tp.conf, tp.present ? "present" : "absent");
        if (tp.present) std::printf(" level=%.4g (norm %.3f)", tp.level_raw, tp.level_norm);
        std::printf("\n");
      }
    }
    return kExitOk;
  }

  if (demo->parsed()) {
    ordeg::ToyDiffusionSpec spec;
    spec.mu = {{{1.5, 0.6}, {-1.0, -0.4}, {2.0, 1.4}, {-1.6, -1.2}}};
    spec.steps = demo_steps;
    spec.schedule = ordeg::make_vp_schedule(demo_steps);
    spec.seed = demo_seed;
    const auto traj_cfpg = ordeg::sample(spec, demo_params, ordeg::GuidanceMode::Cfpg);
    const auto traj_lin = ordeg::sample(spec, demo_params, ordeg::GuidanceMode::LinearCfg);
    const auto& traj = demo_mode == "cfpg" ? traj_cfpg : traj_lin;
    if (!demo_out.empty()) {
      std::ofstream f(demo_out, std::ios::binary);
      if (!f) throw ordeg::io_failure_error("cannot write trajectory: " + demo_out);
      f << "step,x,y,mode\n";
      char line[128];
      for (std::size_t i = 0; i < traj.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%s\n", i, traj[i][0], traj[i][1], demo_mode.c_str());
        f << line;
      }
    }
    if (demo_compare) {
      double dev = 0.0;
      for (std::size_t i = 0; i < traj_cfpg.size(); ++i) {
        dev = std::max(dev, std::fabs(traj_cfpg[i][0] - traj_lin[i][0]));
        dev = std::max(dev, std::fabs(traj_cfpg[i][1] - traj_lin[i][1]));
      }
      std::printf("%.17g\n", dev);
    }
    return kExitOk;
  }

  if (gen->parsed()) {
    std::error_code ec;
    std::filesystem::create_directories(gen_out, ec);
    if (!std::filesystem::is_directory(gen_out)) {
      throw ordeg::io_failure_error("cannot create directory: " + gen_out);
    }
    for (int i = 0; i < gen_count; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "clean_%04d.png", i);
      ordeg::save_png((std::filesystem::path(gen_out) / name).string(),
                      ordeg::synthesize_clean_image(gen_size, gen_seed + i));
    }
    std::cout << gen_count << "\n";
    return kExitOk;
  }

  if (dump->parsed()) {
    const ordeg::Checkpoint ckpt = ordeg::load_checkpoint(dump_ckpt);
    const auto grids = ckpt.build_grids();
    const ordeg::BinGrid& grid = grids[ordeg::type_index(ordeg::type_from_name(dump_type))];
    std::ofstream j(dump_prefix + ".json", std::ios::binary);
    std::ofstream c(dump_prefix + ".csv", std::ios::binary);
    if (!j || !c) throw ordeg::io_failure_error("cannot write grid dump: " + dump_prefix);
    j << ordeg::grid_to_json(grid, ckpt.spec) << "\n";
    c << ordeg::centers_to_csv(grid);
    return kExitOk;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ordeg::non_finite_loss_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ordeg::invalid_checkpoint_error& e) {
    std::cerr << "corrupt artifact: " << e.what() << "\n";
    return kExitCorrupt;
  } catch (const ordeg::io_failure_error& e) {
    std::cerr << "io failure: " << e.what() << "\n";
    return kExitIo;
  } catch (const ordeg::empty_corpus_error& e) {
    std::cerr << "io failure: " << e.what() << "\n";
    return kExitIo;
  } catch (const ordeg::decode_error& e) {
    std::cerr << "corrupt input: " << e.what() << "\n";
    return kExitCorrupt;
  } catch (const ordeg::error& e) {
    std::cerr << "invalid request: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
