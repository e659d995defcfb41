#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ordeg/dataset.hpp"
#include "ordeg/infer.hpp"
#include "ordeg/synthimg.hpp"
#include "ordeg/trainloop.hpp"

using namespace ordeg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("ordeg_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

void write_clean_corpus(const std::string& dir, int count, int size, std::uint64_t seed) {
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%02d.png", i);
    save_png((fs::path(dir) / name).string(), synthesize_clean_image(size, seed + i));
  }
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

DatasetConfig small_config(int count, double mixture, std::uint64_t seed) {
  DatasetConfig cfg;
  cfg.patch_size = 64;
  cfg.count = count;
  cfg.mixture = mixture;
  cfg.seed = seed;
  cfg.levels_per_type = 5;
  return cfg;
}

}  // namespace

TEST_CASE("count zero produces an empty but valid manifest") {
  TempDir clean("clean_empty"), out("out_empty");
  write_clean_corpus(clean.str(), 1, 96, 1);
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), small_config(0, 0.5, 1));
  CHECK(m.records.empty());
  const DatasetManifest loaded = load_manifest((fs::path(out.str()) / "manifest.jsonl").string());
  CHECK(loaded.records.empty());
  CHECK(loaded.format_version == 1);
}

TEST_CASE("dataset generation is reproducible byte for byte") {
  TempDir clean("clean_repro"), out1("out_repro1"), out2("out_repro2");
  write_clean_corpus(clean.str(), 2, 96, 2);
  generate_dataset(clean.str(), out1.str(), small_config(6, 0.5, 99));
  generate_dataset(clean.str(), out2.str(), small_config(6, 0.5, 99));
  for (const auto& e : fs::directory_iterator(out1.str())) {
    const fs::path other = fs::path(out2.str()) / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(e.path()) == slurp(other));
  }
}

TEST_CASE("mixture zero yields only single-type records") {
  TempDir clean("clean_single"), out("out_single");
  write_clean_corpus(clean.str(), 1, 96, 3);
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), small_config(12, 0.0, 7));
  REQUIRE(m.records.size() == 12);
  for (const ManifestRecord& rec : m.records) {
    int active = 0;
    for (DegradationType t : kAllTypes) active += rec.conf_gt(t) ? 1 : 0;
    CHECK(active == 1);
  }
}

TEST_CASE("manifest records stay consistent through save and load") {
  TempDir clean("clean_roundtrip"), out("out_roundtrip");
  write_clean_corpus(clean.str(), 1, 96, 4);
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), small_config(5, 1.0, 11));
  const DatasetManifest loaded = load_manifest((fs::path(out.str()) / "manifest.jsonl").string());
  REQUIRE(loaded.records.size() == m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    CHECK(loaded.records[i].lq_path == m.records[i].lq_path);
    CHECK(loaded.records[i].recipe.seed == m.records[i].recipe.seed);
    for (DegradationType t : kAllTypes) {
      CHECK(loaded.records[i].conf_gt(t) == m.records[i].conf_gt(t));
      if (m.records[i].conf_gt(t)) {
        CHECK(loaded.records[i].level_gt(t) == m.records[i].level_gt(t));
      }
    }
    // lq files decode and fit the configured patch size
    const Image lq = load_png(resolve_path(loaded, loaded.records[i].lq_path));
    CHECK(lq.width == 64);
    CHECK(lq.height == 64);
  }
}

TEST_CASE("inconsistent manifest lines are rejected") {
  TempDir out("out_bad");
  const std::string path = (fs::path(out.str()) / "manifest.jsonl").string();
  std::ofstream f(path);
  f << R"({"format_version":1})" << "\n";
  f << R"({"lq_path":"a.png","gt_path":"b.png","recipe":{"seed":1,"entries":{"Blur":2.0}},)"
    << R"("conf_gt":{"Blur":1,"Downsample":1,"Noisy":0,"JPEG":0},"level_gt":{"Blur":2.0}})" << "\n";
  f.close();
  CHECK_THROWS_AS(load_manifest(path), io_failure_error);
}

TEST_CASE("empty corpus and missing directories raise") {
  TempDir clean("clean_none"), out("out_none");
  CHECK_THROWS_AS(generate_dataset(clean.str(), out.str(), small_config(3, 0.5, 1)), empty_corpus_error);
  CHECK_THROWS_AS(generate_dataset("/nonexistent_dir_ordeg", out.str(), small_config(3, 0.5, 1)),
                  empty_corpus_error);
}

TEST_CASE("explicit level grids are honored") {
  TempDir clean("clean_grid"), out("out_grid");
  write_clean_corpus(clean.str(), 1, 96, 5);
  DatasetConfig cfg = small_config(16, 0.0, 13);
  cfg.level_grids[type_index(DegradationType::Blur)] = {1.25};
  cfg.level_grids[type_index(DegradationType::Downsample)] = {3.0};
  cfg.level_grids[type_index(DegradationType::Noisy)] = {25.0};
  cfg.level_grids[type_index(DegradationType::JPEG)] = {44.0};
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), cfg);
  for (const ManifestRecord& rec : m.records) {
    for (DegradationType t : kAllTypes) {
      if (rec.conf_gt(t)) {
        CHECK(rec.level_gt(t) == cfg.level_grids[type_index(t)][0]);
      }
    }
  }
}

TEST_CASE("training is reproducible and epochs zero returns the init") {
  TempDir clean("clean_train"), out("out_train");
  write_clean_corpus(clean.str(), 2, 96, 6);
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), small_config(10, 0.5, 21));

  TrainConfig cfg;
  cfg.spec = OrdinalEncoderSpec{16, 100.0};
  cfg.arch = EncoderArch{kFeatureDim, 8, 16};
  cfg.gap = 25.0;
  cfg.batch_per_type = 4;
  cfg.seed = 5;

  cfg.epochs = 0;
  const Checkpoint init = train(cfg, m);
  const EncoderParams fresh = init_params(cfg.seed, cfg.arch);
  CHECK(init.params.l1.w.a == fresh.l1.w.a);
  CHECK(init.params.heads[2].w.a == fresh.heads[2].w.a);
  for (const auto& per_type : init.shifts.shifts) {
    for (const RealVector& s : per_type) {
      for (double v : s) CHECK(v == 0.0);
    }
  }

  cfg.epochs = 2;
  std::vector<EpochLog> log1, log2;
  const Checkpoint a = train(cfg, m, &log1);
  const Checkpoint b = train(cfg, m, &log2);
  CHECK(a.params.l1.w.a == b.params.l1.w.a);
  CHECK(a.params.heads[0].w.a == b.params.heads[0].w.a);
  CHECK(a.shifts.shifts == b.shifts.shifts);
  REQUIRE(log1.size() == 2);
  CHECK(log1[0].mean.total == log2[0].mean.total);
  // training moved the parameters
  CHECK(a.params.l1.w.a != init.params.l1.w.a);

  CHECK_THROWS_AS(train(cfg, DatasetManifest{}), empty_dataset_error);
}

TEST_CASE("evaluate on an oracle-like checkpoint flags every metric") {
  // Degenerate sanity check: a manifest evaluated against itself through a
  // freshly initialized model yields finite, schema-complete metrics.
  TempDir clean("clean_eval"), out("out_eval");
  write_clean_corpus(clean.str(), 1, 96, 7);
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), small_config(8, 0.5, 31));

  TrainConfig cfg;
  cfg.spec = OrdinalEncoderSpec{16, 100.0};
  cfg.arch = EncoderArch{kFeatureDim, 8, 16};
  cfg.gap = 25.0;
  cfg.epochs = 0;
  const Checkpoint ckpt = train(cfg, m);

  RegressionConfig reg;
  const MetricsReport rep = evaluate(ckpt, m, reg);
  CHECK(rep.record_count == 8);
  CHECK(rep.type_acc_pct >= 0.0);
  CHECK(rep.type_acc_pct <= 100.0);
  CHECK(std::isfinite(rep.mae_norm_macro));
  CHECK(std::isfinite(rep.mae_raw_macro));
  CHECK(rep.srocc_macro >= -1.0);
  CHECK(rep.srocc_macro <= 1.0);
  const nlohmann::json j = report_to_json(rep);
  CHECK(j.contains("type_acc_pct"));
  CHECK(j.at("per_type").size() == 4);

  CHECK_THROWS_AS(evaluate(ckpt, DatasetManifest{}, reg), empty_dataset_error);
}

TEST_CASE("level predictions stay inside the level range") {
  TempDir clean("clean_range"), out("out_range");
  write_clean_corpus(clean.str(), 1, 96, 8);
  const DatasetManifest m = generate_dataset(clean.str(), out.str(), small_config(4, 0.5, 41));

  TrainConfig cfg;
  cfg.spec = OrdinalEncoderSpec{16, 100.0};
  cfg.arch = EncoderArch{kFeatureDim, 8, 16};
  cfg.gap = 25.0;
  cfg.epochs = 1;
  cfg.batch_per_type = 4;
  const Checkpoint ckpt = train(cfg, m);

  RegressionConfig reg;
  reg.conf_threshold = 0.01;  // force presence so levels are populated
  for (const ManifestRecord& rec : m.records) {
    const Image lq = load_png(resolve_path(m, rec.lq_path));
    const LevelPrediction pred = predict(ckpt, lq, reg);
    for (DegradationType t : kAllTypes) {
      const TypePrediction& tp = pred.per_type[type_index(t)];
      REQUIRE(tp.present);
      const LevelRange r = level_range(t);
      CHECK(tp.level_norm >= 0.0);
      CHECK(tp.level_norm <= 1.0);
      CHECK(tp.level_raw >= r.min - 1e-9);
      CHECK(tp.level_raw <= r.max + 1e-9);
    }
  }
}

TEST_CASE("top-k equal to the bin count degenerates toward the grid mean") {
  const OrdinalEncoderSpec spec{16, 100.0};
  const auto anchors = make_type_anchors(spec, 12);
  const auto shifts = ShiftTable::zeros(spec.d, num_bins(25.0));
  const BinGrid grid = build_bin_grid(DegradationType::Blur, spec, anchors[0], shifts.shifts[0], 25.0);

  RealVector emb(16);
  Rng rng(14);
  for (double& v : emb) v = rng.next_gaussian();

  // large temperature flattens the weights toward uniform
  const LevelRegression reg = regress_level(emb, grid, static_cast<int>(grid.bins.size()), 1e6);
  double mean = 0.0;
  for (const Bin& b : grid.bins) mean += b.level_norm;
  mean /= static_cast<double>(grid.bins.size());
  CHECK(reg.level_norm == Catch::Approx(mean).epsilon(1e-6));

  // scale invariance of the prediction in the query embedding
  RealVector scaled(emb);
  for (double& v : scaled) v *= 17.0;
  const LevelRegression reg1 = regress_level(emb, grid, 2, 0.05);
  const LevelRegression reg2 = regress_level(scaled, grid, 2, 0.05);
  CHECK(reg1.level_norm == Catch::Approx(reg2.level_norm).epsilon(1e-12));

  // k = 1 snaps to the nearest bin level
  const LevelRegression reg3 = regress_level(emb, grid, 1, 0.05);
  CHECK(reg3.level_norm == grid.bins[reg3.top[0]].level_norm);
}
