#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ordeg/dataset.hpp"
#include "ordeg/png.hpp"
#include "ordeg/synthimg.hpp"

using namespace ordeg;
namespace fs = std::filesystem;

namespace {

const char* kCli = ORDEG_CLI_PATH;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string run_cli_stdout(const std::string& args, int* exit_code = nullptr) {
  const std::string cmd = std::string(kCli) + " " + args + " 2>/dev/null";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  if (exit_code) *exit_code = WEXITSTATUS(status);
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("ordeg_cli_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_tiny_config(const std::string& path) {
  std::ofstream f(path);
  f << R"({"epochs": 3, "batch_per_type": 8, "d": 16, "hidden": 8, "gap": 25.0, "seed": 3})";
}

}  // namespace

TEST_CASE("help exits zero for every subcommand") {
  CHECK(run_cli("--help") == 0);
  for (const char* sub : {"synth", "train", "eval", "predict", "cfpg-demo", "gen-clean", "dump-grid"}) {
    CHECK(run_cli(std::string(sub) + " --help") == 0);
  }
}

TEST_CASE("bad arguments exit with the usage code") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("synth --count 1") == 2);                     // missing required flags
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("train --config /nonexistent.json --data x --out y") == 2);
}

TEST_CASE("cli pipeline: gen-clean, synth, train, eval, predict, dump-grid") {
  TempDir dir("pipeline");
  REQUIRE(run_cli("gen-clean --out " + dir.sub("clean") + " --count 2 --size 128 --seed 1") == 0);

  // synth twice with the same seed: identical trees
  const std::string synth_args =
      " --input " + dir.sub("clean") + " --count 10 --seed 4 --mixture 0.5 --patch 64 --levels 5";
  int code = 0;
  const std::string out1 = run_cli_stdout("synth --out " + dir.sub("d1") + synth_args, &code);
  REQUIRE(code == 0);
  CHECK(out1 == "10\n");
  REQUIRE(run_cli("synth --out " + dir.sub("d2") + synth_args) == 0);
  for (const auto& e : fs::directory_iterator(dir.sub("d1"))) {
    CHECK(slurp(e.path()) == slurp(fs::path(dir.sub("d2")) / e.path().filename()));
  }

  // mixture 0: all single-type
  REQUIRE(run_cli("synth --out " + dir.sub("single") + " --input " + dir.sub("clean") +
                  " --count 8 --seed 5 --mixture 0 --patch 64 --levels 5") == 0);
  const DatasetManifest single = load_manifest(dir.sub("single") + "/manifest.jsonl");
  for (const auto& rec : single.records) {
    int active = 0;
    for (DegradationType t : kAllTypes) active += rec.conf_gt(t) ? 1 : 0;
    CHECK(active == 1);
  }

  write_tiny_config(dir.sub("cfg.json"));
  REQUIRE(run_cli("train --config " + dir.sub("cfg.json") + " --data " + dir.sub("d1") +
                  "/manifest.jsonl --out " + dir.sub("ckpt.json")) == 0);
  CHECK(fs::exists(dir.sub("ckpt.json")));
  CHECK(fs::exists(dir.sub("ckpt.json") + ".losses.csv"));

  // ablation A maps to the conf-only configuration and still trains
  REQUIRE(run_cli("train --config " + dir.sub("cfg.json") + " --data " + dir.sub("d1") +
                  "/manifest.jsonl --out " + dir.sub("ckpt_a.json") + " --ablation A") == 0);

  REQUIRE(run_cli("eval --ckpt " + dir.sub("ckpt.json") + " --data " + dir.sub("d1") +
                  "/manifest.jsonl --report " + dir.sub("report.json") + " --report-csv " +
                  dir.sub("report.csv")) == 0);
  {
    std::ifstream f(dir.sub("report.json"));
    nlohmann::json rep;
    f >> rep;
    CHECK(rep.contains("type_acc_pct"));
    CHECK(rep.contains("mae_norm_macro"));
    CHECK(rep.contains("srocc_macro"));
    CHECK(rep.contains("pcc_macro"));
    CHECK(rep.at("per_type").size() == 4);
    CHECK(rep.at("record_count").get<int>() == 10);
  }
  CHECK(fs::exists(dir.sub("report.csv")));

  // predict with --json emits exactly one json object on stdout
  const DatasetManifest m = load_manifest(dir.sub("d1") + "/manifest.jsonl");
  const std::string image = resolve_path(m, m.records[0].lq_path);
  const std::string pred_out = run_cli_stdout(
      "predict --ckpt " + dir.sub("ckpt.json") + " --image " + image + " --json", &code);
  REQUIRE(code == 0);
  const nlohmann::json pred = nlohmann::json::parse(pred_out);
  for (DegradationType t : kAllTypes) {
    REQUIRE(pred.contains(type_name(t)));
    CHECK(pred.at(type_name(t)).contains("present"));
    CHECK(pred.at(type_name(t)).contains("conf"));
  }

  REQUIRE(run_cli("dump-grid --ckpt " + dir.sub("ckpt.json") + " --type Blur --out " + dir.sub("grid")) == 0);
  CHECK(fs::exists(dir.sub("grid") + ".json"));
  CHECK(fs::exists(dir.sub("grid") + ".csv"));

  // corrupt checkpoint: artifact exit code
  {
    std::ofstream f(dir.sub("broken.json"));
    f << "{\"format_version\": 1}";
  }
  CHECK(run_cli("predict --ckpt " + dir.sub("broken.json") + " --image " + image + " --json") == 5);

  // missing manifest: io exit code
  CHECK(run_cli("eval --ckpt " + dir.sub("ckpt.json") + " --data " + dir.sub("missing.jsonl") +
                " --report " + dir.sub("r.json")) == 3);
}

TEST_CASE("cfpg demo writes trajectories and reports mode agreement") {
  TempDir dir("demo");
  int code = 0;
  const std::string out = run_cli_stdout(
      "cfpg-demo --eta-par 0.5 --eta-perp 0.5 --scale 5.5 --steps 30 --seed 9 --mode cfpg --compare --out " +
          dir.sub("traj.csv"),
      &code);
  REQUIRE(code == 0);
  const double dev = std::stod(out);
  CHECK(dev < 1e-10);

  std::ifstream f(dir.sub("traj.csv"));
  std::string header;
  std::getline(f, header);
  CHECK(header == "step,x,y,mode");
  int lines = 0;
  std::string line;
  while (std::getline(f, line)) ++lines;
  CHECK(lines == 31);  // steps + initial state

  // unequal etas: the two modes genuinely differ
  const std::string out2 = run_cli_stdout(
      "cfpg-demo --eta-par 1.0 --eta-perp 0.2 --scale 5.5 --steps 30 --seed 9 --mode cfpg --compare", &code);
  REQUIRE(code == 0);
  CHECK(std::stod(out2) > 1e-6);
}
