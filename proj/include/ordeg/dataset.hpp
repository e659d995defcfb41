#pragma once

// Dataset synthesis and the JSONL manifest format: a header line carrying
// the format version, then one record object per line with lq/gt paths,
// the recipe, and the derived confidence/level ground truth.

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ordeg/degrade.hpp"
#include "ordeg/errors.hpp"
#include "ordeg/png.hpp"
#include "ordeg/rng.hpp"

namespace ordeg {

inline nlohmann::json record_to_json(const ManifestRecord& rec) {
  nlohmann::json entries = nlohmann::json::object();
  nlohmann::json conf = nlohmann::json::object();
  nlohmann::json level = nlohmann::json::object();
  for (DegradationType t : kAllTypes) {
    conf[type_name(t)] = rec.recipe.has(t) ? 1 : 0;
    if (rec.recipe.has(t)) {
      entries[type_name(t)] = rec.recipe.level(t);
      level[type_name(t)] = rec.recipe.level(t);
    }
  }
  return nlohmann::json{{"lq_path", rec.lq_path},
                        {"gt_path", rec.gt_path},
                        {"recipe", {{"seed", rec.recipe.seed}, {"entries", entries}}},
                        {"conf_gt", conf},
                        {"level_gt", level}};
}

inline ManifestRecord record_from_json(const nlohmann::json& j) {
  ManifestRecord rec;
  rec.lq_path = j.at("lq_path").get<std::string>();
  rec.gt_path = j.at("gt_path").get<std::string>();
  rec.recipe.seed = j.at("recipe").at("seed").get<std::uint64_t>();
  for (const auto& [name, value] : j.at("recipe").at("entries").items()) {
    rec.recipe.levels[type_index(type_from_name(name))] = value.get<double>();
  }
  rec.recipe.validate();
  // conf_gt / level_gt must agree with the recipe
  for (DegradationType t : kAllTypes) {
    const int conf = j.at("conf_gt").at(type_name(t)).get<int>();
    const bool has_level = j.at("level_gt").contains(type_name(t));
    if ((conf == 1) != rec.recipe.has(t) || has_level != rec.recipe.has(t)) {
      throw io_failure_error("manifest record inconsistent with its recipe");
    }
    if (has_level) {
      const double lv = j.at("level_gt").at(type_name(t)).get<double>();
      if (lv != rec.recipe.level(t)) throw io_failure_error("level_gt disagrees with recipe");
    }
  }
  return rec;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_failure_error("cannot write manifest: " + path);
  f << nlohmann::json{{"format_version", m.format_version}}.dump() << "\n";
  for (const ManifestRecord& rec : m.records) {
    f << record_to_json(rec).dump() << "\n";
  }
  if (!f) throw io_failure_error("short manifest write: " + path);
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_failure_error("cannot open manifest: " + path);
  DatasetManifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  std::string line;
  if (!std::getline(f, line)) throw io_failure_error("manifest missing header line");
  const nlohmann::json header = nlohmann::json::parse(line);
  m.format_version = header.at("format_version").get<int>();
  if (m.format_version != 1) throw io_failure_error("unsupported manifest format_version");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    m.records.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return m;
}

inline std::string resolve_path(const DatasetManifest& m, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute() || m.base_dir.empty()) return rel;
  return (std::filesystem::path(m.base_dir) / p).string();
}

// Synthesizes `count` labeled patches from the clean corpus. Every record
// is derived from a stream keyed by (seed, record index), so the output
// is reproducible and independent of generation order.
inline DatasetManifest generate_dataset(const std::string& clean_dir, const std::string& out_dir,
                                        const DatasetConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.patch_size < 64) throw out_of_range_error("patch size must be >= 64");
  if (cfg.mixture < 0.0 || cfg.mixture > 1.0) throw out_of_range_error("mixture ratio in [0, 1]");

  std::vector<std::string> sources;
  if (!fs::is_directory(clean_dir)) throw empty_corpus_error("not a directory: " + clean_dir);
  for (const auto& e : fs::directory_iterator(clean_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") sources.push_back(e.path().string());
  }
  std::sort(sources.begin(), sources.end());
  if (sources.empty() && cfg.count > 0) throw empty_corpus_error("no .png files in " + clean_dir);

  std::vector<Image> images;
  for (const std::string& s : sources) {
    Image img = load_png(s);
    if (img.width >= cfg.patch_size && img.height >= cfg.patch_size) images.push_back(std::move(img));
  }
  if (images.empty() && cfg.count > 0) throw empty_corpus_error("no clean image fits the patch size");

  std::array<std::vector<double>, 4> grids;
  for (DegradationType t : kAllTypes) {
    const int ti = type_index(t);
    grids[ti] = cfg.level_grids[ti].empty() ? default_level_grid(t, cfg.levels_per_type) : cfg.level_grids[ti];
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw io_failure_error("cannot create output dir: " + out_dir);

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.records.reserve(cfg.count);

  for (int i = 0; i < cfg.count; ++i) {
    Rng rng = Rng::keyed(cfg.seed, static_cast<std::uint64_t>(i));
    const Image& src = images[rng.next_below(images.size())];
    const int px = static_cast<int>(rng.next_below(src.width - cfg.patch_size + 1));
    const int py = static_cast<int>(rng.next_below(src.height - cfg.patch_size + 1));

    Image patch(cfg.patch_size, cfg.patch_size);
    for (int y = 0; y < cfg.patch_size; ++y) {
      for (int x = 0; x < cfg.patch_size; ++x) {
        for (int c = 0; c < 3; ++c) patch.at(x, y, c) = src.at(px + x, py + y, c);
      }
    }

    ManifestRecord rec;
    const bool mixed = rng.next_unit() < cfg.mixture;
    if (mixed) {
      const std::uint64_t mask = 1 + rng.next_below(15);  // nonempty type subset
      for (DegradationType t : kAllTypes) {
        const int ti = type_index(t);
        if (mask & (1ULL << ti)) {
          rec.recipe.levels[ti] = grids[ti][rng.next_below(grids[ti].size())];
        }
      }
    } else {
      const int ti = static_cast<int>(rng.next_below(4));
      rec.recipe.levels[ti] = grids[ti][rng.next_below(grids[ti].size())];
    }
    rec.recipe.seed = rng.next_u64();

    const Image lq = synthesize(patch, rec.recipe);

    char name[64];
    std::snprintf(name, sizeof(name), "gt_%06d.png", i);
    rec.gt_path = name;
    std::snprintf(name, sizeof(name), "lq_%06d.png", i);
    rec.lq_path = name;
    save_png((fs::path(out_dir) / rec.gt_path).string(), patch);
    save_png((fs::path(out_dir) / rec.lq_path).string(), lq);
    manifest.records.push_back(std::move(rec));
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
  return manifest;
}

}  // namespace ordeg
