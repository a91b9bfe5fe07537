#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hgfx/model.hpp"
#include "hgfx/trainer.hpp"

namespace hgfx {

struct DataConfig {
  std::string root;        // one subdirectory per class
  std::string val_root;    // optional separate validation folder; empty means split root
  double train_fraction = 0.75;
  std::uint64_t split_seed = 0;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;  // metrics/checkpoint paths are derived from output_dir
  DataConfig data;
  std::string output_dir = "runs";
};

// Sections "model", "optim", "train", "data", "output". Missing keys keep their
// defaults; unknown keys raise ConfigError.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every field, in a fixed order, indented by two spaces.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace hgfx
