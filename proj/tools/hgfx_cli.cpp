// hgfx: train, evaluate, inspect and verify the heterogeneous graph classifier.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hgfx/config.hpp"
#include "hgfx/dataset.hpp"
#include "hgfx/error.hpp"
#include "hgfx/image_io.hpp"
#include "hgfx/kernels.hpp"
#include "hgfx/model.hpp"
#include "hgfx/trainer.hpp"
#include "hgfx/verify.hpp"

namespace fs = std::filesystem;
using namespace hgfx;

namespace {

struct CommonOpts {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> blocks;
  std::optional<double> lr;
};

// Config file first, then command-line flags.
RunConfig resolve(const CommonOpts& o) {
  RunConfig cfg = o.config.empty() ? run_config_from_json("{}") : load_run_config(o.config);
  if (!o.data.empty()) cfg.data.root = o.data;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch) cfg.train.batch_size = *o.batch;
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.blocks) cfg.model.blocks = *o.blocks;
  if (o.lr) cfg.train.optim.base_lr = *o.lr;
  // Validated like a config file.
  return run_config_from_json(run_config_to_json(cfg));
}

DatasetSplit load_data(const RunConfig& cfg) {
  if (cfg.data.root.empty()) throw ConfigError("no dataset: set data.root or pass --data");
  const Dataset all = load_image_folder(cfg.data.root);
  if (all.class_names.size() < 2) throw DataError("dataset " + cfg.data.root + " needs at least two class folders");
  if (all.class_names.size() != cfg.model.classes)
    throw ConfigError("dataset has " + std::to_string(all.class_names.size()) + " classes, model.classes is " +
                      std::to_string(cfg.model.classes));
  DatasetSplit split;
  if (!cfg.data.val_root.empty()) {
    split.train = all;
    split.val = load_image_folder(cfg.data.val_root);
  } else {
    split = split_dataset(all, cfg.data.train_fraction, cfg.data.split_seed);
  }
  if (split.train.empty()) throw DataError("dataset " + cfg.data.root + " has no training images");
  return split;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--data", o.data, "dataset root (overrides data.root)");
  cmd->add_option("--out", o.out, "output directory (overrides output.dir)");
  cmd->add_option("--epochs", o.epochs, "override train.epochs");
  cmd->add_option("--batch", o.batch, "override train.batch_size");
  cmd->add_option("--seed", o.seed, "override train.seed");
  cmd->add_option("--blocks", o.blocks, "override model.blocks");
  cmd->add_option("--lr", o.lr, "override optim.base_lr");
}

struct RunSummary {
  std::string ablation;
  double best_val = 0.0;
  double final_train = 0.0;
  std::size_t epochs = 0;
  std::size_t params = 0;
};

RunSummary train_one(RunConfig cfg, const std::string& ablation, const DatasetSplit& data) {
  cfg.model.ablation = ablation_from_name(ablation);
  const fs::path dir = fs::path(cfg.output_dir) / ablation;
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "config.json");
    os << run_config_to_json(cfg);
  }
  TrainConfig tc = cfg.train;
  tc.metrics_path = dir / "metrics.jsonl";
  tc.checkpoint_path = dir / "best.ckpt";
  Model model(cfg.model, cfg.train.seed);
  std::fprintf(stderr, "[%s] %zu parameters, %zu train / %zu val images\n", ablation.c_str(),
               model.parameter_count(), data.train.size(), data.val.size());
  const auto history = train(model, data.train, data.val, tc, {});
  RunSummary s{ablation, 0.0, history.back().train_acc, history.size(), model.parameter_count()};
  for (const auto& r : history) {
    std::cout << epoch_record_json(r) << '\n';
    s.best_val = std::max(s.best_val, r.val_acc);
  }
  return s;
}

int cmd_train(const CommonOpts& o, const std::string& ablation) {
  RunConfig cfg = resolve(o);
  const DatasetSplit data = load_data(cfg);
  std::vector<std::string> runs;
  if (ablation == "matrix")
    runs = ablation_names();
  else
    runs.push_back(ablation.empty() ? ablation_name(cfg.model.ablation) : ablation);
  std::vector<RunSummary> rows;
  for (const auto& name : runs) rows.push_back(train_one(cfg, name, data));
  if (rows.size() > 1) {
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    std::printf("| configuration | hetero_graph | adaptive_scan | hetero_learning | best val acc | final train acc |\n");
    std::printf("|---|---|---|---|---|---|\n");
    for (const auto& r : rows) {
      const AblationFlags f = ablation_from_name(r.ablation);
      std::printf("| %s | %d | %d | %d | %.4f | %.4f |\n", r.ablation.c_str(), f.hetero_graph, f.adaptive_scan,
                  f.hetero_learning, r.best_val, r.final_train);
      table.push_back({{"ablation", r.ablation},
                       {"hetero_graph", f.hetero_graph},
                       {"adaptive_scan", f.adaptive_scan},
                       {"hetero_learning", f.hetero_learning},
                       {"best_val_acc", r.best_val},
                       {"final_train_acc", r.final_train},
                       {"epochs", r.epochs},
                       {"parameters", r.params}});
    }
    std::ofstream os(fs::path(cfg.output_dir) / "ablation.json");
    os << table.dump(2) << '\n';
  }
  return 0;
}

Model load_model(const RunConfig& cfg, const std::string& checkpoint) {
  Model model(cfg.model, cfg.train.seed);
  model.load_parameters(load_checkpoint(checkpoint));
  return model;
}

int cmd_eval(const CommonOpts& o, const std::string& checkpoint, const std::string& split) {
  const RunConfig cfg = resolve(o);
  const DatasetSplit data = load_data(cfg);
  const Model model = load_model(cfg, checkpoint);
  const Dataset* set = nullptr;
  Dataset both;
  if (split == "train") {
    set = &data.train;
  } else if (split == "val") {
    set = &data.val;
  } else {
    both = data.train;
    both.samples.insert(both.samples.end(), data.val.samples.begin(), data.val.samples.end());
    set = &both;
  }
  if (set->empty()) throw DataError("eval: the " + split + " split is empty");
  nlohmann::ordered_json j{{"split", split}, {"samples", set->size()}, {"accuracy", evaluate(model, *set)}};
  std::cout << j.dump() << '\n';
  return 0;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  os << text << '\n';
}

ForwardResult trace_image(const Model& model, const std::string& image) {
  ImageSample img = read_image(image);
  Tape tape(Tape::Mode::kInference);
  ForwardOptions opts;
  opts.keep_trace = true;
  return model.forward(tape, img, opts);
}

int cmd_export_scan(const CommonOpts& o, const std::string& image, const std::string& checkpoint,
                    const std::string& json_out, const std::string& pgm_out) {
  const RunConfig cfg = resolve(o);
  const Model model = load_model(cfg, checkpoint);
  const ForwardResult res = trace_image(model, image);
  ScanPlan plan = res.trace.plan;
  plan.order = res.trace.order.empty() ? raster_order(res.trace.visual.size()) : res.trace.order;
  write_text(json_out, scan_plan_to_json(plan));
  if (!pgm_out.empty()) {
    const auto& v = res.trace.visual;
    write_pgm(pgm_out, v.grid_cols * cfg.model.patch_size, v.grid_rows * cfg.model.patch_size,
              paint_visit_order(plan.order, v.grid_rows, v.grid_cols, cfg.model.patch_size));
  }
  return 0;
}

int cmd_export_graph(const CommonOpts& o, const std::string& image, const std::string& checkpoint,
                     std::size_t block, const std::string& json_out) {
  const RunConfig cfg = resolve(o);
  const Model model = load_model(cfg, checkpoint);
  const ForwardResult res = trace_image(model, image);
  if (block >= res.trace.graphs.size())
    throw ConfigError("export-graph: block " + std::to_string(block) + " does not exist");
  write_text(json_out, adjacency_to_json(res.trace.graphs[block].adj));
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : verify::run_all(seed)) {
    std::cout << verify::format_result(r) << '\n';
    ok = ok && r.pass;
  }
  std::cout << (ok ? "verify: all checks passed" : "verify: FAILED") << std::endl;
  return ok ? 0 : exit_code_for(ErrorKind::kVerification);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hgfx: heterogeneous graph classifier for flexible objects"};
  app.require_subcommand(1);
  CommonOpts common;

  auto* train_cmd = app.add_subcommand("train", "train one configuration or the ablation matrix");
  add_common(train_cmd, common);
  std::string ablation;
  train_cmd->add_option("--ablation", ablation, "base|hg|hg+scan|scan+hgl|full|matrix");

  auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint");
  add_common(eval_cmd, common);
  std::string checkpoint, split = "val";
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--split", split, "train|val|all")->check(CLI::IsMember({"train", "val", "all"}));

  auto* synth_cmd = app.add_subcommand("synth", "write the synthetic two-class dataset");
  std::string synth_out;
  std::size_t synth_n = 64, synth_size = 32;
  std::uint64_t synth_seed = 7;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--n", synth_n, "images per class");
  synth_cmd->add_option("--size", synth_size, "image side in pixels");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");

  std::string image, json_out, pgm_out;
  auto* scan_cmd = app.add_subcommand("export-scan", "scan order and spanning tree of one image");
  add_common(scan_cmd, common);
  scan_cmd->add_option("--image", image, "PPM/PGM/PNG image")->required();
  scan_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  scan_cmd->add_option("--json", json_out, "output JSON path (default stdout)");
  scan_cmd->add_option("--pgm", pgm_out, "also paint the visit order into this PGM");

  auto* graph_cmd = app.add_subcommand("export-graph", "adjacency of one block for one image");
  add_common(graph_cmd, common);
  std::size_t block = 0;
  graph_cmd->add_option("--image", image, "PPM/PGM/PNG image")->required();
  graph_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  graph_cmd->add_option("--block", block, "block index");
  graph_cmd->add_option("--json", json_out, "output JSON path (default stdout)");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle and invariant suite");
  std::uint64_t verify_seed = 2024;
  verify_cmd->add_option("--seed", verify_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code_for(ErrorKind::kConfig);
  }

  kernels::configure_threads_from_env();
  try {
    if (*train_cmd) return cmd_train(common, ablation);
    if (*eval_cmd) return cmd_eval(common, checkpoint, split);
    if (*synth_cmd) {
      const Dataset d = synth_generate(synth_out, synth_n, synth_size, synth_seed);
      std::printf("wrote %zu images to %s\n", d.size(), synth_out.c_str());
      return 0;
    }
    if (*scan_cmd) return cmd_export_scan(common, image, checkpoint, json_out, pgm_out);
    if (*graph_cmd) return cmd_export_graph(common, image, checkpoint, block, json_out);
    if (*verify_cmd) return cmd_verify(verify_seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
