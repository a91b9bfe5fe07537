#include "hgfx/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "hgfx/error.hpp"

namespace hgfx {

using Json = nlohmann::ordered_json;

namespace {

void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("config: unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const Json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: '" + where + "." + key + "' has the wrong type");
  }
}

void read_size(const Json& obj, const char* key, const std::string& where, std::size_t& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number_unsigned()) throw ConfigError("config: '" + where + "." + key + "' must be a nonnegative integer");
  out = obj.at(key).get<std::size_t>();
}

void read_seed(const Json& obj, const char* key, const std::string& where, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number_unsigned()) throw ConfigError("config: '" + where + "." + key + "' must be a nonnegative integer");
  out = obj.at(key).get<std::uint64_t>();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(root, "", {"model", "optim", "train", "data", "output"});
  RunConfig cfg;

  if (root.contains("model")) {
    const Json& m = root["model"];
    reject_unknown(m, "model",
                   {"image_size", "channels", "patch_size", "dim", "mapped_dim", "state_dim", "k", "dilation", "blocks",
                    "classes", "dropout", "leaky_slope", "distance_floor", "ablation"});
    ModelConfig& mc = cfg.model;
    read_size(m, "image_size", "model", mc.image_size);
    read_size(m, "channels", "model", mc.channels);
    read_size(m, "patch_size", "model", mc.patch_size);
    read_size(m, "dim", "model", mc.dim);
    read_size(m, "mapped_dim", "model", mc.mapped_dim);
    read_size(m, "state_dim", "model", mc.state_dim);
    read_size(m, "k", "model", mc.k);
    read_size(m, "dilation", "model", mc.dilation);
    read_size(m, "blocks", "model", mc.blocks);
    read_size(m, "classes", "model", mc.classes);
    read(m, "dropout", "model", mc.dropout);
    read(m, "leaky_slope", "model", mc.leaky_slope);
    read(m, "distance_floor", "model", mc.distance_floor);
    std::string ablation = ablation_name(mc.ablation);
    read(m, "ablation", "model", ablation);
    mc.ablation = ablation_from_name(ablation);
  }

  if (root.contains("optim")) {
    const Json& o = root["optim"];
    reject_unknown(o, "optim", {"base_lr", "warmup_ratio", "warmup_steps", "beta1", "beta2", "eps", "clip_norm"});
    OptimConfig& oc = cfg.train.optim;
    read(o, "base_lr", "optim", oc.base_lr);
    read(o, "warmup_ratio", "optim", oc.warmup_ratio);
    if (o.contains("warmup_steps") && !o["warmup_steps"].is_null()) {
      std::size_t w = 0;
      read_size(o, "warmup_steps", "optim", w);
      oc.warmup_steps = w;
    }
    read(o, "beta1", "optim", oc.beta1);
    read(o, "beta2", "optim", oc.beta2);
    read(o, "eps", "optim", oc.eps);
    read(o, "clip_norm", "optim", oc.clip_norm);
  }

  if (root.contains("train")) {
    const Json& t = root["train"];
    reject_unknown(t, "train", {"epochs", "batch_size", "seed", "stop_at_train_acc", "eval_train_acc"});
    TrainConfig& tc = cfg.train;
    read_size(t, "epochs", "train", tc.epochs);
    read_size(t, "batch_size", "train", tc.batch_size);
    read_seed(t, "seed", "train", tc.seed);
    if (t.contains("stop_at_train_acc") && !t["stop_at_train_acc"].is_null()) {
      double v = 0.0;
      read(t, "stop_at_train_acc", "train", v);
      tc.stop_at_train_acc = v;
    }
    read(t, "eval_train_acc", "train", tc.eval_train_acc);
  }

  if (root.contains("data")) {
    const Json& d = root["data"];
    reject_unknown(d, "data", {"root", "val_root", "train_fraction", "split_seed"});
    read(d, "root", "data", cfg.data.root);
    read(d, "val_root", "data", cfg.data.val_root);
    read(d, "train_fraction", "data", cfg.data.train_fraction);
    read_seed(d, "split_seed", "data", cfg.data.split_seed);
  }

  if (root.contains("output")) {
    const Json& out = root["output"];
    reject_unknown(out, "output", {"dir"});
    read(out, "dir", "output", cfg.output_dir);
  }

  cfg.model.validate();
  if (cfg.train.epochs == 0) throw ConfigError("config: train.epochs must be positive");
  if (cfg.train.batch_size == 0) throw ConfigError("config: train.batch_size must be positive");
  if (!(cfg.train.optim.base_lr > 0.0)) throw ConfigError("config: optim.base_lr must be positive");
  if (!(cfg.data.train_fraction > 0.0 && cfg.data.train_fraction <= 1.0))
    throw ConfigError("config: data.train_fraction must lie in (0,1]");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return run_config_from_json(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  const ModelConfig& m = cfg.model;
  const OptimConfig& o = cfg.train.optim;
  const TrainConfig& t = cfg.train;
  Json j;
  j["model"] = Json{{"image_size", m.image_size},
                    {"channels", m.channels},
                    {"patch_size", m.patch_size},
                    {"dim", m.dim},
                    {"mapped_dim", m.mapped_dim},
                    {"state_dim", m.state_dim},
                    {"k", m.k},
                    {"dilation", m.dilation},
                    {"blocks", m.blocks},
                    {"classes", m.classes},
                    {"dropout", m.dropout},
                    {"leaky_slope", m.leaky_slope},
                    {"distance_floor", m.distance_floor},
                    {"ablation", ablation_name(m.ablation)}};
  j["optim"] = Json{{"base_lr", o.base_lr},
                    {"warmup_ratio", o.warmup_ratio},
                    {"warmup_steps", o.warmup_steps ? Json(*o.warmup_steps) : Json(nullptr)},
                    {"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"eps", o.eps},
                    {"clip_norm", o.clip_norm}};
  j["train"] = Json{{"epochs", t.epochs},
                    {"batch_size", t.batch_size},
                    {"seed", t.seed},
                    {"stop_at_train_acc", t.stop_at_train_acc ? Json(*t.stop_at_train_acc) : Json(nullptr)},
                    {"eval_train_acc", t.eval_train_acc}};
  j["data"] = Json{{"root", cfg.data.root},
                   {"val_root", cfg.data.val_root},
                   {"train_fraction", cfg.data.train_fraction},
                   {"split_seed", cfg.data.split_seed}};
  j["output"] = Json{{"dir", cfg.output_dir}};
  return j.dump(2) + "\n";
}

}  // namespace hgfx
