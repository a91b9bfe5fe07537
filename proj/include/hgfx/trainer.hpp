#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgfx/model.hpp"
#include "hgfx/patch_embed.hpp"
#include "hgfx/tensor.hpp"

namespace hgfx {

struct OptimConfig {
  double base_lr = 1.25e-4;
  double warmup_ratio = 1e-4;  // learning-rate multiplier at step 0
  // Length of the linear ramp; nullopt means 10% of all training steps.
  std::optional<std::size_t> warmup_steps;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global gradient norm cap, <= 0 disables
};

// Linear ramp from base_lr*warmup_ratio at step 0 to base_lr at warmup_steps,
// constant afterwards.
double lr_at(std::size_t step, double base_lr, double warmup_ratio, std::size_t warmup_steps);

class Adam {
 public:
  explicit Adam(const OptimConfig& cfg) : cfg_(cfg) {}

  // One bias-corrected Adam update at learning rate lr. grads[i] must match params[i].
  void step(std::span<Tensor> params, std::span<const std::vector<double>> grads, double lr);

  std::size_t steps() const { return step_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  OptimConfig cfg_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Scales grads in place so their joint L2 norm is at most max_norm; returns the norm before clipping.
double clip_global_norm(std::span<std::vector<double>> grads, double max_norm);

struct Dataset {
  std::vector<ImageSample> samples;
  std::vector<std::string> class_names;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  OptimConfig optim;
  // Stop once training accuracy reaches this value, if set.
  std::optional<double> stop_at_train_acc;
  // Evaluate training accuracy in eval mode after every epoch (costs one extra pass).
  bool eval_train_acc = true;
  std::optional<std::filesystem::path> metrics_path;     // JSON lines
  std::optional<std::filesystem::path> checkpoint_path;  // best validation accuracy
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;  // learning rate of the epoch's last step
};

std::string epoch_record_json(const EpochRecord& r);

// Called after every optimizer step with the 1-based step count.
using StepHook = std::function<void(std::size_t step, const Model& model)>;

// Minibatch training with softmax cross-entropy. The sample order and all
// dropout masks derive from cfg.seed, so a run is reproducible for any thread
// count: per-sample gradients are computed in parallel and summed in sample order.
std::vector<EpochRecord> train(Model& model, const Dataset& train_set, const Dataset& val_set,
                               const TrainConfig& cfg, const StepHook& on_step = {});

// Top-1 accuracy with dropout disabled.
double evaluate(const Model& model, const Dataset& data);

// Fraction of positions where predictions equal labels.
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

// Mean softmax cross-entropy and per-parameter gradients over a batch.
struct BatchGradients {
  double loss = 0.0;
  std::vector<std::vector<double>> grads;  // parallel to model.parameters()
};
BatchGradients batch_gradients(const Model& model, std::span<const ImageSample* const> batch, bool training,
                               std::uint64_t dropout_seed);

}  // namespace hgfx
