#include "hgfx/trainer.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "hgfx/checkpoint.hpp"
#include "hgfx/error.hpp"
#include "hgfx/ops.hpp"
#include "hgfx/rng.hpp"

namespace hgfx {

double lr_at(std::size_t step, double base_lr, double warmup_ratio, std::size_t warmup_steps) {
  if (warmup_steps == 0 || step >= warmup_steps) return base_lr;
  const double start = base_lr * warmup_ratio;
  const double frac = static_cast<double>(step) / static_cast<double>(warmup_steps);
  return start + (base_lr - start) * frac;
}

void Adam::step(std::span<Tensor> params, std::span<const std::vector<double>> grads, double lr) {
  if (grads.size() != params.size())
    throw ContractError("adam: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) +
                        " parameters");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ContractError("adam: parameter set changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (grads[i].size() != params[i].numel())
      throw ContractError("adam: missing or mis-shaped gradient for parameter " + std::to_string(i));

  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_data();
    const auto& g = grads[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double clip_global_norm(std::span<std::vector<double>> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g) v *= s;
  }
  return norm;
}

std::string epoch_record_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_acc"] = r.train_acc;
  j["val_acc"] = r.val_acc;
  j["lr"] = r.lr;
  return j.dump();
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("accuracy: prediction and label counts differ");
  if (labels.empty()) throw DataError("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const Model& model, const Dataset& data) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  std::vector<std::size_t> pred(data.size()), labels(data.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      pred[i] = model.predict(data.samples[i]);
    } catch (...) {
#pragma omp critical(hgfx_eval_failure)
      if (!failure) failure = std::current_exception();
    }
    labels[i] = data.samples[i].label;
  }
  if (failure) std::rethrow_exception(failure);
  return accuracy(pred, labels);
}

BatchGradients batch_gradients(const Model& model, std::span<const ImageSample* const> batch, bool training,
                               std::uint64_t dropout_seed) {
  const std::vector<Tensor> params = model.parameters();
  const std::size_t b = batch.size();
  std::vector<double> losses(b, 0.0);
  std::vector<std::vector<std::vector<double>>> per_sample(b);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < b; ++i) {
    try {
      Rng rng(mix_seed(dropout_seed, i));
      Tape tape;
      ForwardOptions opts;
      opts.training = training;
      opts.rng = &rng;
      const Tensor logits = model.forward(tape, *batch[i], opts).logits;
      const Tensor loss = ops::cross_entropy(tape, logits, batch[i]->label);
      losses[i] = loss.item();
      tape.backward(loss, GradSink::kTapeOnly);
      auto& slot = per_sample[i];
      slot.reserve(params.size());
      for (const auto& p : params) {
        const auto* g = tape.grad(p);
        slot.push_back(g ? *g : std::vector<double>(p.numel(), 0.0));
      }
    } catch (...) {
#pragma omp critical(hgfx_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  BatchGradients out;
  out.grads.resize(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) out.grads[p].assign(params[p].numel(), 0.0);
  const double inv = 1.0 / static_cast<double>(b);
  // Fixed summation order keeps results independent of the thread count.
  for (std::size_t i = 0; i < b; ++i) {
    out.loss += losses[i] * inv;
    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t j = 0; j < out.grads[p].size(); ++j) out.grads[p][j] += per_sample[i][p][j] * inv;
  }
  return out;
}

std::vector<EpochRecord> train(Model& model, const Dataset& train_set, const Dataset& val_set,
                               const TrainConfig& cfg, const StepHook& on_step) {
  if (train_set.empty()) throw DataError("train: empty training set");
  if (cfg.batch_size == 0) throw ConfigError("train: batch size must be positive");
  const std::size_t batches_per_epoch = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches_per_epoch * cfg.epochs;
  const std::size_t warmup = cfg.optim.warmup_steps.value_or(total_steps / 10);

  std::ofstream metrics;
  if (cfg.metrics_path) {
    metrics.open(*cfg.metrics_path, std::ios::trunc);
    if (!metrics) throw IoError("train: cannot open metrics file " + cfg.metrics_path->string());
  }

  std::vector<Tensor> params = model.parameters();
  Adam adam(cfg.optim);
  Rng shuffle_rng(mix_seed(cfg.seed, 0x5348));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochRecord> history;
  double best_val = -1.0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t bi = 0; bi < batches_per_epoch; ++bi) {
      const std::size_t lo = bi * cfg.batch_size;
      const std::size_t hi = std::min(lo + cfg.batch_size, train_set.size());
      std::vector<const ImageSample*> batch;
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(&train_set.samples[order[i]]);

      BatchGradients bg = batch_gradients(model, batch, true, mix_seed(cfg.seed, 0x100000 + step));
      if (!std::isfinite(bg.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step + 1));
      clip_global_norm(bg.grads, cfg.optim.clip_norm);
      lr = lr_at(step, cfg.optim.base_lr, cfg.optim.warmup_ratio, warmup);
      adam.step(params, bg.grads, lr);
      ++step;
      loss_sum += bg.loss * static_cast<double>(hi - lo);
      if (on_step) on_step(step, model);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_acc = cfg.eval_train_acc ? evaluate(model, train_set) : 0.0;
    rec.val_acc = val_set.empty() ? 0.0 : evaluate(model, val_set);
    rec.lr = lr;
    history.push_back(rec);
    if (metrics) metrics << epoch_record_json(rec) << '\n' << std::flush;

    if (cfg.checkpoint_path && rec.val_acc > best_val) save_checkpoint(*cfg.checkpoint_path, model.named_parameters());
    best_val = std::max(best_val, rec.val_acc);
    if (cfg.stop_at_train_acc && rec.train_acc >= *cfg.stop_at_train_acc) break;
  }
  return history;
}

}  // namespace hgfx
