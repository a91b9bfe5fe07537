#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "hgfx/dataset.hpp"
#include "hgfx/kernels.hpp"
#include "hgfx/model.hpp"
#include "hgfx/trainer.hpp"
#include "hgfx/verify.hpp"

using namespace hgfx;

namespace {

constexpr std::uint64_t kSuiteSeed = 2024;
constexpr double kOracleSeconds = 60.0;
constexpr double kGradientSeconds = 300.0;

// Scaled training task.
constexpr std::size_t kPerClass = 48;
constexpr double kTrainFraction = 2.0 / 3.0;
constexpr std::size_t kImageSize = 32;
constexpr std::uint64_t kDataSeed = 2024;
constexpr std::size_t kMaxEpochs = 200;
constexpr double kTargetTrainAcc = 0.95;
constexpr double kRunSeconds = 600.0;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

// Ablation runs use a fixed epoch budget.
constexpr std::size_t kAblationEpochs = 30;

ModelConfig scaled_model() {
  ModelConfig cfg;
  cfg.image_size = kImageSize;
  cfg.patch_size = 8;
  cfg.blocks = 4;
  return cfg;
}

TrainConfig scaled_train(std::uint64_t seed, std::size_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 16;
  tc.seed = seed;
  tc.optim.base_lr = 2e-3;
  tc.optim.warmup_steps = 20;
  return tc;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool all_pass(const std::vector<verify::CheckResult>& rs, std::string& failed) {
  bool ok = true;
  for (const auto& r : rs) {
    std::printf("    %s\n", verify::format_result(r).c_str());
    if (!r.pass) {
      ok = false;
      failed += (failed.empty() ? "" : ", ") + r.name;
    }
  }
  return ok;
}

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

}  // namespace

int main() {
  kernels::configure_threads_from_env();

  {
    const auto t0 = std::chrono::steady_clock::now();
    std::string failed;
    const bool ok = all_pass(verify::oracle_checks(kSuiteSeed), failed);
    const double t = seconds_since(t0);
    report(1, ok && t < kOracleSeconds,
           fmt("oracle suite %s in %.2f s (limit %.0f s)%s", ok ? "exact" : "mismatch", t, kOracleSeconds,
               failed.empty() ? "" : (" failed: " + failed).c_str()));
  }

  {
    const auto t0 = std::chrono::steady_clock::now();
    std::string failed;
    bool ok = all_pass(verify::primitive_gradient_checks(kSuiteSeed), failed);
    ok = all_pass(verify::model_gradient_checks(kSuiteSeed), failed) && ok;
    const double t = seconds_since(t0);
    report(2, ok && t < kGradientSeconds,
           fmt("gradient checks (primitives <= 1e-6, model <= 1e-3) in %.1f s (limit %.0f s)%s", t, kGradientSeconds,
               failed.empty() ? "" : (" failed: " + failed).c_str()));
  }

  {
    std::string failed;
    const bool ok = all_pass(verify::normalization_checks(kSuiteSeed), failed);
    report(3, ok, std::string("alpha/H row sums, positivity, softmax equivalence") +
                      (failed.empty() ? "" : " failed: " + failed));
  }

  {
    std::string failed;
    bool ok = all_pass(verify::determinism_checks(kSuiteSeed), failed);
    ok = all_pass(verify::equivariance_checks(kSuiteSeed), failed) && ok;
    report(4, ok, std::string("identical histories across runs and thread counts, equivariant plans") +
                      (failed.empty() ? "" : " failed: " + failed));
  }

  const DatasetSplit data = split_dataset(synth_dataset(kPerClass, kImageSize, kDataSeed), kTrainFraction, kDataSeed);
  std::printf("    dataset: %zu train / %zu val, %zux%zu\n", data.train.size(), data.val.size(), kImageSize,
              kImageSize);

  bool stable = true;
  double worst_a_bar = 0.0;
  std::size_t steps_checked = 0;
  {
    bool ok = data.train.size() == 64 && data.val.size() == 32;
    std::string summary;
    double total = 0.0;
    for (const std::uint64_t seed : kSeeds) {
      Model model(scaled_model(), seed);
      TrainConfig tc = scaled_train(seed, kMaxEpochs);
      tc.stop_at_train_acc = kTargetTrainAcc;
      const auto t0 = std::chrono::steady_clock::now();
      const auto hist = train(model, data.train, data.val, tc, [&](std::size_t, const Model& m) {
        const double a = m.max_abs_a_bar().value_or(0.0);
        worst_a_bar = std::max(worst_a_bar, a);
        stable = stable && a < 1.0;
        ++steps_checked;
      });
      const double t = seconds_since(t0);
      total += t;
      ok = ok && hist.back().train_acc >= kTargetTrainAcc;
      std::printf("    seed %llu: train acc %.4f at epoch %zu, val acc %.4f, %.1f s\n",
                  static_cast<unsigned long long>(seed), hist.back().train_acc, hist.back().epoch, hist.back().val_acc,
                  t);
      summary += fmt("%sseed %llu: %.3f @ %zu ep, %.0f s", summary.empty() ? "" : "; ",
                     static_cast<unsigned long long>(seed), hist.back().train_acc, hist.back().epoch, t);
    }
    report(5, ok && total < kRunSeconds,
           fmt("full model >= %.2f train acc within %zu epochs, %.0f s for all seeds (limit %.0f s; %s)",
               kTargetTrainAcc, kMaxEpochs, total, kRunSeconds, summary.c_str()));
  }

  {
    std::printf("    | configuration | hetero_graph | adaptive_scan | hetero_learning | mean val acc |\n");
    std::printf("    |---|---|---|---|---|\n");
    double base = 0.0, full = 0.0;
    for (const auto& name : ablation_names()) {
      double mean = 0.0;
      for (const std::uint64_t seed : kSeeds) {
        ModelConfig cfg = scaled_model();
        cfg.ablation = ablation_from_name(name);
        Model model(cfg, seed);
        TrainConfig tc = scaled_train(seed, kAblationEpochs);
        tc.eval_train_acc = false;
        const auto hist = train(model, data.train, data.val, tc);
        mean += hist.back().val_acc / static_cast<double>(std::size(kSeeds));
      }
      const AblationFlags f = ablation_from_name(name);
      std::printf("    | %s | %d | %d | %d | %.4f |\n", name.c_str(), f.hetero_graph, f.adaptive_scan,
                  f.hetero_learning, mean);
      if (name == "base") base = mean;
      if (name == "full") full = mean;
    }
    report(6, full >= base, fmt("mean val acc full %.4f >= base %.4f over %zu seeds, %zu epochs", full, base,
                                std::size(kSeeds), kAblationEpochs));
  }

  report(7, stable && steps_checked > 0,
         fmt("max |a_bar| %.6f < 1 after all %zu optimizer steps of criterion 5", worst_a_bar, steps_checked));

  return failures == 0 ? 0 : 1;
}
