#include <benchmark/benchmark.h>

#include <omp.h>

#include <vector>

#include "hgfx/kernels.hpp"
#include "hgfx/rng.hpp"

namespace k = hgfx::kernels;

namespace {

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  hgfx::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <auto Gemm>
void bm_gemm(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto a = filled(n * n, 1), b = filled(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : st) {
    Gemm(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <auto Dist>
void bm_sqdist(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const std::size_t d = 64;
  const auto x = filled(n * d, 3);
  std::vector<double> out(n * n);
  for (auto _ : st) {
    Dist(x.data(), x.data(), out.data(), n, n, d);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Scan>
void bm_scan(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const std::size_t d = 64, s = 16;
  const auto x = filled(n * d, 4), bb = filled(d * s, 6), c = filled(d * s, 7);
  auto ab = filled(d * s, 5);
  for (auto& v : ab) v = 0.5 + 0.4 * v;
  std::vector<double> h(n * d * s), y(n * d);
  for (auto _ : st) {
    Scan(x.data(), ab.data(), bb.data(), c.data(), h.data(), y.data(), n, d, s);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(bm_gemm<k::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm<k::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm<k::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm<k::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm<k::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm<k::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(64)->Arg(256);
BENCHMARK(bm_sqdist<k::serial::pairwise_sqdist>)->Name("sqdist/serial")->Arg(16)->Arg(256);
BENCHMARK(bm_sqdist<k::parallel::pairwise_sqdist>)->Name("sqdist/parallel")->Arg(16)->Arg(256);
BENCHMARK(bm_scan<k::serial::ssm_scan_forward>)->Name("ssm_scan/serial")->Arg(16)->Arg(256);
BENCHMARK(bm_scan<k::parallel::ssm_scan_forward>)->Name("ssm_scan/parallel")->Arg(16)->Arg(256);

int main(int argc, char** argv) {
  k::configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
