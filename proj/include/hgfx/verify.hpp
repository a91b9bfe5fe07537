#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hgfx/adaptive_scan.hpp"
#include "hgfx/checkpoint.hpp"
#include "hgfx/tape.hpp"
#include "hgfx/tensor.hpp"

// Independent reference implementations and the check suites behind `hgfx verify`.
namespace hgfx::verify {

// ---- oracles ----

// Sum of tree edge weights, edges taken in lexicographic order.
double tree_weight(const SimilarityGraph& g, std::vector<Edge> edges);

// Best total weight over every spanning tree of the complete graph (n <= 7).
double exhaustive_max_spanning_weight(const SimilarityGraph& g);

// True when edges form a spanning tree of n nodes.
bool is_spanning_tree(std::size_t n, std::span<const Edge> edges);

struct ZohReference {
  long double a_bar;
  long double b_bar;
};
// exp(z) and expm1(z)/z * delta * b with z = delta * a, in extended precision.
ZohReference zoh_reference(long double a, long double delta, long double b);

// y_t[c] = x_t[c] + sum_q C[c,q] sum_{tau<=t} abar^(t-tau) bbar x_tau[c], evaluated directly.
std::vector<long double> ssm_convolution_reference(std::span<const double> x, std::span<const double> abar,
                                                   std::span<const double> bbar, std::span<const double> c,
                                                   std::size_t n, std::size_t d, std::size_t s);

// Full sort of each row's keys (ascending, ties by index), keeping ranks 0, dil, 2dil, ...
std::vector<std::size_t> ranked_selection_reference(std::span<const double> keys, std::size_t rows, std::size_t cols,
                                                    std::size_t k, std::size_t dilation);

// Plain double Euclidean distances between rows of a [n,d] and b [m,d].
std::vector<double> naive_distances(std::span<const double> a, std::span<const double> b, std::size_t n,
                                    std::size_t m, std::size_t d);

std::vector<long double> softmax_reference(std::span<const double> row);

// ---- finite differences ----

using LossFn = std::function<Tensor(Tape&)>;

inline constexpr double kGradientFloor = 1e-4;

struct GroupError {
  std::string name;
  double rel_error = 0.0;
};

// Central differences over every entry of every group against one backward pass.
// Per group: ||analytic - numeric|| / max(||analytic||, ||numeric||, kGradientFloor).
// Groups with a vanishing gradient are thus held to an absolute bound.
std::vector<GroupError> gradient_errors(const LossFn& loss, const NamedTensors& params, double step);

// sum(out * weights) for a fixed random weighting, so every output entry matters.
Tensor random_projection_loss(Tape& tape, const Tensor& out, std::uint64_t seed);

// ---- suites ----

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed error or count
  double tolerance = 0.0;
  std::string detail;
};

std::vector<CheckResult> oracle_checks(std::uint64_t seed);
std::vector<CheckResult> primitive_gradient_checks(std::uint64_t seed);
std::vector<CheckResult> model_gradient_checks(std::uint64_t seed);
std::vector<CheckResult> normalization_checks(std::uint64_t seed);
std::vector<CheckResult> equivariance_checks(std::uint64_t seed);
// Two short fixed-seed trainings of a tiny model under different thread counts.
std::vector<CheckResult> determinism_checks(std::uint64_t seed);

std::vector<CheckResult> run_all(std::uint64_t seed);

std::string format_result(const CheckResult& r);

}  // namespace hgfx::verify
