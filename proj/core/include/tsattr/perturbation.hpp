#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsattr/network.hpp"

namespace tsattr {

enum class Order { MoRF, LeRF };
enum class Strategy { Zero, Gaussian };
// Frozen: one N(0,1) draw per position, held for the rest of the run.
// Resample: every perturbed position is redrawn after each step.
enum class GaussianMode { Frozen, Resample };

std::string_view to_string(Order order);
Order parse_order(std::string_view name);
std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);
std::string_view to_string(GaussianMode mode);
GaussianMode parse_gaussian_mode(std::string_view name);

// Permutation of 0..N-1 by descending (MoRF) or ascending (LeRF) score.
// Equal scores keep ascending index order in both modes.
std::vector<int> order_indices(std::span<const double> scores, Order order);

struct PerturbationRun {
  Order order = Order::MoRF;
  Strategy strategy = Strategy::Zero;
  GaussianMode gaussian_mode = GaussianMode::Frozen;
  int steps = 0;
  int target_class = 0;
  std::vector<double> pc;  // pc[i] = q_target after perturbing i + 1 points
  std::uint64_t seed = 0;  // Gaussian only
};

// Perturbs x at order[0..steps-1] one point at a time and records the
// probability of `target_class` after each step. A negative target uses the
// class predicted on the unperturbed input. Gaussian replacement values come
// from Rng(seed) indexed by position, so MoRF and LeRF runs with the same seed
// substitute identical values at each position.
PerturbationRun perturb_curve(const Classifier& model, std::span<const double> x, std::span<const int> order,
                              Strategy strategy, int steps, std::uint64_t seed, int target_class = -1,
                              GaussianMode mode = GaussianMode::Frozen);

struct DegradationScore {
  double ds = 0.0;
  double mean_lerf = 0.0;
  double mean_morf = 0.0;
};

// ds = mean(pc_LeRF) - mean(pc_MoRF), averaged stepwise.
DegradationScore degradation_score(const PerturbationRun& lerf, const PerturbationRun& morf);

struct DegradationResult {
  PerturbationRun morf;
  PerturbationRun lerf;
  DegradationScore score;
};

// Both orderings of one instance with a shared replacement seed.
DegradationResult evaluate_degradation(const Classifier& model, std::span<const double> x,
                                       std::span<const double> scores, Strategy strategy, int steps,
                                       std::uint64_t seed, int target_class = -1,
                                       GaussianMode mode = GaussianMode::Frozen);

struct CurveRow {
  int instance_id = 0;
  Order order = Order::MoRF;
  int step = 0;  // 1-based
  double pc = 0.0;
};

// CSV with header id,mode,step,pc.
std::string curves_to_csv(std::span<const CurveRow> rows);
std::vector<CurveRow> curves_from_csv(std::string_view text);

}  // namespace tsattr
