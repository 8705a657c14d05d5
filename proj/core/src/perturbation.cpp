#include "tsattr/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsattr/errors.hpp"
#include "tsattr/io.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

std::string_view to_string(Order order) { return order == Order::MoRF ? "MoRF" : "LeRF"; }

Order parse_order(std::string_view name) {
  if (name == "MoRF") return Order::MoRF;
  if (name == "LeRF") return Order::LeRF;
  throw InvalidInput("unknown perturbation order '" + std::string(name) + "'");
}

std::string_view to_string(Strategy strategy) { return strategy == Strategy::Zero ? "zero" : "gaussian"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "zero") return Strategy::Zero;
  if (name == "gaussian") return Strategy::Gaussian;
  throw InvalidInput("unknown perturbation strategy '" + std::string(name) + "'");
}

std::string_view to_string(GaussianMode mode) { return mode == GaussianMode::Frozen ? "frozen" : "resample"; }

GaussianMode parse_gaussian_mode(std::string_view name) {
  if (name == "frozen") return GaussianMode::Frozen;
  if (name == "resample") return GaussianMode::Resample;
  throw InvalidInput("unknown gaussian mode '" + std::string(name) + "'");
}

std::vector<int> order_indices(std::span<const double> scores, Order order) {
  for (double v : scores) {
    if (std::isnan(v)) throw InvalidInput("order_indices: NaN attribution score");
  }
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (order == Order::MoRF) {
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  } else {
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] < scores[b]; });
  }
  return idx;
}

PerturbationRun perturb_curve(const Classifier& model, std::span<const double> x, std::span<const int> order,
                              Strategy strategy, int steps, std::uint64_t seed, int target_class,
                              GaussianMode mode) {
  const int n = static_cast<int>(x.size());
  if (steps < 0 || steps > n) throw InvalidInput("perturb_curve: steps must be in [0, N]");
  if (static_cast<int>(order.size()) < steps) throw InvalidInput("perturb_curve: order shorter than steps");
  for (int i = 0; i < steps; ++i) {
    if (order[i] < 0 || order[i] >= n) throw InvalidInput("perturb_curve: order index out of range");
  }

  PerturbationRun run;
  run.strategy = strategy;
  run.gaussian_mode = mode;
  run.steps = steps;
  run.seed = seed;
  auto editor = model.editor(x);
  run.target_class = target_class >= 0 ? target_class : editor->predict().predicted_class;
  const auto target = static_cast<std::size_t>(run.target_class);

  Rng rng(seed);
  std::vector<double> replacement(static_cast<std::size_t>(n), 0.0);
  if (strategy == Strategy::Gaussian) {
    for (auto& v : replacement) v = rng.normal();
  }
  run.pc.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    if (strategy == Strategy::Gaussian && mode == GaussianMode::Resample) {
      for (int j = 0; j < i; ++j) editor->set(order[j], rng.normal());
      editor->set(order[i], rng.normal());
    } else {
      editor->set(order[i], replacement[static_cast<std::size_t>(order[i])]);
    }
    run.pc.push_back(editor->predict().probs[target]);
  }
  return run;
}

DegradationScore degradation_score(const PerturbationRun& lerf, const PerturbationRun& morf) {
  if (lerf.pc.size() != morf.pc.size()) throw InvalidInput("degradation_score: curves differ in length");
  if (lerf.pc.empty()) throw InvalidInput("degradation_score: empty curves");
  DegradationScore out;
  double diff = 0.0;
  for (std::size_t i = 0; i < lerf.pc.size(); ++i) {
    out.mean_lerf += lerf.pc[i];
    out.mean_morf += morf.pc[i];
    diff += lerf.pc[i] - morf.pc[i];
  }
  const double m = static_cast<double>(lerf.pc.size());
  out.mean_lerf /= m;
  out.mean_morf /= m;
  out.ds = diff / m;
  return out;
}

DegradationResult evaluate_degradation(const Classifier& model, std::span<const double> x,
                                       std::span<const double> scores, Strategy strategy, int steps,
                                       std::uint64_t seed, int target_class, GaussianMode mode) {
  if (scores.size() != x.size()) throw InvalidInput("evaluate_degradation: scores and input differ in length");
  DegradationResult out;
  const auto morf_order = order_indices(scores, Order::MoRF);
  const auto lerf_order = order_indices(scores, Order::LeRF);
  out.morf = perturb_curve(model, x, morf_order, strategy, steps, seed, target_class, mode);
  out.morf.order = Order::MoRF;
  out.lerf = perturb_curve(model, x, lerf_order, strategy, steps, seed, out.morf.target_class, mode);
  out.lerf.order = Order::LeRF;
  out.score = degradation_score(out.lerf, out.morf);
  return out;
}

std::string curves_to_csv(std::span<const CurveRow> rows) {
  std::string out = "id,mode,step,pc\n";
  for (const auto& r : rows) {
    out += std::to_string(r.instance_id);
    out += ',';
    out += to_string(r.order);
    out += ',' + std::to_string(r.step) + ',' + io::format_double(r.pc) + '\n';
  }
  return out;
}

std::vector<CurveRow> curves_from_csv(std::string_view text) {
  const auto table = io::parse_csv(text);
  const std::size_t c_id = table.column("id"), c_mode = table.column("mode"), c_step = table.column("step"),
                    c_pc = table.column("pc");
  std::vector<CurveRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    rows.push_back({static_cast<int>(io::parse_int(row[c_id])), parse_order(row[c_mode]),
                    static_cast<int>(io::parse_int(row[c_step])), io::parse_double(row[c_pc])});
  }
  return rows;
}

}  // namespace tsattr
