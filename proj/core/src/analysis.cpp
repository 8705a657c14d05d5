#include "tsattr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "tsattr/errors.hpp"
#include "tsattr/io.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

namespace {

constexpr std::string_view kHeader = "dataset,contrast,feature,model,method,strategy,id,true_class,pred_class,auc_pr_norm,ds";

auto record_key(const EvalRecord& r) {
  return std::tie(r.dataset, r.model, r.method, r.strategy, r.true_class, r.id, r.contrast, r.feature, r.pred_class,
                  r.auc_pr_norm, r.ds);
}

// Record indices grouped by the given fields, each group in canonical record
// order so sums do not depend on input order.
std::map<std::vector<std::string>, std::vector<std::size_t>> group_records(std::span<const EvalRecord> records,
                                                                          std::span<const Field> fields) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return record_key(records[a]) < record_key(records[b]); });
  std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i : order) {
    std::vector<std::string> key;
    key.reserve(fields.size());
    for (Field f : fields) key.push_back(field_value(records[i], f));
    groups[key].push_back(i);
  }
  return groups;
}

constexpr Field kCellFields[] = {Field::Dataset, Field::TrueClass, Field::Model, Field::Method, Field::Strategy};

std::optional<double> cell_averaged_rho(std::span<const EvalRecord> records, std::span<const std::size_t> members,
                                        std::size_t* cells_used) {
  std::vector<EvalRecord> subset;
  subset.reserve(members.size());
  for (std::size_t i : members) subset.push_back(records[i]);
  const auto cells = group_records(subset, kCellFields);
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& [key, idx] : cells) {
    std::vector<double> xs, ys;
    for (std::size_t i : idx) {
      xs.push_back(subset[i].auc_pr_norm);
      ys.push_back(subset[i].ds);
    }
    if (auto rho = try_spearman(xs, ys)) {
      sum += *rho;
      ++used;
    }
  }
  if (cells_used) *cells_used = used;
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string wide_table(std::span<const EvalRecord> records, bool by_strategy) {
  std::vector<Field> fields{Field::Model, Field::Contrast, Field::Feature};
  if (by_strategy) fields.push_back(Field::Strategy);
  fields.push_back(Field::Method);
  fields.push_back(Field::TrueClass);
  const auto table = aggregate(records, fields, CorrelationMode::Pooled);
  const std::size_t nrow_keys = by_strategy ? 4 : 3;
  std::map<std::vector<std::string>, std::map<std::string, double>> rows;
  for (const auto& row : table.rows) {
    std::vector<std::string> rk(row.keys.begin(), row.keys.begin() + static_cast<std::ptrdiff_t>(nrow_keys));
    const std::string col = row.keys[nrow_keys] + "_C" + row.keys[nrow_keys + 1];
    rows[rk][col] = by_strategy ? row.mean_ds : row.mean_auc_pr_norm;
  }
  std::string out = by_strategy ? "model,contrast,feature,perturbation" : "model,contrast,feature";
  const std::vector<std::string> cols{"GR_C0", "GR_C1", "IG_C0", "IG_C1", "FO_C0", "FO_C1"};
  for (const auto& c : cols) out += "," + c;
  out += '\n';
  for (const auto& [rk, vals] : rows) {
    for (std::size_t i = 0; i < rk.size(); ++i) out += (i ? "," : "") + rk[i];
    for (const auto& c : cols) {
      out += ',';
      if (auto it = vals.find(c); it != vals.end()) out += io::format_double(it->second);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string records_to_csv(std::span<const EvalRecord> records) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.dataset + ',' + r.contrast + ',' + r.feature + ',' + r.model + ',' + r.method + ',' + r.strategy + ',' +
           std::to_string(r.id) + ',' + std::to_string(r.true_class) + ',' + std::to_string(r.pred_class) + ',' +
           io::format_double(r.auc_pr_norm) + ',' + io::format_double(r.ds) + '\n';
  }
  return out;
}

std::vector<EvalRecord> records_from_csv(std::string_view text) {
  const auto table = io::parse_csv(text);
  std::string header;
  for (std::size_t i = 0; i < table.header.size(); ++i) header += (i ? "," : "") + table.header[i];
  if (header != kHeader) throw InvalidInput("unexpected EvalRecord header: " + header);
  std::vector<EvalRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    EvalRecord r;
    r.dataset = row[0];
    r.contrast = row[1];
    r.feature = row[2];
    r.model = row[3];
    r.method = row[4];
    r.strategy = row[5];
    r.id = static_cast<int>(io::parse_int(row[6]));
    r.true_class = static_cast<int>(io::parse_int(row[7]));
    r.pred_class = static_cast<int>(io::parse_int(row[8]));
    r.auc_pr_norm = io::parse_double(row[9]);
    r.ds = io::parse_double(row[10]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidInput("spearman: arguments differ in length");
  if (xs.size() < 3) throw UndefinedCorrelation("spearman: need at least 3 observations");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::isnan(xs[i]) || std::isnan(ys[i])) throw InvalidInput("spearman: NaN input");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("spearman: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> try_spearman(std::span<const double> xs, std::span<const double> ys) {
  try {
    return spearman(xs, ys);
  } catch (const UndefinedCorrelation&) {
    return std::nullopt;
  }
}

std::string_view to_string(Field field) {
  switch (field) {
    case Field::Dataset:
      return "dataset";
    case Field::Contrast:
      return "contrast";
    case Field::Feature:
      return "feature";
    case Field::Model:
      return "model";
    case Field::Method:
      return "method";
    case Field::Strategy:
      return "strategy";
    case Field::TrueClass:
      return "true_class";
    case Field::PredClass:
      return "pred_class";
  }
  return "?";
}

std::string field_value(const EvalRecord& r, Field field) {
  switch (field) {
    case Field::Dataset:
      return r.dataset;
    case Field::Contrast:
      return r.contrast;
    case Field::Feature:
      return r.feature;
    case Field::Model:
      return r.model;
    case Field::Method:
      return r.method;
    case Field::Strategy:
      return r.strategy;
    case Field::TrueClass:
      return std::to_string(r.true_class);
    case Field::PredClass:
      return std::to_string(r.pred_class);
  }
  return {};
}

SummaryTable aggregate(std::span<const EvalRecord> records, std::span<const Field> group_by, CorrelationMode mode) {
  if (records.empty()) throw InvalidInput("aggregate: no records");
  SummaryTable table;
  table.group_by.assign(group_by.begin(), group_by.end());
  for (const auto& [key, members] : group_records(records, group_by)) {
    SummaryRow row;
    row.keys = key;
    row.n = members.size();
    std::vector<double> aucs, dss;
    for (std::size_t i : members) {
      aucs.push_back(records[i].auc_pr_norm);
      dss.push_back(records[i].ds);
    }
    row.mean_auc_pr_norm = mean(aucs);
    row.mean_ds = mean(dss);
    if (mode == CorrelationMode::Pooled) {
      row.rho = try_spearman(aucs, dss);
      row.rho_cells = row.rho ? 1 : 0;
    } else {
      row.rho = cell_averaged_rho(records, members, &row.rho_cells);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

BootstrapInterval bootstrap_mean_difference(std::span<const double> a, std::span<const double> b, int resamples,
                                            std::uint64_t seed, double level) {
  if (a.empty() || b.empty()) throw InvalidInput("bootstrap: both groups must be nonempty");
  if (resamples < 2 || !(level > 0.0 && level < 1.0)) throw InvalidInput("bootstrap: bad resamples or level");
  BootstrapInterval out;
  out.estimate = mean(a) - mean(b);
  Rng rng(seed);
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(resamples));
  const auto draw_mean = [&rng](std::span<const double> xs) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      s += xs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(xs.size()) - 1))];
    }
    return s / static_cast<double>(xs.size());
  };
  for (int r = 0; r < resamples; ++r) {
    const double ma = draw_mean(a);
    const double mb = draw_mean(b);
    diffs.push_back(ma - mb);
  }
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - level) / 2.0;
  out.lower = quantile_sorted(diffs, tail);
  out.upper = quantile_sorted(diffs, 1.0 - tail);
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("mean of an empty range");
  double s = 0.0;
  for (double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}

std::string auc_table_csv(std::span<const EvalRecord> records) { return wide_table(records, false); }

std::string ds_table_csv(std::span<const EvalRecord> records) { return wide_table(records, true); }

std::string class_means_csv(std::span<const EvalRecord> records) {
  const Field fields[] = {Field::Dataset, Field::TrueClass};
  const auto table = aggregate(records, fields, CorrelationMode::Pooled);
  std::string out = "dataset,class,metric,value\n";
  for (const auto& row : table.rows) {
    out += row.keys[0] + ',' + row.keys[1] + ",auc_pr_norm," + io::format_double(row.mean_auc_pr_norm) + '\n';
    out += row.keys[0] + ',' + row.keys[1] + ",ds," + io::format_double(row.mean_ds) + '\n';
  }
  return out;
}

std::string correlation_csv(std::span<const EvalRecord> records, CorrelationMode mode) {
  const Field fields[] = {Field::Dataset, Field::TrueClass};
  const auto table = aggregate(records, fields, mode);
  std::string out = "dataset,class,metric,value\n";
  for (const auto& row : table.rows) {
    out += row.keys[0] + ',' + row.keys[1] + ",spearman," + (row.rho ? io::format_double(*row.rho) : "") + '\n';
  }
  return out;
}

}  // namespace tsattr
