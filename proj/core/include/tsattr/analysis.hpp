#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsattr {

// One (dataset, model, method, strategy, instance) evaluation.
struct EvalRecord {
  std::string dataset;
  std::string contrast;
  std::string feature;
  std::string model;
  std::string method;
  std::string strategy;
  int id = 0;
  int true_class = 0;
  int pred_class = 0;
  double auc_pr_norm = 0.0;
  double ds = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

std::string records_to_csv(std::span<const EvalRecord> records);
std::vector<EvalRecord> records_from_csv(std::string_view text);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson correlation of the average-rank vectors. Throws
// UndefinedCorrelation for fewer than 3 points or a constant argument.
double spearman(std::span<const double> xs, std::span<const double> ys);
std::optional<double> try_spearman(std::span<const double> xs, std::span<const double> ys);

enum class Field { Dataset, Contrast, Feature, Model, Method, Strategy, TrueClass, PredClass };
std::string_view to_string(Field field);
std::string field_value(const EvalRecord& record, Field field);

enum class CorrelationMode {
  // rho within each (dataset, true class, model, method, strategy) cell,
  // then the mean of the defined cell values inside each group.
  CellAveraged,
  // one rho over every record in the group.
  Pooled,
};

struct SummaryRow {
  std::vector<std::string> keys;  // one per group_by field
  std::size_t n = 0;
  double mean_auc_pr_norm = 0.0;
  double mean_ds = 0.0;
  std::optional<double> rho;
  std::size_t rho_cells = 0;  // cells contributing to rho
};

struct SummaryTable {
  std::vector<Field> group_by;
  std::vector<SummaryRow> rows;  // sorted by keys
};

SummaryTable aggregate(std::span<const EvalRecord> records, std::span<const Field> group_by,
                       CorrelationMode mode = CorrelationMode::CellAveraged);

struct BootstrapInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap for mean(a) - mean(b), resampling each group
// independently.
BootstrapInterval bootstrap_mean_difference(std::span<const double> a, std::span<const double> b, int resamples,
                                            std::uint64_t seed, double level = 0.95);

double mean(std::span<const double> xs);

// Report layouts.
// Wide AUC table: model,contrast,feature,GR_C0,GR_C1,IG_C0,IG_C1,FO_C0,FO_C1 (mean AUC-PR').
std::string auc_table_csv(std::span<const EvalRecord> records);
// Wide DS table: model,contrast,feature,perturbation,GR_C0,... (mean DS).
std::string ds_table_csv(std::span<const EvalRecord> records);
// dataset,class,metric,value with metric in {auc_pr_norm, ds}, averaged over
// models, methods and strategies.
std::string class_means_csv(std::span<const EvalRecord> records);
// dataset,class,metric,value with metric = spearman.
std::string correlation_csv(std::span<const EvalRecord> records, CorrelationMode mode = CorrelationMode::CellAveraged);

}  // namespace tsattr
