#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsattr/analysis.hpp"
#include "tsattr/errors.hpp"
#include "tsattr/io.hpp"
#include "tsattr/rng.hpp"

using namespace tsattr;

namespace {

// Hand-rolled rank-Pearson oracle; ranks by counting, ties averaged.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

EvalRecord record(std::string dataset, int true_class, std::string method, int id, double auc, double ds) {
  EvalRecord r;
  r.dataset = std::move(dataset);
  r.contrast = "amplitude";
  r.feature = "sine";
  r.model = "mini-resnet";
  r.method = std::move(method);
  r.strategy = "zero";
  r.id = id;
  r.true_class = true_class;
  r.pred_class = true_class;
  r.auc_pr_norm = auc;
  r.ds = ds;
  return r;
}

std::vector<EvalRecord> random_records(std::uint64_t seed, int per_cell) {
  Rng rng(seed);
  std::vector<EvalRecord> out;
  int id = 0;
  for (const char* d : {"amplitude-sine", "length-pulse"}) {
    for (int c = 0; c < 2; ++c) {
      for (const char* m : {"GR", "IG", "FO"}) {
        for (const char* s : {"zero", "gaussian"}) {
          for (int i = 0; i < per_cell; ++i) {
            auto r = record(d, c, m, id++, rng.uniform() * 2 - 1, rng.uniform() * 2 - 1);
            r.strategy = s;
            out.push_back(r);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> rev(x.rbegin(), x.rend());
  EXPECT_DOUBLE_EQ(spearman(x, x), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, rev), -1.0);
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
}

TEST(Spearman, UndefinedCasesAreErrorsNotZero) {
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{2, 1}), UndefinedCorrelation);
  EXPECT_THROW(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedCorrelation);
  EXPECT_THROW(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}), UndefinedCorrelation);
  EXPECT_FALSE(try_spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value());
  EXPECT_THROW(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), InvalidInput);
}

TEST(Spearman, MatchesRankPearsonOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = static_cast<int>(rng.uniform_int(3, 10));
    std::vector<double> x(static_cast<std::size_t>(k)), y(static_cast<std::size_t>(k));
    for (auto& v : x) v = static_cast<double>(rng.uniform_int(0, 4));
    for (auto& v : y) v = trial % 2 ? rng.normal() : static_cast<double>(rng.uniform_int(0, 4));
    const auto rho = try_spearman(x, y);
    const bool degenerate = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
                            std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    ASSERT_EQ(rho.has_value(), !degenerate);
    if (rho) {
      ASSERT_LT(std::abs(*rho - spearman_oracle(x, y)), 1e-12);
    }
  }
}

TEST(Spearman, InvariantUnderIncreasingTransforms) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    std::vector<double> tx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) tx[i] = std::exp(x[i]) + 5.0;
    EXPECT_EQ(spearman(x, y), spearman(tx, y));
  }
}

TEST(AverageRanks, TiesShareMeanRank) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 10, 30}), (std::vector<double>{1.5, 3, 1.5, 4}));
}

TEST(Aggregate, SingleRecordGroup) {
  const std::vector<EvalRecord> recs{record("amplitude-sine", 0, "GR", 0, 0.25, -0.5)};
  const Field by[] = {Field::Dataset, Field::TrueClass};
  const auto t = aggregate(recs, by);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].keys, (std::vector<std::string>{"amplitude-sine", "0"}));
  EXPECT_EQ(t.rows[0].n, 1u);
  EXPECT_EQ(t.rows[0].mean_auc_pr_norm, 0.25);
  EXPECT_EQ(t.rows[0].mean_ds, -0.5);
  EXPECT_FALSE(t.rows[0].rho.has_value());
}

TEST(Aggregate, AveragesCellCorrelations) {
  // Two cells (GR and IG) with known rank correlations 0.5 and -1.
  std::vector<EvalRecord> recs;
  const std::vector<double> a{1, 2, 3}, b{1, 3, 2}, c{3, 2, 1};
  for (int i = 0; i < 3; ++i) recs.push_back(record("d", 1, "GR", i, a[i], b[i]));
  for (int i = 0; i < 3; ++i) recs.push_back(record("d", 1, "IG", 10 + i, a[i], c[i]));
  const Field by[] = {Field::Dataset, Field::TrueClass};
  const auto cell = aggregate(recs, by, CorrelationMode::CellAveraged);
  ASSERT_EQ(cell.rows.size(), 1u);
  EXPECT_EQ(cell.rows[0].rho_cells, 2u);
  EXPECT_NEAR(*cell.rows[0].rho, (0.5 + -1.0) / 2.0, 1e-15);
  const auto pooled = aggregate(recs, by, CorrelationMode::Pooled);
  std::vector<double> xs, ys;
  for (const auto& r : recs) {
    xs.push_back(r.auc_pr_norm);
    ys.push_back(r.ds);
  }
  EXPECT_NEAR(*pooled.rows[0].rho, spearman_oracle(xs, ys), 1e-12);
}

TEST(Aggregate, CellsWithUndefinedRhoAreSkipped) {
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 3; ++i) recs.push_back(record("d", 0, "GR", i, i, i));
  for (int i = 0; i < 3; ++i) recs.push_back(record("d", 0, "IG", 10 + i, 1.0, i));  // constant AUC
  const Field by[] = {Field::Dataset};
  const auto t = aggregate(recs, by);
  EXPECT_EQ(t.rows[0].rho_cells, 1u);
  EXPECT_DOUBLE_EQ(*t.rows[0].rho, 1.0);
}

TEST(Aggregate, PermutationInvariant) {
  auto recs = random_records(3, 7);
  const Field by[] = {Field::Dataset, Field::TrueClass};
  const auto base = aggregate(recs, by);
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = recs.size(); i > 1; --i) {
      std::swap(recs[i - 1], recs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    const auto t = aggregate(recs, by);
    ASSERT_EQ(t.rows.size(), base.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      EXPECT_EQ(t.rows[r].keys, base.rows[r].keys);
      EXPECT_EQ(t.rows[r].mean_auc_pr_norm, base.rows[r].mean_auc_pr_norm);
      EXPECT_EQ(t.rows[r].mean_ds, base.rows[r].mean_ds);
      EXPECT_EQ(t.rows[r].rho, base.rows[r].rho);
    }
  }
}

TEST(Aggregate, MeansRecompose) {
  const auto recs = random_records(5, 9);  // equal-sized groups
  const Field fine[] = {Field::Dataset, Field::TrueClass, Field::Method};
  const Field coarse[] = {Field::Dataset, Field::TrueClass};
  const auto f = aggregate(recs, fine);
  const auto c = aggregate(recs, coarse);
  for (const auto& row : c.rows) {
    std::vector<double> means;
    for (const auto& fr : f.rows) {
      if (fr.keys[0] == row.keys[0] && fr.keys[1] == row.keys[1]) means.push_back(fr.mean_ds);
    }
    EXPECT_NEAR(mean(means), row.mean_ds, 1e-14);
  }
}

TEST(Aggregate, RhoWithinBounds) {
  const auto recs = random_records(6, 5);
  const Field by[] = {Field::Method};
  for (const auto& row : aggregate(recs, by).rows) {
    ASSERT_TRUE(row.rho.has_value());
    EXPECT_GE(*row.rho, -1.0);
    EXPECT_LE(*row.rho, 1.0);
  }
}

TEST(Aggregate, EmptyInputRejected) {
  const std::vector<EvalRecord> none;
  const Field by[] = {Field::Dataset};
  EXPECT_THROW(aggregate(none, by), InvalidInput);
}

TEST(Records, CsvRoundTrip) {
  const auto recs = random_records(7, 2);
  const auto text = records_to_csv(recs);
  EXPECT_EQ(text.rfind("dataset,contrast,feature,model,method,strategy,id,true_class,pred_class,auc_pr_norm,ds\n", 0),
            0u);
  EXPECT_EQ(records_from_csv(text), recs);
}

TEST(Bootstrap, DeterministicAndContainsEstimate) {
  Rng rng(8);
  std::vector<double> a(100), b(80);
  for (auto& v : a) v = rng.normal() + 1.0;
  for (auto& v : b) v = rng.normal();
  const auto ci = bootstrap_mean_difference(a, b, 2000, 1);
  const auto again = bootstrap_mean_difference(a, b, 2000, 1);
  EXPECT_EQ(ci.lower, again.lower);
  EXPECT_EQ(ci.upper, again.upper);
  EXPECT_NEAR(ci.estimate, mean(a) - mean(b), 1e-15);
  EXPECT_LT(ci.lower, ci.estimate);
  EXPECT_GT(ci.upper, ci.estimate);
  EXPECT_GT(ci.lower, 0.0);
  EXPECT_THROW(bootstrap_mean_difference(a, std::vector<double>{}, 10, 1), InvalidInput);
}

TEST(Reports, TableLayouts) {
  const auto recs = random_records(9, 4);
  const auto auc = io::parse_csv(auc_table_csv(recs));
  EXPECT_EQ(auc.header,
            (std::vector<std::string>{"model", "contrast", "feature", "GR_C0", "GR_C1", "IG_C0", "IG_C1", "FO_C0",
                                      "FO_C1"}));
  EXPECT_EQ(auc.rows.size(), 1u);  // every record shares model/contrast/feature
  const auto ds = io::parse_csv(ds_table_csv(recs));
  EXPECT_EQ(ds.header[3], "perturbation");
  EXPECT_EQ(ds.rows.size(), 2u);
  const auto means = io::parse_csv(class_means_csv(recs));
  EXPECT_EQ(means.header, (std::vector<std::string>{"dataset", "class", "metric", "value"}));
  EXPECT_EQ(means.rows.size(), 2u * 2u * 2u);
  const auto corr = io::parse_csv(correlation_csv(recs));
  EXPECT_EQ(corr.rows.size(), 4u);
  EXPECT_EQ(corr.rows[0][2], "spearman");
}

TEST(Reports, ClassMeansMatchDirectAverages) {
  const auto recs = random_records(10, 3);
  const auto means = io::parse_csv(class_means_csv(recs));
  for (const auto& row : means.rows) {
    std::vector<double> vals;
    for (const auto& r : recs) {
      if (r.dataset == row[0] && std::to_string(r.true_class) == row[1]) {
        vals.push_back(row[2] == "ds" ? r.ds : r.auc_pr_norm);
      }
    }
    EXPECT_NEAR(io::parse_double(row[3]), mean(vals), 1e-14);
  }
}
