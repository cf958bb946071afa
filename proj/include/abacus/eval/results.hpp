#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace abacus::eval {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) estimator; 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct ResultRow {
  std::string model;
  std::string encoder;
  double auc_mean = 0.0;
  double auc_std = 0.0;
  double delta_pct = 0.0;
  std::size_t seeds = 0;
};

/// Mean, std and 100 * (mean - baseline mean) / baseline mean.
/// Requires at least two seeds and as many baseline seeds.
ResultRow aggregate(const std::string& model, const std::string& encoder, std::span<const double> aucs,
                    std::span<const double> baseline_aucs);

struct ResultTable {
  std::vector<ResultRow> rows;
};

/// Aligned text in the layout "Model  AUC +- std  Delta (%)", grouped by encoder.
std::string format_text(const ResultTable& table);
/// Header: Model,Encoder,AUC,AUC std,Delta (%),Seeds
std::string format_csv(const ResultTable& table);

struct CurveRun {
  std::string tag;
  std::uint64_t seed = 0;
  std::vector<double> val_auc;  // index 0 is epoch 1
};

/// Long format `run,seed,epoch,val_auc`, sorted by (run, seed, epoch).
std::string export_curves(std::vector<CurveRun> runs);

}  // namespace abacus::eval
