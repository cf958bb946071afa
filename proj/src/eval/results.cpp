#include "abacus/eval/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace abacus::eval {

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: no values");
  MeanStd r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

ResultRow aggregate(const std::string& model, const std::string& encoder, std::span<const double> aucs,
                    std::span<const double> baseline_aucs) {
  if (aucs.size() < 2) throw std::invalid_argument("aggregate: need at least 2 seeds for a std");
  if (aucs.size() != baseline_aucs.size()) {
    throw std::invalid_argument("aggregate: " + std::to_string(aucs.size()) + " seeds vs " +
                                std::to_string(baseline_aucs.size()) + " baseline seeds");
  }
  const auto ms = mean_std(aucs);
  const auto base = mean_std(baseline_aucs);
  ResultRow row{model, encoder, ms.mean, ms.std, 0.0, aucs.size()};
  row.delta_pct = 100.0 * (ms.mean - base.mean) / base.mean;
  return row;
}

std::string format_text(const ResultTable& table) {
  std::map<std::string, std::vector<const ResultRow*>> by_encoder;
  for (const auto& r : table.rows) by_encoder[r.encoder].push_back(&r);
  std::ostringstream out;
  char buf[256];
  for (const auto& [encoder, rows] : by_encoder) {
    out << "[" << encoder << "]\n";
    std::snprintf(buf, sizeof buf, "%-16s %-20s %10s\n", "Model", "AUC", "Delta (%)");
    out << buf;
    for (const auto* r : rows) {
      std::snprintf(buf, sizeof buf, "%-16s %.4f +- %.4f %+10.2f\n", r->model.c_str(), r->auc_mean, r->auc_std,
                    r->delta_pct);
      out << buf;
    }
  }
  return out.str();
}

std::string format_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "Model,Encoder,AUC,AUC std,Delta (%),Seeds\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.4f,%zu\n", r.model.c_str(), r.encoder.c_str(), r.auc_mean,
                  r.auc_std, r.delta_pct, r.seeds);
    out << buf;
  }
  return out.str();
}

std::string export_curves(std::vector<CurveRun> runs) {
  std::sort(runs.begin(), runs.end(), [](const CurveRun& a, const CurveRun& b) {
    return a.tag != b.tag ? a.tag < b.tag : a.seed < b.seed;
  });
  std::ostringstream out;
  out << "run,seed,epoch,val_auc\n";
  char buf[64];
  for (const auto& r : runs) {
    for (std::size_t e = 0; e < r.val_auc.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%.10f", r.val_auc[e]);
      out << r.tag << ',' << r.seed << ',' << (e + 1) << ',' << buf << '\n';
    }
  }
  return out.str();
}

}  // namespace abacus::eval
