#include <cstdio>
#include <set>
#include <sstream>

#include "abacus/trainer/trainer.hpp"

namespace abacus::trainer {

std::string metrics_csv(const RunReport& report) {
  std::set<std::string> columns;
  for (const auto& e : report.epochs)
    for (const auto& [k, v] : e.train_losses) columns.insert(k);
  std::ostringstream out;
  out << "epoch,seconds," << (report.stage == "finetune" ? "val_auc" : "val_loss");
  for (const auto& c : columns) out << ",loss_" << c;
  out << '\n';
  char buf[64];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof buf, "%.3f,%.10f", e.seconds, e.val_metric);
    out << e.epoch << ',' << buf;
    for (const auto& c : columns) {
      auto it = e.train_losses.find(c);
      if (it == e.train_losses.end()) {
        out << ',';
      } else {
        std::snprintf(buf, sizeof buf, ",%.10f", it->second);
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string summary_text(const RunReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << report.stage << " run '" << report.tag << "' seed " << report.seed << ": " << report.epochs.size()
      << " epochs" << (report.stopped_early ? " (early stop)" : "") << ", best epoch " << report.best_epoch
      << ", best " << (report.stage == "finetune" ? "val AUC " : "val loss ") << report.best_val << '\n';
  if (!report.epochs.empty()) {
    out << "final train losses:";
    for (const auto& [k, v] : report.epochs.back().train_losses) out << ' ' << k << '=' << v;
    out << '\n';
  }
  if (report.entropy_floor) out << "mean histogram entropy (Abacus floor): " << *report.entropy_floor << '\n';
  if (report.test_auc) out << "test AUC: " << *report.test_auc << '\n';
  if (report.std_floor_hits > 0) out << "warning: BT std floor hit " << report.std_floor_hits << " times\n";
  return out.str();
}

}  // namespace abacus::trainer
