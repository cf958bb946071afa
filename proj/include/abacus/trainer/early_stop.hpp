#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace abacus::trainer {

enum class StopMode { maximize, minimize };

struct StopDecision {
  /// 1-based epoch at which training stops, if it stops within the history.
  std::optional<std::size_t> stop_epoch;
  /// 1-based epoch with the best metric so far.
  std::size_t best_epoch = 0;
};

/// Incremental early stopping: an epoch improves when it beats the best
/// value by more than `min_delta`; training stops after `patience`
/// consecutive non-improving epochs.
class EarlyStopper {
 public:
  EarlyStopper(std::size_t patience, StopMode mode, double min_delta = 1e-5)
      : patience_(patience), mode_(mode), min_delta_(min_delta) {}

  /// Feeds the next epoch's metric. Returns true when training should stop.
  bool update(double value);

  std::size_t best_epoch() const { return best_epoch_; }
  std::optional<double> best_value() const { return best_; }
  std::size_t epochs_seen() const { return epoch_; }
  bool improved_last() const { return improved_last_; }

 private:
  std::size_t patience_;
  StopMode mode_;
  double min_delta_;
  std::optional<double> best_;
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t stale_ = 0;
  bool improved_last_ = false;
};

StopDecision early_stop(std::span<const double> history, std::size_t patience, StopMode mode,
                        double min_delta = 1e-5);

}  // namespace abacus::trainer
