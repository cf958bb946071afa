#include "abacus/trainer/early_stop.hpp"

namespace abacus::trainer {

bool EarlyStopper::update(double value) {
  ++epoch_;
  const bool better = !best_ || (mode_ == StopMode::maximize ? value > *best_ + min_delta_
                                                             : value < *best_ - min_delta_);
  improved_last_ = better;
  if (better) {
    best_ = value;
    best_epoch_ = epoch_;
    stale_ = 0;
    return false;
  }
  return ++stale_ >= patience_;
}

StopDecision early_stop(std::span<const double> history, std::size_t patience, StopMode mode, double min_delta) {
  EarlyStopper stopper(patience, mode, min_delta);
  StopDecision d;
  for (double v : history) {
    if (stopper.update(v)) {
      d.stop_epoch = stopper.epochs_seen();
      break;
    }
  }
  d.best_epoch = stopper.best_epoch();
  return d;
}

}  // namespace abacus::trainer
