#include <chrono>
#include <cmath>
#include <numeric>

#include "abacus/numcore/rng.hpp"
#include "abacus/encoders/encoder.hpp"
#include "abacus/trainer/early_stop.hpp"
#include "abacus/trainer/trainer.hpp"

namespace abacus::trainer {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f1ULL;
constexpr std::uint64_t kTaskStream = 0x7a5ULL;
constexpr std::uint64_t kValStream = 0x7a1ULL;

std::vector<data::EventSequence> histories(std::span<const data::LabeledExample> examples) {
  std::vector<data::EventSequence> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.history);
  return out;
}

void check_finite(double v, const std::string& what, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(v)) {
    throw NumericalError("non-finite " + what + " at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch),
                         epoch, batch);
  }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t lo = 0; lo < n; lo += batch_size) out.emplace_back(lo, std::min(n, lo + batch_size));
  // A trailing singleton cannot feed batch statistics; fold it into the previous batch.
  if (out.size() > 1 && out.back().second - out.back().first < 2) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

std::vector<double> RunReport::val_curve() const {
  std::vector<double> v;
  for (const auto& e : epochs) v.push_back(e.val_metric);
  return v;
}

std::uint64_t task_stream_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch, pretext::Task task) {
  return derive_seed({seed, kTaskStream, epoch, batch, static_cast<std::uint64_t>(task)});
}

std::uint64_t val_stream_seed(std::uint64_t seed, std::size_t batch, pretext::Task task) {
  return derive_seed({seed, kValStream, batch, static_cast<std::uint64_t>(task)});
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, kShuffleStream, epoch}));
  rng.shuffle(order.begin(), order.end());
  return order;
}

num::ParamStore init_pretrain_params(const PretrainConfig& config) {
  num::ParamStore params;
  Rng enc_rng(derive_seed({config.seed, 1}));
  enc::init_encoder(params, config.encoder, enc_rng);
  for (auto task : config.weights.tasks()) {
    Rng head_rng(derive_seed({config.seed, 2, static_cast<std::uint64_t>(task)}));
    pretext::init_task_head(params, task, config.encoder, config.pretext, head_rng);
  }
  return params;
}

double validation_mtl_loss(const PretrainConfig& config, num::ParamStore& params,
                           std::span<const data::LabeledExample> val) {
  if (val.empty()) throw std::invalid_argument("pretrain: validation split is empty");
  const auto seqs = histories(val);
  const auto ranges = batch_ranges(seqs.size(), config.loop.batch_size);
  double total = 0.0;
  for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
    const auto [lo, hi] = ranges[bi];
    std::span<const data::EventSequence> batch(seqs.data() + lo, hi - lo);
    num::Tape tape;
    std::vector<std::pair<pretext::Task, num::Var>> losses;
    for (auto task : config.weights.tasks()) {
      Rng rng(val_stream_seed(config.seed, bi, task));
      losses.emplace_back(task, pretext::task_loss(task, tape, params, config.encoder, batch, rng, config.pretext));
    }
    total += pretext::mtl_loss(losses, config.weights).scalar() * static_cast<double>(hi - lo);
  }
  return total / static_cast<double>(seqs.size());
}

PretrainResult pretrain(const PretrainConfig& config, std::span<const data::LabeledExample> train,
                        std::span<const data::LabeledExample> val, const EpochCallback& on_epoch) {
  pretext::validate(config.weights);
  enc::validate(config.encoder);
  if (config.loop.batch_size < 2) throw std::invalid_argument("pretrain: batch size must be >= 2");
  if (config.loop.max_epochs < 1) throw std::invalid_argument("pretrain: max_epochs must be >= 1");
  if (train.empty()) throw std::invalid_argument("pretrain: training split is empty");

  PretrainResult result;
  auto& report = result.report;
  report.stage = "pretrain";
  report.tag = config.tag;
  report.seed = config.seed;

  num::ParamStore params = init_pretrain_params(config);
  num::AdamW optimizer(config.optimizer);
  const auto seqs = histories(train);
  report.entropy_floor = pretext::mean_histogram_entropy(seqs, config.encoder.num_event_types);

  EarlyStopper stopper(config.loop.patience, StopMode::minimize, config.loop.min_delta);
  num::ParamStore best = params;
  std::vector<data::EventSequence> batch;
  for (std::size_t epoch = 1; epoch <= config.loop.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = epoch_order(config.seed, epoch, seqs.size());
    const auto ranges = batch_ranges(seqs.size(), config.loop.batch_size);
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
      const auto [lo, hi] = ranges[bi];
      batch.clear();
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(seqs[order[i]]);
      const double weight = static_cast<double>(hi - lo) / static_cast<double>(seqs.size());

      num::Tape tape;
      std::vector<std::pair<pretext::Task, num::Var>> losses;
      for (auto task : config.weights.tasks()) {
        Rng rng(task_stream_seed(config.seed, epoch, bi, task));
        auto loss = pretext::task_loss(task, tape, params, config.encoder, batch, rng, config.pretext);
        check_finite(loss.scalar(), pretext::to_string(task) + " loss", epoch, bi);
        record.train_losses[pretext::to_string(task)] += loss.scalar() * weight;
        losses.emplace_back(task, loss);
      }
      auto total = pretext::mtl_loss(losses, config.weights);
      check_finite(total.scalar(), "L^MTL", epoch, bi);
      record.train_losses["mtl"] += total.scalar() * weight;
      tape.backward(total);
      report.std_floor_hits += tape.std_floor_hits();
      try {
        optimizer.step(params);
      } catch (const num::NonFiniteGradient& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(bi),
                             epoch, bi);
      }
    }
    record.val_metric = validation_mtl_loss(config, params, val);
    check_finite(record.val_metric, "validation L^MTL", epoch, 0);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(record);

    const bool stop = stopper.update(record.val_metric);
    if (stopper.improved_last()) best = params;
    const bool keep_going = !on_epoch || on_epoch(record);
    if (stop) {
      report.stopped_early = true;
      break;
    }
    if (!keep_going) break;
  }
  report.best_epoch = stopper.best_epoch();
  report.best_val = stopper.best_value().value_or(0.0);
  result.params = std::move(best);
  return result;
}

}  // namespace abacus::trainer
