#include <chrono>
#include <cmath>

#include "abacus/encoders/encoder.hpp"
#include "abacus/eval/auc.hpp"
#include "abacus/numcore/rng.hpp"
#include "abacus/pretext/losses.hpp"
#include "abacus/trainer/early_stop.hpp"
#include "abacus/trainer/trainer.hpp"

namespace abacus::trainer {

namespace {

constexpr const char* kHead = "finetune";

num::Var forward_logits(num::Tape& tape, const enc::EncoderConfig& encoder, num::ParamStore& params,
                        std::span<const data::LabeledExample> examples) {
  std::vector<augment::AugmentedView> views;
  views.reserve(examples.size());
  for (const auto& ex : examples) views.push_back(augment::identity(ex.history));
  auto encoded = enc::encode(tape, params, encoder, views);
  return pretext::apply_mlp_head(tape, params, kHead, encoded.summary);
}

std::vector<int> labels_of(std::span<const data::LabeledExample> examples) {
  std::vector<int> y;
  y.reserve(examples.size());
  for (const auto& ex : examples) y.push_back(ex.label);
  return y;
}

bool has_both_classes(std::span<const data::LabeledExample> examples) {
  bool pos = false, neg = false;
  for (const auto& ex : examples) (ex.label == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

num::ParamStore init_finetune_params(const FinetuneConfig& config, const num::ParamStore* pretrained) {
  num::ParamStore params;
  Rng enc_rng(derive_seed({config.seed, 1}));
  enc::init_encoder(params, config.encoder, enc_rng);
  if (pretrained != nullptr) {
    std::size_t expected = 0;
    for (const auto* p : params.all()) expected += enc::is_encoder_param(p->name) ? 1 : 0;
    const std::size_t copied =
        params.copy_values_from(*pretrained, "embed.") + params.copy_values_from(*pretrained, "enc.");
    if (copied != expected) {
      throw std::invalid_argument("pretrained parameters cover " + std::to_string(copied) + " of " +
                                  std::to_string(expected) + " encoder arrays");
    }
  }
  Rng head_rng(derive_seed({config.seed, kHeadSeedOffset}));
  pretext::init_mlp_head(params, kHead, config.encoder.hidden_dim, config.head_hidden, 1, head_rng);
  return params;
}

std::vector<double> predict(const enc::EncoderConfig& encoder, num::ParamStore& params,
                            std::span<const data::LabeledExample> examples, std::size_t batch_size) {
  std::vector<double> scores;
  scores.reserve(examples.size());
  for (std::size_t lo = 0; lo < examples.size(); lo += batch_size) {
    const std::size_t hi = std::min(examples.size(), lo + batch_size);
    num::Tape tape;
    auto logits = forward_logits(tape, encoder, params, examples.subspan(lo, hi - lo));
    for (double z : logits.value().data()) scores.push_back(1.0 / (1.0 + std::exp(-z)));
  }
  return scores;
}

double evaluate_auc(const enc::EncoderConfig& encoder, num::ParamStore& params,
                    std::span<const data::LabeledExample> examples, std::size_t batch_size) {
  const auto scores = predict(encoder, params, examples, batch_size);
  const auto labels = labels_of(examples);
  return eval::auc(scores, labels);
}

FinetuneResult finetune(const FinetuneConfig& config, const data::DatasetSplit& split,
                        const num::ParamStore* pretrained, const EpochCallback& on_epoch) {
  enc::validate(config.encoder);
  if (config.loop.batch_size < 2) throw std::invalid_argument("finetune: batch size must be >= 2");
  if (config.loop.max_epochs < 1) throw std::invalid_argument("finetune: max_epochs must be >= 1");
  if (split.train.empty()) throw std::invalid_argument("finetune: training split is empty");
  if (!has_both_classes(split.val)) throw eval::MetricError("finetune: validation split needs both label classes");

  FinetuneResult result;
  auto& report = result.report;
  report.stage = "finetune";
  report.tag = config.tag;
  report.seed = config.seed;

  num::ParamStore params = init_finetune_params(config, pretrained);
  std::vector<num::ParamArray*> trainable;
  for (auto* p : params.all())
    if (!config.freeze_encoder || !enc::is_encoder_param(p->name)) trainable.push_back(p);
  num::AdamW optimizer(config.optimizer);
  EarlyStopper stopper(config.loop.patience, StopMode::maximize, config.loop.min_delta);
  num::ParamStore best = params;

  const auto& train = split.train;
  std::vector<data::LabeledExample> batch;
  for (std::size_t epoch = 1; epoch <= config.loop.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = epoch_order(config.seed, epoch, train.size());
    const auto ranges = batch_ranges(train.size(), config.loop.batch_size);
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
      const auto [lo, hi] = ranges[bi];
      batch.clear();
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(train[order[i]]);
      num::Tape tape;
      auto loss = pretext::loss_bce(forward_logits(tape, config.encoder, params, batch), labels_of(batch));
      if (!std::isfinite(loss.scalar())) {
        throw NumericalError("non-finite BCE at epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi),
                             epoch, bi);
      }
      record.train_losses["bce"] += loss.scalar() * static_cast<double>(hi - lo) / static_cast<double>(train.size());
      tape.backward(loss);
      try {
        optimizer.step(trainable);
      } catch (const num::NonFiniteGradient& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(bi),
                             epoch, bi);
      }
      if (config.freeze_encoder) params.zero_grad();
    }
    record.val_metric = evaluate_auc(config.encoder, params, split.val, config.loop.eval_batch_size);
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
  if (has_both_classes(split.test)) {
    report.test_auc = evaluate_auc(config.encoder, best, split.test, config.loop.eval_batch_size);
  }
  result.params = std::move(best);
  return result;
}

}  // namespace abacus::trainer
