#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abacus/data/split.hpp"
#include "abacus/encoders/config.hpp"
#include "abacus/numcore/adamw.hpp"
#include "abacus/numcore/params.hpp"
#include "abacus/pretext/tasks.hpp"

namespace abacus::trainer {

/// Raised when a loss turns NaN/Inf; carries the epoch and batch index.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

struct LoopOptions {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 300;
  std::size_t patience = 10;
  double min_delta = 1e-5;
  /// Evaluation batch size (forward only).
  std::size_t eval_batch_size = 1024;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  /// Mean training loss per task over the epoch, plus "mtl" (pretrain) or
  /// "bce" (finetune).
  std::map<std::string, double> train_losses;
  /// Validation L^MTL (pretrain) or validation AUC (finetune).
  double val_metric = 0.0;
  double seconds = 0.0;
};

struct RunReport {
  std::string stage;  // "pretrain" or "finetune"
  std::string tag;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  bool stopped_early = false;
  std::optional<double> test_auc;
  /// BT columns whose batch std hit the floor.
  std::size_t std_floor_hits = 0;
  /// Pretrain only: mean per-sequence histogram entropy of the train split.
  std::optional<double> entropy_floor;

  std::vector<double> val_curve() const;
};

struct PretrainConfig {
  enc::EncoderConfig encoder;
  pretext::MTLWeights weights;
  pretext::PretextOptions pretext;
  num::AdamWConfig optimizer;
  LoopOptions loop;
  std::uint64_t seed = 0;
  std::string tag = "pretrain";
};

struct PretrainResult {
  /// Parameters at the best validation epoch (embedding, encoder, heads).
  num::ParamStore params;
  RunReport report;
};

/// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Multi-task pretraining: one AdamW step on sum_t w_t L_t per mini-batch,
/// early stopping on validation L^MTL.
PretrainResult pretrain(const PretrainConfig& config, std::span<const data::LabeledExample> train,
                        std::span<const data::LabeledExample> val, const EpochCallback& on_epoch = {});

/// Per-batch random streams shared by the trainer and by any reference loop.
std::uint64_t task_stream_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch, pretext::Task task);
std::uint64_t val_stream_seed(std::uint64_t seed, std::size_t batch, pretext::Task task);
/// [lo, hi) mini-batch ranges; a trailing singleton joins the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size);
/// Training order for an epoch (1-based) over n examples.
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n);

/// Fresh parameters for pretraining: embedding, encoder, and task heads.
num::ParamStore init_pretrain_params(const PretrainConfig& config);

/// Mean validation L^MTL with augmentation streams fixed across epochs.
double validation_mtl_loss(const PretrainConfig& config, num::ParamStore& params,
                           std::span<const data::LabeledExample> val);

inline constexpr std::uint64_t kHeadSeedOffset = 0x4ead5eedULL;

struct FinetuneConfig {
  enc::EncoderConfig encoder;
  num::AdamWConfig optimizer{0.01};
  LoopOptions loop;
  std::uint64_t seed = 0;
  std::size_t head_hidden = 16;
  /// Only the head is updated when set.
  bool freeze_encoder = false;
  std::string tag = "No-PT";
};

struct FinetuneResult {
  /// Parameters at the best validation AUC epoch (embedding, encoder, head).
  num::ParamStore params;
  RunReport report;
};

/// Fresh finetune model: encoder (from the run seed, or copied from
/// `pretrained`) and a head seeded by seed + kHeadSeedOffset.
num::ParamStore init_finetune_params(const FinetuneConfig& config, const num::ParamStore* pretrained);

/// Finetunes embedding + encoder + fresh head with BCE, early stopping on
/// validation AUC, and reports the test AUC of the best epoch.
FinetuneResult finetune(const FinetuneConfig& config, const data::DatasetSplit& split,
                        const num::ParamStore* pretrained, const EpochCallback& on_epoch = {});

/// Purchase probabilities for each example.
std::vector<double> predict(const enc::EncoderConfig& encoder, num::ParamStore& params,
                            std::span<const data::LabeledExample> examples, std::size_t batch_size = 1024);

/// AUC of `predict` against the labels.
double evaluate_auc(const enc::EncoderConfig& encoder, num::ParamStore& params,
                    std::span<const data::LabeledExample> examples, std::size_t batch_size = 1024);

// Report serialization.

/// Header `epoch,seconds,val_metric,<loss columns...>`, one row per epoch.
std::string metrics_csv(const RunReport& report);
std::string summary_text(const RunReport& report);

}  // namespace abacus::trainer
