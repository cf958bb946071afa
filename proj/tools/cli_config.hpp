#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "abacus/encoders/config.hpp"
#include "abacus/pretext/tasks.hpp"
#include "abacus/trainer/trainer.hpp"

namespace abacus::cli {

/// Every violated key, reported together.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | corpus | taobao
  std::string path;                   // resolved; corpus and taobao only
  std::uint64_t seed = 0;
  std::size_t users = 20000;
  int num_event_types = 6;
  std::size_t max_len = 50;
  std::string profile = "two-archetype";
  std::array<double, 3> split{0.8, 0.1, 0.1};
};

struct RunConfig {
  DatasetConfig dataset;
  enc::EncoderConfig encoder;
  pretext::MTLWeights weights;
  pretext::PretextOptions pretext;
  num::AdamWConfig pretrain_optimizer;
  num::AdamWConfig finetune_optimizer{0.01};
  trainer::LoopOptions pretrain_loop;
  trainer::LoopOptions finetune_loop;
  bool freeze_encoder = false;
  std::string tag;  // empty: derived from the command and tasks
  std::vector<std::uint64_t> seeds{0};
  std::string hash;  // of the canonical document
};

/// Relative read paths resolve against ABACUS_DATA_ROOT when it is set.
std::string resolve_data_path(const std::string& path);

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace abacus::cli
