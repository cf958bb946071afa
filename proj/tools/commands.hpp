#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abacus::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

struct GenSynthArgs {
  std::uint64_t seed = 0;
  std::size_t users = 1000;
  int k = 6;
  std::size_t max_len = 50;
  std::string profile = "two-archetype";
  std::string out;
};

struct IngestArgs {
  std::string input;
  std::string out;
  std::size_t max_len = 100;
  double window_fraction = 0.125;
};

struct DiagnoseArgs {
  std::string data;
  bool taobao = false;  // raw UserBehavior CSV instead of a corpus file
  bool key_value = false;
};

struct RunArgs {
  std::string config;
  std::string checkpoint;  // finetune: pretrain run directory or checkpoint file
  std::string baseline;    // finetune: No-PT run directory to compare against
  std::string model;       // evaluate: finetune run directory or checkpoint file
  bool quiet = false;
};

struct TableArgs {
  std::vector<std::string> runs;
  std::string baseline_tag = "No-PT";
  bool csv = false;
};

int cmd_gen_synth(const GenSynthArgs& args);
int cmd_ingest_taobao(const IngestArgs& args);
int cmd_diagnose(const DiagnoseArgs& args);
int cmd_pretrain(const RunArgs& args);
int cmd_finetune(const RunArgs& args);
int cmd_evaluate(const RunArgs& args);
int cmd_table(const TableArgs& args);

/// Call inside a catch block: prints the active exception and returns its exit code.
int report_current_exception();

}  // namespace abacus::cli
