#include <cstdio>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace abacus::cli;

int main(int argc, char** argv) {
  CLI::App app{"Counting-aligned self-supervised pretraining for event sequences"};
  app.require_subcommand(1);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic labeled corpus");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
  gen_cmd->add_option("--users", gen.users, "Number of users")->required();
  gen_cmd->add_option("--k", gen.k, "Number of event types")->required();
  gen_cmd->add_option("--max-len", gen.max_len, "Sequence length")->required();
  gen_cmd->add_option("--profile", gen.profile, "two-archetype, single or uniform")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output corpus file")->required();

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest-taobao", "Convert a UserBehavior CSV into a corpus file");
  ingest_cmd->add_option("--input", ingest.input, "UserBehavior.csv")->required();
  ingest_cmd->add_option("--out", ingest.out, "Output corpus file")->required();
  ingest_cmd->add_option("--max-len", ingest.max_len, "History length")->capture_default_str();
  ingest_cmd->add_option("--window", ingest.window_fraction, "Trailing labeling window fraction")
      ->capture_default_str();

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Dataset statistics: PPL, Gini-Simpson, label mean");
  diag_cmd->add_option("--data", diag.data, "Corpus file")->required();
  diag_cmd->add_flag("--taobao", diag.taobao, "Read a raw UserBehavior CSV");
  diag_cmd->add_flag("--key-value", diag.key_value, "Machine-readable key=value output");

  RunArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Multi-task pretext pretraining for every seed");
  pre_cmd->add_option("--config", pre.config, "Run config (JSON)")->required();
  pre_cmd->add_flag("-q,--quiet", pre.quiet, "No per-epoch progress");

  RunArgs fine;
  auto* fine_cmd = app.add_subcommand("finetune", "Purchase-prediction finetuning for every seed");
  fine_cmd->add_option("--config", fine.config, "Run config (JSON)")->required();
  fine_cmd->add_option("--checkpoint", fine.checkpoint, "Pretrain run directory or checkpoint file");
  fine_cmd->add_option("--baseline", fine.baseline, "Finished No-PT finetune run directory");
  fine_cmd->add_flag("-q,--quiet", fine.quiet, "No per-epoch progress");

  RunArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Test AUC of finetuned models");
  ev_cmd->add_option("--config", ev.config, "Run config (JSON)")->required();
  ev_cmd->add_option("--model", ev.model, "Finetune run directory or checkpoint file")->required();

  TableArgs table;
  auto* table_cmd = app.add_subcommand("table", "Combine finetune runs into one result table");
  table_cmd->add_option("--runs", table.runs, "Finetune run directories")->required();
  table_cmd->add_option("--baseline-tag", table.baseline_tag, "Reference row for Delta (%)")->capture_default_str();
  table_cmd->add_flag("--csv", table.csv, "Comma-separated output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return cmd_gen_synth(gen);
    if (*ingest_cmd) return cmd_ingest_taobao(ingest);
    if (*diag_cmd) return cmd_diagnose(diag);
    if (*pre_cmd) return cmd_pretrain(pre);
    if (*fine_cmd) return cmd_finetune(fine);
    if (*ev_cmd) return cmd_evaluate(ev);
    if (*table_cmd) return cmd_table(table);
  } catch (...) {
    return report_current_exception();
  }
  return kExitFailure;
}
