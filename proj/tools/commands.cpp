#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "abacus/data/corpus_io.hpp"
#include "abacus/data/diagnostics.hpp"
#include "abacus/data/split.hpp"
#include "abacus/data/synthetic.hpp"
#include "abacus/data/taobao.hpp"
#include "abacus/encoders/checkpoint.hpp"
#include "abacus/eval/auc.hpp"
#include "abacus/eval/results.hpp"
#include "abacus/trainer/trainer.hpp"
#include "cli_config.hpp"

namespace abacus::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCompleteMarker = "COMPLETE";
constexpr const char* kAucFile = "aucs.csv";

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// <run root>/<config hash>-<command>-<UTC timestamp>, with a numeric suffix on collision.
fs::path make_run_dir(const RunConfig& cfg, const std::string& command) {
  const char* env = std::getenv("ABACUS_RUN_ROOT");
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  const std::string base = cfg.hash + "-" + command + "-" + stamp;
  fs::path dir = root / base;
  for (int i = 1; fs::exists(dir); ++i) dir = root / (base + "-" + std::to_string(i));
  fs::create_directories(dir);
  return dir;
}

void mark_complete(const fs::path& dir) { write_file(dir / kCompleteMarker, "ok\n"); }

data::SyntheticSpec spec_for(const std::string& profile, int k) {
  if (profile == "two-archetype") return data::two_archetype_spec(k);
  if (profile == "single") return data::single_archetype_spec(k);
  if (profile == "uniform") return data::uniform_spec(k);
  throw ConfigError({"unknown synthetic profile '" + profile + "'"});
}

data::Corpus load_dataset(RunConfig& cfg) {
  const auto& d = cfg.dataset;
  data::Corpus corpus;
  if (d.source == "synthetic") {
    corpus = data::gen_synthetic(d.seed, d.users, d.num_event_types, d.max_len, spec_for(d.profile, d.num_event_types));
  } else if (d.source == "corpus") {
    corpus = data::load_corpus(d.path);
  } else {
    data::TaobaoOptions options;
    options.max_len = d.max_len;
    corpus = data::ingest_taobao(d.path, options).corpus;
  }
  cfg.encoder.num_event_types = corpus.num_event_types;
  cfg.encoder.max_len = corpus.max_len;
  enc::validate(cfg.encoder);
  return corpus;
}

std::string display_name(pretext::Task task) {
  switch (task) {
    case pretext::Task::abacus: return "Abacus";
    case pretext::Task::abacus_r: return "Abacus-R";
    case pretext::Task::abacus_m: return "Abacus-M";
    case pretext::Task::msm: return "MSM";
    case pretext::Task::bt: return "BT";
    case pretext::Task::nep: return "NEP";
    case pretext::Task::nkehp: return "NKEHP";
  }
  return "?";
}

std::string tasks_tag(const pretext::MTLWeights& w) {
  std::string tag;
  for (const auto& [task, weight] : w.weights) tag += (tag.empty() ? "" : "+") + display_name(task);
  return tag;
}

trainer::EpochCallback progress(bool quiet, const std::string& label) {
  if (quiet) return {};
  return [label](const trainer::EpochRecord& e) {
    std::fprintf(stderr, "[%s] epoch %zu", label.c_str(), e.epoch);
    for (const auto& [k, v] : e.train_losses) std::fprintf(stderr, " %s=%.5f", k.c_str(), v);
    std::fprintf(stderr, " val=%.5f (%.1fs)\n", e.val_metric, e.seconds);
    return true;
  };
}

void save_report(const fs::path& dir, const trainer::RunReport& report) {
  write_file(dir / "metrics.csv", trainer::metrics_csv(report));
  write_file(dir / "summary.txt", trainer::summary_text(report));
}

fs::path seed_dir(const fs::path& run, std::uint64_t seed) { return run / ("seed-" + std::to_string(seed)); }

/// A directory argument means one checkpoint per seed; a file is shared by all seeds.
std::string checkpoint_for(const std::string& arg, std::uint64_t seed) {
  if (fs::is_directory(arg)) {
    if (!fs::exists(fs::path(arg) / kCompleteMarker)) {
      throw data::DataError("run directory " + arg + " has no completion marker");
    }
    const fs::path p = seed_dir(arg, seed) / "checkpoint.bin";
    if (!fs::exists(p)) throw data::DataError("no checkpoint for seed " + std::to_string(seed) + " in " + arg);
    return p.string();
  }
  if (!fs::exists(arg)) throw data::DataError("no such checkpoint: " + arg);
  return arg;
}

struct AucRecord {
  std::string tag;
  std::string encoder;
  std::uint64_t seed = 0;
  double auc = 0.0;
};

std::string auc_csv(const std::vector<AucRecord>& rows) {
  std::ostringstream out;
  out << "tag,encoder,seed,test_auc\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12f", r.auc);
    out << r.tag << ',' << r.encoder << ',' << r.seed << ',' << buf << '\n';
  }
  return out.str();
}

std::vector<AucRecord> read_aucs(const fs::path& run) {
  if (!fs::exists(run / kCompleteMarker)) throw data::DataError("run directory " + run.string() + " is incomplete");
  std::istringstream in(read_file(run / kAucFile));
  std::string line;
  std::getline(in, line);
  std::vector<AucRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    AucRecord r;
    std::string seed, auc;
    if (!std::getline(fields, r.tag, ',') || !std::getline(fields, r.encoder, ',') || !std::getline(fields, seed, ',') ||
        !std::getline(fields, auc)) {
      throw data::DataError("malformed row in " + (run / kAucFile).string() + ": " + line);
    }
    r.seed = std::stoull(seed);
    r.auc = std::stod(auc);
    rows.push_back(r);
  }
  return rows;
}

/// Rows grouped by (encoder, tag) in first-seen order, with the baseline tag first per encoder.
eval::ResultTable build_table(const std::vector<AucRecord>& records, const std::string& baseline_tag) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<AucRecord>> groups;
  for (const auto& r : records) {
    auto key = std::make_pair(r.encoder, r.tag);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(r);
  }
  std::stable_sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return (a.second == baseline_tag) > (b.second == baseline_tag);
  });
  auto values = [](const std::vector<AucRecord>& rs) {
    std::vector<AucRecord> sorted = rs;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    std::vector<double> v;
    for (const auto& r : sorted) v.push_back(r.auc);
    return v;
  };
  eval::ResultTable table;
  for (const auto& key : keys) {
    auto base = groups.find({key.first, baseline_tag});
    if (base == groups.end()) {
      throw data::DataError("no " + baseline_tag + " baseline for encoder " + key.first);
    }
    table.rows.push_back(eval::aggregate(key.second, key.first, values(groups[key]), values(base->second)));
  }
  return table;
}

void write_table(const fs::path& dir, const eval::ResultTable& table) {
  write_file(dir / "results.txt", eval::format_text(table));
  write_file(dir / "results.csv", eval::format_csv(table));
}

}  // namespace

int cmd_gen_synth(const GenSynthArgs& args) {
  if (args.k < 2) {
    throw ConfigError({"--k must be >= 2: a single event type leaves nothing to count"});
  }
  if (args.users < 1) throw ConfigError({"--users must be >= 1"});
  if (args.max_len < 1) throw ConfigError({"--max-len must be >= 1"});
  const auto corpus = data::gen_synthetic(args.seed, args.users, args.k, args.max_len, spec_for(args.profile, args.k));
  data::save_corpus(args.out, corpus);
  std::printf("wrote %zu examples to %s\n", corpus.examples.size(), args.out.c_str());
  return kExitOk;
}

int cmd_ingest_taobao(const IngestArgs& args) {
  data::TaobaoOptions options;
  options.max_len = args.max_len;
  options.label_window_fraction = args.window_fraction;
  const auto result = data::ingest_taobao(resolve_data_path(args.input), options);
  data::save_corpus(args.out, result.corpus);
  std::printf("rows_read=%zu rows_rejected=%zu users=%zu users_dropped=%zu window_boundary=%.0f\n",
              result.stats.rows_read, result.stats.rows_rejected, result.corpus.examples.size(),
              result.stats.users_dropped, result.stats.window_boundary);
  return kExitOk;
}

int cmd_diagnose(const DiagnoseArgs& args) {
  const std::string path = resolve_data_path(args.data);
  const data::Corpus corpus = args.taobao ? data::ingest_taobao(path).corpus : data::load_corpus(path);
  const auto d = data::diagnostics(corpus.examples, corpus.num_event_types);
  std::fputs((args.key_value ? data::format_key_value(d) : data::format_human(d)).c_str(), stdout);
  return kExitOk;
}

int cmd_pretrain(const RunArgs& args) {
  RunConfig cfg = load_config(args.config);
  if (cfg.weights.weights.empty()) throw ConfigError({"pretrain_tasks: required for pretraining"});
  const data::Corpus corpus = load_dataset(cfg);
  const auto split = data::time_split(corpus.examples, cfg.dataset.split);
  const fs::path run = make_run_dir(cfg, "pretrain");
  fs::copy_file(args.config, run / "config.json");
  const std::string tag = cfg.tag.empty() ? tasks_tag(cfg.weights) : cfg.tag;

  std::vector<eval::CurveRun> curves;
  for (std::uint64_t seed : cfg.seeds) {
    trainer::PretrainConfig pc;
    pc.encoder = cfg.encoder;
    pc.weights = cfg.weights;
    pc.pretext = cfg.pretext;
    pc.optimizer = cfg.pretrain_optimizer;
    pc.loop = cfg.pretrain_loop;
    pc.seed = seed;
    pc.tag = tag;
    const auto result =
        trainer::pretrain(pc, split.train, split.val, progress(args.quiet, "pretrain seed " + std::to_string(seed)));
    const fs::path dir = seed_dir(run, seed);
    fs::create_directories(dir);
    enc::save_checkpoint((dir / "checkpoint.bin").string(), enc::fingerprint(cfg.encoder), result.params);
    save_report(dir, result.report);
    curves.push_back({tag, seed, result.report.val_curve()});
    std::printf("seed %llu: best epoch %zu, val L_MTL %.6f\n", static_cast<unsigned long long>(seed),
                result.report.best_epoch, result.report.best_val);
  }
  write_file(run / "curves.csv", eval::export_curves(curves));
  mark_complete(run);
  std::printf("run directory: %s\n", run.string().c_str());
  return kExitOk;
}

int cmd_finetune(const RunArgs& args) {
  RunConfig cfg = load_config(args.config);
  const data::Corpus corpus = load_dataset(cfg);
  const auto split = data::time_split(corpus.examples, cfg.dataset.split);
  const std::string encoder_name = enc::to_string(cfg.encoder.kind);
  const bool pretrained = !args.checkpoint.empty();
  std::string tag = cfg.tag;
  if (tag.empty()) tag = pretrained ? (cfg.weights.weights.empty() ? "PT" : tasks_tag(cfg.weights)) : "No-PT";

  // Fail on missing checkpoints before any training.
  std::map<std::uint64_t, num::ParamStore> encoders;
  if (pretrained) {
    for (std::uint64_t seed : cfg.seeds) {
      encoders[seed] = enc::load_checkpoint(checkpoint_for(args.checkpoint, seed), enc::fingerprint(cfg.encoder)).params;
    }
  }
  std::vector<AucRecord> baseline;
  if (!args.baseline.empty()) {
    for (const auto& r : read_aucs(args.baseline))
      if (r.tag == "No-PT" && r.encoder == encoder_name) baseline.push_back(r);
    if (baseline.size() != cfg.seeds.size()) {
      throw data::DataError("baseline run has " + std::to_string(baseline.size()) + " " + encoder_name +
                            " No-PT seeds, config has " + std::to_string(cfg.seeds.size()));
    }
  }

  const fs::path run = make_run_dir(cfg, "finetune");
  fs::copy_file(args.config, run / "config.json");
  std::vector<AucRecord> records;
  std::vector<eval::CurveRun> curves;
  auto run_one = [&](const std::string& run_tag, std::uint64_t seed, const num::ParamStore* init) {
    trainer::FinetuneConfig fc;
    fc.encoder = cfg.encoder;
    fc.optimizer = cfg.finetune_optimizer;
    fc.loop = cfg.finetune_loop;
    fc.seed = seed;
    fc.freeze_encoder = cfg.freeze_encoder;
    fc.tag = run_tag;
    const auto result =
        trainer::finetune(fc, split, init, progress(args.quiet, run_tag + " seed " + std::to_string(seed)));
    if (!result.report.test_auc) throw eval::MetricError("test split has a single label class");
    const fs::path dir = run_tag == tag ? seed_dir(run, seed) : run / run_tag / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    enc::save_checkpoint((dir / "checkpoint.bin").string(), enc::fingerprint(cfg.encoder), result.params);
    save_report(dir, result.report);
    curves.push_back({run_tag, seed, result.report.val_curve()});
    records.push_back({run_tag, encoder_name, seed, *result.report.test_auc});
    std::printf("%s seed %llu: best epoch %zu, val AUC %.4f, test AUC %.4f\n", run_tag.c_str(),
                static_cast<unsigned long long>(seed), result.report.best_epoch, result.report.best_val,
                *result.report.test_auc);
  };

  for (std::uint64_t seed : cfg.seeds) run_one(tag, seed, pretrained ? &encoders.at(seed) : nullptr);
  write_file(run / kAucFile, auc_csv(records));

  std::vector<AucRecord> table_records = records;
  if (pretrained) {
    if (baseline.empty()) {
      // No stored baseline: train No-PT on the same seeds for the comparison row.
      std::vector<AucRecord> own = records;
      for (std::uint64_t seed : cfg.seeds) run_one("No-PT", seed, nullptr);
      table_records = records;
      records = own;
    } else {
      table_records.insert(table_records.end(), baseline.begin(), baseline.end());
    }
  }
  const auto table = build_table(table_records, "No-PT");
  write_table(run, table);
  write_file(run / "curves.csv", eval::export_curves(curves));
  mark_complete(run);
  std::fputs(eval::format_text(table).c_str(), stdout);
  std::printf("run directory: %s\n", run.string().c_str());
  return kExitOk;
}

int cmd_evaluate(const RunArgs& args) {
  RunConfig cfg = load_config(args.config);
  const data::Corpus corpus = load_dataset(cfg);
  const auto split = data::time_split(corpus.examples, cfg.dataset.split);
  const std::string expected = enc::fingerprint(cfg.encoder);
  std::vector<double> aucs;
  std::ostringstream text;
  for (std::uint64_t seed : cfg.seeds) {
    auto ckpt = enc::load_checkpoint(checkpoint_for(args.model, seed), expected);
    const double a = trainer::evaluate_auc(cfg.encoder, ckpt.params, split.test, cfg.finetune_loop.eval_batch_size);
    aucs.push_back(a);
    char buf[96];
    std::snprintf(buf, sizeof buf, "seed %llu: test AUC %.6f\n", static_cast<unsigned long long>(seed), a);
    text << buf;
  }
  const auto ms = eval::mean_std(aucs);
  char buf[96];
  std::snprintf(buf, sizeof buf, "mean %.6f std %.6f over %zu seeds\n", ms.mean, ms.std, aucs.size());
  text << buf;
  std::fputs(text.str().c_str(), stdout);
  return kExitOk;
}

int cmd_table(const TableArgs& args) {
  std::vector<AucRecord> records;
  for (const auto& run : args.runs) {
    const auto rows = read_aucs(run);
    records.insert(records.end(), rows.begin(), rows.end());
  }
  const auto table = build_table(records, args.baseline_tag);
  std::fputs((args.csv ? eval::format_csv(table) : eval::format_text(table)).c_str(), stdout);
  return kExitOk;
}

int report_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const pretext::TaskError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const trainer::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const num::NonFiniteGradient& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const data::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const enc::CheckpointError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const eval::MetricError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}

}  // namespace abacus::cli
