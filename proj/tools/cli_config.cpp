#include "cli_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace abacus::cli {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid config:";
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

/// Reads typed fields out of one JSON object and records problems instead of
/// throwing, so a single parse reports every bad key.
class Section {
 public:
  Section(const json& doc, std::string name, std::vector<std::string>& problems)
      : name_(std::move(name)), problems_(problems) {
    if (!doc.contains(name_)) {
      present_ = false;
      return;
    }
    node_ = &doc.at(name_);
    if (!node_->is_object()) {
      problems_.push_back(name_ + ": expected an object");
      node_ = nullptr;
    }
  }

  bool present() const { return present_; }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    const json& v = node_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::runtime_error("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) throw std::runtime_error("must be non-negative");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::runtime_error("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::runtime_error("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void fail(const std::string& key, const std::string& why) { problems_.push_back(name_ + "." + key + ": " + why); }

  void reject_unknown() {
    if (node_ == nullptr) return;
    for (const auto& [k, v] : node_->items())
      if (!seen_.count(k)) problems_.push_back(name_ + "." + k + ": unknown key");
  }

 private:
  std::string name_;
  std::vector<std::string>& problems_;
  const json* node_ = nullptr;
  bool present_ = true;
  std::set<std::string> seen_;
};

void read_loop(Section& s, const std::string& prefix, trainer::LoopOptions& loop) {
  s.read(prefix + "batch_size", loop.batch_size);
  s.read(prefix + "max_epochs", loop.max_epochs);
  s.read(prefix + "patience", loop.patience);
  s.read(prefix + "min_delta", loop.min_delta);
}

void check_loop(Section& s, const std::string& prefix, const trainer::LoopOptions& loop) {
  if (loop.batch_size < 2) s.fail(prefix + "batch_size", "must be >= 2");
  if (loop.max_epochs < 1) s.fail(prefix + "max_epochs", "must be >= 1");
  if (loop.patience < 1) s.fail(prefix + "patience", "must be >= 1");
  if (loop.min_delta < 0) s.fail(prefix + "min_delta", "must be >= 0");
}

void check_optimizer(Section& s, const std::string& prefix, const num::AdamWConfig& opt) {
  if (!(opt.lr > 0)) s.fail(prefix + "lr", "must be > 0");
  if (opt.weight_decay < 0) s.fail("weight_decay", "must be >= 0");
}

void check_mask(Section& s, const std::string& key, const augment::MaskOptions& m) {
  if (m.mask_ratio < 0 || m.mask_ratio > 1) s.fail(key + "_ratio", "must lie in [0, 1]");
  if (m.mean_segment_len < 1) s.fail(key + "_segment", "must be >= 1");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute()) return path;
  if (const char* root = std::getenv("ABACUS_DATA_ROOT"); root != nullptr && *root != '\0') {
    return (fs::path(root) / path).string();
  }
  return path;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"top level must be an object"});

  std::vector<std::string> problems;
  RunConfig cfg;
  static const std::set<std::string> kSections{"dataset", "encoder",  "pretrain_tasks", "pretext",
                                               "optimizer", "trainer", "eval",           "seeds"};
  for (const auto& [k, v] : doc.items())
    if (!kSections.count(k)) problems.push_back(k + ": unknown section");

  {
    Section s(doc, "dataset", problems);
    auto& d = cfg.dataset;
    s.read("source", d.source);
    s.read("path", d.path);
    s.read("seed", d.seed);
    s.read("users", d.users);
    s.read("k", d.num_event_types);
    s.read("max_len", d.max_len);
    s.read("profile", d.profile);
    if (const json* sp = s.raw("split")) {
      if (!sp->is_array() || sp->size() != 3 || !std::all_of(sp->begin(), sp->end(), [](const json& x) {
            return x.is_number();
          })) {
        s.fail("split", "expected three numbers (train, val, test)");
      } else {
        for (int i = 0; i < 3; ++i) d.split[i] = (*sp)[i].get<double>();
        const double sum = d.split[0] + d.split[1] + d.split[2];
        if (d.split[0] <= 0 || d.split[1] <= 0 || d.split[2] <= 0 || std::abs(sum - 1.0) > 1e-9) {
          s.fail("split", "fractions must be positive and sum to 1");
        }
      }
    }
    if (d.source == "synthetic") {
      if (!d.path.empty()) s.fail("path", "not used by the synthetic source");
      if (d.users < 3) s.fail("users", "must be >= 3");
      if (d.num_event_types < 2) s.fail("k", "must be >= 2");
      if (d.max_len < 1) s.fail("max_len", "must be >= 1");
      if (d.profile != "two-archetype" && d.profile != "single" && d.profile != "uniform") {
        s.fail("profile", "expected two-archetype, single or uniform");
      }
    } else if (d.source == "corpus" || d.source == "taobao") {
      if (d.path.empty()) {
        s.fail("path", "required for source '" + d.source + "'");
      } else {
        d.path = resolve_data_path(d.path);
        if (!std::filesystem::exists(d.path)) s.fail("path", "no such file: " + d.path);
      }
    } else {
      s.fail("source", "expected synthetic, corpus or taobao");
    }
    s.reject_unknown();
  }

  {
    Section s(doc, "encoder", problems);
    std::string kind = "gru";
    s.read("kind", kind);
    try {
      const auto k = enc::encoder_kind_from_string(kind);
      cfg.encoder = k == enc::EncoderKind::gru ? enc::gru_defaults(cfg.dataset.num_event_types, cfg.dataset.max_len)
                                               : enc::transformer_defaults(cfg.dataset.num_event_types,
                                                                           cfg.dataset.max_len);
    } catch (const std::exception&) {
      s.fail("kind", "expected gru or transformer");
    }
    s.read("embed_dim", cfg.encoder.embed_dim);
    s.read("hidden_dim", cfg.encoder.hidden_dim);
    s.read("layers", cfg.encoder.layers);
    s.read("heads", cfg.encoder.heads);
    s.read("ff_dim", cfg.encoder.ff_dim);
    s.reject_unknown();
  }

  {
    Section s(doc, "pretrain_tasks", problems);
    if (s.present()) {
      const json& node = doc.at("pretrain_tasks");
      if (node.is_object()) {
        for (const auto& [name, w] : node.items()) {
          if (!w.is_number()) {
            s.fail(name, "weight must be a number");
            continue;
          }
          try {
            cfg.weights.weights.emplace_back(pretext::task_from_string(name), w.get<double>());
          } catch (const std::exception&) {
            s.fail(name, "unknown pretext task");
          }
        }
        try {
          pretext::validate(cfg.weights);
        } catch (const std::exception& e) {
          problems.push_back(std::string("pretrain_tasks: ") + e.what());
        }
      }
    }
  }

  {
    Section s(doc, "pretext", problems);
    auto& p = cfg.pretext;
    s.read("msm_mask_ratio", p.msm_mask.mask_ratio);
    s.read("msm_mask_segment", p.msm_mask.mean_segment_len);
    s.read("abacus_m_mask_ratio", p.abacus_m_mask.mask_ratio);
    s.read("abacus_m_mask_segment", p.abacus_m_mask.mean_segment_len);
    s.read("bt_mask_ratio", p.bt_mask.mask_ratio);
    s.read("bt_mask_segment", p.bt_mask.mean_segment_len);
    s.read("lambda_msm", p.lambda_msm);
    s.read("lambda_bt", p.lambda_bt);
    s.read("k_future", p.k_future);
    check_mask(s, "msm_mask", p.msm_mask);
    check_mask(s, "abacus_m_mask", p.abacus_m_mask);
    check_mask(s, "bt_mask", p.bt_mask);
    if (p.lambda_msm < 0) s.fail("lambda_msm", "must be >= 0");
    if (p.lambda_bt < 0) s.fail("lambda_bt", "must be >= 0");
    if (p.k_future < 1) s.fail("k_future", "must be >= 1");
    s.reject_unknown();
  }

  {
    Section s(doc, "optimizer", problems);
    s.read("pretrain_lr", cfg.pretrain_optimizer.lr);
    s.read("finetune_lr", cfg.finetune_optimizer.lr);
    double wd = cfg.pretrain_optimizer.weight_decay;
    double clip = cfg.pretrain_optimizer.clip_norm;
    s.read("weight_decay", wd);
    s.read("clip_norm", clip);
    for (auto* o : {&cfg.pretrain_optimizer, &cfg.finetune_optimizer}) {
      o->weight_decay = wd;
      o->clip_norm = clip;
    }
    check_optimizer(s, "pretrain_", cfg.pretrain_optimizer);
    check_optimizer(s, "finetune_", cfg.finetune_optimizer);
    s.reject_unknown();
  }

  {
    Section s(doc, "trainer", problems);
    read_loop(s, "pretrain_", cfg.pretrain_loop);
    read_loop(s, "finetune_", cfg.finetune_loop);
    std::size_t eval_batch = cfg.finetune_loop.eval_batch_size;
    s.read("eval_batch_size", eval_batch);
    cfg.pretrain_loop.eval_batch_size = cfg.finetune_loop.eval_batch_size = eval_batch;
    s.read("freeze_encoder", cfg.freeze_encoder);
    check_loop(s, "pretrain_", cfg.pretrain_loop);
    check_loop(s, "finetune_", cfg.finetune_loop);
    if (eval_batch < 1) s.fail("eval_batch_size", "must be >= 1");
    s.reject_unknown();
  }

  {
    Section s(doc, "eval", problems);
    s.read("tag", cfg.tag);
    s.reject_unknown();
  }

  if (doc.contains("seeds")) {
    const json& seeds = doc.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      problems.push_back("seeds: expected a non-empty array of non-negative integers");
    } else {
      cfg.seeds.clear();
      std::set<std::uint64_t> seen;
      for (const auto& v : seeds) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          problems.push_back("seeds: " + v.dump() + " is not a non-negative integer");
        } else if (!seen.insert(v.get<std::uint64_t>()).second) {
          problems.push_back("seeds: duplicate seed " + v.dump());
        } else {
          cfg.seeds.push_back(v.get<std::uint64_t>());
        }
      }
    }
  }

  if (problems.empty()) {
    cfg.encoder.num_event_types = cfg.dataset.num_event_types;
    cfg.encoder.max_len = cfg.dataset.max_len;
    try {
      enc::validate(cfg.encoder);
    } catch (const std::exception& e) {
      problems.push_back(std::string("encoder: ") + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));

  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
  cfg.hash = std::string(buf).substr(0, 12);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

}  // namespace abacus::cli
