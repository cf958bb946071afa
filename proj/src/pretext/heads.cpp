#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "abacus/pretext/tasks.hpp"

namespace abacus::pretext {

std::string to_string(Task task) {
  switch (task) {
    case Task::abacus: return "abacus";
    case Task::abacus_r: return "abacus-r";
    case Task::abacus_m: return "abacus-m";
    case Task::msm: return "msm";
    case Task::bt: return "bt";
    case Task::nep: return "nep";
    case Task::nkehp: return "nkehp";
  }
  return "unknown";
}

Task task_from_string(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(n.begin(), n.end(), '_', '-');
  for (Task t : kAllTasks)
    if (to_string(t) == n) return t;
  if (n == "barlow" || n == "barlow-twins") return Task::bt;
  throw std::invalid_argument("unknown pretext task '" + name + "'");
}

std::size_t head_width(Task task, int num_event_types, const PretextOptions& options) {
  const auto k = static_cast<std::size_t>(num_event_types);
  switch (task) {
    case Task::msm: return k + 1;
    case Task::bt: return options.bt_width;
    default: return k;
  }
}

std::string head_name(Task task) {
  std::string n = to_string(task);
  std::replace(n.begin(), n.end(), '-', '_');
  return n;
}

void init_mlp_head(num::ParamStore& params, const std::string& name, std::size_t in, std::size_t hidden,
                   std::size_t out, Rng& rng) {
  const std::string p = "head." + name + ".";
  params.add(p + "w1", num::xavier_uniform(in, hidden, rng));
  params.add(p + "b1", num::Matrix(1, hidden));
  params.add(p + "w2", num::xavier_uniform(hidden, out, rng));
  params.add(p + "b2", num::Matrix(1, out));
}

num::Var apply_mlp_head(num::Tape& tape, num::ParamStore& params, const std::string& name, num::Var x) {
  const std::string p = "head." + name + ".";
  num::Var h = num::tanh(num::add_row(num::matmul(x, tape.param(params.get(p + "w1"))),
                                      tape.param(params.get(p + "b1"))));
  return num::add_row(num::matmul(h, tape.param(params.get(p + "w2"))), tape.param(params.get(p + "b2")));
}

void init_task_head(num::ParamStore& params, Task task, const enc::EncoderConfig& config,
                    const PretextOptions& options, Rng& rng) {
  const std::size_t hidden = task == Task::bt ? options.bt_hidden : options.head_hidden;
  init_mlp_head(params, head_name(task), config.hidden_dim, hidden,
                head_width(task, config.num_event_types, options), rng);
}

}  // namespace abacus::pretext
