#include "abacus/data/taobao.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <string_view>
#include <vector>

namespace abacus::data {

namespace {

struct Row {
  std::uint64_t user;
  std::int64_t ts;
  int event;
};

bool parse_row(std::string_view line, const TaobaoOptions& options, Row& row) {
  std::string_view fields[5];
  std::size_t n = 0;
  while (n < 5) {
    const auto comma = line.find(',');
    fields[n++] = line.substr(0, comma);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  if (n != 5) return false;
  if (!fields[4].empty() && fields[4].back() == '\r') fields[4].remove_suffix(1);
  auto parse_int = [](std::string_view s, auto& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  };
  if (!parse_int(fields[0], row.user) || !parse_int(fields[4], row.ts)) return false;
  auto it = options.event_map.find(std::string(fields[3]));
  if (it == options.event_map.end()) return false;
  row.event = it->second;
  return true;
}

}  // namespace

IngestResult ingest_taobao(std::istream& in, const TaobaoOptions& options) {
  if (options.max_len == 0) throw DataError("ingest_taobao: max_len must be positive");
  if (!(options.label_window_fraction > 0.0 && options.label_window_fraction < 1.0)) {
    throw DataError("ingest_taobao: label window fraction must lie in (0, 1)");
  }
  int num_types = 0;
  for (const auto& [name, id] : options.event_map) {
    if (id < 1) throw DataError("ingest_taobao: event id for '" + name + "' must be >= 1");
    num_types = std::max(num_types, id);
  }

  IngestResult result;
  auto& stats = result.stats;
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++stats.rows_read;
    Row row{};
    if (parse_row(line, options, row)) {
      rows.push_back(row);
    } else {
      ++stats.rows_rejected;
    }
  }
  if (rows.empty()) {
    throw DataError("ingest_taobao: no usable rows (read " + std::to_string(stats.rows_read) + ")");
  }

  std::int64_t t_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_max = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : rows) {
    t_min = std::min(t_min, r.ts);
    t_max = std::max(t_max, r.ts);
  }
  const double boundary = static_cast<double>(t_min) +
                          (1.0 - options.label_window_fraction) * static_cast<double>(t_max - t_min);
  stats.window_boundary = boundary;

  // Stable: equal timestamps keep file order.
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.user != b.user ? a.user < b.user : a.ts < b.ts;
  });

  auto& corpus = result.corpus;
  corpus.num_event_types = num_types;
  corpus.max_len = options.max_len;
  for (std::size_t lo = 0; lo < rows.size();) {
    std::size_t hi = lo;
    while (hi < rows.size() && rows[hi].user == rows[lo].user) ++hi;
    std::size_t cut = lo;
    while (cut < hi && static_cast<double>(rows[cut].ts) < boundary) ++cut;
    if (cut == lo) {
      ++stats.users_dropped;
      lo = hi;
      continue;
    }
    LabeledExample ex;
    ex.user_id = rows[lo].user;
    for (std::size_t i = cut; i < hi; ++i) ex.label |= rows[i].event == options.purchase_event ? 1 : 0;
    const std::size_t first = cut - lo > options.max_len ? cut - options.max_len : lo;
    const double t0 = static_cast<double>(rows[first].ts);
    const double span = static_cast<double>(rows[cut - 1].ts) - t0;
    for (std::size_t i = first; i < cut; ++i) {
      ex.history.events.push_back(rows[i].event);
      ex.history.times.push_back(span > 0.0 ? (static_cast<double>(rows[i].ts) - t0) / span : 0.0);
    }
    ex.ref_time = static_cast<double>(rows[cut - 1].ts);
    corpus.examples.push_back(std::move(ex));
    lo = hi;
  }
  return result;
}

IngestResult ingest_taobao(const std::string& csv_path, const TaobaoOptions& options) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open '" + csv_path + "'");
  return ingest_taobao(in, options);
}

}  // namespace abacus::data
