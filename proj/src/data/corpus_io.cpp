#include "abacus/data/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace abacus::data {

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, p - buf);
}

double get_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw DataError("corpus: truncated record");
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) throw DataError("corpus: bad number '" + tok + "'");
  return v;
}

template <class T>
T get_int(std::istream& in) {
  T v{};
  if (!(in >> v)) throw DataError("corpus: truncated or non-integer field");
  return v;
}

void expect_key(std::istream& in, const std::string& key) {
  std::string tok;
  if (!(in >> tok) || tok != key) throw DataError("corpus: expected '" + key + "', got '" + tok + "'");
}

}  // namespace

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << kCorpusMagic << " v" << kCorpusVersion << '\n'
      << "k " << corpus.num_event_types << '\n'
      << "max_len " << corpus.max_len << '\n'
      << "examples " << corpus.examples.size() << '\n';
  for (const auto& ex : corpus.examples) {
    out << ex.user_id << ' ' << ex.label << ' ';
    put_double(out, ex.ref_time);
    out << ' ' << ex.archetype << ' ' << ex.history.length();
    for (int e : ex.history.events) out << ' ' << e;
    for (double t : ex.history.times) {
      out << ' ';
      put_double(out, t);
    }
    out << '\n';
  }
}

Corpus read_corpus(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version)) throw DataError("corpus: empty file (0 rows)");
  if (magic != kCorpusMagic) throw DataError("corpus: not an abacus corpus file");
  if (version != "v" + std::to_string(kCorpusVersion)) throw DataError("corpus: unsupported version " + version);
  Corpus c;
  expect_key(in, "k");
  c.num_event_types = get_int<int>(in);
  expect_key(in, "max_len");
  c.max_len = get_int<std::size_t>(in);
  expect_key(in, "examples");
  const auto n = get_int<std::size_t>(in);
  c.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.user_id = get_int<std::uint64_t>(in);
    ex.label = get_int<int>(in);
    ex.ref_time = get_double(in);
    ex.archetype = get_int<int>(in);
    const auto len = get_int<std::size_t>(in);
    if (len > c.max_len) throw DataError("corpus: record " + std::to_string(i) + " longer than max_len");
    ex.history.events.resize(len);
    ex.history.times.resize(len);
    for (auto& e : ex.history.events) e = get_int<int>(in);
    for (auto& t : ex.history.times) t = get_double(in);
    c.examples.push_back(std::move(ex));
  }
  validate(c);
  return c;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_corpus(out, corpus);
  if (!out) throw DataError("write failed for '" + path + "'");
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_corpus(in);
}

}  // namespace abacus::data
