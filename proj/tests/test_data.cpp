#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "abacus/data/corpus_io.hpp"
#include "abacus/data/diagnostics.hpp"
#include "abacus/data/split.hpp"
#include "abacus/data/synthetic.hpp"
#include "abacus/data/taobao.hpp"
#include "abacus/eval/auc.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace abacus;
using namespace abacus::data;

namespace {

std::vector<double> brute_force_histogram(const std::vector<int>& events, int k) {
  std::vector<double> out;
  for (int type = 1; type <= k; ++type) {
    double c = 0;
    for (int e : events) c += e == type ? 1 : 0;
    out.push_back(c / static_cast<double>(events.size()));
  }
  return out;
}

LabeledExample example_at(std::uint64_t user, double ref_time) {
  LabeledExample ex;
  ex.user_id = user;
  ex.ref_time = ref_time;
  ex.history = {{1}, {0.0}};
  return ex;
}

std::string corpus_bytes(const Corpus& c) {
  std::ostringstream out;
  write_corpus(out, c);
  return out.str();
}

}  // namespace

TEST_CASE("histogram of a direct count") {
  const auto h = empirical_histogram(std::vector<int>{1, 1, 2, 3}, 4);
  CHECK(h.probs == std::vector<double>{0.5, 0.25, 0.25, 0.0});
  CHECK(empirical_histogram(std::vector<int>{2, 2, 2}, 3).probs == std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(empirical_histogram(std::vector<int>{}, 3), DataError);
  CHECK_THROWS_AS(empirical_histogram(std::vector<int>{4}, 3), DataError);
}

TEST_CASE("histogram matches a brute-force counter on random sequences") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const int k = 1 + static_cast<int>(rng.below(10));
    const auto seq = testutil::random_sequence(1 + rng.below(100), k, rng);
    REQUIRE(empirical_histogram(seq, k).probs == brute_force_histogram(seq.events, k));
  }
}

TEST_CASE("histogram is permutation invariant") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto seq = testutil::random_sequence(1 + rng.below(40), 7, rng);
    const auto before = empirical_histogram(seq, 7);
    rng.shuffle(seq.events.begin(), seq.events.end());
    CHECK(empirical_histogram(seq, 7) == before);
  }
}

TEST_CASE("sequence validation enforces the invariants") {
  CHECK_NOTHROW(validate(EventSequence{{1, 3}, {0.0, 1.0}}, 3, 5));
  CHECK_THROWS_AS(validate(EventSequence{{}, {}}, 3, 5), DataError);
  CHECK_THROWS_AS(validate(EventSequence{{1, 4}, {0.0, 1.0}}, 3, 5), DataError);
  CHECK_THROWS_AS(validate(EventSequence{{1, 0}, {0.0, 1.0}}, 3, 5), DataError);
  CHECK_THROWS_AS(validate(EventSequence{{1, 2}, {0.5, 0.2}}, 3, 5), DataError);
  CHECK_THROWS_AS(validate(EventSequence{{1, 2}, {0.5, 1.2}}, 3, 5), DataError);
  CHECK_THROWS_AS(validate(EventSequence{{1, 2}, {0.5}}, 3, 5), DataError);
  CHECK_THROWS_AS(validate(EventSequence{{1, 2, 3}, {0, 0, 0}}, 3, 2), DataError);
}

TEST_CASE("entropy and simplex helpers") {
  CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(std::vector<double>{0, 1, 0}) == 0.0);
  CHECK(on_simplex(std::vector<double>{0.2, 0.8}, 1e-9));
  CHECK_FALSE(on_simplex(std::vector<double>{0.2, 0.7}, 1e-9));
  CHECK_FALSE(on_simplex(std::vector<double>{-0.1, 1.1}, 1e-9));
}

TEST_CASE("diagnostics of uniform and single-type corpora") {
  CHECK(perplexity(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(4.0));
  CHECK(gini_simpson(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(0.75));
  CHECK(perplexity(std::vector<double>{0, 1, 0}) == doctest::Approx(1.0));
  CHECK(gini_simpson(std::vector<double>{0, 1, 0}) == doctest::Approx(0.0));

  const auto corpus = gen_synthetic(3, 2000, 4, 50, uniform_spec(4));
  const auto d = diagnostics(corpus.examples, 4);
  CHECK(std::abs(d.ppl - 4.0) < 0.05);
  CHECK(std::abs(d.gini_simpson - 0.75) < 0.01);
  CHECK(d.size == 2000);
  CHECK(d.max_seq_length == 50);
  CHECK(d.mean_seq_length == doctest::Approx(50.0));

  std::vector<LabeledExample> one{example_at(1, 0.0)};
  one[0].history = {{2, 2, 2}, {0, 0.5, 1}};
  one[0].label = 1;
  const auto s = diagnostics(one, 3);
  CHECK(s.ppl == doctest::Approx(1.0));
  CHECK(s.gini_simpson == doctest::Approx(0.0));
  CHECK(s.label_mean == 1.0);
}

TEST_CASE("PPL and GS stay within their bounds and peak at uniform") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(8);
    std::vector<double> p(k);
    double total = 0;
    for (auto& v : p) total += v = rng.uniform() * (rng.bernoulli(0.2) ? 0.0 : 1.0) + 1e-12;
    for (auto& v : p) v /= total;
    const double ppl = perplexity(p), gs = gini_simpson(p);
    CHECK(ppl >= 1.0 - 1e-12);
    CHECK(ppl <= static_cast<double>(k) + 1e-9);
    CHECK(gs >= -1e-12);
    CHECK(gs <= 1.0 - 1.0 / static_cast<double>(k) + 1e-12);
    const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
    CHECK(perplexity(uniform) >= ppl - 1e-9);
    CHECK(gini_simpson(uniform) >= gs - 1e-12);
  }
}

TEST_CASE("diagnostics report formats") {
  const auto corpus = gen_synthetic(3, 50, 4, 10, uniform_spec(4));
  const auto d = diagnostics(corpus.examples, 4);
  const auto kv = format_key_value(d);
  CHECK(kv.find("ppl=") != std::string::npos);
  CHECK(kv.find("gini_simpson=") != std::string::npos);
  CHECK(kv.find("label_mean=") != std::string::npos);
  CHECK(format_human(d).find("PPL") != std::string::npos);
}

TEST_CASE("time split sizes and ordering") {
  std::vector<LabeledExample> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(example_at(static_cast<std::uint64_t>(i), 10.0 - i));
  const auto s = time_split(ten, {0.6, 0.2, 0.2});
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  CHECK(s.mode == "time");
  for (std::size_t i = 1; i < s.train.size(); ++i) CHECK(s.train[i - 1].ref_time <= s.train[i].ref_time);

  std::vector<LabeledExample> hundred;
  for (int i = 0; i < 100; ++i) hundred.push_back(example_at(static_cast<std::uint64_t>(i), i * 0.5));
  const auto h = time_split(hundred, {0.7, 0.2, 0.1});
  CHECK(h.train.size() == 70);
  CHECK(h.val.size() == 20);
  CHECK(h.test.size() == 10);
}

TEST_CASE("time split is disjoint, exhaustive and insensitive to input order") {
  Rng rng(17);
  std::vector<LabeledExample> xs;
  for (int i = 0; i < 137; ++i) xs.push_back(example_at(static_cast<std::uint64_t>(i), std::floor(rng.uniform() * 40)));
  const auto a = time_split(xs, {0.7, 0.2, 0.1});
  rng.shuffle(xs.begin(), xs.end());
  const auto b = time_split(xs, {0.7, 0.2, 0.1});
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);

  std::map<std::uint64_t, int> seen;
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& ex : *part) ++seen[ex.user_id];
  CHECK(seen.size() == 137);
  for (const auto& [u, c] : seen) CHECK(c == 1);

  double train_max = 0, test_min = 1e9;
  for (const auto& ex : a.train) train_max = std::max(train_max, ex.ref_time);
  for (const auto& ex : a.test) test_min = std::min(test_min, ex.ref_time);
  CHECK(test_min >= train_max);
}

TEST_CASE("time split rejects bad inputs") {
  std::vector<LabeledExample> two{example_at(1, 0), example_at(2, 1)};
  CHECK_THROWS(time_split(two, {0.6, 0.2, 0.2}));
  std::vector<LabeledExample> five(5, example_at(1, 0));
  CHECK_THROWS(time_split(five, {0.6, 0.3, 0.2}));
  CHECK_THROWS(time_split(five, {0.8, 0.2, 0.0}));
}

TEST_CASE("taobao ingestion applies the labeling rule") {
  // Range [0, 800]; boundary at 700 with the default 1/8 window.
  std::istringstream csv(
      "1,10,100,pv,0\n"
      "1,11,100,buy,750\n"
      "2,12,100,pv,100\n"
      "2,13,100,cart,200\n"
      "2,14,100,pv,790\n"
      "3,15,100,fav,300\n"
      "3,16,100,unknown,310\n"
      "4,17,100,buy,800\n"
      "garbage line\n"
      "5,18,100,cart,500\n"
      "5,19,100,buy,400\n");
  const auto r = ingest_taobao(csv);
  CHECK(r.stats.rows_read == 11);
  CHECK(r.stats.rows_rejected == 2);
  CHECK(r.stats.users_dropped == 1);  // user 4 has only window events
  CHECK(r.stats.window_boundary == doctest::Approx(700.0));
  REQUIRE(r.corpus.examples.size() == 4);
  CHECK(r.corpus.num_event_types == 4);

  const auto& u1 = r.corpus.examples[0];
  CHECK(u1.user_id == 1);
  CHECK(u1.label == 1);
  CHECK(u1.history.events == std::vector<int>{1});
  CHECK(u1.history.times == std::vector<double>{0.0});

  const auto& u2 = r.corpus.examples[1];
  CHECK(u2.label == 0);
  CHECK(u2.history.events == std::vector<int>{1, 2});
  CHECK(u2.history.times == std::vector<double>{0.0, 1.0});
  CHECK(u2.ref_time == 200.0);

  const auto& u5 = r.corpus.examples[3];
  CHECK(u5.label == 0);  // its purchase precedes the window
  CHECK(u5.history.events == std::vector<int>{4, 2});
}

TEST_CASE("taobao ingestion keeps the most recent events and is idempotent") {
  std::ostringstream text;
  for (int i = 0; i < 10; ++i) text << "7,1,1," << (i % 2 ? "cart" : "pv") << ',' << i * 10 << '\n';
  text << "8,1,1,pv,1000\n";
  TaobaoOptions options;
  options.max_len = 4;
  std::istringstream a(text.str()), b(text.str());
  const auto r1 = ingest_taobao(a, options);
  const auto r2 = ingest_taobao(b, options);
  CHECK(r1.corpus == r2.corpus);
  const auto& ex = r1.corpus.examples.at(0);
  CHECK(ex.history.events == std::vector<int>{1, 2, 1, 2});
  CHECK(ex.history.times == std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0});
  CHECK(ex.ref_time == 90.0);
}

TEST_CASE("synthetic corpora are deterministic and well formed") {
  const auto a = gen_synthetic(7, 300, 6, 50, two_archetype_spec(6));
  const auto b = gen_synthetic(7, 300, 6, 50, two_archetype_spec(6));
  CHECK(corpus_bytes(a) == corpus_bytes(b));
  CHECK(corpus_bytes(a) != corpus_bytes(gen_synthetic(8, 300, 6, 50, two_archetype_spec(6))));
  CHECK_NOTHROW(validate(a));
  std::set<int> archetypes;
  for (const auto& ex : a.examples) {
    archetypes.insert(ex.archetype);
    CHECK(std::is_sorted(ex.history.times.begin(), ex.history.times.end()));
  }
  CHECK(archetypes == std::set<int>{0, 1});
}

TEST_CASE("two-archetype labels are predictable from histograms") {
  const auto spec = two_archetype_spec(6);
  const auto corpus = gen_synthetic(21, 20000, 6, 50, spec);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& ex : corpus.examples) {
    scores.push_back(propensity(spec.archetypes[static_cast<std::size_t>(ex.archetype)],
                                empirical_histogram(ex.history, 6)));
    labels.push_back(ex.label);
  }
  CHECK(eval::auc(scores, labels) > 0.9);
  const auto d = diagnostics(corpus.examples, 6);
  CHECK(d.ppl > 2.0);
}

TEST_CASE("a single archetype carries no label signal") {
  const auto corpus = gen_synthetic(22, 20000, 6, 50, single_archetype_spec(6));
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& ex : corpus.examples) {
    const auto h = empirical_histogram(ex.history, 6);
    scores.push_back(h.probs[5] - 0.5 * h.probs[0]);
    labels.push_back(ex.label);
  }
  CHECK(std::abs(eval::auc(scores, labels) - 0.5) < 0.02);
}

TEST_CASE("synthetic specs with negative probabilities are rejected") {
  auto spec = two_archetype_spec(4);
  spec.archetypes[0].event_probs[1] = -0.1;
  CHECK_THROWS_AS(gen_synthetic(1, 10, 4, 5, spec), DataError);
  CHECK_THROWS_AS(validate(spec, 4), DataError);
}

TEST_CASE("corpus files round-trip and carry a version tag") {
  const auto corpus = gen_synthetic(4, 40, 5, 12, SyntheticSpec{two_archetype_spec(5).archetypes, 3});
  const std::string bytes = corpus_bytes(corpus);
  CHECK(bytes.rfind(std::string(kCorpusMagic) + " v1", 0) == 0);
  std::istringstream in(bytes);
  CHECK(read_corpus(in) == corpus);

  std::istringstream empty("");
  try {
    read_corpus(empty);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("0 rows") != std::string::npos);
  }
  std::istringstream wrong_version("abacus-corpus v9\n");
  CHECK_THROWS_AS(read_corpus(wrong_version), DataError);
}
