#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "abacus/augment/augment.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace abacus;
using namespace abacus::augment;
using data::EventSequence;

namespace {

constexpr int kK = 6;

std::multiset<std::pair<int, double>> pairs(const std::vector<int>& e, const std::vector<double>& t) {
  std::multiset<std::pair<int, double>> out;
  for (std::size_t i = 0; i < e.size(); ++i) out.insert({e[i], t[i]});
  return out;
}

/// Every maximal run of masked positions, as (start, length).
std::vector<std::pair<std::size_t, std::size_t>> runs(const std::vector<std::size_t>& m) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i > 0 && m[i] == m[i - 1] + 1) {
      ++out.back().second;
    } else {
      out.push_back({m[i], 1});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("identity keeps the sequence and masks nothing") {
  const EventSequence seq{{1, 2, 3}, {0.0, 0.5, 1.0}};
  const auto v = identity(seq);
  CHECK(v.events == seq.events);
  CHECK(v.times == seq.times);
  CHECK(v.masked_positions.empty());
  CHECK(v.tag == Augmentation::identity);
  const auto again = identity(EventSequence{v.events, v.times});
  CHECK(again.events == v.events);
  CHECK(again.times == v.times);
}

TEST_CASE("permutation keeps (event, time) pairs together") {
  Rng rng(3);
  const EventSequence single{{4}, {0.3}};
  const auto one = random_permute(single, rng);
  CHECK(one.events == single.events);
  CHECK(one.times == single.times);
  for (int i = 0; i < 100; ++i) {
    const auto seq = testutil::random_sequence(1 + rng.below(30), kK, rng);
    const auto v = random_permute(seq, rng);
    CHECK(v.tag == Augmentation::permute);
    CHECK(v.masked_positions.empty());
    CHECK(pairs(v.events, v.times) == pairs(seq.events, seq.times));
  }
}

TEST_CASE("permutation draws each order of three uniformly") {
  Rng rng(4);
  const EventSequence seq{{1, 2, 3}, {0.1, 0.2, 0.3}};
  std::map<std::vector<int>, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[random_permute(seq, rng).events];
  CHECK(counts.size() == 6);
  double chi2 = 0.0;
  for (const auto& [order, c] : counts) {
    CHECK(std::abs(static_cast<double>(c) / draws - 1.0 / 6.0) < 0.02);
    chi2 += (c - draws / 6.0) * (c - draws / 6.0) / (draws / 6.0);
  }
  CHECK(chi2 < 20.5);  // 5 dof, p = 0.001
}

TEST_CASE("segment mask covers exactly ceil(ratio * length) positions") {
  Rng rng(5);
  const auto seq = testutil::random_sequence(20, kK, rng);
  const MaskOptions opts{0.15, 5.0, true};
  for (int i = 0; i < 200; ++i) {
    const auto v = segment_mask(seq, rng, kK, opts);
    REQUIRE(v.masked_positions.size() == 3);
    CHECK(std::is_sorted(v.masked_positions.begin(), v.masked_positions.end()));
    CHECK(v.length() == seq.length());
    CHECK(v.tag == Augmentation::segment_mask);
    const std::set<std::size_t> m(v.masked_positions.begin(), v.masked_positions.end());
    for (std::size_t p = 0; p < seq.length(); ++p) {
      if (m.count(p)) {
        CHECK(v.events[p] == mask_event(kK));
        CHECK(v.times[p] == kMaskedTime);
      } else {
        CHECK(v.events[p] == seq.events[p]);
        CHECK(v.times[p] == seq.times[p]);
      }
    }
  }
  CHECK(masked_count(20, 0.15) == 3);
  CHECK(masked_count(1, 0.15) == 1);
  CHECK(masked_count(50, 0.15) == 8);
}

TEST_CASE("segment mask can keep timestamps and handles length one") {
  Rng rng(6);
  const auto seq = testutil::random_sequence(30, kK, rng);
  const auto v = segment_mask(seq, rng, kK, {0.15, 5.0, false});
  CHECK(v.times == seq.times);
  for (auto p : v.masked_positions) CHECK(v.events[p] == mask_event(kK));

  const EventSequence one{{2}, {0.0}};
  const auto w = segment_mask(one, rng, kK, {0.15, 5.0, true});
  CHECK(w.masked_positions == std::vector<std::size_t>{0});
  CHECK(w.events[0] == mask_event(kK));
}

TEST_CASE("segment mask rejects invalid options") {
  Rng rng(7);
  const EventSequence seq{{1, 2}, {0.0, 1.0}};
  CHECK_THROWS(segment_mask(seq, rng, kK, {1.0, 5.0, true}));
  CHECK_THROWS(segment_mask(seq, rng, kK, {-0.1, 5.0, true}));
  CHECK_THROWS(segment_mask(seq, rng, kK, {0.2, 0.5, true}));
}

TEST_CASE("masked segments are contiguous with the configured mean length") {
  Rng rng(8);
  const auto seq = testutil::random_sequence(200, kK, rng);
  double total_len = 0;
  std::size_t n_runs = 0;
  for (int i = 0; i < 500; ++i) {
    const auto v = segment_mask(seq, rng, kK, {0.15, 3.0, true});
    for (const auto& [start, len] : runs(v.masked_positions)) {
      total_len += static_cast<double>(len);
      ++n_runs;
    }
  }
  // Adjacent segments can merge into one run, so runs are at least as long as segments.
  CHECK(total_len / static_cast<double>(n_runs) >= 2.5);
  CHECK(total_len / static_cast<double>(n_runs) < 4.5);
}

TEST_CASE("masking frequency is uniform across interior positions") {
  Rng rng(9);
  const std::size_t len = 50;
  const auto seq = testutil::random_sequence(len, kK, rng);
  const MaskOptions opts{0.15, 5.0, true};
  std::vector<double> freq(len, 0.0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i)
    for (auto p : segment_mask(seq, rng, kK, opts).masked_positions) freq[p] += 1.0 / draws;
  const double rate = static_cast<double>(masked_count(len, 0.15)) / len;
  for (std::size_t p = 10; p < len - 10; ++p) {
    INFO("position " << p << " frequency " << freq[p]);
    CHECK(std::abs(freq[p] - rate) < 0.2 * rate);
  }
}

TEST_CASE("twin views mask independently and agree with the base elsewhere") {
  Rng rng(10);
  const std::size_t len = 40;
  const auto seq = testutil::random_sequence(len, kK, rng);
  const MaskOptions opts{0.15, 5.0, true};

  const auto [a0, b0] = twin_views(seq, rng, kK, {0.0, 5.0, true});
  CHECK(a0.events == b0.events);
  CHECK(a0.times == b0.times);
  CHECK(a0.events == seq.events);
  CHECK(a0.tag == Augmentation::twin);

  // Pearson correlation of the two indicator vectors, pooled over draws.
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0, n = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto [a, b] = twin_views(seq, rng, kK, opts);
    std::vector<double> ia(len, 0.0), ib(len, 0.0);
    for (auto p : a.masked_positions) ia[p] = 1.0;
    for (auto p : b.masked_positions) ib[p] = 1.0;
    for (std::size_t p = 0; p < len; ++p) {
      sa += ia[p], sb += ib[p], sab += ia[p] * ib[p], saa += ia[p] * ia[p], sbb += ib[p] * ib[p], n += 1;
      if (ia[p] == 0.0) {
        CHECK(a.events[p] == seq.events[p]);
      }
      if (ib[p] == 0.0) {
        CHECK(b.events[p] == seq.events[p]);
      }
    }
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)));
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("augmentations are deterministic for a fixed seed") {
  Rng src(11);
  const auto seq = testutil::random_sequence(25, kK, src);
  Rng r1(99), r2(99);
  CHECK(random_permute(seq, r1).events == random_permute(seq, r2).events);
  CHECK(segment_mask(seq, r1, kK, {}).masked_positions == segment_mask(seq, r2, kK, {}).masked_positions);
  CHECK(twin_views(seq, r1, kK, {}).second.masked_positions == twin_views(seq, r2, kK, {}).second.masked_positions);
}

TEST_CASE("masking preserves the histogram of unmasked positions") {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const auto seq = testutil::random_sequence(5 + rng.below(40), kK, rng);
    const auto v = segment_mask(seq, rng, kK, {0.3, 2.0, true});
    std::vector<int> kept_view, kept_base;
    const std::set<std::size_t> m(v.masked_positions.begin(), v.masked_positions.end());
    for (std::size_t p = 0; p < seq.length(); ++p) {
      if (m.count(p)) continue;
      kept_view.push_back(v.events[p]);
      kept_base.push_back(seq.events[p]);
    }
    CHECK(kept_view == kept_base);
  }
}
