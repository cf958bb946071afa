#pragma once

#include <iosfwd>
#include <string>

#include "abacus/data/event_sequence.hpp"

namespace abacus::data {

inline constexpr const char* kCorpusMagic = "abacus-corpus";
inline constexpr int kCorpusVersion = 1;

/// Line-oriented text format; doubles are written in shortest round-trip form.
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);

void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path);

}  // namespace abacus::data
