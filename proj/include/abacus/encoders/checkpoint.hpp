#pragma once

#include <stdexcept>
#include <string>

#include "abacus/numcore/params.hpp"

namespace abacus::enc {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string fingerprint;
  num::ParamStore params;
};

/// Binary archive: magic, version, fingerprint, then named arrays with
/// shapes and raw doubles. Values round-trip bit-exactly.
void save_checkpoint(const std::string& path, const std::string& fingerprint, const num::ParamStore& params);
Checkpoint load_checkpoint(const std::string& path);
/// Rejects the file when its fingerprint differs from `expected`.
Checkpoint load_checkpoint(const std::string& path, const std::string& expected);

}  // namespace abacus::enc
