#include "abacus/encoders/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace abacus::enc {

namespace {

constexpr char kMagic[8] = {'A', 'B', 'A', 'C', 'K', 'P', 'T', '\n'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("checkpoint truncated");
  return v;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 20)) throw CheckpointError("checkpoint string too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw CheckpointError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& fingerprint, const num::ParamStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out.write(kMagic, sizeof kMagic);
  put(out, kCheckpointVersion);
  put_string(out, fingerprint);
  put(out, static_cast<std::uint64_t>(params.size()));
  for (const auto* p : params.all()) {
    put_string(out, p->name);
    put(out, static_cast<std::uint64_t>(p->value.rows()));
    put(out, static_cast<std::uint64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.fingerprint = get_string(in);
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows * cols > (std::uint64_t{1} << 32)) throw CheckpointError("checkpoint array too large");
    std::vector<double> values(rows * cols);
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw CheckpointError("checkpoint truncated");
    }
    ck.params.add(name, num::Matrix(rows, cols, std::move(values)));
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expected) {
  auto ck = load_checkpoint(path);
  if (ck.fingerprint != expected) {
    throw CheckpointError("checkpoint fingerprint '" + ck.fingerprint + "' does not match encoder config '" +
                          expected + "'");
  }
  return ck;
}

}  // namespace abacus::enc
