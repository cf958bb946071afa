#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "abacus/numcore/matrix.hpp"

namespace abacus {
class Rng;
}

namespace abacus::num {

/// A named differentiable array. `grad` always has the shape of `value`.
struct ParamArray {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamArray(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Owns parameters in insertion order. Addresses are stable for the
/// lifetime of the store.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  ParamArray& add(const std::string& name, Matrix value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  ParamArray& get(const std::string& name);
  const ParamArray& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::vector<ParamArray*> all();
  std::vector<const ParamArray*> all() const;

  void zero_grad();
  std::size_t scalar_count() const;

  /// Copies values (not grads) for every name present in both stores
  /// whose name starts with `prefix`. Returns the number copied.
  std::size_t copy_values_from(const ParamStore& src, const std::string& prefix = "");

 private:
  std::vector<std::unique_ptr<ParamArray>> params_;
  std::map<std::string, std::size_t> index_;
};

// Initializers.
Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng);
Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace abacus::num
