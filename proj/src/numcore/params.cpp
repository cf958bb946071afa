#include "abacus/numcore/params.hpp"

#include <cmath>
#include <stdexcept>

#include "abacus/numcore/rng.hpp"

namespace abacus::num {

ParamStore::ParamStore(const ParamStore& other) { *this = other; }

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this == &other) return *this;
  params_.clear();
  index_.clear();
  for (const auto& p : other.params_) {
    auto& added = add(p->name, p->value);
    added.grad = p->grad;
  }
  return *this;
}

ParamArray& ParamStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(std::make_unique<ParamArray>(name, std::move(value)));
  return *params_.back();
}

ParamArray& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const ParamArray& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::vector<ParamArray*> ParamStore::all() {
  std::vector<ParamArray*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const ParamArray*> ParamStore::all() const {
  std::vector<const ParamArray*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::size_t ParamStore::copy_values_from(const ParamStore& src, const std::string& prefix) {
  std::size_t copied = 0;
  for (auto& p : params_) {
    if (p->name.rfind(prefix, 0) != 0 || !src.contains(p->name)) continue;
    const auto& s = src.get(p->name);
    if (!s.value.same_shape(p->value)) {
      throw std::invalid_argument("parameter '" + p->name + "' shape " + p->value.shape_str() +
                                  " does not match source shape " + s.value.shape_str());
    }
    p->value = s.value;
    ++copied;
  }
  return copied;
}

Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_init(fan_in, fan_out, bound, rng);
}

}  // namespace abacus::num
