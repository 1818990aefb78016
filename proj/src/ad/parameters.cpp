#include "sgdqn/ad/parameters.hpp"

#include <cmath>
#include <cstring>

#include "sgdqn/errors.hpp"

namespace sgdqn::ad {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

}  // namespace

Tensor& ParameterSet::add(std::string name, Tensor tensor) {
  if (find(name) != nullptr) throw InvalidArgument("ParameterSet: duplicate parameter '" + name + "'");
  entries_.push_back({std::move(name), std::move(tensor)});
  return entries_.back().tensor;
}

Tensor& ParameterSet::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw InvalidArgument("ParameterSet: no parameter named '" + std::string(name) + "'");
}

const Tensor& ParameterSet::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw InvalidArgument("ParameterSet: no parameter named '" + std::string(name) + "'");
  return *t;
}

const Tensor* ParameterSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

void ParameterSet::set_requires_grad(bool on) {
  for (auto& e : entries_) e.tensor.set_requires_grad(on);
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.entries_.size() != entries_.size()) {
    throw ShapeError("ParameterSet::copy_values_from: parameter count differs");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& dst = entries_[i];
    const auto& src = other.entries_[i];
    if (dst.name != src.name || !(dst.tensor.shape() == src.tensor.shape())) {
      throw ShapeError("ParameterSet::copy_values_from: mismatch at '" + dst.name + "' " +
                       dst.tensor.shape().str() + " vs '" + src.name + "' " +
                       src.tensor.shape().str());
    }
    std::copy(src.tensor.values().begin(), src.tensor.values().end(), dst.tensor.values().begin());
  }
}

std::uint64_t ParameterSet::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& e : entries_) {
    fnv_mix(h, e.name.data(), e.name.size());
    const std::uint64_t dims[2] = {e.tensor.rows(), e.tensor.cols()};
    fnv_mix(h, dims, sizeof(dims));
    fnv_mix(h, e.tensor.data(), e.tensor.size() * sizeof(double));
  }
  return h;
}

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace sgdqn::ad
