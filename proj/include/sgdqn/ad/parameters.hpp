#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sgdqn/ad/tensor.hpp"

namespace sgdqn::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered collection of named trainable tensors.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor tensor);

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  const Tensor* find(std::string_view name) const;

  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  void set_requires_grad(bool on);
  // Copies values from `other`; names and shapes must match exactly.
  void copy_values_from(const ParameterSet& other);
  // FNV-1a over names, shapes and the raw value bytes.
  std::uint64_t fingerprint() const;

 private:
  std::vector<NamedTensor> entries_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for a (fan_in x fan_out)
// weight or a 1 x fan_out bias.
Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in,
                    std::mt19937_64& rng);

}  // namespace sgdqn::ad
