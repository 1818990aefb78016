#include "sgdqn/ad/tensor.hpp"

#include <algorithm>

#include "sgdqn/errors.hpp"

namespace sgdqn::ad {

std::string Shape::str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape_{rows, cols}, values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("Tensor: " + std::to_string(values_.size()) + " values do not fit shape " +
                     shape_.str());
  }
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("Tensor::item on non-scalar " + shape_.str());
  return values_[0];
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on) {
    grad_.assign(values_.size(), 0.0);
  } else {
    grad_.clear();
  }
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

}  // namespace sgdqn::ad
