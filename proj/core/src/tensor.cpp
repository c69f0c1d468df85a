#include "pvda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pvda/common.hpp"

namespace pvda {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, double fill_value)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill_value) {}

std::size_t Tensor::dim(std::size_t i) const {
  require(i < shape_.size(), "Tensor::dim index out of range");
  return shape_[i];
}

void Tensor::reshape(std::vector<std::size_t> new_shape) {
  require(shape_numel(new_shape) == data_.size(),
          "Tensor::reshape element count mismatch: " + shape_str());
  shape_ = std::move(new_shape);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape_[i]);
  }
  s += ")";
  return s;
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> ix) const {
  std::size_t off = 0;
  std::size_t d = 0;
  for (std::size_t i : ix) {
    off = off * shape_[d] + i;
    ++d;
  }
  return off;
}

}  // namespace pvda
