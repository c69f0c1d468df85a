#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace pvda {

// Dense row-major tensor of doubles. Layout for image batches is N x C x H x W,
// for matrices rows x cols. Value semantics throughout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, double fill_value);

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v) { return Tensor(std::move(shape), v); }

  bool empty() const { return data_.empty(); }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  template <typename... Ix>
  double& operator()(Ix... ix) {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }
  template <typename... Ix>
  double operator()(Ix... ix) const {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }

  // Reinterpret shape; total element count must be unchanged.
  void reshape(std::vector<std::size_t> new_shape);

  void fill(double v);
  void zero() { fill(0.0); }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

 private:
  std::size_t offset(std::initializer_list<std::size_t> ix) const;

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace pvda
