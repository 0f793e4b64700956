#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "radialrouter/errors.hpp"

namespace radialrouter::num {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

/// Dense row-major matrix of doubles with an optional gradient buffer.
///
/// A Tensor is a handle: copies share storage. Use `clone()` for a deep copy.
/// Every quantity in the router is a matrix (a scalar is 1x1, a vector 1xk),
/// so the shape is fixed at rank two.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : s_(std::make_shared<Storage>()) {
    s_->shape = shape;
    s_->values.assign(shape.size(), 0.0);
    s_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
      : s_(std::make_shared<Storage>()) {
    if (values.size() != shape.size()) {
      throw DimensionError("tensor: " + std::to_string(values.size()) +
                           " values for shape " + to_string(shape));
    }
    s_->shape = shape;
    s_->values = std::move(values);
    s_->requires_grad = requires_grad;
  }

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false) {
    return Tensor(Shape{rows, cols}, requires_grad);
  }

  static Tensor row(std::vector<double> values, bool requires_grad = false) {
    const std::size_t n = values.size();
    return Tensor(Shape{1, n}, std::move(values), requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor(Shape{1, 1}, {v}, requires_grad);
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("tensor: ragged matrix literal");
      v.insert(v.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(v), requires_grad);
  }

  static Tensor identity(std::size_t n, bool requires_grad = false) {
    Tensor t(Shape{n, n}, requires_grad);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  bool defined() const noexcept { return static_cast<bool>(s_); }
  Shape shape() const { return s_->shape; }
  std::size_t rows() const { return s_->shape.rows; }
  std::size_t cols() const { return s_->shape.cols; }
  std::size_t size() const { return s_->values.size(); }

  std::span<double> values() { return s_->values; }
  std::span<const double> values() const { return s_->values; }
  std::span<const double> row_values(std::size_t r) const {
    return std::span<const double>(s_->values).subspan(r * cols(), cols());
  }

  double& operator()(std::size_t r, std::size_t c) { return s_->values[r * s_->shape.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return s_->values[r * s_->shape.cols + c];
  }

  double item() const {
    if (size() != 1) throw ContractError("tensor: item() on " + to_string(shape()));
    return s_->values[0];
  }

  bool requires_grad() const noexcept { return s_ && s_->requires_grad; }
  void set_requires_grad(bool on) { s_->requires_grad = on; }

  bool has_grad() const noexcept { return s_ && !s_->grad.empty(); }

  /// Gradient buffer, allocated (zeroed) on first access. Handle semantics:
  /// a const handle still grants write access to the shared gradient.
  std::span<double> grad() const {
    if (s_->grad.empty()) s_->grad.assign(s_->values.size(), 0.0);
    return s_->grad;
  }

  void zero_grad() const {
    if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), 0.0);
  }

  Tensor clone() const {
    Tensor t(shape(), std::vector<double>(s_->values), s_->requires_grad);
    return t;
  }

  /// Overwrites values in place; shapes must agree. Shared handles observe it.
  void assign(const Tensor& other) {
    if (other.shape() != shape()) {
      throw DimensionError("tensor: assign " + to_string(other.shape()) + " into " +
                           to_string(shape()));
    }
    std::copy(other.values().begin(), other.values().end(), s_->values.begin());
  }

  bool same_storage(const Tensor& other) const noexcept { return s_ == other.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    mutable std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace radialrouter::num
