#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stan/error.hpp"

namespace stan::nn {

// Dense 4-D shape: batch x channels x height x width.  Vectors and matrices
// are represented with the trailing dimensions set to 1 (e.g. a dense layer
// activation of B x F is {B, F, 1, 1} after flatten, or {B, 1, 1, F} as raw
// input; only total size per batch element matters to dense layers).
struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  long size() const {
    return static_cast<long>(n) * c * h * w;
  }
  long per_item() const { return static_cast<long>(c) * h * w; }

  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

template <typename T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(Shape s) : shape_(s), v_(static_cast<size_t>(s.size()), T(0)) {}
  TensorT(Shape s, std::vector<T> values) : shape_(s), v_(std::move(values)) {
    if (static_cast<long>(v_.size()) != s.size())
      throw ShapeError("tensor data does not match shape " + s.str());
  }

  const Shape& shape() const { return shape_; }
  size_t size() const { return v_.size(); }

  void resize(Shape s) {
    shape_ = s;
    v_.assign(static_cast<size_t>(s.size()), T(0));
  }
  // Reinterprets the underlying buffer with a new shape of equal size.
  void reshape(Shape s) {
    if (s.size() != shape_.size())
      throw ShapeError("reshape " + shape_.str() + " -> " + s.str());
    shape_ = s;
  }
  void fill(T x) { std::fill(v_.begin(), v_.end(), x); }
  void zero() { fill(T(0)); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& vec() { return v_; }
  const std::vector<T>& vec() const { return v_; }

  T& at(int n, int c, int h, int w) {
    return v_[((static_cast<size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  const T& at(int n, int c, int h, int w) const {
    return v_[((static_cast<size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  T& operator[](size_t i) { return v_[i]; }
  const T& operator[](size_t i) const { return v_[i]; }

 private:
  Shape shape_;
  std::vector<T> v_;
};

using Tensor = TensorT<float>;

}  // namespace stan::nn
