#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvnmt {

// Dense row-major tensor of 64-bit floats. Rank 0 is represented as shape {1}
// (scalars are one-element vectors); everything in this codebase is rank 1 or 2.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
  }
  Tensor(std::vector<int64_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape))
      throw std::invalid_argument("Tensor: data length does not match shape " +
                                  shape_str());
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t rows() const { return shape.at(0); }
  int64_t cols() const { return shape.at(1); }
  bool is_scalar() const { return numel() == 1; }

  double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return data[static_cast<size_t>(i)]; }
  double& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
  double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  bool all_finite() const;
};

// Thrown when operand shapes do not conform; the message names the operation
// and both shapes.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated call contracts (non-scalar loss, wrong variant components, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace mvnmt
