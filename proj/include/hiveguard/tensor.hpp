#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "hiveguard/errors.hpp"

namespace hiveguard {

/// Extents of a dense tensor, rank 1 through 5.
struct Shape {
  std::array<int, 5> ext{1, 1, 1, 1, 1};
  int rank = 0;

  Shape() = default;
  Shape(std::initializer_list<int> dims) {
    if (dims.size() < 1 || dims.size() > 5)
      throw ShapeError("tensor rank must be between 1 and 5");
    rank = static_cast<int>(dims.size());
    int i = 0;
    for (int d : dims) {
      if (d <= 0) throw ShapeError("tensor extents must be positive");
      ext[i++] = d;
    }
  }

  int operator[](int i) const { return ext[static_cast<size_t>(i)]; }

  int64_t numel() const {
    int64_t n = 1;
    for (int i = 0; i < rank; ++i) n *= ext[static_cast<size_t>(i)];
    return rank == 0 ? 0 : n;
  }

  bool operator==(const Shape& o) const {
    if (rank != o.rank) return false;
    for (int i = 0; i < rank; ++i)
      if (ext[static_cast<size_t>(i)] != o.ext[static_cast<size_t>(i)]) return false;
    return true;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::string s;
    for (int i = 0; i < rank; ++i) {
      if (i) s += 'x';
      s += std::to_string(ext[static_cast<size_t>(i)]);
    }
    return s;
  }
};

/// Dense row-major f32 tensor. `grad` is empty until the tensor takes part
/// in a tape; when allocated it matches `data` in length.
struct Tensor {
  Shape shape;
  std::vector<float> data;
  bool requires_grad = false;
  std::vector<float> grad;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f)
      : shape(s), data(static_cast<size_t>(s.numel()), fill) {}

  static Tensor from(Shape s, std::vector<float> values) {
    if (static_cast<int64_t>(values.size()) != s.numel())
      throw ShapeError("data length " + std::to_string(values.size()) +
                       " does not match shape " + s.str());
    Tensor t;
    t.shape = s;
    t.data = std::move(values);
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() { grad.assign(grad.size(), 0.0f); }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape)
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape.str() +
                     " vs " + b.shape.str());
}

}  // namespace hiveguard
