#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace parkcast::ad {

/// Shape of a dense tensor, rank 1..3, row-major.
struct Shape {
  std::uint8_t rank = 0;
  std::array<std::size_t, 3> dim{1, 1, 1};

  static Shape vec(std::size_t n) { return Shape{1, {n, 1, 1}}; }
  static Shape mat(std::size_t r, std::size_t c) { return Shape{2, {r, c, 1}}; }
  static Shape cube(std::size_t b, std::size_t r, std::size_t c) {
    return Shape{3, {b, r, c}};
  }

  std::size_t count() const {
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) n *= dim[i];
    return n;
  }
  /// Row and column extents of the trailing matrix (rank-1 acts as 1 x n).
  std::size_t rows() const { return rank >= 2 ? dim[rank - 2] : 1; }
  std::size_t cols() const { return rank >= 1 ? dim[rank - 1] : 1; }
  std::size_t batches() const { return rank == 3 ? dim[0] : 1; }

  bool operator==(const Shape &o) const {
    if (rank != o.rank) return false;
    for (int i = 0; i < rank; ++i)
      if (dim[i] != o.dim[i]) return false;
    return true;
  }
  bool operator!=(const Shape &o) const { return !(*this == o); }

  std::string str() const;
};

/// Dense tensor of doubles. Values are validated to be finite on
/// construction from data; op outputs are re-checked in debug builds.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape s) : shape_(s), data_(s.count(), 0.0) {}
  Tensor(Shape s, std::vector<double> values);

  static Tensor zeros(Shape s) { return Tensor(s); }
  static Tensor full(Shape s, double v);
  static Tensor scalar(double v);
  static Tensor vec(std::initializer_list<double> v);
  static Tensor mat(std::size_t r, std::size_t c, std::initializer_list<double> v);

  const Shape &shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<const double> values() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &at(std::size_t i, std::size_t j) {
    return data_[i * shape_.dim[shape_.rank - 1] + j];
  }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_.dim[shape_.rank - 1] + j];
  }
  double &at3(std::size_t b, std::size_t i, std::size_t j) {
    return data_[(b * shape_.dim[1] + i) * shape_.dim[2] + j];
  }
  double at3(std::size_t b, std::size_t i, std::size_t j) const {
    return data_[(b * shape_.dim[1] + i) * shape_.dim[2] + j];
  }

  /// Resize to `s` without value initialization guarantees; keeps the
  /// existing heap block when capacity suffices (tape slot reuse).
  void assign_shape(Shape s) {
    shape_ = s;
    data_.resize(s.count());
  }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  /// True when every element is finite.
  bool all_finite() const;
  /// Throws NumericError when a non-finite value is present.
  void check_finite(const char *what) const;

  bool operator==(const Tensor &o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

  /// Marks this tensor as a differentiable leaf when placed on a tape.
  bool requires_grad = false;

private:
  Shape shape_{};
  std::vector<double> data_;
};

} // namespace parkcast::ad
