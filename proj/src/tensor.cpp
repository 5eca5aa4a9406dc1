#include "parkcast/tensor.hpp"

#include <cmath>

#include "parkcast/error.hpp"

namespace parkcast::ad {

std::string Shape::str() const {
  std::string s = "{";
  for (int i = 0; i < rank; ++i) {
    if (i) s += ",";
    s += std::to_string(dim[i]);
  }
  s += "}";
  return s;
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape_(s), data_(std::move(values)) {
  if (data_.size() != s.count())
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + s.str());
  check_finite("tensor construction");
}

Tensor Tensor::full(Shape s, double v) {
  Tensor t(s);
  t.fill(v);
  t.check_finite("tensor fill");
  return t;
}

Tensor Tensor::scalar(double v) { return Tensor(Shape::vec(1), {v}); }

Tensor Tensor::vec(std::initializer_list<double> v) {
  return Tensor(Shape::vec(v.size()), std::vector<double>(v));
}

Tensor Tensor::mat(std::size_t r, std::size_t c, std::initializer_list<double> v) {
  return Tensor(Shape::mat(r, c), std::vector<double>(v));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::check_finite(const char *what) const {
  if (!all_finite())
    throw NumericError(std::string(what) + ": non-finite value in tensor " +
                       shape_.str());
}

} // namespace parkcast::ad
