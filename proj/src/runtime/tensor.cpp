#include "attribex/tensor.hpp"

#include <cmath>
#include <numeric>

#include "attribex/errors.hpp"

namespace attribex {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void check_finite(std::span<const double> values, const std::string& where) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw NumericsError(where + ": non-finite value at index " + std::to_string(i));
  }
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw InputShapeError("empty shape");
  for (auto e : shape)
    if (e == 0) throw InputShapeError("zero extent in " + shape_string(shape));
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_size(shape_) != data_.size())
    throw InputShapeError("shape " + shape_string(shape_) + " needs " + std::to_string(shape_size(shape_)) +
                          " values, got " + std::to_string(data_.size()));
  check_finite(data_, "tensor");
}

Tensor Tensor::vector(std::vector<double> data) {
  Shape s{data.size()};
  return Tensor(std::move(s), std::move(data));
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  check_finite(t.data_, "tensor");
  return t;
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace attribex
