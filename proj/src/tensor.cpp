#include "textvae/tensor.hpp"

#include <cmath>
#include <string>

#include "textvae/errors.hpp"

namespace textvae {

Tensor::Tensor(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw DimensionError("tensor extents must be nonnegative");
  data_.assign(static_cast<long>(rows) * cols, fill);
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data_[0] = v;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return row(std::vector<double>(values));
}

Tensor Tensor::row(const std::vector<double>& values) {
  Tensor t;
  t.rows_ = 1;
  t.cols_ = static_cast<int>(values.size());
  t.data_ = values;
  return t;
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values) {
  if (static_cast<long>(rows) * cols != static_cast<long>(values.size()))
    throw DimensionError("tensor data length does not match shape");
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::move(values);
  return t;
}

double Tensor::item() const {
  if (!is_scalar()) throw ContractError("item() requires a 1x1 tensor");
  return data_[0];
}

bool Tensor::all_finite() const {
  // One accumulation pass; NaN/Inf poison the sum. Magnitudes in this code
  // stay far below the overflow range of a sum of absolute values.
  return std::isfinite(sum_abs());
}

void Tensor::require_finite(const char* what) const {
  if (!all_finite())
    throw NumericError(std::string("non-finite values in ") + what);
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

double Tensor::sum_abs() const {
  double acc = 0.0;
  for (double x : data_) acc += std::fabs(x);
  return acc;
}

double Tensor::sum() const {
  double acc = 0.0;
  for (double x : data_) acc += x;
  return acc;
}

}  // namespace textvae
