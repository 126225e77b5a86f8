#pragma once

#include <initializer_list>
#include <vector>

namespace textvae {

// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xN.
// Rank is fixed at two; every real-valued intermediate in this codebase is a
// batch-by-feature block, a parameter matrix, or a scalar loss.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor row(std::initializer_list<double> values);
  static Tensor row(const std::vector<double>& values);
  static Tensor from(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long size() const { return static_cast<long>(rows_) * cols_; }
  bool empty() const { return size() == 0; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator()(int r, int c) { return data_[static_cast<long>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<long>(r) * cols_ + c]; }
  double& operator[](long i) { return data_[i]; }
  double operator[](long i) const { return data_[i]; }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  // Value of a 1x1 tensor; throws ContractError otherwise.
  double item() const;

  bool all_finite() const;
  // Throws NumericError when any entry is NaN/Inf. `what` names the producer.
  void require_finite(const char* what) const;

  void fill(double v);
  double sum_abs() const;
  double sum() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace textvae
