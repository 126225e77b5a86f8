#pragma once

#include <vector>

#include "textvae/tensor.hpp"

namespace textvae {

struct ClassifierConfig {
  int num_classes = 2;
  int iters = 500;
  double lr = 0.5;
};

// Multinomial logistic regression on frozen codes, zero-initialized,
// full-batch gradient descent. Returns test accuracy in percent. Only the
// first labeled_count training rows are used; they must span >= 2 classes.
double linear_classify(const Tensor& train_codes,
                       const std::vector<int>& train_labels,
                       const Tensor& test_codes,
                       const std::vector<int>& test_labels, int labeled_count,
                       const ClassifierConfig& cfg = {});

}  // namespace textvae
