#include "textvae/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "textvae/errors.hpp"

namespace textvae {

double linear_classify(const Tensor& train_codes,
                       const std::vector<int>& train_labels,
                       const Tensor& test_codes,
                       const std::vector<int>& test_labels, int labeled_count,
                       const ClassifierConfig& cfg) {
  int dim = train_codes.cols();
  int classes = cfg.num_classes;
  if (classes < 2) throw ConfigError("linear_classify: need >= 2 classes");
  if (labeled_count < 1 || labeled_count > train_codes.rows())
    throw ContractError("linear_classify: labeled_count outside training set");
  if (static_cast<int>(train_labels.size()) != train_codes.rows() ||
      static_cast<int>(test_labels.size()) != test_codes.rows())
    throw ContractError("linear_classify: label/code count mismatch");
  if (test_codes.cols() != dim)
    throw DimensionError("linear_classify: train/test dimension mismatch");

  std::set<int> seen;
  for (int i = 0; i < labeled_count; ++i) {
    int l = train_labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= classes)
      throw ContractError("linear_classify: label outside [0, classes)");
    seen.insert(l);
  }
  if (seen.size() < 2)
    throw ContractError(
        "linear_classify: labeled subset covers a single class");
  for (int l : test_labels)
    if (l < 0 || l >= classes)
      throw ContractError("linear_classify: label outside [0, classes)");

  Tensor w(dim, classes);  // zero init keeps the fit rotation-equivariant
  Tensor b(1, classes);
  int n = labeled_count;

  std::vector<double> logits(static_cast<std::size_t>(classes));
  Tensor gw(dim, classes);
  Tensor gb(1, classes);
  for (int it = 0; it < cfg.iters; ++it) {
    gw.fill(0.0);
    gb.fill(0.0);
    for (int i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < classes; ++c) {
        double v = b(0, c);
        for (int d = 0; d < dim; ++d) v += train_codes(i, d) * w(d, c);
        logits[static_cast<std::size_t>(c)] = v;
        mx = std::max(mx, v);
      }
      double z = 0.0;
      for (int c = 0; c < classes; ++c)
        z += std::exp(logits[static_cast<std::size_t>(c)] - mx);
      for (int c = 0; c < classes; ++c) {
        double p = std::exp(logits[static_cast<std::size_t>(c)] - mx) / z;
        double delta =
            p - (c == train_labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
        gb(0, c) += delta / n;
        for (int d = 0; d < dim; ++d) gw(d, c) += delta * train_codes(i, d) / n;
      }
    }
    for (int i = 0; i < gw.size(); ++i) w[i] -= cfg.lr * gw[i];
    for (int i = 0; i < gb.size(); ++i) b[i] -= cfg.lr * gb[i];
  }

  int hits = 0;
  for (int i = 0; i < test_codes.rows(); ++i) {
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes; ++c) {
      double v = b(0, c);
      for (int d = 0; d < dim; ++d) v += test_codes(i, d) * w(d, c);
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    if (best == test_labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return 100.0 * hits / test_codes.rows();
}

}  // namespace textvae
