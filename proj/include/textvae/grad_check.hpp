#pragma once

#include <functional>
#include <vector>

#include "textvae/graph.hpp"
#include "textvae/tensor.hpp"

namespace textvae {

// Builds a scalar loss from leaves created for `inputs` (same order). Called
// repeatedly on fresh graphs, so it must be deterministic in the inputs.
using LossBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  int entries = 0;       // parameter entries compared
  int worst_input = -1;  // index into inputs of the worst entry
  int worst_index = -1;  // flat element index within that input
};

// Compares reverse-mode gradients of `build` against central finite
// differences at step h. Relative error per entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport check_gradients(const LossBuilder& build,
                                const std::vector<Tensor>& inputs,
                                double h = 1e-5);

}  // namespace textvae
