#include "textvae/grad_check.hpp"

#include <cmath>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

double eval_loss(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(g.leaf(t, false));
  return build(g, vars).value().item();
}

}  // namespace

GradCheckReport check_gradients(const LossBuilder& build,
                                const std::vector<Tensor>& inputs, double h) {
  if (inputs.empty()) throw ContractError("check_gradients: no inputs");

  // One reverse pass for all analytic gradients.
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(g.leaf(t, true));
  Var loss = build(g, vars);
  g.backward(loss);

  GradCheckReport rep;
  std::vector<Tensor> probe = inputs;
  for (std::size_t vi = 0; vi < inputs.size(); ++vi) {
    for (int i = 0; i < probe[vi].size(); ++i) {
      double orig = probe[vi][i];
      probe[vi][i] = orig + h;
      double up = eval_loss(build, probe);
      probe[vi][i] = orig - h;
      double down = eval_loss(build, probe);
      probe[vi][i] = orig;

      double numeric = (up - down) / (2.0 * h);
      double analytic =
          g.has_grad(vars[vi]) ? g.grad(vars[vi])[i] : 0.0;
      double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      double rel = std::fabs(analytic - numeric) / denom;
      ++rep.entries;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_input = static_cast<int>(vi);
        rep.worst_index = i;
      }
    }
  }
  return rep;
}

}  // namespace textvae
