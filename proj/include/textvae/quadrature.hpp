#pragma once

#include <vector>

#include "textvae/model.hpp"

namespace textvae {

// Physicists' Gauss–Hermite rule: nodes/weights for integrals against
// exp(-t^2), computed by eigendecomposition of the Jacobi matrix. Nodes
// ascending; weights sum to sqrt(pi).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

HermiteRule gauss_hermite(int order);

// Exact (to quadrature accuracy) log p(x) = log ∫ p(x|z) N(z; 0, I) dz for
// models with latent_dim 1 or 2; dim-2 rules are tensorized. All arithmetic in
// the log domain with log-sum-exp.
double quadrature_log_marginal(const SeqVae& m, const std::vector<int>& sentence,
                               int order);

// Exact posterior-expected reconstruction term E_{q(z|x)}[-log p(x|z)] via the
// same rule shifted to z = mu + sqrt(2)*sigma*t. Same latent_dim restriction.
double expected_recon_nll_quadrature(const SeqVae& m,
                                     const std::vector<int>& sentence,
                                     int order);

}  // namespace textvae
