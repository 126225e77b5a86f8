#pragma once

#include <string>
#include <vector>

#include "textvae/model.hpp"

namespace textvae {

enum class ScheduleKind { Constant1, Linear, Cyclic };

// KL-weight schedule beta(step), always in [0, 1].
struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::Constant1;
  int linear_epochs = 10;   // ramp 0 -> 1 over this many epochs
  int cyclic_m = 4;         // cycles spread over total_epochs
  double cyclic_r = 0.5;    // ramp fraction of each cycle, then flat at 1
  int total_epochs = 100;   // horizon the cyclic schedule divides into cycles
};

double anneal_weight(const ScheduleConfig& s, long long step,
                     int steps_per_epoch);

enum class ObjectiveKind { Elbo, Fb, Fbp, Ae, Iwae };

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::Elbo;
  // Hinge threshold: per dimension for fb, on the total for fbp.
  double target_rate = 0.0;
  int iwae_k = 10;
  ScheduleConfig schedule;
  bool ae_sample_z = false;  // ae default: z = posterior mean, no noise
};

const char* objective_kind_name(ObjectiveKind k);
ObjectiveKind parse_objective_kind(const std::string& name);

// Batch-aggregated terms; per-sentence values are token-summed, then averaged
// over the batch. kl fields are analytic (closed-form Gaussian KL).
struct LossBreakdown {
  double recon_nll = 0.0;
  std::vector<double> kl_per_dim;  // batch-mean KL of each latent dimension
  double kl_total = 0.0;
  double hinged_kl = 0.0;          // kl after the fb/fbp hinge (0 for ae)
  double beta = 1.0;
  double objective = 0.0;
};

// Plain hinges for reporting and tests; the training path applies the same
// formulas through graph ops.
double free_bits_hinge(const std::vector<double>& kl_per_dim, double lambda);
double fbp_hinge(double kl_total, double lambda);

struct ObjectiveBuild {
  Var loss;  // scalar; the trainer backpropagates this
  LossBreakdown report;
};

// Builds the training loss for one batch on g at the given KL weight. train
// enables decoder dropout (always through rng; validation passes train=false
// with a fixed rng for the z draws).
ObjectiveBuild build_objective(Graph& g, const SeqVae& m, const ModelVars& mv,
                               const Batch& batch, const ObjectiveConfig& cfg,
                               double beta, bool train, Rng& rng);

// Forward-only convenience: beta from the schedule at `step`.
LossBreakdown compute_objective(const SeqVae& m, const Batch& batch,
                                const ObjectiveConfig& cfg, long long step,
                                int steps_per_epoch, Rng& rng);

// Importance-weighted bound for one sentence, k reparameterized draws:
// -(logsumexp_j [log p(x|z_j) + log p(z_j) - log q(z_j|x)] - log k).
double iwae_objective(const SeqVae& m, const std::vector<int>& sentence, int k,
                      Rng& rng);

}  // namespace textvae
