#include "textvae/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "textvae/errors.hpp"

namespace textvae {

double anneal_weight(const ScheduleConfig& s, long long step,
                     int steps_per_epoch) {
  if (step < 0) throw ContractError("anneal_weight: negative step");
  if (steps_per_epoch <= 0)
    throw ContractError("anneal_weight: steps_per_epoch must be positive");
  switch (s.kind) {
    case ScheduleKind::Constant1:
      return 1.0;
    case ScheduleKind::Linear: {
      if (s.linear_epochs <= 0)
        throw ConfigError("linear schedule needs linear_epochs >= 1");
      double ramp = static_cast<double>(s.linear_epochs) * steps_per_epoch;
      return std::min(1.0, static_cast<double>(step) / ramp);
    }
    case ScheduleKind::Cyclic: {
      if (s.cyclic_m <= 0 || s.cyclic_r <= 0.0 || s.cyclic_r > 1.0)
        throw ConfigError("cyclic schedule needs m >= 1 and r in (0, 1]");
      long long total =
          static_cast<long long>(std::max(s.total_epochs, 1)) * steps_per_epoch;
      long long cycle = std::max<long long>(1, total / s.cyclic_m);
      double tau = static_cast<double>(step % cycle) / static_cast<double>(cycle);
      return std::min(1.0, tau / s.cyclic_r);
    }
  }
  throw ContractError("anneal_weight: unknown schedule kind");
}

const char* objective_kind_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Elbo: return "elbo";
    case ObjectiveKind::Fb: return "fb";
    case ObjectiveKind::Fbp: return "fbp";
    case ObjectiveKind::Ae: return "ae";
    case ObjectiveKind::Iwae: return "iwae";
  }
  return "?";
}

ObjectiveKind parse_objective_kind(const std::string& name) {
  if (name == "elbo") return ObjectiveKind::Elbo;
  if (name == "fb") return ObjectiveKind::Fb;
  if (name == "fbp") return ObjectiveKind::Fbp;
  if (name == "ae") return ObjectiveKind::Ae;
  if (name == "iwae") return ObjectiveKind::Iwae;
  throw ConfigError("unknown objective kind: " + name);
}

double free_bits_hinge(const std::vector<double>& kl_per_dim, double lambda) {
  if (lambda < 0) throw ConfigError("free bits threshold must be >= 0");
  double s = 0.0;
  for (double k : kl_per_dim) s += std::max(lambda, k);
  return s;
}

double fbp_hinge(double kl_total, double lambda) {
  if (lambda < 0) throw ConfigError("free bits threshold must be >= 0");
  return std::max(lambda, kl_total);
}

namespace {

ObjectiveBuild build_iwae(Graph& g, const SeqVae& m, const ModelVars& mv,
                          const Batch& batch, const ObjectiveConfig& cfg,
                          bool train, Rng& rng) {
  int k = cfg.iwae_k;
  if (k < 1) throw ConfigError("iwae needs k >= 1");
  int bsz = static_cast<int>(batch.size());

  PosteriorVars post = encode_batch(g, m, mv, batch);
  Var z = sample_z_repeated(g, post, k, rng);
  Batch rep;
  rep.reserve(static_cast<std::size_t>(bsz) * k);
  for (const auto& s : batch)
    for (int j = 0; j < k; ++j) rep.push_back(s);
  Var nll = decode_nll(g, m, mv, z, rep, train, &rng);  // (B*k) x 1

  Var log_q = gaussian_log_pdf(g, z, g.repeat_rows(post.mu, k),
                               g.repeat_rows(post.log_var, k));
  Var log_w = g.add(g.add(g.scale(nll, -1.0), standard_normal_log_pdf(g, z)),
                    g.scale(log_q, -1.0));
  Var lse = g.logsumexp_axis1(g.reshape(log_w, bsz, k));
  Var bound = g.scale(g.add_const(lse, -std::log(static_cast<double>(k))), -1.0);

  ObjectiveBuild out;
  out.loss = g.mean_all(bound);

  Var klbar = g.mean_axis0(kl_per_dim(g, post));
  const Tensor& klv = klbar.value();
  out.report.kl_per_dim.assign(klv.data(), klv.data() + klv.size());
  out.report.kl_total = klv.sum();
  out.report.hinged_kl = out.report.kl_total;
  out.report.recon_nll = nll.value().sum() / (bsz * k);
  out.report.beta = 1.0;
  out.report.objective = out.loss.value().item();
  return out;
}

}  // namespace

ObjectiveBuild build_objective(Graph& g, const SeqVae& m, const ModelVars& mv,
                               const Batch& batch, const ObjectiveConfig& cfg,
                               double beta, bool train, Rng& rng) {
  if (beta < 0.0 || beta > 1.0)
    throw ContractError("build_objective: beta outside [0, 1]");
  if (cfg.kind == ObjectiveKind::Iwae)
    return build_iwae(g, m, mv, batch, cfg, train, rng);

  PosteriorVars post = encode_batch(g, m, mv, batch);
  bool ae = cfg.kind == ObjectiveKind::Ae;
  Var z = (ae && !cfg.ae_sample_z) ? post.mu : sample_z(g, post, rng);
  Var nll = decode_nll(g, m, mv, z, batch, train, &rng);
  Var recon = g.mean_all(nll);

  Var klbar = g.mean_axis0(kl_per_dim(g, post));  // 1 x D
  Var kl_total = g.sum_all(klbar);

  ObjectiveBuild out;
  const Tensor& klv = klbar.value();
  out.report.kl_per_dim.assign(klv.data(), klv.data() + klv.size());
  out.report.kl_total = kl_total.value().item();
  out.report.recon_nll = recon.value().item();

  switch (cfg.kind) {
    case ObjectiveKind::Ae:
      out.loss = recon;
      out.report.hinged_kl = 0.0;
      out.report.beta = 0.0;
      break;
    case ObjectiveKind::Elbo:
      out.loss = g.add(recon, g.scale(kl_total, beta));
      out.report.hinged_kl = out.report.kl_total;
      out.report.beta = beta;
      break;
    case ObjectiveKind::Fb: {
      if (cfg.target_rate < 0)
        throw ConfigError("free bits threshold must be >= 0");
      Var hinged = g.sum_all(g.max_const(klbar, cfg.target_rate));
      out.loss = g.add(recon, g.scale(hinged, beta));
      out.report.hinged_kl = hinged.value().item();
      out.report.beta = beta;
      break;
    }
    case ObjectiveKind::Fbp: {
      if (cfg.target_rate < 0)
        throw ConfigError("free bits threshold must be >= 0");
      Var hinged = g.max_const(kl_total, cfg.target_rate);
      out.loss = g.add(recon, g.scale(hinged, beta));
      out.report.hinged_kl = hinged.value().item();
      out.report.beta = beta;
      break;
    }
    case ObjectiveKind::Iwae:
      break;  // handled above
  }
  out.report.objective = out.loss.value().item();
  return out;
}

LossBreakdown compute_objective(const SeqVae& m, const Batch& batch,
                                const ObjectiveConfig& cfg, long long step,
                                int steps_per_epoch, Rng& rng) {
  double beta = cfg.kind == ObjectiveKind::Elbo || cfg.kind == ObjectiveKind::Fb ||
                        cfg.kind == ObjectiveKind::Fbp
                    ? anneal_weight(cfg.schedule, step, steps_per_epoch)
                    : 1.0;
  Graph g;
  ModelVars mv = lift_model(g, m, false, false);
  return build_objective(g, m, mv, batch, cfg, beta, false, rng).report;
}

double iwae_objective(const SeqVae& m, const std::vector<int>& sentence, int k,
                      Rng& rng) {
  ObjectiveConfig cfg;
  cfg.kind = ObjectiveKind::Iwae;
  cfg.iwae_k = k;
  Graph g;
  ModelVars mv = lift_model(g, m, false, false);
  return build_objective(g, m, mv, Batch{sentence}, cfg, 1.0, false, rng)
      .report.objective;
}

}  // namespace textvae

