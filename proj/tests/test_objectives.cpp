#include <cmath>
#include <numeric>

#include "doctest.h"
#include "textvae/errors.hpp"
#include "textvae/objectives.hpp"

using namespace textvae;

namespace {

SeqVae small_model(std::uint64_t seed = 5) {
  ModelDims dims;
  dims.vocab = 12;
  dims.embed = 4;
  dims.hidden = 6;
  dims.latent = 3;
  Rng rng(seed);
  SeqVae m = init_model(dims, rng);
  m.dropout = 0.0;
  return m;
}

Batch small_batch() { return {{1, 4, 5, 2}, {1, 6, 7, 8, 2}, {1, 9, 2}}; }

// The returned loss Var lives on the caller's graph.
ObjectiveBuild build_on(Graph& g, const SeqVae& m, const ObjectiveConfig& cfg,
                        double beta, std::uint64_t noise_seed) {
  ModelVars mv = lift_model(g, m, true, true);
  Rng rng(noise_seed);
  return build_objective(g, m, mv, small_batch(), cfg, beta, false, rng);
}

}  // namespace

TEST_CASE("anneal_weight: linear ramp hits 1 and stays there") {
  ScheduleConfig s;
  s.kind = ScheduleKind::Linear;
  s.linear_epochs = 10;
  int spe = 20;  // steps per epoch
  CHECK(anneal_weight(s, 0, spe) == doctest::Approx(0.0));
  CHECK(anneal_weight(s, 100, spe) == doctest::Approx(0.5));
  CHECK(anneal_weight(s, 200, spe) == doctest::Approx(1.0));
  CHECK(anneal_weight(s, 5000, spe) == doctest::Approx(1.0));

  s.kind = ScheduleKind::Constant1;
  CHECK(anneal_weight(s, 0, spe) == 1.0);
  CHECK(anneal_weight(s, 123, spe) == 1.0);
}

TEST_CASE("anneal_weight: cyclic restarts from zero each cycle") {
  ScheduleConfig s;
  s.kind = ScheduleKind::Cyclic;
  s.cyclic_m = 4;
  s.cyclic_r = 0.5;
  s.total_epochs = 8;
  int spe = 10;  // cycle length = 8*10/4 = 20 steps, ramp over first 10
  CHECK(anneal_weight(s, 0, spe) == doctest::Approx(0.0));
  CHECK(anneal_weight(s, 5, spe) == doctest::Approx(0.5));
  CHECK(anneal_weight(s, 10, spe) == doctest::Approx(1.0));
  CHECK(anneal_weight(s, 15, spe) == doctest::Approx(1.0));  // flat half
  CHECK(anneal_weight(s, 20, spe) == doctest::Approx(0.0));  // restart
  CHECK(anneal_weight(s, 25, spe) == doctest::Approx(0.5));
}

TEST_CASE("free-bits hinge with lambda = 0 reproduces the ELBO bitwise") {
  SeqVae m = small_model();
  ObjectiveConfig elbo;
  elbo.kind = ObjectiveKind::Elbo;
  ObjectiveConfig fb0;
  fb0.kind = ObjectiveKind::Fb;
  fb0.target_rate = 0.0;
  Graph ga, gb;
  auto a = build_on(ga, m, elbo, 1.0, 99);
  auto b = build_on(gb, m, fb0, 1.0, 99);
  CHECK(a.loss.value().item() == b.loss.value().item());
  CHECK(a.report.recon_nll == b.report.recon_nll);
  CHECK(a.report.kl_total == b.report.kl_total);
}

TEST_CASE("free-bits hinge: huge lambda floors every dimension") {
  SeqVae m = small_model();
  ObjectiveConfig fb;
  fb.kind = ObjectiveKind::Fb;
  fb.target_rate = 50.0;  // far above any KL this model produces
  Graph g;
  auto r = build_on(g, m, fb, 1.0, 3).report;
  CHECK(r.hinged_kl == doctest::Approx(50.0 * 3).epsilon(1e-12));
  CHECK(r.objective ==
        doctest::Approx(r.recon_nll + 50.0 * 3).epsilon(1e-12));
  // actual KL stays what it is; only the loss term is floored
  CHECK(r.kl_total < 1.0);
}

TEST_CASE("fb hinge helper: only deficient dims get floored") {
  std::vector<double> kl{0.1, 2.0, 0.4};
  CHECK(free_bits_hinge(kl, 0.5) == doctest::Approx(0.5 + 2.0 + 0.5));
  CHECK(free_bits_hinge(kl, 0.0) == doctest::Approx(2.5));
  CHECK(fbp_hinge(2.5, 4.0) == 4.0);
  CHECK(fbp_hinge(2.5, 1.0) == 2.5);
}

TEST_CASE("fbp hinges the total, not each dimension") {
  SeqVae m = small_model();
  ObjectiveConfig fbp;
  fbp.kind = ObjectiveKind::Fbp;
  fbp.target_rate = 7.0;
  Graph g7, g0;
  auto r = build_on(g7, m, fbp, 1.0, 3).report;
  CHECK(r.hinged_kl == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(r.objective == doctest::Approx(r.recon_nll + 7.0).epsilon(1e-12));

  fbp.target_rate = 0.0;
  auto r0 = build_on(g0, m, fbp, 1.0, 3).report;
  CHECK(r0.hinged_kl == doctest::Approx(r0.kl_total).epsilon(1e-12));
}

TEST_CASE("ae: loss is reconstruction only and ignores beta") {
  SeqVae m = small_model();
  ObjectiveConfig ae;
  ae.kind = ObjectiveKind::Ae;
  Graph g1, g2;
  auto r = build_on(g1, m, ae, 0.37, 8);
  CHECK(r.loss.value().item() == doctest::Approx(r.report.recon_nll));
  CHECK(r.report.hinged_kl == 0.0);
  CHECK(r.report.beta == 0.0);
  // deterministic: mean code, no sampling noise
  auto r2 = build_on(g2, m, ae, 0.37, 12345);
  CHECK(r.loss.value().item() == r2.loss.value().item());
}

TEST_CASE("beta scales only the KL term of the ELBO") {
  SeqVae m = small_model();
  ObjectiveConfig elbo;
  Graph gf, gh;
  auto full = build_on(gf, m, elbo, 1.0, 6).report;
  auto half = build_on(gh, m, elbo, 0.5, 6).report;
  CHECK(half.beta == 0.5);
  CHECK(half.objective ==
        doctest::Approx(half.recon_nll + 0.5 * half.kl_total).epsilon(1e-12));
  CHECK(full.kl_total == doctest::Approx(half.kl_total).epsilon(1e-12));
}

TEST_CASE("kl_per_dim breakdown sums to kl_total") {
  SeqVae m = small_model();
  ObjectiveConfig elbo;
  Graph g;
  auto r = build_on(g, m, elbo, 1.0, 6).report;
  REQUIRE(r.kl_per_dim.size() == 3);
  double s = std::accumulate(r.kl_per_dim.begin(), r.kl_per_dim.end(), 0.0);
  CHECK(s == doctest::Approx(r.kl_total).epsilon(1e-12));
}

TEST_CASE("iwae with k = 1 averages to the single-sample ELBO") {
  SeqVae m = small_model(11);
  std::vector<int> sent{1, 4, 5, 6, 2};

  // E[-elbo] with one z draw, via the training objective on a batch of one
  ObjectiveConfig elbo;
  double elbo_acc = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    Graph g;
    ModelVars mv = lift_model(g, m, false, false);
    Rng rng(500 + t);
    auto b = build_objective(g, m, mv, {sent}, elbo, 1.0, false, rng);
    elbo_acc += b.loss.value().item();
  }
  double iwae_acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(9000 + t);
    iwae_acc += iwae_objective(m, sent, 1, rng);
  }
  // both estimate E_q[-(log p(x|z) + log p(z) - log q(z|x))]; with an untrained
  // model the variance is tiny, so the means sit close together
  CHECK(elbo_acc / trials ==
        doctest::Approx(iwae_acc / trials).epsilon(5e-3));
}

TEST_CASE("iwae training loss uses k grouped draws") {
  SeqVae m = small_model();
  ObjectiveConfig iw;
  iw.kind = ObjectiveKind::Iwae;
  iw.iwae_k = 5;
  Graph g;
  auto r = build_on(g, m, iw, 1.0, 2);
  CHECK(std::isfinite(r.loss.value().item()));
  // bound improves (or ties) on the k=1 case in expectation; with a fixed
  // seed we just require a finite, plausible magnitude
  CHECK(r.loss.value().item() > 0.0);
}

TEST_CASE("compute_objective mirrors build_objective at the scheduled beta") {
  SeqVae m = small_model();
  ObjectiveConfig cfg;
  cfg.kind = ObjectiveKind::Elbo;
  cfg.schedule.kind = ScheduleKind::Linear;
  cfg.schedule.linear_epochs = 4;
  Rng rng(21);
  LossBreakdown r = compute_objective(m, small_batch(), cfg, 20, 10, rng);
  CHECK(r.beta == doctest::Approx(0.5));
  CHECK(r.objective ==
        doctest::Approx(r.recon_nll + 0.5 * r.kl_total).epsilon(1e-12));
  CHECK(std::isfinite(r.recon_nll));
}

TEST_CASE("objective kind names round-trip and reject junk") {
  for (auto k : {ObjectiveKind::Elbo, ObjectiveKind::Fb, ObjectiveKind::Fbp,
                 ObjectiveKind::Ae, ObjectiveKind::Iwae})
    CHECK(parse_objective_kind(objective_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_objective_kind("elbow"), ConfigError);
}
