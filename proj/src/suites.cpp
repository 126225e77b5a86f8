#include "textvae/suites.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "textvae/errors.hpp"
#include "textvae/estimators.hpp"
#include "textvae/grad_check.hpp"
#include "textvae/objectives.hpp"
#include "textvae/quadrature.hpp"
#include "textvae/trainer.hpp"

namespace textvae {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

Tensor rand_t(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Mixing weights make every entry's gradient distinct, so transposed or
// misrouted adjoints cannot cancel out.
Var weighted(Graph& g, Var v, const Tensor& w) {
  return g.sum_all(g.mul(v, g.constant(w)));
}

struct OpCase {
  std::vector<Tensor> inputs;
  LossBuilder build;
};

using CaseGen = std::function<OpCase(Rng&)>;

double worst_over_cases(const CaseGen& gen, int cases, Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < cases; ++i) {
    OpCase c = gen(rng);
    GradCheckReport rep = check_gradients(c.build, c.inputs);
    worst = std::max(worst, rep.max_rel_err);
  }
  return worst;
}

std::vector<std::pair<const char*, CaseGen>> op_case_gens() {
  std::vector<std::pair<const char*, CaseGen>> gens;
  auto dims = [](Rng& rng) {
    return std::pair<int, int>{2 + rng.uniform_int(3), 2 + rng.uniform_int(4)};
  };

  gens.emplace_back("add", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, r, c);
    return OpCase{{rand_t(rng, r, c), rand_t(rng, r, c)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.add(in[0], in[1]), w);
                  }};
  });
  gens.emplace_back("add_rowwise", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, r, c);
    return OpCase{{rand_t(rng, r, c), rand_t(rng, 1, c)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.add_rowwise(in[0], in[1]), w);
                  }};
  });
  gens.emplace_back("mul", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, r, c);
    return OpCase{{rand_t(rng, r, c), rand_t(rng, r, c)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.mul(in[0], in[1]), w);
                  }};
  });
  gens.emplace_back("scale", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    double f = rng.uniform(-2.0, 2.0);
    Tensor w = rand_t(rng, r, c);
    return OpCase{{rand_t(rng, r, c)},
                  [w, f](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.scale(in[0], f), w);
                  }};
  });
  gens.emplace_back("add_const", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    double k = rng.uniform(-1.0, 1.0);
    Tensor w = rand_t(rng, r, c);
    return OpCase{{rand_t(rng, r, c)},
                  [w, k](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.add_const(in[0], k), w);
                  }};
  });
  gens.emplace_back("matmul", [dims](Rng& rng) {
    auto [m, k] = dims(rng);
    int n = 2 + rng.uniform_int(3);
    Tensor w = rand_t(rng, m, n);
    return OpCase{{rand_t(rng, m, k), rand_t(rng, k, n)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.matmul(in[0], in[1]), w);
                  }};
  });
  auto unary = [dims](Var (Graph::*op)(Var), double lo, double hi) {
    return [dims, op, lo, hi](Rng& rng) {
      auto [r, c] = dims(rng);
      Tensor w = rand_t(rng, r, c);
      return OpCase{{rand_t(rng, r, c, lo, hi)},
                    [w, op](Graph& g, const std::vector<Var>& in) {
                      return weighted(g, (g.*op)(in[0]), w);
                    }};
    };
  };
  gens.emplace_back("sigmoid", unary(&Graph::sigmoid, -3.0, 3.0));
  gens.emplace_back("tanh", unary(&Graph::tanh, -3.0, 3.0));
  gens.emplace_back("exp", unary(&Graph::exp, -1.5, 1.5));
  gens.emplace_back("log", unary(&Graph::log, 0.4, 2.4));
  gens.emplace_back("concat_cols", [dims](Rng& rng) {
    auto [r, c1] = dims(rng);
    int c2 = 1 + rng.uniform_int(4);
    Tensor w = rand_t(rng, r, c1 + c2);
    return OpCase{{rand_t(rng, r, c1), rand_t(rng, r, c2)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.concat_cols(in[0], in[1]), w);
                  }};
  });
  gens.emplace_back("slice_cols", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    int start = rng.uniform_int(c);
    int len = 1 + rng.uniform_int(c - start);
    Tensor w = rand_t(rng, r, len);
    return OpCase{{rand_t(rng, r, c)},
                  [w, start, len](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.slice_cols(in[0], start, len), w);
                  }};
  });
  gens.emplace_back("softmax_xent", [dims](Rng& rng) {
    auto [r, v] = dims(rng);
    std::vector<int> targets(static_cast<std::size_t>(r));
    for (auto& t : targets) t = rng.uniform_int(v);
    Tensor w = rand_t(rng, r, 1, 0.2, 1.2);
    return OpCase{{rand_t(rng, r, v, -2.0, 2.0)},
                  [w, targets](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.softmax_xent(in[0], targets), w);
                  }};
  });
  gens.emplace_back("sum_all", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    return OpCase{{rand_t(rng, r, c)},
                  [](Graph& g, const std::vector<Var>& in) {
                    return g.sum_all(in[0]);
                  }};
  });
  gens.emplace_back("mean_all", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    return OpCase{{rand_t(rng, r, c)},
                  [](Graph& g, const std::vector<Var>& in) {
                    return g.mean_all(in[0]);
                  }};
  });
  gens.emplace_back("mean_axis0", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, 1, c);
    return OpCase{{rand_t(rng, r, c)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.mean_axis0(in[0]), w);
                  }};
  });
  gens.emplace_back("sum_axis1", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, r, 1);
    return OpCase{{rand_t(rng, r, c)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.sum_axis1(in[0]), w);
                  }};
  });
  gens.emplace_back("logsumexp_axis1", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, r, 1);
    return OpCase{{rand_t(rng, r, c, -2.0, 2.0)},
                  [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.logsumexp_axis1(in[0]), w);
                  }};
  });
  gens.emplace_back("max_const", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    // keep entries away from the threshold so the finite difference never
    // straddles the kink
    Tensor x(r, c);
    for (long i = 0; i < x.size(); ++i) {
      double mag = rng.uniform(0.2, 1.2);
      x[i] = rng.uniform() < 0.5 ? -mag : mag;
    }
    Tensor w = rand_t(rng, r, c);
    return OpCase{{x}, [w](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.max_const(in[0], 0.0), w);
                  }};
  });
  gens.emplace_back("gather_rows", [dims](Rng& rng) {
    auto [v, e] = dims(rng);
    int n = 3 + rng.uniform_int(4);  // > v sometimes, so rows repeat
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (auto& id : ids) id = rng.uniform_int(v);
    Tensor w = rand_t(rng, n, e);
    return OpCase{{rand_t(rng, v, e)},
                  [w, ids](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.gather_rows(in[0], ids), w);
                  }};
  });
  gens.emplace_back("dropout", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    std::uint64_t mask_seed = rng.next_u64();
    Tensor w = rand_t(rng, r, c);
    return OpCase{{rand_t(rng, r, c)},
                  [w, mask_seed](Graph& g, const std::vector<Var>& in) {
                    Rng mask_rng(mask_seed);
                    return weighted(g, g.dropout(in[0], 0.35, mask_rng), w);
                  }};
  });
  gens.emplace_back("repeat_rows", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    int k = 2 + rng.uniform_int(2);
    Tensor w = rand_t(rng, r * k, c);
    return OpCase{{rand_t(rng, r, c)},
                  [w, k](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.repeat_rows(in[0], k), w);
                  }};
  });
  gens.emplace_back("reshape", [dims](Rng& rng) {
    auto [r, c] = dims(rng);
    Tensor w = rand_t(rng, c, r);
    return OpCase{{rand_t(rng, r, c)},
                  [w, r, c](Graph& g, const std::vector<Var>& in) {
                    return weighted(g, g.reshape(in[0], c, r), w);
                  }};
  });
  return gens;
}

// --- full-loss parameter-space finite differences -------------------------

struct TinySetup {
  SeqVae model;
  Batch batch;
};

TinySetup make_tiny(Rng& rng) {
  ModelDims dims;
  dims.vocab = 12;
  dims.embed = 4;
  dims.hidden = 5;
  dims.latent = 3;
  Rng init(rng.next_u64());
  TinySetup s{init_model(dims, init), {}};
  s.model.dropout = 0.0;
  int bsz = 2 + rng.uniform_int(2);
  for (int i = 0; i < bsz; ++i) {
    std::vector<int> ids{1};
    int words = 1 + rng.uniform_int(3);
    for (int t = 0; t < words; ++t) ids.push_back(4 + rng.uniform_int(8));
    ids.push_back(2);
    s.batch.push_back(std::move(ids));
  }
  return s;
}

double loss_value(const SeqVae& m, const Batch& batch,
                  const ObjectiveConfig& cfg, double beta,
                  std::uint64_t noise_seed) {
  Graph g;
  ModelVars mv = lift_model(g, m, true, true);
  Rng noise(noise_seed);
  return build_objective(g, m, mv, batch, cfg, beta, false, noise)
      .loss.value()
      .item();
}

std::vector<Tensor*> all_tensors(SeqVae& m) {
  std::vector<Tensor*> out = encoder_tensors(m);
  for (Tensor* t : decoder_tensors(m)) out.push_back(t);
  return out;
}

double loss_fd_case(const char* /*name*/, const ObjectiveConfig& cfg,
                    double beta, Rng& rng) {
  TinySetup s = make_tiny(rng);
  std::uint64_t noise_seed = rng.next_u64();

  // keep the per-dim KL terms clear of the free-bits threshold so the hinge
  // never flips inside the finite-difference step
  if (cfg.target_rate > 0.0) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      Graph g;
      ModelVars mv = lift_model(g, s.model, false, false);
      PosteriorVars post = encode_batch(g, s.model, mv, s.batch);
      Tensor klbar = g.value(g.mean_axis0(kl_per_dim(g, post)));
      double margin = 1e30;
      double total = 0.0;
      for (long i = 0; i < klbar.size(); ++i) {
        margin = std::min(margin, std::fabs(klbar[i] - cfg.target_rate));
        total += klbar[i];
      }
      if (cfg.kind == ObjectiveKind::Fbp)
        margin = std::fabs(total - cfg.target_rate);
      if (margin > 1e-3) break;
      s = make_tiny(rng);
    }
  }

  Graph g;
  ModelVars mv = lift_model(g, s.model, true, true);
  Rng noise(noise_seed);
  ObjectiveBuild ob =
      build_objective(g, s.model, mv, s.batch, cfg, beta, false, noise);
  g.backward(ob.loss);
  std::vector<Var> vars = encoder_vars(mv);
  for (Var v : decoder_vars(mv)) vars.push_back(v);
  std::vector<Tensor*> params = all_tensors(s.model);

  double worst = 0.0;
  const double h = 1e-5;
  for (int probe = 0; probe < 6; ++probe) {
    int ti = rng.uniform_int(static_cast<int>(params.size()));
    Tensor* t = params[static_cast<std::size_t>(ti)];
    long idx = rng.uniform_int(static_cast<int>(t->size()));
    double analytic = g.has_grad(vars[static_cast<std::size_t>(ti)])
                          ? g.grad(vars[static_cast<std::size_t>(ti)])[idx]
                          : 0.0;
    double saved = (*t)[idx];
    (*t)[idx] = saved + h;
    double up = loss_value(s.model, s.batch, cfg, beta, noise_seed);
    (*t)[idx] = saved - h;
    double dn = loss_value(s.model, s.batch, cfg, beta, noise_seed);
    (*t)[idx] = saved;
    double numeric = (up - dn) / (2.0 * h);
    double rel = std::fabs(analytic - numeric) /
                 std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

SuiteResult grad_suite(int cases, double tol, std::uint64_t seed) {
  SuiteResult res;
  Rng rng(seed);
  for (auto& [name, gen] : op_case_gens()) {
    double worst = worst_over_cases(gen, cases, rng);
    bool ok = worst <= tol;
    res.pass = res.pass && ok;
    res.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " grad op " + name +
                        ": max rel err " + fmt(worst) + " over " +
                        std::to_string(cases) + " cases (tol " + fmt(tol) + ")");
  }

  struct LossCase {
    const char* name;
    ObjectiveConfig cfg;
    double beta;
  };
  std::vector<LossCase> losses;
  {
    ObjectiveConfig elbo;
    losses.push_back({"elbo", elbo, 1.0});
    ObjectiveConfig elbo_half;
    losses.push_back({"elbo beta=0.4", elbo_half, 0.4});
    ObjectiveConfig fb0;
    fb0.kind = ObjectiveKind::Fb;
    losses.push_back({"fb lambda=0", fb0, 1.0});
    ObjectiveConfig fb;
    fb.kind = ObjectiveKind::Fb;
    fb.target_rate = 0.05;
    losses.push_back({"fb lambda=0.05", fb, 1.0});
    ObjectiveConfig fbp;
    fbp.kind = ObjectiveKind::Fbp;
    fbp.target_rate = 0.1;
    losses.push_back({"fbp lambda=0.1", fbp, 1.0});
    ObjectiveConfig ae;
    ae.kind = ObjectiveKind::Ae;
    losses.push_back({"ae", ae, 1.0});
    ObjectiveConfig iwae;
    iwae.kind = ObjectiveKind::Iwae;
    iwae.iwae_k = 3;
    losses.push_back({"iwae k=3", iwae, 1.0});
  }
  for (const auto& lc : losses) {
    double worst = 0.0;
    for (int i = 0; i < cases; ++i)
      worst = std::max(worst, loss_fd_case(lc.name, lc.cfg, lc.beta, rng));
    bool ok = worst <= tol;
    res.pass = res.pass && ok;
    res.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " grad loss " +
                        lc.name + ": max rel err " + fmt(worst) + " over " +
                        std::to_string(cases) + " cases (tol " + fmt(tol) + ")");
  }
  return res;
}

OracleSetup make_oracle_corpus(std::uint64_t seed, int train_sentences,
                               int valid_sentences, int test_sentences) {
  static const char* kWords[6] = {"a", "b", "c", "d", "e", "f"};
  Rng root(seed);
  auto gen_split = [&](int n, Rng rng) {
    std::vector<std::vector<std::string>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int factor = rng.uniform_int(2);
      int len = 1 + rng.uniform_int(3);
      std::vector<std::string> s;
      for (int t = 0; t < len; ++t)
        s.push_back(kWords[3 * factor + rng.uniform_int(3)]);
      out.push_back(std::move(s));
    }
    return out;
  };
  auto train_words = gen_split(train_sentences, root.fork(1));
  auto valid_words = gen_split(valid_sentences, root.fork(2));
  auto test_words = gen_split(test_sentences, root.fork(3));
  OracleSetup setup;
  setup.vocab = Vocab::build(train_words);
  setup.train = encode_corpus(train_words, setup.vocab);
  setup.valid = encode_corpus(valid_words, setup.vocab);
  setup.test = encode_corpus(test_words, setup.vocab);
  return setup;
}

SeqVae train_oracle_model(const OracleSetup& setup, std::uint64_t seed,
                          int epochs, double lambda) {
  ModelDims dims;
  dims.vocab = setup.vocab.size();
  dims.embed = 8;
  dims.hidden = 16;
  dims.latent = 1;
  Rng init(seed);
  SeqVae model = init_model(dims, init);

  ObjectiveConfig objective;
  objective.kind = ObjectiveKind::Fb;
  objective.target_rate = lambda;

  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = epochs;
  cfg.eval.iw_k = 4;
  cfg.eval.mi_samples = 64;
  return train(model, setup.train, setup.valid, objective, cfg,
               init.next_u64(), "train")
      .model;
}

SuiteResult oracle_suite(std::uint64_t seed, int sentences, int iw_k,
                         int epochs, double tol_nats) {
  SuiteResult res;
  OracleSetup setup = make_oracle_corpus(seed);
  SeqVae model = train_oracle_model(setup, seed + 1, epochs, 1.0);
  int n = std::min<int>(sentences, setup.test.size());
  if (n < 1) throw ContractError("oracle_suite: empty test split");

  Rng rng(seed + 2);
  const int order = 64;
  double sum_abs = 0.0;
  int monotone_bad = 0;
  double quad_drift = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& s = setup.test.sentences[static_cast<std::size_t>(i)];
    double quad = quadrature_log_marginal(model, s, order);
    Rng iw_rng = rng.fork(static_cast<std::uint64_t>(i));
    double iw = iw_nll(model, s, iw_k, iw_rng);
    sum_abs += std::fabs(iw - (-quad));

    Rng mono_rng = rng.fork(static_cast<std::uint64_t>(1000 + i));
    std::vector<double> log_w = log_importance_weights(model, s, 64, mono_rng);
    double e1 = grouped_iw_estimate(log_w, 1);
    double e8 = grouped_iw_estimate(log_w, 8);
    double e64 = grouped_iw_estimate(log_w, 64);
    if (!(e1 + 1e-9 >= e8 && e8 + 1e-9 >= e64)) ++monotone_bad;

    if (i < 5)
      quad_drift = std::max(
          quad_drift, std::fabs(quadrature_log_marginal(model, s, 48) - quad));
  }
  double mean_abs = sum_abs / n;

  bool ok = mean_abs <= tol_nats;
  res.pass = res.pass && ok;
  res.lines.push_back(std::string(ok ? "PASS" : "FAIL") +
                      " oracle iw-vs-quadrature: mean |iw_nll(k=" +
                      std::to_string(iw_k) + ") - quadrature| = " +
                      fmt(mean_abs) + " nats over " + std::to_string(n) +
                      " sentences (tol " + fmt(tol_nats) + ")");

  ok = monotone_bad == 0;
  res.pass = res.pass && ok;
  res.lines.push_back(std::string(ok ? "PASS" : "FAIL") +
                      " oracle iw monotone in k over {1,8,64}: " +
                      std::to_string(monotone_bad) + " of " + std::to_string(n) +
                      " sentences violated");

  ok = quad_drift <= 1e-5;
  res.pass = res.pass && ok;
  res.lines.push_back(std::string(ok ? "PASS" : "FAIL") +
                      " oracle quadrature order 48 vs 64 drift: " +
                      fmt(quad_drift) + " (tol 1.000e-05)");
  return res;
}

}  // namespace textvae
