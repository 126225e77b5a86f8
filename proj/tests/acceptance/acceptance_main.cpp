// Acceptance gate. Runs every pinned end-to-end criterion and prints exactly
// one "PASS criterion N: ..." / "FAIL criterion N: ..." line per criterion on
// stdout (progress notes go to stderr). Exit status 0 only if all pass.
//
// argv[1] names the CLI binary; the byte-identity re-run checks shell out to
// it with a scratch corpus under the system temp directory.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "textvae/classifier.hpp"
#include "textvae/corpus.hpp"
#include "textvae/estimators.hpp"
#include "textvae/gmm.hpp"
#include "textvae/model.hpp"
#include "textvae/objectives.hpp"
#include "textvae/probes.hpp"
#include "textvae/quadrature.hpp"
#include "textvae/rng.hpp"
#include "textvae/suites.hpp"
#include "textvae/synth.hpp"
#include "textvae/trainer.hpp"

namespace fs = std::filesystem;
using namespace textvae;

namespace {

bool g_all_pass = true;

void criterion(int n, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << ": " << detail
            << std::endl;
  if (!pass) g_all_pass = false;
}

void note(const std::string& msg) { std::cerr << "[accept] " << msg << std::endl; }

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fm(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

bool slurp(const fs::path& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

int run_cmd(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

// ---- criterion 1: finite-difference gradient suite --------------------------

void run_criterion_1() {
  note("criterion 1: gradient suite (100 cases per check)");
  auto t0 = Clock::now();
  SuiteResult res = grad_suite(100, 1e-4, 7);
  double dt = secs_since(t0);
  int passed = 0;
  std::string first_fail;
  for (const auto& l : res.lines) {
    if (l.rfind("PASS", 0) == 0) ++passed;
    else if (first_fail.empty()) first_fail = l;
  }
  bool ok = res.pass && dt < 120.0;
  std::string detail = "gradient suite " + std::to_string(passed) + "/" +
                       std::to_string(res.lines.size()) +
                       " checks at tol 1e-4 (" + fm(dt, 1) + " s < 120 s)";
  if (!first_fail.empty()) detail += "; first failure: " + first_fail;
  if (dt >= 120.0) detail += "; over time budget";
  criterion(1, ok, detail);
}

// ---- criterion 2: analytic KL vs brute-force Monte Carlo --------------------

void run_criterion_2() {
  note("criterion 2: analytic KL vs 1e6-sample MC on 50 posteriors");
  auto t0 = Clock::now();
  const int dim = 8;
  const int posteriors = 50;
  const long long draws = 1000000;
  Rng rng(1234);
  int within = 0;
  double worst = 0.0;
  for (int p = 0; p < posteriors; ++p) {
    std::vector<double> mu(dim), lv(dim), sigma(dim);
    double analytic = 0.0;
    for (int d = 0; d < dim; ++d) {
      mu[d] = rng.uniform(-2.0, 2.0);
      lv[d] = rng.uniform(-1.5, 1.0);
      sigma[d] = std::exp(0.5 * lv[d]);
      analytic += 0.5 * (mu[d] * mu[d] + std::exp(lv[d]) - 1.0 - lv[d]);
    }
    // Per-draw log q(z|x) - log p(z) with z = mu + sigma*eps reduces to
    // 0.5 * sum_d (z_d^2 - eps_d^2 - lv_d); the log(2 pi) halves cancel.
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < draws; ++i) {
      double term = 0.0;
      for (int d = 0; d < dim; ++d) {
        double eps = rng.normal();
        double z = mu[d] + sigma[d] * eps;
        term += 0.5 * (z * z - eps * eps - lv[d]);
      }
      sum += term;
      sumsq += term * term;
    }
    double mean = sum / static_cast<double>(draws);
    double var = (sumsq - sum * sum / static_cast<double>(draws)) /
                 static_cast<double>(draws - 1);
    double stderr_mc = std::sqrt(var / static_cast<double>(draws));
    double dev = std::fabs(mean - analytic) / stderr_mc;
    worst = std::max(worst, dev);
    if (dev <= 3.0) ++within;
  }
  bool ok = within == posteriors;
  criterion(2, ok,
            "analytic KL within 3 stderr of 1e6-draw MC on " +
                std::to_string(within) + "/" + std::to_string(posteriors) +
                " random 8-dim posteriors (worst " + fm(worst, 2) +
                " stderr, " + fm(secs_since(t0), 1) + " s)");
}

// ---- criterion 3: importance sampling vs quadrature -------------------------

void run_criterion_3() {
  note("criterion 3: oracle iw-vs-quadrature suite (k=1000, 50 sentences)");
  auto t0 = Clock::now();
  SuiteResult res = oracle_suite(7, 50, 1000, 6, 0.05);
  double dt = secs_since(t0);
  for (const auto& l : res.lines) note("  " + l);
  bool ok = res.pass && dt < 300.0;
  std::string detail = "oracle agreement suite " +
                       std::to_string(res.lines.size()) + " checks (" +
                       fm(dt, 1) + " s < 300 s)";
  if (!res.pass)
    for (const auto& l : res.lines)
      if (l.rfind("FAIL", 0) == 0) detail += "; " + l;
  if (dt >= 300.0) detail += "; over time budget";
  criterion(3, ok, detail);
}

// ---- shared synthetic-corpus setup for criteria 4-6 and 8-10 ----------------

struct SynthSetup {
  Vocab vocab;
  Corpus train, valid, test;
  std::vector<int> train_labels, test_labels;
};

SynthSetup make_synth_setup() {
  SynthParams params;  // vocab 100, 5000 train sentences, 2 factors, len 8..16
  SynthCorpus raw = gen_synthetic(params, 42);
  SynthSetup s;
  s.vocab = Vocab::build(raw.train.sentences);
  s.train = encode_corpus(raw.train.sentences, s.vocab);
  s.valid = encode_corpus(raw.valid.sentences, s.vocab);
  s.test = encode_corpus(raw.test.sentences, s.vocab);
  s.train_labels = raw.train.labels;
  s.test_labels = raw.test.labels;
  return s;
}

TrainConfig desk_config() {
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.max_epochs = 10;  // per phase for the composite recipes
  cfg.eval.iw_k = 2;
  cfg.eval.mi_samples = 64;
  return cfg;
}

EvalOptions final_eval_options() {
  EvalOptions opts;
  opts.iw_k = 32;
  opts.iw_chunk = 32;
  opts.mi_samples = 200;
  return opts;
}

constexpr std::uint64_t kEvalSeed = 9001;

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-cli-binary>" << std::endl;
    return 2;
  }
  const std::string cli = argv[1];
  auto wall0 = Clock::now();
  std::cout.setf(std::ios::unitbuf);

  try {
    run_criterion_1();
    run_criterion_2();
    run_criterion_3();

    // ---- shared models on the synthetic corpus ----------------------------
    note("building synthetic corpus (vocab 100, 5000 sentences, 2 factors)");
    SynthSetup synth = make_synth_setup();
    note("corpus sizes: train " + std::to_string(synth.train.size()) +
         ", valid " + std::to_string(synth.valid.size()) + ", test " +
         std::to_string(synth.test.size()) + ", vocab " +
         std::to_string(synth.vocab.size()));

    ModelDims dims;
    dims.vocab = synth.vocab.size();
    dims.embed = 64;
    dims.hidden = 128;
    dims.latent = 32;
    Rng init_rng(11);
    SeqVae init = init_model(dims, init_rng);
    TrainConfig cfg = desk_config();
    EvalOptions eval_opts = final_eval_options();

    auto progress = [&](const char* tag) {
      return [tag](const EpochRecord& r) {
        std::cerr << "[accept]   " << tag << " " << r.phase << " epoch "
                  << r.epoch << ": obj " << fm(r.train_objective, 2) << ", kl "
                  << fm(r.train_kl, 3) << ", val " << fm(r.val_loss, 2)
                  << ", au " << r.val_report.au << ", mi "
                  << fm(r.val_report.mi, 3) << std::endl;
      };
    };

    // criterion 4: the vanilla run collapses.
    note("criterion 4: training vanilla (plain elbo)");
    auto t_van = Clock::now();
    ObjectiveConfig elbo;
    TrainResult vanilla =
        train(init, synth.train, synth.valid, elbo, cfg, 101, "train",
              progress("vanilla"));
    double vanilla_secs = secs_since(t_van);
    EvalReport vanilla_eval = evaluate(vanilla.model, synth.test, eval_opts, kEvalSeed);
    {
      bool ok = vanilla_eval.kl < 0.1 && vanilla_eval.au == 0 &&
                vanilla_eval.mi < 0.05 && vanilla_secs < 600.0;
      std::string detail = "vanilla collapses: kl " + fm(vanilla_eval.kl) +
                           " < 0.1, au " + std::to_string(vanilla_eval.au) +
                           " = 0, mi " + fm(vanilla_eval.mi) + " < 0.05 (train " +
                           fm(vanilla_secs, 1) + " s < 600 s)";
      criterion(4, ok, detail);
    }

    // criterion 5: encoder pretraining alone does not prevent the collapse.
    note("criterion 5: training pretrain_then_elbo");
    Recipe pte;
    pte.kind = RecipeKind::PretrainThenElbo;
    TrainResult pretrained = run_recipe(init, synth.train, synth.valid, pte, cfg,
                                        303, progress("pretrain+elbo"));
    EvalReport pte_eval = evaluate(pretrained.model, synth.test, eval_opts, kEvalSeed);
    criterion(5, pte_eval.kl < 0.2,
              "elbo after ae pretraining re-collapses: kl " + fm(pte_eval.kl) +
                  " < 0.2 (au " + std::to_string(pte_eval.au) + ", mi " +
                  fm(pte_eval.mi) + ")");

    // criterion 6: the combined recipe keeps the full code active.
    note("criterion 6: training the combined recipe (lambda 4)");
    TrainResult ours = run_ours(init, synth.train, synth.valid, 4.0, cfg, 202,
                                progress("ours"));
    EvalReport ours_eval = evaluate(ours.model, synth.test, eval_opts, kEvalSeed);
    double bleu_ours = reconstruction_bleu(ours.model, synth.test, synth.vocab);
    double bleu_vanilla = reconstruction_bleu(vanilla.model, synth.test, synth.vocab);
    {
      double recon_gap = vanilla_eval.recon - ours_eval.recon;
      bool ok = ours_eval.au == dims.latent && ours_eval.kl >= 2.0 &&
                recon_gap >= 2.0 && bleu_ours > bleu_vanilla;
      criterion(6, ok,
                "combined recipe: au " + std::to_string(ours_eval.au) + " = " +
                    std::to_string(dims.latent) + ", kl " + fm(ours_eval.kl) +
                    " >= 2, recon " + fm(ours_eval.recon, 2) + " vs vanilla " +
                    fm(vanilla_eval.recon, 2) + " (gap " + fm(recon_gap, 2) +
                    " >= 2), recon bleu " + fm(bleu_ours, 1) + " > " +
                    fm(bleu_vanilla, 1));
    }

    // criterion 7: a model pair where the tighter bound flips the ranking.
    note("criterion 7: bound-vs-marginal dissociation on the oracle corpus");
    {
      auto t7 = Clock::now();
      OracleSetup oracle = make_oracle_corpus(7, 400, 80, 50);
      struct Candidate {
        std::string name;
        double iw = 0.0;        // mean iw_nll, k=256
        double neg_elbo = 0.0;  // quadrature recon + analytic kl, exact
        double quad = 0.0;      // mean true nll by quadrature
      };
      std::vector<Candidate> cands;
      for (double lambda : {0.0, 1.0, 2.0}) {
        for (std::uint64_t seed : {1ull, 2ull}) {
          SeqVae m = train_oracle_model(oracle, seed, 6, lambda);
          Candidate c;
          c.name = (lambda == 0.0 ? "elbo" : "fb" + fm(lambda, 0)) + "-s" +
                   std::to_string(seed);
          Rng rng(900 + seed);
          int n = oracle.test.size();
          for (int i = 0; i < n; ++i) {
            const auto& s = oracle.test.sentences[static_cast<std::size_t>(i)];
            Rng iw_rng = rng.fork(static_cast<std::uint64_t>(i));
            c.iw += iw_nll(m, s, 256, iw_rng);
            c.quad += -quadrature_log_marginal(m, s, 64);
            Posterior post = encode_plain(m, {s});
            double kl = 0.0;
            for (int d = 0; d < post.mu.cols(); ++d)
              kl += 0.5 * (post.mu(0, d) * post.mu(0, d) +
                           std::exp(post.log_var(0, d)) - 1.0 - post.log_var(0, d));
            c.neg_elbo += expected_recon_nll_quadrature(m, s, 48) + kl;
          }
          c.iw /= n;
          c.quad /= n;
          c.neg_elbo /= n;
          note("  candidate " + c.name + ": iw_nll " + fm(c.iw) + ", neg_elbo " +
               fm(c.neg_elbo) + ", quad nll " + fm(c.quad));
          cands.push_back(c);
        }
      }
      int best_a = -1, best_b = -1;
      double best_margin = 0.0;
      for (std::size_t a = 0; a < cands.size(); ++a) {
        for (std::size_t b = 0; b < cands.size(); ++b) {
          if (a == b) continue;
          double iw_gap = cands[b].iw - cands[a].iw;
          double elbo_gap = cands[a].neg_elbo - cands[b].neg_elbo;
          if (iw_gap <= 0.0 || elbo_gap <= 0.0) continue;
          double margin = std::min(iw_gap, elbo_gap);
          if (margin > best_margin) {
            best_margin = margin;
            best_a = static_cast<int>(a);
            best_b = static_cast<int>(b);
          }
        }
      }
      if (best_a < 0) {
        criterion(7, false,
                  "no candidate pair dissociates the bound from the marginal (" +
                      std::to_string(cands.size()) + " models trained, " +
                      fm(secs_since(t7), 1) + " s)");
      } else {
        const Candidate& A = cands[static_cast<std::size_t>(best_a)];
        const Candidate& B = cands[static_cast<std::size_t>(best_b)];
        bool quad_agrees = A.quad < B.quad;
        criterion(7, quad_agrees,
                  A.name + " beats " + B.name + " on iw_nll (" + fm(A.iw) +
                      " < " + fm(B.iw) + ") with the worse bound (neg_elbo " +
                      fm(A.neg_elbo) + " > " + fm(B.neg_elbo) +
                      "); quadrature " + (quad_agrees ? "confirms" : "rejects") +
                      " the ranking (" + fm(A.quad) + " vs " + fm(B.quad) +
                      ", " + fm(secs_since(t7), 1) + " s)");
      }
    }

    // criterion 8: the latent geometry probes separate the recipes.
    note("criterion 8: training ae for the robustness comparison");
    Recipe ae;
    ae.kind = RecipeKind::Ae;
    TrainResult ae_run = run_recipe(init, synth.train, synth.valid, ae, cfg, 404,
                                    progress("ae"));
    {
      Rng pcc_rng_a(501), pcc_rng_b(501);
      double pcc_ours = smoothness_pcc(ours.model, synth.test, 300, pcc_rng_a);
      double pcc_vanilla = smoothness_pcc(vanilla.model, synth.test, 300, pcc_rng_b);
      Rng n1(601), n2(602), n3(601), n4(602);
      double ae_k1 = noisy_reconstruction(ae_run.model, synth.test, 1, n1);
      double ae_k4 = noisy_reconstruction(ae_run.model, synth.test, 4, n2);
      double ours_k1 = noisy_reconstruction(ours.model, synth.test, 1, n3);
      double ours_k4 = noisy_reconstruction(ours.model, synth.test, 4, n4);
      double deg_ae = ae_k4 - ae_k1;
      double deg_ours = ours_k4 - ours_k1;
      bool ok = pcc_ours > pcc_vanilla + 0.1 && deg_ae > deg_ours;
      criterion(8, ok,
                "smoothness pcc " + fm(pcc_ours) + " > vanilla " +
                    fm(pcc_vanilla) + " + 0.1; noisy-recon degradation (1->4 "
                    "swaps) ae " + fm(deg_ae, 2) + " > ours " + fm(deg_ours, 2));
    }

    // criterion 9: codes carry the generative factor.
    note("criterion 9: classification on frozen codes");
    {
      Posterior ours_train = encode_corpus(ours.model, synth.train, 64);
      Posterior ours_test = encode_corpus(ours.model, synth.test, 64);
      Posterior van_train = encode_corpus(vanilla.model, synth.train, 64);
      Posterior van_test = encode_corpus(vanilla.model, synth.test, 64);
      ClassifierConfig ccfg;
      ccfg.num_classes = 2;
      double acc_ours = linear_classify(ours_train.mu, synth.train_labels,
                                        ours_test.mu, synth.test_labels, 100, ccfg);
      double acc_van = linear_classify(van_train.mu, synth.train_labels,
                                       van_test.mu, synth.test_labels, 100, ccfg);
      GmmResult gm = gmm_fit(ours_train.mu, 2, 5);
      std::vector<int> assign = gmm_assign(gm.state, ours_test.mu);
      double gmm_acc = cluster_accuracy(assign, synth.test_labels, 2);
      bool ok = acc_ours >= acc_van + 10.0 && gmm_acc > 55.0;
      criterion(9, ok,
                "100-label linear probe " + fm(acc_ours, 1) + " >= vanilla " +
                    fm(acc_van, 1) + " + 10; unsupervised gmm accuracy " +
                    fm(gmm_acc, 1) + " > 55");
    }

    // criterion 10: em monotonicity and bit-identical cli re-runs.
    note("criterion 10: em monotonicity and cli determinism");
    {
      Posterior codes = encode_corpus(ours.model, synth.train, 64);
      int monotone_ok = 0;
      for (std::uint64_t s = 0; s < 20; ++s) {
        GmmResult r = gmm_fit(codes.mu, 2, s, 100);
        bool mono = true;
        for (std::size_t i = 1; i < r.log_likelihood_curve.size(); ++i) {
          double prev = r.log_likelihood_curve[i - 1];
          double cur = r.log_likelihood_curve[i];
          if (cur + 1e-8 * std::max(1.0, std::fabs(prev)) < prev) mono = false;
        }
        if (mono) ++monotone_ok;
      }

      fs::path dir = fs::temp_directory_path() / "textvae-acceptance";
      std::error_code ec;
      fs::remove_all(dir, ec);
      fs::create_directories(dir);
      auto p = [&](const char* name) { return (dir / name).string(); };
      std::string corpus = p("corpus");
      std::string quiet = " > " + p("cmd.log") + " 2>&1";
      bool cli_ok = true;
      std::string cli_fail;
      auto sh = [&](const std::string& args, const char* what) {
        if (!cli_ok) return;
        if (run_cmd(cli + " " + args + quiet) != 0) {
          cli_ok = false;
          cli_fail = what;
        }
      };
      auto same_bytes = [&](const std::string& a, const std::string& b,
                            const char* what) {
        if (!cli_ok) return;
        std::string ba, bb;
        if (!slurp(a, ba) || !slurp(b, bb) || ba != bb) {
          cli_ok = false;
          cli_fail = what;
        }
      };

      sh("gen-data --out " + corpus +
             " --vocab 20 --sentences 80 --min-len 3 --max-len 6 --seed 5",
         "gen-data");
      {
        std::ofstream cfgf(p("run.cfg"));
        cfgf << "train=" << corpus << "/train.txt\n"
             << "valid=" << corpus << "/valid.txt\n"
             << "test=" << corpus << "/test.txt\n"
             << "embed=8\nhidden=12\nlatent=2\ndropout=0\n"
             << "batch_size=16\nmax_epochs=2\neval_iw_k=2\neval_mi_samples=16\n";
      }
      std::string tr = "train --config " + p("run.cfg") +
                       " --recipe vanilla --seed 3 --out ";
      sh(tr + p("runA"), "train A");
      sh(tr + p("runB"), "train B");
      same_bytes(p("runA") + "/best.ckpt", p("runB") + "/best.ckpt",
                 "train checkpoints differ");
      same_bytes(p("runA") + "/log.jsonl", p("runB") + "/log.jsonl",
                 "train logs differ");
      std::string ev = "evaluate --ckpt " + p("runA") + "/best.ckpt --corpus " +
                       corpus + "/test.txt --iw-k 4 --mi-samples 8 --seed 11 --out ";
      sh(ev + p("evalA.json"), "evaluate A");
      sh(ev + p("evalB.json"), "evaluate B");
      same_bytes(p("evalA.json"), p("evalB.json"), "evaluate reports differ");
      std::string pr = "probe --ckpt " + p("runA") + "/best.ckpt --corpus " +
                       corpus + "/test.txt --train-corpus " + corpus +
                       "/train.txt --pairs 10 --swaps 0,1 --prior-samples 4"
                       " --interpolation-pairs 1 --seed 13 --out ";
      sh(pr + p("probeA"), "probe A");
      sh(pr + p("probeB"), "probe B");
      same_bytes(p("probeA") + "/probe.json", p("probeB") + "/probe.json",
                 "probe reports differ");
      fs::remove_all(dir, ec);

      bool ok = monotone_ok == 20 && cli_ok;
      std::string detail = "em log-likelihood nondecreasing for " +
                           std::to_string(monotone_ok) +
                           "/20 inits; cli re-runs byte-identical "
                           "(train, evaluate, probe)";
      if (!cli_ok) detail += "; cli determinism failed at: " + cli_fail;
      criterion(10, ok, detail);
    }

    // criterion 11: the reported nll / token-count / ppl triple is consistent.
    {
      double total_nll = 101.04 * 100.0;  // per-sentence nll over 100 sentences
      long long tokens = 2192;
      double ppl = ppl_from_nll(total_nll, tokens);
      double diff = std::fabs(ppl - 100.47);
      criterion(11, diff < 0.1,
                "ppl(" + fm(total_nll, 0) + " nats / " + std::to_string(tokens) +
                    " tokens) = " + fm(ppl, 2) + ", within 0.1 of 100.47 (|d| = " +
                    fm(diff, 3) + ")");
    }
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance: unhandled error: " << e.what() << std::endl;
    return 1;
  }

  std::cout << (g_all_pass ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL")
            << " (total " << fm(secs_since(wall0), 1) << " s)" << std::endl;
  return g_all_pass ? 0 : 1;
}
