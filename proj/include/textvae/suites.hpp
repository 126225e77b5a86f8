#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textvae/corpus.hpp"
#include "textvae/model.hpp"

namespace textvae {

struct SuiteResult {
  bool pass = true;
  std::vector<std::string> lines;  // one "PASS ..."/"FAIL ..." per check
};

// Finite-difference verification: every graph op against random instances,
// then the full elbo / fb / fbp / iwae / ae losses with parameter-space
// central differences on a tiny model.
SuiteResult grad_suite(int cases = 100, double tol = 1e-4,
                       std::uint64_t seed = 7);

// A small two-factor corpus over a 10-token vocabulary with sentences of at
// most five tokens, where a 1-d latent model's true log-marginal is computable
// by Gauss-Hermite quadrature.
struct OracleSetup {
  Vocab vocab;
  Corpus train;
  Corpus valid;
  Corpus test;
};

OracleSetup make_oracle_corpus(std::uint64_t seed, int train_sentences = 400,
                               int valid_sentences = 80,
                               int test_sentences = 50);

// Trains a 1-d-latent model on the oracle corpus (per-dim free bits keeps the
// posterior in use) and returns it for estimator-vs-quadrature comparisons.
SeqVae train_oracle_model(const OracleSetup& setup, std::uint64_t seed,
                          int epochs = 6, double lambda = 1.0);

// Importance-sampling vs quadrature agreement, plus deterministic
// monotonicity of the shared-sample IW estimate in k over {1, 8, 64}.
SuiteResult oracle_suite(std::uint64_t seed = 7, int sentences = 50,
                         int iw_k = 1000, int epochs = 6,
                         double tol_nats = 0.05);

}  // namespace textvae
