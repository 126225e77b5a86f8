#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "textvae/corpus.hpp"
#include "textvae/estimators.hpp"
#include "textvae/model.hpp"
#include "textvae/objectives.hpp"

namespace textvae {

// SGD learning-rate decay / early-stop automaton. The pre-training validation
// pass initializes best_val_loss, so a run that never improves decays at
// epochs 3, 6, 9, 12, 15 (patience 2) and stops after the fifth decay.
struct OptimizerState {
  double learning_rate = 0.5;
  double decay_factor = 0.5;
  int patience = 2;
  int max_decays = 5;
  int decays_so_far = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  // Feeds one epoch's validation loss; returns true when it improved best.
  bool observe(double val_loss);
  bool should_stop() const { return decays_so_far >= max_decays; }
};

struct AggressiveConfig {
  int max_inner = 30;     // cap on encoder-only sub-steps per batch
  int inner_patience = 5; // stop after this many non-improving sub-steps
};

struct TrainConfig {
  int batch_size = 32;
  double lr_init = 0.5;
  double decay_factor = 0.5;
  int patience = 2;
  int max_decays = 5;
  int max_epochs = 100;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  AggressiveConfig aggressive;
  EvalOptions eval;        // per-epoch validation report settings
};

struct EpochRecord {
  std::string phase;  // "pretrain" | "reset" | "train"
  int epoch = 0;
  double lr = 0.0;
  double beta = 1.0;         // anneal weight at epoch end
  double train_objective = 0.0;
  double train_recon = 0.0;
  double train_kl = 0.0;
  double val_loss = 0.0;     // selection metric: objective at beta = 1
  bool improved = false;
  int decays = 0;
  bool aggressive = false;   // aggressive inner loop active this epoch
  EvalReport val_report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  SeqVae model;  // parameters at the best validation loss
  std::vector<EpochRecord> log;
  double best_val_loss = 0.0;
  int best_epoch = 0;  // 0 = the starting parameters were never beaten
  int epochs_run = 0;
};

// Shuffled mini-batch SGD (no momentum) with the decay/early-stop automaton.
// aggressive switches on the encoder-inner-loop variant until validation MI
// stops improving.
TrainResult train(const SeqVae& model, const Corpus& train_set,
                  const Corpus& valid_set, const ObjectiveConfig& objective,
                  const TrainConfig& cfg, std::uint64_t seed,
                  const std::string& phase, EpochCallback cb = {},
                  bool aggressive = false);

// AE objective (z = posterior mean, no KL) under the same automaton; the
// returned model keeps both trained halves — callers choose what to retain.
TrainResult pretrain_encoder(const SeqVae& model, const Corpus& train_set,
                             const Corpus& valid_set, const TrainConfig& cfg,
                             std::uint64_t seed, EpochCallback cb = {});

// The combined fix: AE pretraining, fresh random decoder, then per-dimension
// free bits at threshold lambda under the 10-epoch linear KL ramp.
TrainResult run_ours(const SeqVae& model, const Corpus& train_set,
                     const Corpus& valid_set, double lambda,
                     const TrainConfig& cfg, std::uint64_t seed,
                     EpochCallback cb = {});

enum class RecipeKind {
  Vanilla,
  Anneal,
  Cyclic,
  Fb,
  Fbp,
  Aggressive,
  Iwae,
  Ae,
  PretrainThenElbo,
  PretrainAnnealElbo,
  Ours,
};

const char* recipe_name(RecipeKind k);
RecipeKind parse_recipe(const std::string& name);

struct Recipe {
  RecipeKind kind = RecipeKind::Vanilla;
  double lambda = 0.0;  // fb/fbp/ours threshold
  int iwae_k = 10;
};

TrainResult run_recipe(const SeqVae& model, const Corpus& train_set,
                       const Corpus& valid_set, const Recipe& recipe,
                       const TrainConfig& cfg, std::uint64_t seed,
                       EpochCallback cb = {});

}  // namespace textvae
