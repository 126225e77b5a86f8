#include "textvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "textvae/errors.hpp"

namespace textvae {

bool OptimizerState::observe(double val_loss) {
  if (val_loss < best_val_loss) {
    best_val_loss = val_loss;
    epochs_since_improvement = 0;
    return true;
  }
  ++epochs_since_improvement;
  if (epochs_since_improvement > patience) {
    ++decays_so_far;
    learning_rate *= decay_factor;
    epochs_since_improvement = 0;
  }
  return false;
}

namespace {

// Seed streams inside one training run; keeps pretrain/main phases and the
// draw kinds (shuffle+dropout+z vs validation z) independent.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kValStream = 2;
constexpr std::uint64_t kResetStream = 3;
constexpr std::uint64_t kPhaseStream = 4;
constexpr std::uint64_t kEvalSeedOffset = 31;

void apply_sgd(Graph& g, const std::vector<Var>& vars,
               const std::vector<Tensor*>& params, double lr, double clip) {
  double sq = 0.0;
  for (const Var& v : vars)
    if (g.has_grad(v)) {
      const Tensor& gr = g.grad(v);
      for (int i = 0; i < gr.size(); ++i) sq += gr[i] * gr[i];
    }
  double norm = std::sqrt(sq);
  double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  for (std::size_t p = 0; p < vars.size(); ++p) {
    if (!g.has_grad(vars[p])) continue;
    const Tensor& gr = g.grad(vars[p]);
    Tensor& t = *params[p];
    for (int i = 0; i < gr.size(); ++i) t[i] -= lr * scale * gr[i];
    t.require_finite("sgd update");
  }
}

Batch make_batch(const Corpus& corpus, const std::vector<int>& order, int lo,
                 int hi) {
  Batch b;
  b.reserve(static_cast<std::size_t>(hi - lo));
  for (int i = lo; i < hi; ++i)
    b.push_back(corpus.sentences[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  return b;
}

// Selection metric: mean per-sentence objective at beta = 1, no dropout.
// val_rng arrives as a fresh copy of the same stream every epoch, so the z
// draws are paired across epochs.
double validation_loss(const SeqVae& model, const Corpus& valid,
                       const ObjectiveConfig& obj, int batch_size, Rng val_rng) {
  double sum = 0.0;
  int n = valid.size();
  for (int lo = 0; lo < n; lo += batch_size) {
    int hi = std::min(lo + batch_size, n);
    Batch batch(valid.sentences.begin() + lo, valid.sentences.begin() + hi);
    Graph g;
    ModelVars mv = lift_model(g, model, false, false);
    ObjectiveBuild build =
        build_objective(g, model, mv, batch, obj, 1.0, false, val_rng);
    sum += build.report.objective * (hi - lo);
  }
  return sum / n;
}

bool uses_schedule(ObjectiveKind k) {
  return k == ObjectiveKind::Elbo || k == ObjectiveKind::Fb ||
         k == ObjectiveKind::Fbp;
}

}  // namespace

TrainResult train(const SeqVae& model0, const Corpus& train_set,
                  const Corpus& valid_set, const ObjectiveConfig& objective,
                  const TrainConfig& cfg, std::uint64_t seed,
                  const std::string& phase, EpochCallback cb, bool aggressive) {
  if (train_set.empty() || valid_set.empty())
    throw ContractError("train: empty corpus split");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

  SeqVae model = model0;
  int n = train_set.size();
  int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;

  ObjectiveConfig obj = objective;
  if (obj.schedule.kind == ScheduleKind::Cyclic)
    obj.schedule.total_epochs = cfg.max_epochs;

  OptimizerState opt;
  opt.learning_rate = cfg.lr_init;
  opt.decay_factor = cfg.decay_factor;
  opt.patience = cfg.patience;
  opt.max_decays = cfg.max_decays;

  Rng master(seed);
  Rng train_rng = master.fork(kTrainStream);

  opt.best_val_loss =
      validation_loss(model, valid_set, obj, cfg.batch_size, master.fork(kValStream));

  TrainResult res;
  res.model = model;
  res.best_val_loss = opt.best_val_loss;
  res.best_epoch = 0;

  bool aggr_on = aggressive;
  double prev_mi = -std::numeric_limits<double>::infinity();
  long long step = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Fisher-Yates on the shared training stream.
    for (int i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(train_rng.uniform_int(i + 1))]);

    double obj_sum = 0.0, recon_sum = 0.0, kl_sum = 0.0;
    double beta = 1.0;
    for (int lo = 0; lo < n; lo += cfg.batch_size) {
      int hi = std::min(lo + cfg.batch_size, n);
      Batch batch = make_batch(train_set, order, lo, hi);
      beta = uses_schedule(obj.kind)
                 ? anneal_weight(obj.schedule, step, steps_per_epoch)
                 : 1.0;

      LossBreakdown bd;
      if (aggr_on) {
        // Encoder-only refinement on this batch until its objective stalls.
        double best_inner = std::numeric_limits<double>::infinity();
        int bad = 0;
        for (int sub = 0; sub < cfg.aggressive.max_inner; ++sub) {
          Graph g;
          ModelVars mv = lift_model(g, model, true, false);
          ObjectiveBuild b =
              build_objective(g, model, mv, batch, obj, beta, true, train_rng);
          g.backward(b.loss);
          apply_sgd(g, encoder_vars(mv), encoder_tensors(model),
                    opt.learning_rate, cfg.clip_norm);
          if (b.report.objective < best_inner) {
            best_inner = b.report.objective;
            bad = 0;
          } else if (++bad >= cfg.aggressive.inner_patience) {
            break;
          }
        }
        Graph g;
        ModelVars mv = lift_model(g, model, false, true);
        ObjectiveBuild b =
            build_objective(g, model, mv, batch, obj, beta, true, train_rng);
        g.backward(b.loss);
        apply_sgd(g, decoder_vars(mv), decoder_tensors(model),
                  opt.learning_rate, cfg.clip_norm);
        bd = b.report;
      } else {
        Graph g;
        ModelVars mv = lift_model(g, model, true, true);
        ObjectiveBuild b =
            build_objective(g, model, mv, batch, obj, beta, true, train_rng);
        g.backward(b.loss);
        std::vector<Var> vars = encoder_vars(mv);
        std::vector<Var> dvars = decoder_vars(mv);
        vars.insert(vars.end(), dvars.begin(), dvars.end());
        std::vector<Tensor*> params = encoder_tensors(model);
        std::vector<Tensor*> dparams = decoder_tensors(model);
        params.insert(params.end(), dparams.begin(), dparams.end());
        apply_sgd(g, vars, params, opt.learning_rate, cfg.clip_norm);
        bd = b.report;
      }
      int bsz = hi - lo;
      obj_sum += bd.objective * bsz;
      recon_sum += bd.recon_nll * bsz;
      kl_sum += bd.kl_total * bsz;
      ++step;
    }

    double vloss =
        validation_loss(model, valid_set, obj, cfg.batch_size, master.fork(kValStream));
    EvalReport vr = evaluate(model, valid_set, cfg.eval, seed + kEvalSeedOffset);

    EpochRecord rec;
    rec.phase = phase;
    rec.epoch = epoch;
    rec.lr = opt.learning_rate;  // rate the epoch ran at
    rec.beta = beta;
    rec.train_objective = obj_sum / n;
    rec.train_recon = recon_sum / n;
    rec.train_kl = kl_sum / n;
    rec.val_loss = vloss;
    rec.aggressive = aggr_on;
    rec.val_report = vr;

    rec.improved = opt.observe(vloss);
    rec.decays = opt.decays_so_far;
    if (rec.improved) {
      res.model = model;
      res.best_val_loss = vloss;
      res.best_epoch = epoch;
    }
    if (aggr_on && vr.mi <= prev_mi) aggr_on = false;
    prev_mi = vr.mi;

    res.log.push_back(rec);
    res.epochs_run = epoch;
    if (cb) cb(rec);
    if (opt.should_stop()) break;
  }
  return res;
}

TrainResult pretrain_encoder(const SeqVae& model, const Corpus& train_set,
                             const Corpus& valid_set, const TrainConfig& cfg,
                             std::uint64_t seed, EpochCallback cb) {
  ObjectiveConfig obj;
  obj.kind = ObjectiveKind::Ae;
  return train(model, train_set, valid_set, obj, cfg, seed, "pretrain", cb);
}

TrainResult run_ours(const SeqVae& model, const Corpus& train_set,
                     const Corpus& valid_set, double lambda,
                     const TrainConfig& cfg, std::uint64_t seed,
                     EpochCallback cb) {
  if (lambda <= 0) throw ConfigError("run_ours: lambda must be > 0");
  TrainResult pre = pretrain_encoder(model, train_set, valid_set, cfg, seed, cb);

  SeqVae mid = pre.model;
  Rng master(seed);
  Rng reset_rng = master.fork(kResetStream);
  reset_decoder(mid, reset_rng);

  EpochRecord reset_rec;
  reset_rec.phase = "reset";
  reset_rec.epoch = pre.epochs_run;
  reset_rec.lr = 0.0;
  reset_rec.beta = 0.0;
  reset_rec.val_report = evaluate(mid, valid_set, cfg.eval, seed + kEvalSeedOffset);
  reset_rec.val_loss = reset_rec.val_report.neg_elbo;
  if (cb) cb(reset_rec);

  ObjectiveConfig obj;
  obj.kind = ObjectiveKind::Fb;
  obj.target_rate = lambda;
  obj.schedule.kind = ScheduleKind::Linear;
  obj.schedule.linear_epochs = 10;
  std::uint64_t phase_seed = master.fork(kPhaseStream).next_u64();
  TrainResult fin =
      train(mid, train_set, valid_set, obj, cfg, phase_seed, "train", cb);

  // Stitch the full history together; the returned model is phase 2's best.
  std::vector<EpochRecord> log = pre.log;
  log.push_back(reset_rec);
  log.insert(log.end(), fin.log.begin(), fin.log.end());
  fin.log = std::move(log);
  fin.epochs_run += pre.epochs_run;
  return fin;
}

const char* recipe_name(RecipeKind k) {
  switch (k) {
    case RecipeKind::Vanilla: return "vanilla";
    case RecipeKind::Anneal: return "anneal";
    case RecipeKind::Cyclic: return "cyclic";
    case RecipeKind::Fb: return "fb";
    case RecipeKind::Fbp: return "fbp";
    case RecipeKind::Aggressive: return "aggressive";
    case RecipeKind::Iwae: return "iwae";
    case RecipeKind::Ae: return "ae";
    case RecipeKind::PretrainThenElbo: return "pretrain_then_elbo";
    case RecipeKind::PretrainAnnealElbo: return "pretrain_anneal_elbo";
    case RecipeKind::Ours: return "ours";
  }
  return "?";
}

RecipeKind parse_recipe(const std::string& name) {
  for (RecipeKind k :
       {RecipeKind::Vanilla, RecipeKind::Anneal, RecipeKind::Cyclic,
        RecipeKind::Fb, RecipeKind::Fbp, RecipeKind::Aggressive,
        RecipeKind::Iwae, RecipeKind::Ae, RecipeKind::PretrainThenElbo,
        RecipeKind::PretrainAnnealElbo, RecipeKind::Ours})
    if (name == recipe_name(k)) return k;
  throw ConfigError("unknown recipe: " + name);
}

TrainResult run_recipe(const SeqVae& model, const Corpus& train_set,
                       const Corpus& valid_set, const Recipe& recipe,
                       const TrainConfig& cfg, std::uint64_t seed,
                       EpochCallback cb) {
  ObjectiveConfig obj;
  switch (recipe.kind) {
    case RecipeKind::Vanilla:
      obj.kind = ObjectiveKind::Elbo;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::Anneal:
      obj.kind = ObjectiveKind::Elbo;
      obj.schedule.kind = ScheduleKind::Linear;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::Cyclic:
      obj.kind = ObjectiveKind::Elbo;
      obj.schedule.kind = ScheduleKind::Cyclic;
      obj.schedule.total_epochs = cfg.max_epochs;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::Fb:
      obj.kind = ObjectiveKind::Fb;
      obj.target_rate = recipe.lambda;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::Fbp:
      obj.kind = ObjectiveKind::Fbp;
      obj.target_rate = recipe.lambda;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::Aggressive:
      obj.kind = ObjectiveKind::Elbo;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb,
                   true);
    case RecipeKind::Iwae:
      obj.kind = ObjectiveKind::Iwae;
      obj.iwae_k = recipe.iwae_k;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::Ae:
      obj.kind = ObjectiveKind::Ae;
      return train(model, train_set, valid_set, obj, cfg, seed, "train", cb);
    case RecipeKind::PretrainThenElbo:
    case RecipeKind::PretrainAnnealElbo: {
      TrainResult pre =
          pretrain_encoder(model, train_set, valid_set, cfg, seed, cb);
      obj.kind = ObjectiveKind::Elbo;
      if (recipe.kind == RecipeKind::PretrainAnnealElbo)
        obj.schedule.kind = ScheduleKind::Linear;
      std::uint64_t phase_seed = Rng(seed).fork(kPhaseStream).next_u64();
      TrainResult fin = train(pre.model, train_set, valid_set, obj, cfg,
                              phase_seed, "train", cb);
      std::vector<EpochRecord> log = pre.log;
      log.insert(log.end(), fin.log.begin(), fin.log.end());
      fin.log = std::move(log);
      fin.epochs_run += pre.epochs_run;
      return fin;
    }
    case RecipeKind::Ours:
      return run_ours(model, train_set, valid_set, recipe.lambda, cfg, seed, cb);
  }
  throw ContractError("run_recipe: unknown recipe kind");
}

}  // namespace textvae
