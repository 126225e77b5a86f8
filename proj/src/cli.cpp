#include "textvae/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "textvae/checkpoint.hpp"
#include "textvae/classifier.hpp"
#include "textvae/config.hpp"
#include "textvae/corpus.hpp"
#include "textvae/errors.hpp"
#include "textvae/estimators.hpp"
#include "textvae/fsio.hpp"
#include "textvae/gmm.hpp"
#include "textvae/plots.hpp"
#include "textvae/probes.hpp"
#include "textvae/report.hpp"
#include "textvae/suites.hpp"
#include "textvae/synth.hpp"
#include "textvae/trainer.hpp"

namespace textvae {
namespace {

std::vector<int> parse_count_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad count list entry: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty count list: '" + csv + "'");
  return out;
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.batch_size = static_cast<int>(cfg.get_int("batch_size", tc.batch_size));
  tc.lr_init = cfg.get_double("lr", tc.lr_init);
  tc.decay_factor = cfg.get_double("decay_factor", tc.decay_factor);
  tc.patience = static_cast<int>(cfg.get_int("patience", tc.patience));
  tc.max_decays = static_cast<int>(cfg.get_int("max_decays", tc.max_decays));
  tc.max_epochs = static_cast<int>(cfg.get_int("max_epochs", tc.max_epochs));
  tc.clip_norm = cfg.get_double("clip_norm", tc.clip_norm);
  tc.aggressive.max_inner =
      static_cast<int>(cfg.get_int("aggressive_max_inner", tc.aggressive.max_inner));
  tc.aggressive.inner_patience = static_cast<int>(
      cfg.get_int("aggressive_inner_patience", tc.aggressive.inner_patience));
  tc.eval.iw_k = static_cast<int>(cfg.get_int("eval_iw_k", 8));
  tc.eval.mi_samples = static_cast<int>(cfg.get_int("eval_mi_samples", 250));
  tc.eval.au_threshold = cfg.get_double("au_threshold", tc.eval.au_threshold);
  tc.eval.batch = static_cast<int>(cfg.get_int("eval_batch", tc.eval.batch));
  tc.eval.iw_chunk = static_cast<int>(cfg.get_int("iw_chunk", tc.eval.iw_chunk));
  return tc;
}

LoadedCheckpoint load_model(const std::string& path) {
  LoadedCheckpoint ck = load_checkpoint(path);
  return ck;
}

Corpus encode_file(const std::string& path, const Vocab& vocab) {
  return encode_corpus(read_tokenized_lines(path), vocab);
}

Tensor row_of(const Tensor& m, int row) {
  Tensor out(1, m.cols());
  for (int c = 0; c < m.cols(); ++c) out(0, c) = m(row, c);
  return out;
}

// ---- gen-data ------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  int vocab = 100;
  int sentences = 5000;
  int min_len = 8;
  int max_len = 16;
  int factors = 2;
  int keywords = 3;
  double p_keyword = 0.50;
  double p_successor = 0.35;
  double p_partition = 0.10;
  std::uint64_t seed = 1;
};

int cmd_gen_data(const GenDataArgs& a) {
  SynthParams p;
  p.vocab_words = a.vocab;
  p.sentences = a.sentences;
  p.min_len = a.min_len;
  p.max_len = a.max_len;
  p.factors = a.factors;
  p.keywords = a.keywords;
  p.p_keyword = a.p_keyword;
  p.p_successor = a.p_successor;
  p.p_partition = a.p_partition;
  SynthCorpus corpus = gen_synthetic(p, a.seed);
  write_synth_corpus(a.out, corpus);
  std::cout << "wrote " << a.out << ": train " << corpus.train.sentences.size()
            << ", valid " << corpus.valid.sentences.size() << ", test "
            << corpus.test.sentences.size() << " sentences, " << a.factors
            << " factors\n";
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::string recipe = "vanilla";
  double lambda = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  std::string train_path, valid_path, test_path;  // override config
};

int cmd_train(const TrainArgs& a) {
  Config cfg = a.config_path.empty() ? Config() : Config::from_file(a.config_path);

  CorpusSpec spec;
  spec.train = !a.train_path.empty() ? a.train_path : cfg.get_str("train", "");
  spec.valid = !a.valid_path.empty() ? a.valid_path : cfg.get_str("valid", "");
  spec.test = !a.test_path.empty() ? a.test_path : cfg.get_str("test", "");
  spec.min_count = static_cast<int>(cfg.get_int("min_count", 1));
  if (spec.train.empty() || spec.valid.empty())
    throw ConfigError("train requires corpus paths (config keys train/valid "
                      "or --train/--valid)");
  LoadedCorpus data = load_corpus(spec);

  ModelDims dims;
  dims.vocab = data.vocab.size();
  dims.embed = static_cast<int>(cfg.get_int("embed", dims.embed));
  dims.hidden = static_cast<int>(cfg.get_int("hidden", dims.hidden));
  dims.latent = static_cast<int>(cfg.get_int("latent", dims.latent));

  TrainConfig tc = train_config_from(cfg);
  Recipe recipe;
  recipe.kind = parse_recipe(a.recipe);
  recipe.lambda = a.lambda;
  recipe.iwae_k = static_cast<int>(cfg.get_int("iwae_k", recipe.iwae_k));
  double dropout = cfg.get_double("dropout", 0.5);

  auto leftover = cfg.unused_keys();
  if (!leftover.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : leftover) msg += " " + k;
    throw ConfigError(msg);
  }

  Rng init(Rng(a.seed).fork(17).next_u64());
  SeqVae model = init_model(dims, init);
  model.dropout = dropout;

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  std::ofstream log_out(a.out + "/log.jsonl", std::ios::trunc);
  if (!log_out) throw IoError("cannot write " + a.out + "/log.jsonl");

  auto cb = [&](const EpochRecord& rec) {
    log_out << epoch_record_json(rec) << '\n' << std::flush;
    std::cout << rec.phase << " epoch " << rec.epoch << ": val_loss "
              << rec.val_loss << ", kl " << rec.val_report.kl << ", au "
              << rec.val_report.au << ", mi " << rec.val_report.mi << ", lr "
              << rec.lr << (rec.aggressive ? ", aggressive" : "") << '\n';
  };

  TrainResult result = run_recipe(model, data.train, data.valid, recipe, tc,
                                  a.seed, cb);

  CheckpointMeta meta;
  meta.recipe = a.recipe;
  meta.epoch = result.best_epoch;
  meta.rng_state = Rng(a.seed).state();
  save_checkpoint(a.out + "/best.ckpt", result.model, data.vocab, meta);
  write_metrics_csv(a.out + "/metrics.csv", result.log);
  write_metric_svgs(a.out, result.log);

  std::cout << "best val_loss " << result.best_val_loss << " at epoch "
            << result.best_epoch << " (" << result.epochs_run
            << " epochs run); checkpoint " << a.out << "/best.ckpt\n";
  return 0;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string ckpt;
  std::string corpus;
  int iw_k = 1000;
  int mi_samples = 1000;
  int iw_chunk = 250;
  int batch = 64;
  double au_threshold = 0.01;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  LoadedCheckpoint ck = load_model(a.ckpt);
  Corpus corpus = encode_file(a.corpus, ck.vocab);
  EvalOptions opts;
  opts.iw_k = a.iw_k;
  opts.mi_samples = a.mi_samples;
  opts.iw_chunk = a.iw_chunk;
  opts.batch = a.batch;
  opts.au_threshold = a.au_threshold;
  EvalReport report = evaluate(ck.model, corpus, opts, a.seed);
  std::string json = eval_report_json(report);
  std::cout << json;
  if (!a.out.empty()) write_file_atomic(a.out, json);
  return 0;
}

// ---- probe ---------------------------------------------------------------

struct ProbeArgs {
  std::string ckpt;
  std::string corpus;
  std::string train_corpus;
  int pairs = 500;
  std::string swaps = "0,1,2,3,4";
  int prior_samples = 200;
  int interpolation_pairs = 2;
  int steps = 7;
  int max_len = 30;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_probe(const ProbeArgs& a) {
  LoadedCheckpoint ck = load_model(a.ckpt);
  Corpus corpus = encode_file(a.corpus, ck.vocab);
  Corpus train_corpus = encode_file(a.train_corpus, ck.vocab);
  Rng root(a.seed);

  ProbeReport report;
  report.bleu = reconstruction_bleu(ck.model, corpus, ck.vocab);
  Rng pcc_rng = root.fork(1);
  report.pcc = smoothness_pcc(ck.model, corpus, a.pairs, pcc_rng);
  for (int k : parse_count_list(a.swaps)) {
    Rng noise_rng = root.fork(100 + static_cast<std::uint64_t>(k));
    report.noisy_recon[k] = noisy_reconstruction(ck.model, corpus, k, noise_rng);
  }
  Rng prior_rng = root.fork(2);
  CopyingReport copying =
      copying_check(ck.model, train_corpus, a.prior_samples, ck.vocab, prior_rng);
  report.copy_edit_distance = copying.mean_min_edit_distance;
  report.avg_train_sentence_len = copying.avg_train_sentence_len;

  std::string json = probe_report_json(report);
  std::cout << json;
  if (!a.out.empty()) {
    write_file_atomic(a.out + "/probe.json", json);

    std::ostringstream blocks;
    int pairs_avail = corpus.size() / 2;
    int npairs = std::min(a.interpolation_pairs, pairs_avail);
    for (int p = 0; p < npairs; ++p) {
      Batch two{corpus.sentences[static_cast<std::size_t>(2 * p)],
                corpus.sentences[static_cast<std::size_t>(2 * p + 1)]};
      Posterior post = encode_plain(ck.model, two);
      auto lines = interpolate(ck.model, row_of(post.mu, 0), row_of(post.mu, 1),
                               a.steps, ck.vocab, a.max_len);
      if (p) blocks << '\n';
      for (const auto& ids : lines)
        blocks << join_words(decode_sentence(ids, ck.vocab)) << '\n';
    }
    write_file_atomic(a.out + "/interpolations.txt", blocks.str());
  }
  return 0;
}

// ---- classify ------------------------------------------------------------

struct ClassifyArgs {
  std::string ckpt;
  std::string train_corpus, train_labels;
  std::string test_corpus, test_labels;
  std::string labeled_counts = "0,100,500";
  int classes = 0;  // 0 = infer from labels
  int iters = 500;
  double lr = 0.5;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_classify(const ClassifyArgs& a) {
  LoadedCheckpoint ck = load_model(a.ckpt);
  Corpus train_c = encode_file(a.train_corpus, ck.vocab);
  Corpus test_c = encode_file(a.test_corpus, ck.vocab);
  std::vector<int> train_y = read_labels(a.train_labels);
  std::vector<int> test_y = read_labels(a.test_labels);
  if (static_cast<int>(train_y.size()) != train_c.size())
    throw FormatError("train label count " + std::to_string(train_y.size()) +
                      " does not match corpus size " +
                      std::to_string(train_c.size()));
  if (static_cast<int>(test_y.size()) != test_c.size())
    throw FormatError("test label count " + std::to_string(test_y.size()) +
                      " does not match corpus size " +
                      std::to_string(test_c.size()));

  int classes = a.classes;
  if (classes == 0) {
    for (int y : train_y) classes = std::max(classes, y + 1);
    for (int y : test_y) classes = std::max(classes, y + 1);
  }

  Tensor train_codes = encode_corpus(ck.model, train_c).mu;
  Tensor test_codes = encode_corpus(ck.model, test_c).mu;

  // one shared shuffle so "the first c labeled rows" is a random subset and
  // sweep entries are nested
  std::vector<int> order(train_y.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng shuffle_rng = Rng(a.seed).fork(3);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(shuffle_rng.uniform_int(i + 1))]);
  Tensor shuffled_codes(train_codes.rows(), train_codes.cols());
  std::vector<int> shuffled_y(train_y.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int d = 0; d < train_codes.cols(); ++d)
      shuffled_codes(static_cast<int>(i), d) = train_codes(order[i], d);
    shuffled_y[i] = train_y[static_cast<std::size_t>(order[i])];
  }

  double cluster_acc = -1.0;
  std::map<int, double> sweep;
  for (int count : parse_count_list(a.labeled_counts)) {
    if (count == 0) {
      GmmResult gmm = gmm_fit(train_codes, classes, Rng(a.seed).fork(4).next_u64());
      std::vector<int> assign = gmm_assign(gmm.state, test_codes);
      cluster_acc = cluster_accuracy(assign, test_y, classes);
      std::cout << "labeled 0 (gmm): accuracy " << cluster_acc << "%\n";
    } else {
      ClassifierConfig ccfg;
      ccfg.num_classes = classes;
      ccfg.iters = a.iters;
      ccfg.lr = a.lr;
      double acc = linear_classify(shuffled_codes, shuffled_y, test_codes,
                                   test_y, count, ccfg);
      sweep[count] = acc;
      std::cout << "labeled " << count << ": accuracy " << acc << "%\n";
    }
  }
  std::string json = classify_report_json(cluster_acc, sweep);
  if (!a.out.empty()) write_file_atomic(a.out, json);
  return 0;
}

// ---- interpolate ---------------------------------------------------------

struct InterpolateArgs {
  std::string ckpt;
  std::string corpus;
  int index_a = 0;
  int index_b = 1;
  int steps = 7;
  int max_len = 30;
  std::string out;
};

int cmd_interpolate(const InterpolateArgs& a) {
  LoadedCheckpoint ck = load_model(a.ckpt);
  Corpus corpus = encode_file(a.corpus, ck.vocab);
  if (a.index_a < 0 || a.index_a >= corpus.size() || a.index_b < 0 ||
      a.index_b >= corpus.size())
    throw ConfigError("sentence index out of range (corpus has " +
                      std::to_string(corpus.size()) + " sentences)");
  Batch two{corpus.sentences[static_cast<std::size_t>(a.index_a)],
            corpus.sentences[static_cast<std::size_t>(a.index_b)]};
  Posterior post = encode_plain(ck.model, two);
  auto lines = interpolate(ck.model, row_of(post.mu, 0), row_of(post.mu, 1),
                           a.steps, ck.vocab, a.max_len);
  std::ostringstream block;
  for (const auto& ids : lines)
    block << join_words(decode_sentence(ids, ck.vocab)) << '\n';
  std::cout << block.str();
  if (!a.out.empty()) write_file_atomic(a.out, block.str());
  return 0;
}

// ---- check suites --------------------------------------------------------

int print_suite(const SuiteResult& res) {
  for (const auto& line : res.lines) std::cout << line << '\n';
  std::cout << (res.pass ? "all checks passed\n" : "CHECKS FAILED\n");
  return res.pass ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"latent-variable text modeling toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  GenDataArgs gen;
  auto* sub_gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  sub_gen->add_option("--out", gen.out, "output directory")->required();
  sub_gen->add_option("--vocab", gen.vocab, "content words");
  sub_gen->add_option("--sentences", gen.sentences, "training sentences");
  sub_gen->add_option("--min-len", gen.min_len, "shortest sentence");
  sub_gen->add_option("--max-len", gen.max_len, "longest sentence");
  sub_gen->add_option("--factors", gen.factors, "latent factor count");
  sub_gen->add_option("--keywords", gen.keywords, "salient words per sentence");
  sub_gen->add_option("--p-keyword", gen.p_keyword, "keyword emission probability");
  sub_gen->add_option("--p-successor", gen.p_successor, "successor probability");
  sub_gen->add_option("--p-partition", gen.p_partition, "partition-draw probability");
  sub_gen->add_option("--seed", gen.seed, "rng seed");
  sub_gen->callback([&] { rc = cmd_gen_data(gen); });

  TrainArgs tr;
  auto* sub_tr = app.add_subcommand("train", "train a model");
  sub_tr->add_option("--config", tr.config_path, "key=value config file");
  sub_tr->add_option("--recipe", tr.recipe,
                     "vanilla|anneal|cyclic|fb|fbp|aggressive|iwae|ae|"
                     "pretrain_then_elbo|pretrain_anneal_elbo|ours");
  sub_tr->add_option("--lambda", tr.lambda, "free-bits target rate");
  sub_tr->add_option("--seed", tr.seed, "rng seed");
  sub_tr->add_option("--out", tr.out, "output directory")->required();
  sub_tr->add_option("--train", tr.train_path, "train corpus (overrides config)");
  sub_tr->add_option("--valid", tr.valid_path, "valid corpus (overrides config)");
  sub_tr->add_option("--test", tr.test_path, "test corpus (overrides config)");
  sub_tr->callback([&] { rc = cmd_train(tr); });

  EvaluateArgs ev;
  auto* sub_ev = app.add_subcommand("evaluate", "evaluate a checkpoint");
  sub_ev->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
  sub_ev->add_option("--corpus", ev.corpus, "corpus file")->required();
  sub_ev->add_option("--iw-k", ev.iw_k, "importance samples");
  sub_ev->add_option("--mi-samples", ev.mi_samples, "sentences for the MI estimate");
  sub_ev->add_option("--iw-chunk", ev.iw_chunk, "importance draws per graph");
  sub_ev->add_option("--batch", ev.batch, "sentences per batch");
  sub_ev->add_option("--au-threshold", ev.au_threshold, "active-unit variance threshold");
  sub_ev->add_option("--seed", ev.seed, "rng seed");
  sub_ev->add_option("--out", ev.out, "write the report JSON here");
  sub_ev->callback([&] { rc = cmd_evaluate(ev); });

  ProbeArgs pr;
  auto* sub_pr = app.add_subcommand("probe", "latent-space probes");
  sub_pr->add_option("--ckpt", pr.ckpt, "checkpoint path")->required();
  sub_pr->add_option("--corpus", pr.corpus, "probe corpus")->required();
  sub_pr->add_option("--train-corpus", pr.train_corpus,
                     "training corpus (copying check)")->required();
  sub_pr->add_option("--pairs", pr.pairs, "sentence pairs for the smoothness PCC");
  sub_pr->add_option("--swaps", pr.swaps, "noisy-reconstruction swap counts");
  sub_pr->add_option("--prior-samples", pr.prior_samples, "prior decodes for the copying check");
  sub_pr->add_option("--interpolation-pairs", pr.interpolation_pairs,
                     "sentence pairs to interpolate");
  sub_pr->add_option("--steps", pr.steps, "interpolation steps");
  sub_pr->add_option("--max-len", pr.max_len, "decode length cap");
  sub_pr->add_option("--seed", pr.seed, "rng seed");
  sub_pr->add_option("--out", pr.out, "output directory");
  sub_pr->callback([&] { rc = cmd_probe(pr); });

  ClassifyArgs cl;
  auto* sub_cl = app.add_subcommand("classify", "classification on frozen codes");
  sub_cl->add_option("--ckpt", cl.ckpt, "checkpoint path")->required();
  sub_cl->add_option("--train-corpus", cl.train_corpus, "labeled corpus")->required();
  sub_cl->add_option("--train-labels", cl.train_labels, "labels for it")->required();
  sub_cl->add_option("--test-corpus", cl.test_corpus, "evaluation corpus")->required();
  sub_cl->add_option("--test-labels", cl.test_labels, "labels for it")->required();
  sub_cl->add_option("--labeled-counts", cl.labeled_counts,
                     "comma list; 0 = unsupervised mixture");
  sub_cl->add_option("--classes", cl.classes, "class count (0 = infer)");
  sub_cl->add_option("--iters", cl.iters, "classifier gradient steps");
  sub_cl->add_option("--lr", cl.lr, "classifier learning rate");
  sub_cl->add_option("--seed", cl.seed, "rng seed");
  sub_cl->add_option("--out", cl.out, "write the accuracy JSON here");
  sub_cl->callback([&] { rc = cmd_classify(cl); });

  InterpolateArgs ip;
  auto* sub_ip = app.add_subcommand("interpolate", "decode along a latent line");
  sub_ip->add_option("--ckpt", ip.ckpt, "checkpoint path")->required();
  sub_ip->add_option("--corpus", ip.corpus, "corpus file")->required();
  sub_ip->add_option("--index-a", ip.index_a, "first sentence index");
  sub_ip->add_option("--index-b", ip.index_b, "second sentence index");
  sub_ip->add_option("--steps", ip.steps, "interpolation steps");
  sub_ip->add_option("--max-len", ip.max_len, "decode length cap");
  sub_ip->add_option("--out", ip.out, "write the text block here");
  sub_ip->callback([&] { rc = cmd_interpolate(ip); });

  struct {
    std::uint64_t seed = 7;
    int sentences = 50;
    int iw_k = 1000;
    int epochs = 6;
  } oc;
  auto* sub_oc = app.add_subcommand(
      "oracle-check", "importance sampling vs quadrature on a tiny model");
  sub_oc->add_option("--seed", oc.seed, "rng seed");
  sub_oc->add_option("--sentences", oc.sentences, "test sentences compared");
  sub_oc->add_option("--iw-k", oc.iw_k, "importance samples");
  sub_oc->add_option("--epochs", oc.epochs, "training epochs for the tiny model");
  sub_oc->callback([&] {
    rc = print_suite(oracle_suite(oc.seed, oc.sentences, oc.iw_k, oc.epochs));
  });

  struct {
    int cases = 100;
    double tol = 1e-4;
    std::uint64_t seed = 7;
  } gc;
  auto* sub_gc = app.add_subcommand("grad-check",
                                    "finite-difference gradient verification");
  sub_gc->add_option("--cases", gc.cases, "random cases per op and loss");
  sub_gc->add_option("--tol", gc.tol, "relative error tolerance");
  sub_gc->add_option("--seed", gc.seed, "rng seed");
  sub_gc->callback([&] { rc = print_suite(grad_suite(gc.cases, gc.tol, gc.seed)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}

}  // namespace textvae
