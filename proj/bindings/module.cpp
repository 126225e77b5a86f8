// Python bindings for the core operations: corpus handling, model training,
// evaluation, and the latent-space diagnostics. Heavier experiment plumbing
// (checkpoint directories, plots, csv logs) stays behind the CLI.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "textvae/checkpoint.hpp"
#include "textvae/classifier.hpp"
#include "textvae/corpus.hpp"
#include "textvae/estimators.hpp"
#include "textvae/gmm.hpp"
#include "textvae/grad_check.hpp"
#include "textvae/model.hpp"
#include "textvae/probes.hpp"
#include "textvae/quadrature.hpp"
#include "textvae/rng.hpp"
#include "textvae/suites.hpp"
#include "textvae/synth.hpp"
#include "textvae/trainer.hpp"

namespace py = pybind11;
using namespace textvae;

namespace {

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> a({t.rows(), t.cols()});
  auto buf = a.mutable_unchecked<2>();
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c) buf(r, c) = t(r, c);
  return a;
}

Tensor to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  auto buf = a.unchecked<2>();
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c) t(r, c) = buf(r, c);
  return t;
}

Tensor to_row(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  Tensor t(1, static_cast<int>(a.shape(0)));
  auto buf = a.unchecked<1>();
  for (int c = 0; c < t.cols(); ++c) t(0, c) = buf(c);
  return t;
}

py::dict report_to_dict(const EvalReport& r) {
  py::dict d;
  d["nll"] = r.nll;
  d["ppl"] = r.ppl;
  d["recon"] = r.recon;
  d["kl"] = r.kl;
  d["neg_elbo"] = r.neg_elbo;
  d["elbo_ppl"] = r.elbo_ppl;
  d["mi"] = r.mi;
  d["au"] = r.au;
  return d;
}

py::dict record_to_dict(const EpochRecord& r) {
  py::dict d;
  d["phase"] = r.phase;
  d["epoch"] = r.epoch;
  d["lr"] = r.lr;
  d["beta"] = r.beta;
  d["train_objective"] = r.train_objective;
  d["train_recon"] = r.train_recon;
  d["train_kl"] = r.train_kl;
  d["val_loss"] = r.val_loss;
  d["improved"] = r.improved;
  d["decays"] = r.decays;
  d["aggressive"] = r.aggressive;
  d["val"] = report_to_dict(r.val_report);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sequence VAE toolkit: training recipes, estimators, and latent probes";
  m.attr("__version__") = "0.1.0";

  py::class_<Vocab>(m, "Vocab")
      .def_static("build", &Vocab::build, py::arg("sentences"),
                  py::arg("min_count") = 1)
      .def("size", &Vocab::size)
      .def("id", &Vocab::id, py::arg("word"))
      .def("word", &Vocab::word, py::arg("id"))
      .def("words", &Vocab::words)
      .def_property_readonly("pad", &Vocab::pad)
      .def_property_readonly("bos", &Vocab::bos)
      .def_property_readonly("eos", &Vocab::eos)
      .def_property_readonly("unk", &Vocab::unk)
      .def("__len__", &Vocab::size)
      .def("__repr__", [](const Vocab& v) {
        return "Vocab(size=" + std::to_string(v.size()) + ")";
      });

  py::class_<Corpus>(m, "Corpus")
      .def("size", &Corpus::size)
      .def("predicted_tokens", &Corpus::predicted_tokens)
      .def_readonly("sentences", &Corpus::sentences)
      .def("__len__", &Corpus::size)
      .def("__repr__", [](const Corpus& c) {
        return "Corpus(sentences=" + std::to_string(c.size()) + ")";
      });

  m.def("encode_corpus",
        py::overload_cast<const std::vector<std::vector<std::string>>&,
                          const Vocab&>(&encode_corpus),
        py::arg("sentences"), py::arg("vocab"),
        "Wrap tokenized sentences as marked id sequences.");
  m.def("decode_sentence", &decode_sentence, py::arg("ids"), py::arg("vocab"),
        "Surface words for an id sequence, markers stripped.");

  py::class_<SynthSplit>(m, "SynthSplit")
      .def_readonly("sentences", &SynthSplit::sentences)
      .def_readonly("labels", &SynthSplit::labels);
  py::class_<SynthCorpus>(m, "SynthCorpus")
      .def_readonly("train", &SynthCorpus::train)
      .def_readonly("valid", &SynthCorpus::valid)
      .def_readonly("test", &SynthCorpus::test);

  m.def(
      "gen_synthetic",
      [](int vocab_words, int sentences, int min_len, int max_len, int factors,
         int keywords, double p_keyword, double p_successor, double p_partition,
         std::uint64_t seed) {
        SynthParams p;
        p.vocab_words = vocab_words;
        p.sentences = sentences;
        p.min_len = min_len;
        p.max_len = max_len;
        p.factors = factors;
        p.keywords = keywords;
        p.p_keyword = p_keyword;
        p.p_successor = p_successor;
        p.p_partition = p_partition;
        return gen_synthetic(p, seed);
      },
      py::arg("vocab_words") = 100, py::arg("sentences") = 5000,
      py::arg("min_len") = 8, py::arg("max_len") = 16, py::arg("factors") = 2,
      py::arg("keywords") = 3, py::arg("p_keyword") = 0.50,
      py::arg("p_successor") = 0.35, py::arg("p_partition") = 0.10,
      py::arg("seed") = 0,
      "Latent-factor keyword corpus with parallel factor labels.");

  py::class_<SeqVae>(m, "Model")
      .def_property_readonly("vocab", [](const SeqVae& v) { return v.dims.vocab; })
      .def_property_readonly("embed", [](const SeqVae& v) { return v.dims.embed; })
      .def_property_readonly("hidden", [](const SeqVae& v) { return v.dims.hidden; })
      .def_property_readonly("latent", [](const SeqVae& v) { return v.dims.latent; })
      .def_readwrite("dropout", &SeqVae::dropout)
      .def("__repr__", [](const SeqVae& v) {
        return "Model(vocab=" + std::to_string(v.dims.vocab) +
               ", embed=" + std::to_string(v.dims.embed) +
               ", hidden=" + std::to_string(v.dims.hidden) +
               ", latent=" + std::to_string(v.dims.latent) + ")";
      });

  m.def(
      "init_model",
      [](int vocab, int embed, int hidden, int latent, double dropout,
         std::uint64_t seed) {
        ModelDims dims;
        dims.vocab = vocab;
        dims.embed = embed;
        dims.hidden = hidden;
        dims.latent = latent;
        Rng rng(seed);
        SeqVae model = init_model(dims, rng);
        model.dropout = dropout;
        return model;
      },
      py::arg("vocab"), py::arg("embed") = 64, py::arg("hidden") = 128,
      py::arg("latent") = 32, py::arg("dropout") = 0.5, py::arg("seed") = 0);

  m.def(
      "train_recipe",
      [](const SeqVae& model, const Corpus& train_set, const Corpus& valid_set,
         const std::string& recipe, double lam, int iwae_k, int batch_size,
         int max_epochs, double lr, double clip_norm, int eval_iw_k,
         int eval_mi_samples, std::uint64_t seed, bool verbose) {
        Recipe r;
        r.kind = parse_recipe(recipe);
        r.lambda = lam;
        r.iwae_k = iwae_k;
        TrainConfig cfg;
        cfg.batch_size = batch_size;
        cfg.max_epochs = max_epochs;
        cfg.lr_init = lr;
        cfg.clip_norm = clip_norm;
        cfg.eval.iw_k = eval_iw_k;
        cfg.eval.mi_samples = eval_mi_samples;
        EpochCallback cb;
        if (verbose)
          cb = [](const EpochRecord& rec) {
            py::print(rec.phase, "epoch", rec.epoch, "objective",
                      rec.train_objective, "val", rec.val_loss);
          };
        TrainResult out =
            run_recipe(model, train_set, valid_set, r, cfg, seed, cb);
        py::list log;
        for (const auto& rec : out.log) log.append(record_to_dict(rec));
        py::dict d;
        d["model"] = out.model;
        d["log"] = log;
        d["best_val_loss"] = out.best_val_loss;
        d["best_epoch"] = out.best_epoch;
        d["epochs_run"] = out.epochs_run;
        return d;
      },
      py::arg("model"), py::arg("train"), py::arg("valid"), py::arg("recipe"),
      py::arg("lam") = 0.0, py::arg("iwae_k") = 10, py::arg("batch_size") = 32,
      py::arg("max_epochs") = 100, py::arg("lr") = 0.5,
      py::arg("clip_norm") = 5.0, py::arg("eval_iw_k") = 8,
      py::arg("eval_mi_samples") = 250, py::arg("seed") = 0,
      py::arg("verbose") = false,
      "Train under a named recipe; returns the best model and the epoch log.");

  m.def(
      "evaluate",
      [](const SeqVae& model, const Corpus& corpus, int iw_k, int mi_samples,
         double au_threshold, int iw_chunk, int batch, std::uint64_t seed) {
        EvalOptions opts;
        opts.iw_k = iw_k;
        opts.mi_samples = mi_samples;
        opts.au_threshold = au_threshold;
        opts.iw_chunk = iw_chunk;
        opts.batch = batch;
        return report_to_dict(evaluate(model, corpus, opts, seed));
      },
      py::arg("model"), py::arg("corpus"), py::arg("iw_k") = 1000,
      py::arg("mi_samples") = 1000, py::arg("au_threshold") = 0.01,
      py::arg("iw_chunk") = 250, py::arg("batch") = 64, py::arg("seed") = 0);

  m.def(
      "encode",
      [](const SeqVae& model, const Corpus& corpus, int batch) {
        Posterior p = encode_corpus(model, corpus, batch);
        return py::make_tuple(to_array(p.mu), to_array(p.log_var));
      },
      py::arg("model"), py::arg("corpus"), py::arg("batch") = 64,
      "Posterior (mu, log_var) arrays, one row per sentence.");

  m.def(
      "iw_nll",
      [](const SeqVae& model, const std::vector<int>& sentence, int k,
         std::uint64_t seed, int chunk) {
        Rng rng(seed);
        return iw_nll(model, sentence, k, rng, chunk);
      },
      py::arg("model"), py::arg("sentence"), py::arg("k") = 1000,
      py::arg("seed") = 0, py::arg("chunk") = 250);

  m.def("quadrature_log_marginal", &quadrature_log_marginal, py::arg("model"),
        py::arg("sentence"), py::arg("order") = 64,
        "Exact log p(x) for latent dimension 1 or 2.");

  m.def("ppl_from_nll", &ppl_from_nll, py::arg("total_nll"),
        py::arg("total_tokens"));

  m.def(
      "active_units",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& mus,
         double threshold) { return active_units(to_tensor(mus), threshold); },
      py::arg("mus"), py::arg("threshold") = 0.01);

  m.def("reconstruction_bleu", &reconstruction_bleu, py::arg("model"),
        py::arg("corpus"), py::arg("vocab"), py::arg("max_n") = 4);

  m.def(
      "smoothness_pcc",
      [](const SeqVae& model, const Corpus& corpus, int pairs,
         std::uint64_t seed) {
        Rng rng(seed);
        return smoothness_pcc(model, corpus, pairs, rng);
      },
      py::arg("model"), py::arg("corpus"), py::arg("pairs") = 300,
      py::arg("seed") = 0);

  m.def(
      "interpolate",
      [](const SeqVae& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z0,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z1,
         int steps, const Vocab& vocab, int max_len) {
        auto ids = interpolate(model, to_row(z0), to_row(z1), steps, vocab, max_len);
        std::vector<std::vector<std::string>> out;
        out.reserve(ids.size());
        for (const auto& s : ids) out.push_back(decode_sentence(s, vocab));
        return out;
      },
      py::arg("model"), py::arg("z0"), py::arg("z1"), py::arg("steps"),
      py::arg("vocab"), py::arg("max_len") = 30,
      "Greedy decodes along the latent line, as word lists.");

  py::class_<GmmState>(m, "GmmState")
      .def_property_readonly("weights",
                             [](const GmmState& s) { return to_array(s.weights); })
      .def_property_readonly("means",
                             [](const GmmState& s) { return to_array(s.means); })
      .def_property_readonly("vars",
                             [](const GmmState& s) { return to_array(s.vars); });

  m.def(
      "gmm_fit",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& codes,
         int components, std::uint64_t seed, int max_iters, double tol,
         double var_floor) {
        GmmResult r =
            gmm_fit(to_tensor(codes), components, seed, max_iters, tol, var_floor);
        py::dict d;
        d["state"] = r.state;
        d["assignments"] = r.assignments;
        d["log_likelihood_curve"] = r.log_likelihood_curve;
        return d;
      },
      py::arg("codes"), py::arg("components"), py::arg("seed") = 0,
      py::arg("max_iters") = 200, py::arg("tol") = 1e-6,
      py::arg("var_floor") = 1e-6);

  m.def(
      "gmm_assign",
      [](const GmmState& state,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& codes) {
        return gmm_assign(state, to_tensor(codes));
      },
      py::arg("state"), py::arg("codes"));

  m.def("cluster_accuracy", &cluster_accuracy, py::arg("assignments"),
        py::arg("labels"), py::arg("components"));

  m.def(
      "linear_classify",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& train_codes,
         const std::vector<int>& train_labels,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& test_codes,
         const std::vector<int>& test_labels, int labeled_count,
         int num_classes, int iters, double lr) {
        ClassifierConfig cfg;
        cfg.num_classes = num_classes;
        cfg.iters = iters;
        cfg.lr = lr;
        return linear_classify(to_tensor(train_codes), train_labels,
                               to_tensor(test_codes), test_labels,
                               labeled_count, cfg);
      },
      py::arg("train_codes"), py::arg("train_labels"), py::arg("test_codes"),
      py::arg("test_labels"), py::arg("labeled_count"),
      py::arg("num_classes") = 2, py::arg("iters") = 500, py::arg("lr") = 0.5);

  m.def(
      "save_checkpoint",
      [](const std::string& path, const SeqVae& model, const Vocab& vocab,
         const std::string& recipe, int epoch) {
        CheckpointMeta meta;
        meta.recipe = recipe;
        meta.epoch = epoch;
        save_checkpoint(path, model, vocab, meta);
      },
      py::arg("path"), py::arg("model"), py::arg("vocab"),
      py::arg("recipe") = "", py::arg("epoch") = 0);

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        LoadedCheckpoint lc = load_checkpoint(path);
        py::dict meta;
        meta["version"] = lc.meta.version;
        meta["recipe"] = lc.meta.recipe;
        meta["epoch"] = lc.meta.epoch;
        meta["vocab_hash"] = lc.meta.vocab_hash;
        return py::make_tuple(lc.model, lc.vocab, meta);
      },
      py::arg("path"));

  m.def(
      "grad_check",
      [](int cases, double tol, std::uint64_t seed) {
        SuiteResult r = grad_suite(cases, tol, seed);
        return py::make_tuple(r.pass, r.lines);
      },
      py::arg("cases") = 100, py::arg("tol") = 1e-4, py::arg("seed") = 7,
      "Finite-difference verification of every op and loss; (pass, lines).");
}
