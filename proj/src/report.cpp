#include "textvae/report.hpp"

#include <cmath>

#include "json.hpp"

#include "textvae/errors.hpp"
#include "textvae/fsio.hpp"

namespace textvae {
namespace {

using ordered_json = nlohmann::ordered_json;

void require_finite_metric(const char* key, double v) {
  if (!std::isfinite(v))
    throw NumericError(std::string("report: non-finite metric ") + key);
}

void put_eval_fields(ordered_json& j, const EvalReport& r) {
  const std::pair<const char*, double> fields[] = {
      {"nll", r.nll},         {"ppl", r.ppl},     {"recon", r.recon},
      {"kl", r.kl},           {"neg_elbo", r.neg_elbo},
      {"elbo_ppl", r.elbo_ppl}, {"mi", r.mi},
  };
  for (const auto& [key, v] : fields) {
    require_finite_metric(key, v);
    j[key] = v;
  }
  j["au"] = r.au;
}

}  // namespace

std::string eval_report_json(const EvalReport& r) {
  ordered_json j;
  put_eval_fields(j, r);
  return j.dump(2) + "\n";
}

std::string epoch_record_json(const EpochRecord& rec) {
  ordered_json j;
  j["phase"] = rec.phase;
  j["epoch"] = rec.epoch;
  require_finite_metric("lr", rec.lr);
  j["lr"] = rec.lr;
  require_finite_metric("beta", rec.beta);
  j["beta"] = rec.beta;
  require_finite_metric("train_objective", rec.train_objective);
  j["train_objective"] = rec.train_objective;
  require_finite_metric("train_recon", rec.train_recon);
  j["train_recon"] = rec.train_recon;
  require_finite_metric("train_kl", rec.train_kl);
  j["train_kl"] = rec.train_kl;
  require_finite_metric("val_loss", rec.val_loss);
  j["val_loss"] = rec.val_loss;
  j["improved"] = rec.improved;
  j["decays"] = rec.decays;
  j["aggressive"] = rec.aggressive;
  put_eval_fields(j, rec.val_report);
  return j.dump();
}

std::string probe_report_json(const ProbeReport& r) {
  ordered_json j;
  require_finite_metric("bleu", r.bleu);
  j["bleu"] = r.bleu;
  require_finite_metric("pcc", r.pcc);
  j["pcc"] = r.pcc;
  ordered_json noisy;
  for (const auto& [swaps, nats] : r.noisy_recon) {
    require_finite_metric("noisy_recon", nats);
    noisy[std::to_string(swaps)] = nats;
  }
  j["noisy_recon"] = noisy;
  require_finite_metric("copy_edit_distance", r.copy_edit_distance);
  j["copy_edit_distance"] = r.copy_edit_distance;
  require_finite_metric("avg_train_sentence_len", r.avg_train_sentence_len);
  j["avg_train_sentence_len"] = r.avg_train_sentence_len;
  return j.dump(2) + "\n";
}

std::string classify_report_json(
    double cluster_accuracy, const std::map<int, double>& classifier_accuracy) {
  ordered_json j;
  if (cluster_accuracy >= 0.0) {
    require_finite_metric("cluster_accuracy", cluster_accuracy);
    j["cluster_accuracy"] = cluster_accuracy;
  }
  ordered_json sweep;
  for (const auto& [count, acc] : classifier_accuracy) {
    require_finite_metric("classifier_accuracy", acc);
    sweep[std::to_string(count)] = acc;
  }
  j["classifier_accuracy"] = sweep;
  return j.dump(2) + "\n";
}

void write_jsonl(const std::string& path, const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace textvae
