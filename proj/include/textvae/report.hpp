#pragma once

#include <map>
#include <string>
#include <vector>

#include "textvae/estimators.hpp"
#include "textvae/probes.hpp"
#include "textvae/trainer.hpp"

namespace textvae {

// JSON object with exactly the documented metric keys, in declaration order.
std::string eval_report_json(const EvalReport& r);

// One JSONL line: run bookkeeping plus every EvalReport field, flattened.
// Refuses to serialize non-finite metrics.
std::string epoch_record_json(const EpochRecord& rec);

std::string probe_report_json(const ProbeReport& r);

// classify output: GMM accuracy (labeled count 0) and the supervised sweep.
std::string classify_report_json(double cluster_accuracy,
                                 const std::map<int, double>& classifier_accuracy);

void write_jsonl(const std::string& path, const std::vector<std::string>& lines);

}  // namespace textvae
