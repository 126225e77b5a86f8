#pragma once

#include <string>
#include <vector>

#include "textvae/trainer.hpp"

namespace textvae {

// One row per epoch record, bookkeeping plus all validation metrics.
void write_metrics_csv(const std::string& path,
                       const std::vector<EpochRecord>& log);

// Self-contained line chart, y over record index.
std::string metric_svg(const std::string& title,
                       const std::vector<double>& ys);

// kl / mi / au / ppl / val_loss curves as <name>.svg under dir.
void write_metric_svgs(const std::string& dir,
                       const std::vector<EpochRecord>& log);

}  // namespace textvae
