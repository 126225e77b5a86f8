#include "textvae/plots.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "textvae/errors.hpp"
#include "textvae/fsio.hpp"

namespace textvae {
namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochRecord>& log) {
  std::string out =
      "phase,epoch,lr,beta,train_objective,train_recon,train_kl,val_loss,"
      "improved,decays,aggressive,nll,ppl,recon,kl,neg_elbo,elbo_ppl,mi,au\n";
  for (const auto& r : log) {
    std::ostringstream row;
    row << r.phase << ',' << r.epoch << ',' << num(r.lr) << ',' << num(r.beta)
        << ',' << num(r.train_objective) << ',' << num(r.train_recon) << ','
        << num(r.train_kl) << ',' << num(r.val_loss) << ',' << (r.improved ? 1 : 0)
        << ',' << r.decays << ',' << (r.aggressive ? 1 : 0) << ','
        << num(r.val_report.nll) << ',' << num(r.val_report.ppl) << ','
        << num(r.val_report.recon) << ',' << num(r.val_report.kl) << ','
        << num(r.val_report.neg_elbo) << ',' << num(r.val_report.elbo_ppl)
        << ',' << num(r.val_report.mi) << ',' << r.val_report.au << '\n';
    out += row.str();
  }
  write_file_atomic(path, out);
}

std::string metric_svg(const std::string& title,
                       const std::vector<double>& ys) {
  if (ys.empty()) throw ContractError("metric_svg: empty series");
  // min/max comparisons silently skip NaN, so vet the series itself.
  for (double v : ys)
    if (!std::isfinite(v))
      throw NumericError("metric_svg: non-finite series " + title);
  const double w = 640, h = 400, ml = 70, mr = 20, mt = 40, mb = 40;
  double lo = *std::min_element(ys.begin(), ys.end());
  double hi = *std::max_element(ys.begin(), ys.end());
  if (hi - lo < 1e-12) {
    hi += 0.5;
    lo -= 0.5;
  }
  double n = static_cast<double>(ys.size());
  auto px = [&](std::size_t i) {
    double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
    return ml + t * (w - ml - mr);
  };
  auto py = [&](double v) {
    return h - mb - (v - lo) / (hi - lo) * (h - mt - mb);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n"
     << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << ml - 8 << "\" y=\"" << py(lo) + 4
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
     << num(lo) << "</text>\n"
     << "<text x=\"" << ml - 8 << "\" y=\"" << py(hi) + 4
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
     << num(hi) << "</text>\n"
     << "<text x=\"" << px(0) << "\" y=\"" << h - mb + 16
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">0"
     << "</text>\n"
     << "<text x=\"" << px(ys.size() - 1) << "\" y=\"" << h - mb + 16
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
     << ys.size() - 1 << "</text>\n"
     << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (i) os << ' ';
    os << px(i) << ',' << py(ys[i]);
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

void write_metric_svgs(const std::string& dir,
                       const std::vector<EpochRecord>& log) {
  if (log.empty()) return;
  auto series = [&](auto pick) {
    std::vector<double> ys;
    ys.reserve(log.size());
    for (const auto& r : log) ys.push_back(pick(r));
    return ys;
  };
  struct Curve {
    const char* name;
    std::vector<double> ys;
  };
  std::vector<Curve> curves;
  curves.push_back({"kl", series([](const EpochRecord& r) { return r.val_report.kl; })});
  curves.push_back({"mi", series([](const EpochRecord& r) { return r.val_report.mi; })});
  curves.push_back({"au", series([](const EpochRecord& r) {
                      return static_cast<double>(r.val_report.au);
                    })});
  curves.push_back({"ppl", series([](const EpochRecord& r) { return r.val_report.ppl; })});
  curves.push_back({"val_loss", series([](const EpochRecord& r) { return r.val_loss; })});
  for (auto& c : curves)
    write_file_atomic(dir + "/" + c.name + ".svg", metric_svg(c.name, c.ys));
}

}  // namespace textvae
