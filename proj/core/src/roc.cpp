#include "fpm/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpm/errors.hpp"

namespace fpm {

ScoreSplit genuine_impostor(const ScoreTable& table) {
  if (table.scores.size() != table.rows() * table.cols() || table.labels.size() != table.rows()) {
    throw ParameterError("score table shape is inconsistent");
  }
  ScoreSplit out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const double s = table.at(r, c);
      if (!std::isfinite(s)) throw ParameterError("score table holds a non-finite entry");
      (table.fingers[c] == table.labels[r] ? out.genuine : out.impostor).push_back(s);
    }
  }
  return out;
}

std::vector<RocPoint> compute_roc(const ScoreTable& table, const std::optional<std::vector<double>>& thresholds) {
  return compute_roc(genuine_impostor(table), thresholds);
}

std::vector<RocPoint> compute_roc(const ScoreSplit& scores, const std::optional<std::vector<double>>& thresholds) {
  if (scores.genuine.empty()) throw ParameterError("ROC needs at least one genuine score");
  if (scores.impostor.empty()) throw ParameterError("ROC needs at least one impostor score");

  std::vector<double> taus;
  if (thresholds) {
    taus = *thresholds;
    for (double t : taus) {
      if (std::isnan(t)) throw ParameterError("threshold is NaN");
    }
  } else {
    constexpr double inf = std::numeric_limits<double>::infinity();
    taus.reserve(scores.genuine.size() + scores.impostor.size() + 2);
    taus.push_back(-inf);
    taus.insert(taus.end(), scores.genuine.begin(), scores.genuine.end());
    taus.insert(taus.end(), scores.impostor.begin(), scores.impostor.end());
    taus.push_back(inf);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  }

  auto gen = scores.genuine;
  auto imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  const double n_gen = static_cast<double>(gen.size());
  const double n_imp = static_cast<double>(imp.size());

  std::vector<RocPoint> out;
  out.reserve(taus.size());
  for (double t : taus) {
    const auto rejected = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
    const auto accepted = imp.end() - std::lower_bound(imp.begin(), imp.end(), t);
    out.push_back({t, static_cast<double>(accepted) / n_imp, static_cast<double>(rejected) / n_gen,
                   gen.size(), imp.size()});
  }
  return out;
}

double frr_at_far(const std::vector<RocPoint>& roc, double max_far) {
  double best = 1.0;
  for (const auto& p : roc) {
    if (p.far <= max_far) best = std::min(best, p.frr);
  }
  return best;
}

}  // namespace fpm
