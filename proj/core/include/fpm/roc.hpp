#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fpm/protocol.hpp"

namespace fpm {

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
};

/// Genuine cells are each row's true-finger column, impostor cells every
/// other column.
struct ScoreSplit {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

ScoreSplit genuine_impostor(const ScoreTable& table);

/// One point per threshold: FAR = #impostor >= t / #impostor, FRR =
/// #genuine < t / #genuine. Without explicit thresholds, uses every distinct
/// score plus -inf and +inf, ascending. Throws ParameterError when either
/// population is empty.
std::vector<RocPoint> compute_roc(const ScoreTable& table,
                                  const std::optional<std::vector<double>>& thresholds = std::nullopt);
std::vector<RocPoint> compute_roc(const ScoreSplit& scores,
                                  const std::optional<std::vector<double>>& thresholds = std::nullopt);

/// Lowest FRR among points whose FAR does not exceed max_far.
double frr_at_far(const std::vector<RocPoint>& roc, double max_far);

}  // namespace fpm
