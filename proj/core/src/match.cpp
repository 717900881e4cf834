#include "fpm/match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpm/random.hpp"

namespace fpm {

std::vector<MatchPair> symmetric_nn_match(const DistanceMatrix& d) {
  const std::size_t rows = d.rows();
  const std::size_t cols = d.cols();
  if (rows == 0 || cols == 0) return {};

  std::vector<std::size_t> best_col(rows, 0);
  std::vector<std::size_t> best_row(cols, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 1; k < cols; ++k) {
      if (d(i, k) < d(i, best_col[i])) best_col[i] = k;
    }
  }
  for (std::size_t k = 0; k < cols; ++k) {
    for (std::size_t i = 1; i < rows; ++i) {
      if (d(i, k) < d(best_row[k], k)) best_row[k] = i;
    }
  }

  std::vector<MatchPair> out;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t k = best_col[i];
    if (best_row[k] == i) out.push_back({i, k, d(i, k)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const MatchPair& a, const MatchPair& b) { return a.distance < b.distance; });
  return out;
}

Point2 RigidTransform::apply(Point2 p) const noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double x = p.x + t.x;
  const double y = p.y + t.y;
  return {c * x - s * y, s * x + c * y};
}

double RigidTransform::residual(const PointPair& p) const noexcept {
  const auto q = apply(p.c);
  return std::hypot(p.e.x - q.x, p.e.y - q.y);
}

RigidTransform fit_rigid_least_squares(std::span<const PointPair> pairs) {
  if (pairs.size() < 2) throw InsufficientDataError("rigid fit needs at least two pairs");
  const double n = static_cast<double>(pairs.size());
  Point2 me{};
  Point2 mc{};
  for (const auto& p : pairs) {
    me.x += p.e.x;
    me.y += p.e.y;
    mc.x += p.c.x;
    mc.y += p.c.y;
  }
  me = {me.x / n, me.y / n};
  mc = {mc.x / n, mc.y / n};

  double dot = 0.0;
  double cross = 0.0;
  for (const auto& p : pairs) {
    const double cx = p.c.x - mc.x;
    const double cy = p.c.y - mc.y;
    const double ex = p.e.x - me.x;
    const double ey = p.e.y - me.y;
    dot += cx * ex + cy * ey;
    cross += cx * ey - cy * ex;
  }
  RigidTransform tr;
  tr.theta = wrap_angle(std::atan2(cross, dot));
  // p_e = R p_c + b with b = me - R mc, and t = R^T b.
  const double c = std::cos(tr.theta);
  const double s = std::sin(tr.theta);
  const double bx = me.x - (c * mc.x - s * mc.y);
  const double by = me.y - (s * mc.x + c * mc.y);
  tr.t = {c * bx + s * by, -s * bx + c * by};
  return tr;
}

void RansacConfig::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("RANSAC epsilon must be positive");
  if (iterations < 1) throw ParameterError("RANSAC iterations must be >= 1");
  if (min_matches < 2) throw ParameterError("RANSAC min_matches must be >= 2");
  if (!(max_abs_theta > 0.0)) throw ParameterError("RANSAC max_abs_theta must be positive");
}

namespace {

struct Consensus {
  std::vector<std::size_t> inliers;
  double residual_sum = 0.0;
};

Consensus consensus_of(const RigidTransform& tr, std::span<const PointPair> pairs, double eps) {
  Consensus c;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double r = tr.residual(pairs[i]);
    if (r < eps) {
      c.inliers.push_back(i);
      c.residual_sum += r;
    }
  }
  return c;
}

bool better(const Consensus& a, const Consensus& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.residual_sum < b.residual_sum;
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

RansacResult fit_rigid_ransac(std::span<const PointPair> pairs, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = pairs.size();
  if (n < static_cast<std::size_t>(cfg.min_matches)) {
    throw InsufficientDataError("RANSAC needs at least min_matches pairs");
  }

  RigidTransform best_tr;
  Consensus best;
  bool have = false;
  for (int it = 0; it < cfg.iterations; ++it) {
    CounterRng rng(cfg.rng_seed, static_cast<std::uint64_t>(it));
    const std::size_t a = rng.below(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    const PointPair sample[2] = {pairs[a], pairs[b]};

    const double de = distance(sample[0].e, sample[1].e);
    const double dc = distance(sample[0].c, sample[1].c);
    if (de < 1e-9 || dc < 1e-9) continue;
    // Two true inliers cannot disagree on their spacing by 2 epsilon or more.
    if (std::abs(de - dc) >= 2.0 * cfg.epsilon) continue;

    const auto tr = fit_rigid_least_squares(sample);
    if (std::abs(tr.theta) > cfg.max_abs_theta) continue;
    auto cons = consensus_of(tr, pairs, cfg.epsilon);
    if (!have || better(cons, best)) {
      best = std::move(cons);
      best_tr = tr;
      have = true;
    }
  }

  RansacResult result;
  if (!have || best.inliers.size() < static_cast<std::size_t>(cfg.min_matches)) return result;

  // Least-squares refit on the consensus set. Inliers are recounted under the
  // refit so every reported inlier satisfies the residual bound under the
  // reported transform; the 2-point estimate survives only if the refit
  // breaks the rotation bound or falls below min_matches.
  for (int round = 0; round < 5; ++round) {
    std::vector<PointPair> subset;
    subset.reserve(best.inliers.size());
    for (auto i : best.inliers) subset.push_back(pairs[i]);
    const auto refit = fit_rigid_least_squares(subset);
    if (std::abs(refit.theta) > cfg.max_abs_theta) break;
    auto cons = consensus_of(refit, pairs, cfg.epsilon);
    if (cons.inliers.size() < static_cast<std::size_t>(cfg.min_matches)) break;
    const bool changed = cons.inliers != best.inliers;
    best = std::move(cons);
    best_tr = refit;
    if (!changed) break;
  }

  result.transform = best_tr;
  result.inliers = std::move(best.inliers);
  result.consensus = true;
  return result;
}

std::string_view to_string(Pipeline p) noexcept {
  switch (p) {
    case Pipeline::HarrisSsd:
      return "harris-ssd";
    case Pipeline::DogHist:
      return "dog-hist";
  }
  return "unknown";
}

std::string_view to_string(ScoreReason r) noexcept {
  switch (r) {
    case ScoreReason::Ok:
      return "ok";
    case ScoreReason::NoKeypoints:
      return "no-keypoints";
    case ScoreReason::NoMatches:
      return "no-matches";
    case ScoreReason::NoConsensus:
      return "no-consensus";
  }
  return "unknown";
}

FeatureSet extract_features(const Image& img, Pipeline pipeline, const FeatureConfig& cfg) {
  FeatureSet fs;
  fs.pipeline = pipeline;
  const auto keypoints =
      pipeline == Pipeline::HarrisSsd ? harris_keypoints(img, cfg.harris) : dog_keypoints(img, cfg.dog);
  fs.detected = keypoints.size();
  for (const auto& kp : keypoints) {
    try {
      if (pipeline == Pipeline::HarrisSsd) {
        fs.patches.push_back(oriented_patch_descriptor(img, kp, cfg.patch_half_window));
      } else {
        fs.hists.push_back(gradient_histogram_descriptor(img, kp, cfg.histogram));
      }
      fs.keypoints.push_back(kp);
    } catch (const ExtractionError&) {
      // Border-clipped footprint: the keypoint is dropped.
    } catch (const DegenerateInputError&) {
    }
  }
  return fs;
}

FeatureScore feature_score(const FeatureSet& e, const FeatureSet& c, const RansacConfig& cfg) {
  cfg.validate();
  if (e.pipeline != c.pipeline) throw ParameterError("feature sets come from different pipelines");
  FeatureScore out;
  if (e.size() == 0 || c.size() == 0) {
    out.reason = ScoreReason::NoKeypoints;
    return out;
  }

  const auto matches =
      e.pipeline == Pipeline::HarrisSsd
          ? symmetric_nn_match<PatchDescriptor>(e.patches, c.patches, ssd_distance)
          : symmetric_nn_match<HistDescriptor>(e.hists, c.hists, euclidean_distance);
  out.matches = matches.size();
  if (matches.size() < static_cast<std::size_t>(cfg.min_matches)) {
    out.reason = ScoreReason::NoMatches;
    return out;
  }

  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) {
    const auto& ke = e.keypoints[m.idx_e];
    const auto& kc = c.keypoints[m.idx_c];
    pairs.push_back({{ke.x, ke.y}, {kc.x, kc.y}});
  }
  const auto fit = fit_rigid_ransac(pairs, cfg);
  if (!fit.consensus) {
    out.reason = ScoreReason::NoConsensus;
    return out;
  }
  out.score = fit.inliers.size();
  out.transform = fit.transform;
  return out;
}

FeatureScore feature_score(const Image& e, const Image& c, Pipeline pipeline,
                           const RansacConfig& ransac, const FeatureConfig& features) {
  return feature_score(extract_features(e, pipeline, features), extract_features(c, pipeline, features),
                       ransac);
}

}  // namespace fpm
