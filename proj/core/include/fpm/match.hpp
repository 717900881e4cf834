#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fpm/descript.hpp"
#include "fpm/detect.hpp"
#include "fpm/image.hpp"

namespace fpm {

struct MatchPair {
  std::size_t idx_e = 0;
  std::size_t idx_c = 0;
  double distance = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

/// Dense rows x cols matrix of descriptor distances, E along rows.
class DistanceMatrix {
 public:
  DistanceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), d_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return d_[i * cols_ + k]; }
  double& operator()(std::size_t i, std::size_t k) noexcept { return d_[i * cols_ + k]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> d_;
};

/// Pairs (i, k) where k is row i's minimum and i is column k's minimum.
/// Ties go to the lowest index; output sorted by distance, then indices.
std::vector<MatchPair> symmetric_nn_match(const DistanceMatrix& d);

template <typename Descriptor, typename Metric>
DistanceMatrix distance_matrix(std::span<const Descriptor> e, std::span<const Descriptor> c,
                               Metric metric) {
  DistanceMatrix d(e.size(), c.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t k = 0; k < c.size(); ++k) d(i, k) = metric(e[i], c[k]);
  }
  return d;
}

template <typename Descriptor, typename Metric>
std::vector<MatchPair> symmetric_nn_match(std::span<const Descriptor> e,
                                          std::span<const Descriptor> c, Metric metric) {
  return symmetric_nn_match(distance_matrix(e, c, metric));
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct PointPair {
  Point2 e;
  Point2 c;
};

/// p_e = R(theta) (p_c + t).
struct RigidTransform {
  double theta = 0.0;
  Point2 t;

  Point2 apply(Point2 p) const noexcept;
  /// || p_e - R(theta)(p_c + t) ||
  double residual(const PointPair& p) const noexcept;
};

/// Closed-form least-squares rigid alignment (2-D Procrustes, no scale).
/// Requires at least two pairs.
RigidTransform fit_rigid_least_squares(std::span<const PointPair> pairs);

struct RansacConfig {
  double epsilon = 3.0;
  int iterations = 500;
  int min_matches = 4;
  double max_abs_theta = 0.5235987755982988;  // 30 degrees
  std::uint64_t rng_seed = 0x5eed;

  void validate() const;
};

struct RansacResult {
  RigidTransform transform;
  std::vector<std::size_t> inliers;  ///< ascending indices into the input pairs
  bool consensus = false;
};

/// Two-point minimal-sample RANSAC under the strict residual < epsilon
/// criterion. Iteration i draws from a generator seeded by (rng_seed, i).
/// Throws InsufficientDataError for fewer than min_matches pairs. Without
/// any candidate reaching min_matches inliers, `consensus` is false and
/// the inlier set empty.
RansacResult fit_rigid_ransac(std::span<const PointPair> pairs, const RansacConfig& cfg = {});

enum class Pipeline { HarrisSsd, DogHist };

std::string_view to_string(Pipeline p) noexcept;

struct FeatureConfig {
  HarrisConfig harris;
  DogConfig dog;
  int patch_half_window = 7;
  HistogramConfig histogram;
};

/// Keypoints that survived descriptor extraction, with their descriptors.
struct FeatureSet {
  Pipeline pipeline = Pipeline::HarrisSsd;
  std::vector<Keypoint> keypoints;
  std::vector<PatchDescriptor> patches;  ///< HarrisSsd
  std::vector<HistDescriptor> hists;     ///< DogHist
  std::size_t detected = 0;              ///< before border/degenerate drops

  std::size_t size() const noexcept { return keypoints.size(); }
};

FeatureSet extract_features(const Image& img, Pipeline pipeline, const FeatureConfig& cfg = {});

enum class ScoreReason { Ok, NoKeypoints, NoMatches, NoConsensus };

std::string_view to_string(ScoreReason r) noexcept;

struct FeatureScore {
  std::size_t score = 0;  ///< s_desc, the RANSAC inlier count
  ScoreReason reason = ScoreReason::Ok;
  std::size_t matches = 0;
  RigidTransform transform;
};

/// s_desc between two extracted feature sets of the same pipeline.
FeatureScore feature_score(const FeatureSet& e, const FeatureSet& c, const RansacConfig& cfg = {});

/// Detect, describe, match and filter in one call.
FeatureScore feature_score(const Image& e, const Image& c, Pipeline pipeline,
                           const RansacConfig& ransac = {}, const FeatureConfig& features = {});

}  // namespace fpm
