#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fpm/dataset.hpp"
#include "fpm/image.hpp"
#include "fpm/match.hpp"
#include "fpm/segmentation.hpp"
#include "fpm/zncc.hpp"

namespace fpm {

/// A sensor-sized patch with its identity.
struct LabeledImage {
  std::string id;      ///< "<person>/<finger>/<acquisition>"
  std::string finger;  ///< "<person>/<finger>"
  Image image;
};

using PatchSet = std::vector<LabeledImage>;

struct PatchOptions {
  int size = 70;
  Polarity polarity = Polarity::DarkRidges;
  bool skip_bad = false;
};

struct PatchFailure {
  std::string id;
  std::string reason;
};

struct PatchBuild {
  PatchSet patches;
  std::vector<PatchFailure> failures;
};

/// Segments each acquisition and crops the centered sensor patch. Per-file
/// failures are collected rather than thrown; `skip_bad` is left for the
/// caller to act on.
PatchBuild build_patch_set(const DatasetIndex& index, const PatchOptions& opts = {});
PatchBuild build_patch_set(const PatchSet& acquisitions, const PatchOptions& opts = {});

/// Loads an already extracted patch tree as-is.
PatchSet load_patch_set(const DatasetIndex& index);

/// Writes each image to root/<id><extension>, creating directories. Returns
/// the written paths in input order.
std::vector<std::filesystem::path> write_image_tree(const PatchSet& images, const std::filesystem::path& root,
                                                    const std::string& extension = ".png");

/// Enrollment/candidate partition; indices refer to a PatchSet.
struct Split {
  std::size_t n_enroll = 0;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> fingers;                            ///< sorted column labels
  std::map<std::string, std::vector<std::size_t>> enrolled;  ///< finger -> patches
  std::vector<std::size_t> candidates;                       ///< ascending
};

/// Per finger, draws n_enroll acquisitions uniformly without replacement;
/// everything else becomes a candidate. Throws ParameterError when n_enroll
/// is 0 or not below the smallest per-finger count.
Split split_enrollment(const PatchSet& patches, std::size_t n_enroll, std::uint64_t rng_seed);

enum class Method { Zncc, HarrisSsd, DogHist };

std::string_view to_string(Method m) noexcept;
/// Accepts canonical names plus the "sift" alias for dog-hist.
std::optional<Method> parse_method(std::string_view name) noexcept;

struct ScorerConfig {
  ZnccConfig zncc;
  FeatureConfig features;
  RansacConfig ransac;
};

struct PairScore {
  double value = 0.0;
  std::string reason = "ok";
};

/// Method-specific state computed once per image.
struct Prepared {
  virtual ~Prepared() = default;
};

enum class Role { Reference, Candidate };

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual Method method() const noexcept = 0;
  virtual std::shared_ptr<const Prepared> prepare(const Image& img, Role role) const = 0;
  virtual PairScore score(const Prepared& reference, const Prepared& candidate) const = 0;
  /// Whether prepared candidates are cheap enough to keep for a whole run.
  virtual bool cache_candidates() const noexcept { return true; }

  PairScore score(const Image& reference, const Image& candidate) const {
    return score(*prepare(reference, Role::Reference), *prepare(candidate, Role::Candidate));
  }
};

std::unique_ptr<Scorer> make_scorer(Method method, const ScorerConfig& cfg = {});

/// Lazily prepared per-patch state shared across several score tables.
class PreparedCache {
 public:
  PreparedCache(const PatchSet& patches, const Scorer& scorer);
  ~PreparedCache();

  std::shared_ptr<const Prepared> get(std::size_t patch, Role role) const;
  const Scorer& scorer() const noexcept { return scorer_; }

 private:
  struct Slot;
  const PatchSet& patches_;
  const Scorer& scorer_;
  std::unique_ptr<Slot[]> slots_;
};

enum class Aggregator { Max, Mean, Median };

std::string_view to_string(Aggregator a) noexcept;
std::optional<Aggregator> parse_aggregator(std::string_view name) noexcept;

/// candidates x fingers similarity scores of one method.
struct ScoreTable {
  Method method = Method::Zncc;
  std::vector<std::string> candidate_ids;
  std::vector<std::string> labels;   ///< true finger per row
  std::vector<std::string> fingers;  ///< column labels
  std::vector<double> scores;        ///< row-major
  std::size_t failures = 0;          ///< pairs that fell back to the zero element

  std::size_t rows() const noexcept { return candidate_ids.size(); }
  std::size_t cols() const noexcept { return fingers.size(); }
  double at(std::size_t r, std::size_t c) const { return scores.at(r * cols() + c); }
};

struct TableOptions {
  Aggregator aggregator = Aggregator::Max;
  unsigned threads = 0;           ///< 0 = hardware concurrency
  std::ostream* log = nullptr;    ///< pair failures are reported here
};

/// Exhaustive candidate x enrolled-image comparison; each cell aggregates the
/// candidate's scores against every enrolled image of that finger.
ScoreTable score_table(const PatchSet& patches, const Split& split, const Scorer& scorer,
                       const TableOptions& opts = {}, const PreparedCache* cache = nullptr);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace fpm
