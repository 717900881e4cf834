#include "fpm/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "fpm/image_io.hpp"
#include "fpm/random.hpp"

namespace fpm {

namespace {

LabeledImage labeled(const DatasetEntry& e, Image img) {
  return {e.finger_label() + "/" + e.acquisition, e.finger_label(), std::move(img)};
}

// ---------------------------------------------------------------------------

struct ZnccPrepared final : Prepared {
  Image image;
  std::optional<ZnccReference> reference;
  std::optional<ZnccCandidate> candidate;
};

class ZnccScorer final : public Scorer {
 public:
  explicit ZnccScorer(const ZnccConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  Method method() const noexcept override { return Method::Zncc; }
  bool cache_candidates() const noexcept override { return false; }

  std::shared_ptr<const Prepared> prepare(const Image& img, Role role) const override {
    auto p = std::make_shared<ZnccPrepared>();
    p->image = img;
    // Pads assume equally sized partners, the normal case for sensor patches.
    const int pw = zncc_pad_extent(img.width(), img.width());
    const int ph = zncc_pad_extent(img.height(), img.height());
    if (role == Role::Reference) {
      p->reference.emplace(img, pw, ph);
    } else {
      p->candidate.emplace(img, cfg_, pw, ph);
    }
    return p;
  }

  PairScore score(const Prepared& reference, const Prepared& candidate) const override {
    const auto& e = dynamic_cast<const ZnccPrepared&>(reference);
    const auto& c = dynamic_cast<const ZnccPrepared&>(candidate);
    ZnccResult r;
    if (e.reference && c.candidate && e.image.width() == c.image.width() &&
        e.image.height() == c.image.height()) {
      r = zncc_score(*e.reference, *c.candidate, cfg_);
    } else {
      r = zncc_score(e.image, c.image, cfg_);
    }
    return {r.score, r.degenerate ? "degenerate" : "ok"};
  }

 private:
  ZnccConfig cfg_;
};

struct FeaturePrepared final : Prepared {
  FeatureSet features;
};

class FeatureScorer final : public Scorer {
 public:
  FeatureScorer(Method method, const ScorerConfig& cfg) : method_(method), cfg_(cfg) {
    cfg_.ransac.validate();
  }

  Method method() const noexcept override { return method_; }

  std::shared_ptr<const Prepared> prepare(const Image& img, Role) const override {
    auto p = std::make_shared<FeaturePrepared>();
    p->features = extract_features(img, pipeline(), cfg_.features);
    return p;
  }

  PairScore score(const Prepared& reference, const Prepared& candidate) const override {
    const auto& e = dynamic_cast<const FeaturePrepared&>(reference);
    const auto& c = dynamic_cast<const FeaturePrepared&>(candidate);
    const auto r = feature_score(e.features, c.features, cfg_.ransac);
    return {static_cast<double>(r.score), std::string(to_string(r.reason))};
  }

 private:
  Pipeline pipeline() const noexcept {
    return method_ == Method::HarrisSsd ? Pipeline::HarrisSsd : Pipeline::DogHist;
  }

  Method method_;
  ScorerConfig cfg_;
};

double aggregate(std::vector<double>& values, Aggregator a) {
  if (values.empty()) return 0.0;
  switch (a) {
    case Aggregator::Max:
      return *std::max_element(values.begin(), values.end());
    case Aggregator::Mean:
      return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    case Aggregator::Median: {
      std::sort(values.begin(), values.end());
      const std::size_t m = values.size() / 2;
      return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
    }
  }
  return 0.0;
}

}  // namespace

PatchBuild build_patch_set(const PatchSet& acquisitions, const PatchOptions& opts) {
  PatchBuild out;
  for (const auto& a : acquisitions) {
    try {
      const auto seg = segment_foreground(a.image, opts.polarity);
      out.patches.push_back({a.id, a.finger, extract_center_patch(a.image, seg.foreground, opts.size).patch});
    } catch (const std::exception& ex) {
      out.failures.push_back({a.id, ex.what()});
    }
  }
  return out;
}

PatchBuild build_patch_set(const DatasetIndex& index, const PatchOptions& opts) {
  PatchBuild out;
  for (const auto& e : index.entries) {
    try {
      PatchSet one;
      one.push_back(labeled(e, load_image(e.path)));
      auto built = build_patch_set(one, opts);
      if (!built.failures.empty()) {
        out.failures.push_back(built.failures.front());
      } else {
        out.patches.push_back(std::move(built.patches.front()));
      }
    } catch (const std::exception& ex) {
      out.failures.push_back({e.finger_label() + "/" + e.acquisition, ex.what()});
    }
  }
  return out;
}

PatchSet load_patch_set(const DatasetIndex& index) {
  PatchSet out;
  out.reserve(index.entries.size());
  for (const auto& e : index.entries) out.push_back(labeled(e, load_image(e.path)));
  return out;
}

std::vector<std::filesystem::path> write_image_tree(const PatchSet& images, const std::filesystem::path& root,
                                                    const std::string& extension) {
  std::vector<std::filesystem::path> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    auto path = root / (img.id + extension);
    std::filesystem::create_directories(path.parent_path());
    save_image(img.image, path);
    out.push_back(std::move(path));
  }
  return out;
}

Split split_enrollment(const PatchSet& patches, std::size_t n_enroll, std::uint64_t rng_seed) {
  if (n_enroll == 0) throw ParameterError("n_enroll must be at least 1");
  std::map<std::string, std::vector<std::size_t>> by_finger;
  for (std::size_t i = 0; i < patches.size(); ++i) by_finger[patches[i].finger].push_back(i);
  if (by_finger.empty()) throw ParameterError("cannot split an empty patch set");
  for (const auto& [finger, idx] : by_finger) {
    if (idx.size() <= n_enroll) {
      throw ParameterError("finger " + finger + " has " + std::to_string(idx.size()) +
                           " acquisitions; n_enroll must leave at least one candidate");
    }
  }

  Split split;
  split.n_enroll = n_enroll;
  split.rng_seed = rng_seed;
  CounterRng rng(rng_seed);
  std::vector<std::uint8_t> is_enrolled(patches.size(), 0);
  for (auto& [finger, idx] : by_finger) {
    split.fingers.push_back(finger);
    // Partial Fisher-Yates: the first n_enroll slots become the enrollment.
    for (std::size_t k = 0; k < n_enroll; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
      std::swap(idx[k], idx[j]);
    }
    std::vector<std::size_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_enroll));
    std::sort(chosen.begin(), chosen.end());
    for (auto i : chosen) is_enrolled[i] = 1;
    split.enrolled.emplace(finger, std::move(chosen));
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (!is_enrolled[i]) split.candidates.push_back(i);
  }
  return split;
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Zncc:
      return "zncc";
    case Method::HarrisSsd:
      return "harris-ssd";
    case Method::DogHist:
      return "dog-hist";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  if (name == "zncc") return Method::Zncc;
  if (name == "harris-ssd") return Method::HarrisSsd;
  if (name == "dog-hist" || name == "sift") return Method::DogHist;
  return std::nullopt;
}

std::string_view to_string(Aggregator a) noexcept {
  switch (a) {
    case Aggregator::Max:
      return "max";
    case Aggregator::Mean:
      return "mean";
    case Aggregator::Median:
      return "median";
  }
  return "unknown";
}

std::optional<Aggregator> parse_aggregator(std::string_view name) noexcept {
  if (name == "max") return Aggregator::Max;
  if (name == "mean") return Aggregator::Mean;
  if (name == "median") return Aggregator::Median;
  return std::nullopt;
}

std::unique_ptr<Scorer> make_scorer(Method method, const ScorerConfig& cfg) {
  if (method == Method::Zncc) return std::make_unique<ZnccScorer>(cfg.zncc);
  return std::make_unique<FeatureScorer>(method, cfg);
}

struct PreparedCache::Slot {
  std::once_flag once[2];
  std::shared_ptr<const Prepared> value[2];
};

PreparedCache::PreparedCache(const PatchSet& patches, const Scorer& scorer)
    : patches_(patches), scorer_(scorer), slots_(std::make_unique<Slot[]>(patches.size())) {}

PreparedCache::~PreparedCache() = default;

std::shared_ptr<const Prepared> PreparedCache::get(std::size_t patch, Role role) const {
  if (patch >= patches_.size()) throw ParameterError("patch index out of range");
  if (role == Role::Candidate && !scorer_.cache_candidates()) {
    return scorer_.prepare(patches_[patch].image, role);
  }
  auto& slot = slots_[patch];
  const int r = role == Role::Reference ? 0 : 1;
  std::call_once(slot.once[r], [&] { slot.value[r] = scorer_.prepare(patches_[patch].image, role); });
  return slot.value[r];
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

ScoreTable score_table(const PatchSet& patches, const Split& split, const Scorer& scorer,
                       const TableOptions& opts, const PreparedCache* cache) {
  if (split.candidates.empty() || split.fingers.empty()) throw ParameterError("split is empty");
  std::optional<PreparedCache> local;
  if (!cache) cache = &local.emplace(patches, scorer);
  if (&cache->scorer() != &scorer) throw ParameterError("prepared cache belongs to another scorer");

  ScoreTable table;
  table.method = scorer.method();
  table.fingers = split.fingers;
  for (auto i : split.candidates) {
    table.candidate_ids.push_back(patches.at(i).id);
    table.labels.push_back(patches.at(i).finger);
  }
  const std::size_t cols = table.fingers.size();
  table.scores.assign(table.candidate_ids.size() * cols, 0.0);

  std::atomic<std::size_t> failures{0};
  std::mutex log_mutex;
  parallel_for(split.candidates.size(), opts.threads, [&](std::size_t row) {
    const std::size_t cand_idx = split.candidates[row];
    const auto cand = cache->get(cand_idx, Role::Candidate);
    std::vector<double> pair_scores;
    for (std::size_t col = 0; col < cols; ++col) {
      pair_scores.clear();
      for (auto ref_idx : split.enrolled.at(table.fingers[col])) {
        double value = 0.0;
        try {
          value = scorer.score(*cache->get(ref_idx, Role::Reference), *cand).value;
        } catch (const std::exception& ex) {
          ++failures;
          if (opts.log) {
            std::lock_guard lock(log_mutex);
            *opts.log << "score failure " << patches[cand_idx].id << " vs " << patches[ref_idx].id
                      << ": " << ex.what() << '\n';
          }
        }
        pair_scores.push_back(value);
      }
      table.scores[row * cols + col] = aggregate(pair_scores, opts.aggregator);
    }
  });
  table.failures = failures;
  return table;
}

}  // namespace fpm
