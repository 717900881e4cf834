#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpm/dataset.hpp"
#include "fpm/image_io.hpp"
#include "fpm/protocol.hpp"
#include "fpm/roc.hpp"
#include "fpm/segmentation.hpp"
#include "fpm/synthetic.hpp"
#include "fpm/table_io.hpp"
#include "oracles.hpp"

using namespace fpm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "fpm_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_tree(const fs::path& root, int persons, int fingers, int acquisitions, int size = 8) {
  for (int p = 0; p < persons; ++p) {
    for (int f = 0; f < fingers; ++f) {
      const auto dir = root / ("p" + std::to_string(p)) / ("f" + std::to_string(f));
      fs::create_directories(dir);
      for (int a = 0; a < acquisitions; ++a) {
        save_image(oracle::random_image(size, size, static_cast<std::uint64_t>(p * 100 + f * 10 + a)),
                   dir / ("a" + std::to_string(a) + ".pgm"));
      }
    }
  }
}

// Images are tagged by their (0, 0) pixel; scores come from a lookup.
struct Tag : Prepared {
  int id = 0;
};

class LookupScorer : public Scorer {
 public:
  explicit LookupScorer(std::function<double(int, int)> f) : f_(std::move(f)) {}
  Method method() const noexcept override { return Method::Zncc; }
  std::shared_ptr<const Prepared> prepare(const Image& img, Role) const override {
    auto t = std::make_shared<Tag>();
    t->id = static_cast<int>(std::lround(img(0, 0)));
    return t;
  }
  PairScore score(const Prepared& r, const Prepared& c) const override {
    const int a = static_cast<const Tag&>(r).id;
    const int b = static_cast<const Tag&>(c).id;
    if (a < 0 || b < 0) throw DegenerateInputError("tagged failure");
    return {f_(a, b), "ok"};
  }

 private:
  std::function<double(int, int)> f_;
};

LabeledImage tagged(const std::string& finger, int acquisition, int tag) {
  return {finger + "/a" + std::to_string(acquisition), finger, Image(2, 2, static_cast<double>(tag))};
}

PatchSet tagged_set(int fingers, int acquisitions) {
  PatchSet s;
  for (int f = 0; f < fingers; ++f) {
    for (int a = 0; a < acquisitions; ++a) s.push_back(tagged("p" + std::to_string(f) + "/f0", a, f * 100 + a));
  }
  return s;
}

ScoreTable hand_table(std::vector<double> genuine, std::vector<double> impostor) {
  // Two fingers; row r is a candidate of finger A, scored against A (genuine) and B (impostor).
  ScoreTable t;
  t.fingers = {"A", "B"};
  for (std::size_t r = 0; r < genuine.size(); ++r) {
    t.candidate_ids.push_back("A/c" + std::to_string(r));
    t.labels.push_back("A");
    t.scores.push_back(genuine[r]);
    t.scores.push_back(impostor[r]);
  }
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_SUITE("evalharness") {

TEST_CASE("empty root gives an empty index; a missing root is an error") {
  const auto dir = scratch_dir("idx_empty");
  const auto idx = index_dataset(dir);
  CHECK(idx.entries.empty());
  CHECK(idx.errors.empty());
  CHECK_THROWS_AS(index_dataset(dir / "nope"), IoError);
}

TEST_CASE("2 persons x 1 finger x 3 acquisitions index to 6 sorted entries") {
  const auto dir = scratch_dir("idx_small");
  write_tree(dir, 2, 1, 3);
  std::ofstream(dir / "p0" / "f0" / "notes.txt") << "ignored";
  const auto idx = index_dataset(dir);
  REQUIRE(idx.entries.size() == 6);
  CHECK(idx.entries.front().person == "p0");
  CHECK(idx.entries.front().acquisition == "a0");
  CHECK(idx.entries.back().finger_label() == "p1/f0");
  CHECK(idx.acquisitions_per_finger() == std::map<std::string, std::size_t>{{"p0/f0", 3}, {"p1/f0", 3}});
  CHECK(std::is_sorted(idx.entries.begin(), idx.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.person, a.finger, a.acquisition) < std::tie(b.person, b.finger, b.acquisition);
  }));
}

TEST_CASE("full-scale layout: 30 persons x 6 fingers x 8 acquisitions = 1440 entries") {
  const auto dir = scratch_dir("idx_full");
  write_tree(dir, 30, 6, 8, 2);
  const auto idx = index_dataset(dir, {.skip_bad = false, .verify_load = false});
  CHECK(idx.entries.size() == 1440);
  CHECK(idx.acquisitions_per_finger().size() == 180);
}

TEST_CASE("unreadable files abort unless skipped") {
  const auto dir = scratch_dir("idx_bad");
  write_tree(dir, 1, 1, 2);
  std::ofstream(dir / "p0" / "f0" / "broken.png") << "garbage";
  CHECK_THROWS_AS(index_dataset(dir), IoError);
  const auto idx = index_dataset(dir, {.skip_bad = true});
  CHECK(idx.entries.size() == 2);
  REQUIRE(idx.errors.size() == 1);
  CHECK(idx.errors[0].path.filename() == "broken.png");
}

TEST_CASE("k-means selects the dark half of a bimodal image") {
  Image img(20, 10, 0.8);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) img(x, y) = 0.2;
  }
  const auto s = segment_foreground(img);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) CHECK(s.foreground(x, y) == (x < 10 ? 1 : 0));
  }
  CHECK(s.dark_centroid == doctest::Approx(0.2));
  CHECK(s.bright_centroid == doctest::Approx(0.8));
  const auto bright = segment_foreground(img, Polarity::BrightRidges);
  CHECK(bright.foreground(15, 5) == 1);
  CHECK(bright.foreground(5, 5) == 0);
}

TEST_CASE("k-means on a constant image is a segmentation error") {
  CHECK_THROWS_AS(segment_foreground(Image(5, 5, 0.4)), SegmentationError);
}

TEST_CASE("k-means two-point fixed point") {
  Image img(2, 1);
  img(0, 0) = 0.1;
  img(1, 0) = 0.9;
  const auto s = segment_foreground(img);
  CHECK(s.dark_centroid == doctest::Approx(0.1));
  CHECK(s.bright_centroid == doctest::Approx(0.9));
}

TEST_CASE("centered square gives a patch centered on it") {
  Image img(152, 200, 0.9);
  Mask mask(152, 200, 0);
  for (int y = 80; y < 120; ++y) {
    for (int x = 50; x < 90; ++x) {
      img(x, y) = 0.1;
      mask(x, y) = 1;
    }
  }
  const auto p = extract_center_patch(img, mask);
  CHECK(p.patch.width() == 70);
  CHECK(p.patch.height() == 70);
  CHECK(p.box.center_x() == 69.5);
  CHECK(p.box.center_y() == 99.5);
  CHECK(p.x0 + 34.5 == p.box.center_x());
  CHECK(p.y0 + 34.5 == p.box.center_y());
  CHECK(p.patch(0, 0) == img(p.x0, p.y0));
}

TEST_CASE("window clamps to the image edge") {
  const Image img(152, 200, 0.5);
  Mask mask(152, 200, 0);
  for (int y = 90; y < 110; ++y) {
    for (int x = 5; x < 16; ++x) mask(x, y) = 1;
  }
  const auto p = extract_center_patch(img, mask);
  CHECK(p.box.center_x() == 10.0);
  CHECK(p.x0 == 0);
}

TEST_CASE("center patch errors") {
  Mask mask(60, 60, 1);
  CHECK_THROWS_AS(extract_center_patch(Image(60, 60, 0.5), mask), ExtractionError);
  CHECK_THROWS_AS(extract_center_patch(Image(100, 100, 0.5), Mask(100, 100, 0)), ExtractionError);
}

TEST_CASE("70 px at 350 dpi is a 5.08 mm sensor side") {
  CHECK(patch_side_mm(70, 350.0) == doctest::Approx(5.08).epsilon(1e-12));
}

TEST_CASE("split: 8 acquisitions with n = 5 give 5 enrolled and 3 candidates per finger") {
  const auto set = tagged_set(4, 8);
  const auto split = split_enrollment(set, 5, 42);
  REQUIRE(split.fingers.size() == 4);
  CHECK(split.candidates.size() == 12);
  CHECK(std::is_sorted(split.candidates.begin(), split.candidates.end()));
  for (const auto& finger : split.fingers) {
    const auto& e = split.enrolled.at(finger);
    CHECK(e.size() == 5);
    for (auto i : e) {
      CHECK(set[i].finger == finger);
      CHECK(std::find(split.candidates.begin(), split.candidates.end(), i) == split.candidates.end());
    }
    const auto n_cand = std::count_if(split.candidates.begin(), split.candidates.end(),
                                      [&](std::size_t i) { return set[i].finger == finger; });
    CHECK(n_cand == 3);
  }
}

TEST_CASE("split errors and determinism") {
  const auto set = tagged_set(3, 8);
  CHECK_THROWS_AS(split_enrollment(set, 8, 1), ParameterError);
  CHECK_THROWS_AS(split_enrollment(set, 0, 1), ParameterError);
  const auto a = split_enrollment(set, 3, 9);
  const auto b = split_enrollment(set, 3, 9);
  CHECK(a.enrolled == b.enrolled);
  CHECK(a.candidates == b.candidates);
  bool differs = false;
  for (std::uint64_t seed = 10; seed < 20 && !differs; ++seed) differs = split_enrollment(set, 3, seed).enrolled != a.enrolled;
  CHECK(differs);
}

TEST_CASE("split draws every acquisition with equal frequency") {
  const auto set = tagged_set(1, 8);
  std::vector<int> hits(8, 0);
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    const auto split = split_enrollment(set, 3, static_cast<std::uint64_t>(s));
    for (auto i : split.enrolled.begin()->second) ++hits[i];
  }
  for (int h : hits) CHECK(std::abs(h / static_cast<double>(trials) - 3.0 / 8.0) < 0.03);
}

TEST_CASE("score table cell is the max over enrolled images") {
  // Finger 0 has three enrolled images scoring {2, 7, 5} against the candidate.
  PatchSet set{tagged("p0/f0", 0, 1), tagged("p0/f0", 1, 2), tagged("p0/f0", 2, 3), tagged("p0/f0", 3, 4),
               tagged("p1/f0", 0, 11), tagged("p1/f0", 1, 12), tagged("p1/f0", 2, 13), tagged("p1/f0", 3, 14)};
  Split split;
  split.n_enroll = 3;
  split.fingers = {"p0/f0", "p1/f0"};
  split.enrolled = {{"p0/f0", {0, 1, 2}}, {"p1/f0", {4, 5, 6}}};
  split.candidates = {3, 7};
  const LookupScorer scorer([](int ref, int cand) {
    if (cand == 4) return std::vector<double>{2, 7, 5, 0, 1, 1, 1}[static_cast<std::size_t>((ref - 1) % 10)];
    return 0.5 * ref;
  });
  const auto t = score_table(set, split, scorer, {.aggregator = Aggregator::Max, .threads = 2});
  REQUIRE(t.rows() == 2);
  REQUIRE(t.cols() == 2);
  CHECK(t.at(0, 0) == 7.0);
  CHECK(t.at(0, 1) == 7.0);  // refs 11, 12, 13 also map to {2, 7, 5}
  CHECK(t.at(1, 1) == 6.5);
  CHECK(t.labels == std::vector<std::string>{"p0/f0", "p1/f0"});
  CHECK(t.candidate_ids == std::vector<std::string>{"p0/f0/a3", "p1/f0/a3"});
  CHECK(score_table(set, split, scorer, {.aggregator = Aggregator::Mean}).at(0, 0) == doctest::Approx(14.0 / 3));
  CHECK(score_table(set, split, scorer, {.aggregator = Aggregator::Median}).at(0, 0) == 5.0);
}

TEST_CASE("one enrolled image: the cell is the pairwise score") {
  const auto set = tagged_set(3, 4);
  const auto split = split_enrollment(set, 1, 5);
  const LookupScorer scorer([](int r, int c) { return std::sin(r * 0.1 + c * 0.37); });
  const auto t = score_table(set, split, scorer);
  REQUIRE(t.rows() == 9);
  REQUIRE(t.scores.size() == 27);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const int c = static_cast<int>(set[split.candidates[r]].image(0, 0));
    for (std::size_t f = 0; f < t.cols(); ++f) {
      const int e = static_cast<int>(set[split.enrolled.at(t.fingers[f])[0]].image(0, 0));
      CHECK(t.at(r, f) == std::sin(e * 0.1 + c * 0.37));
    }
  }
}

TEST_CASE("failing pairs fall back to 0 and are counted") {
  auto set = tagged_set(2, 3);
  set[2].image = Image(2, 2, -1.0);  // candidate tag -1 throws
  Split split;
  split.n_enroll = 1;
  split.fingers = {"p0/f0", "p1/f0"};
  split.enrolled = {{"p0/f0", {0}}, {"p1/f0", {3}}};
  split.candidates = {1, 2, 4, 5};
  std::ostringstream log;
  const LookupScorer scorer([](int, int) { return 3.0; });
  const auto t = score_table(set, split, scorer, {.log = &log});
  CHECK(t.failures == 2);
  CHECK(t.at(1, 0) == 0.0);
  CHECK(t.at(1, 1) == 0.0);
  CHECK(t.at(0, 0) == 3.0);
  CHECK_FALSE(log.str().empty());
}

TEST_CASE("score tables are permutation-equivariant in the candidates") {
  const auto set = generate_synthetic_dataset({.persons = 3, .acquisitions = 4, .seed = 3});
  auto built = build_patch_set(set);
  REQUIRE(built.failures.empty());
  const auto& patches = built.patches;
  const auto split = split_enrollment(patches, 2, 4);
  const auto scorer = make_scorer(Method::HarrisSsd);
  const auto t = score_table(patches, split, *scorer);
  auto permuted = split;
  std::reverse(permuted.candidates.begin(), permuted.candidates.end());
  const auto u = score_table(patches, permuted, *scorer);
  REQUIRE(u.rows() == t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const std::size_t pr = t.rows() - 1 - r;
    CHECK(u.candidate_ids[pr] == t.candidate_ids[r]);
    CHECK(u.labels[pr] == t.labels[r]);
    for (std::size_t f = 0; f < t.cols(); ++f) CHECK(u.at(pr, f) == t.at(r, f));
  }
}

TEST_CASE("ROC of a perfectly separated table reaches FAR = FRR = 0") {
  const auto roc = compute_roc(hand_table({1, 1, 1}, {0, 0, 0}));
  CHECK(std::any_of(roc.begin(), roc.end(), [](const RocPoint& p) { return p.far == 0.0 && p.frr == 0.0; }));
}

TEST_CASE("hand ROC at tau = 0.45 is FAR 0.5, FRR 0.5") {
  const auto roc = compute_roc(hand_table({0.9, 0.4}, {0.5, 0.1}), std::vector<double>{0.45});
  REQUIRE(roc.size() == 1);
  CHECK(roc[0].far == 0.5);
  CHECK(roc[0].frr == 0.5);
  CHECK(roc[0].genuine_count == 2);
  CHECK(roc[0].impostor_count == 2);
  std::ostringstream csv;
  write_roc_csv(csv, roc);
  CHECK(csv.str() == "threshold,far,frr,genuine_count,impostor_count\n0.45,0.5,0.5,2,2\n");
}

TEST_CASE("ROC sentinels and errors") {
  const auto t = hand_table({0.9, 0.4}, {0.5, 0.1});
  const auto roc = compute_roc(t);
  CHECK(roc.front().threshold == -INFINITY);
  CHECK(roc.front().far == 1.0);
  CHECK(roc.front().frr == 0.0);
  CHECK(roc.back().threshold == INFINITY);
  CHECK(roc.back().far == 0.0);
  CHECK(roc.back().frr == 1.0);
  CHECK(roc.size() == 6);
  CHECK_THROWS_AS(compute_roc(ScoreSplit{{0.1}, {}}), ParameterError);
  CHECK_THROWS_AS(compute_roc(ScoreSplit{{}, {0.1}}), ParameterError);
  CHECK_THROWS_AS(compute_roc(t, std::vector<double>{std::nan("")}), ParameterError);
  CHECK(frr_at_far(roc, 0.0) == 0.5);
  CHECK(frr_at_far(roc, 0.5) == 0.0);
}

TEST_CASE("ROC is monotone and bounded") {
  CounterRng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> g;
    std::vector<double> im;
    for (int i = 0; i < 30; ++i) {
      g.push_back(std::round(rng.uniform(0.0, 10.0)) / 10.0);
      im.push_back(std::round(rng.uniform(-2.0, 6.0)) / 10.0);
    }
    const auto roc = compute_roc(ScoreSplit{g, im});
    for (std::size_t i = 0; i < roc.size(); ++i) {
      CHECK(roc[i].far >= 0.0);
      CHECK(roc[i].far <= 1.0);
      CHECK(roc[i].frr >= 0.0);
      CHECK(roc[i].frr <= 1.0);
      if (i > 0) {
        CHECK(roc[i].threshold > roc[i - 1].threshold);
        CHECK(roc[i].far <= roc[i - 1].far);
        CHECK(roc[i].frr >= roc[i - 1].frr);
      }
    }
  }
}

TEST_CASE("genuine/impostor split of a table") {
  const auto s = genuine_impostor(hand_table({0.9, 0.4}, {0.5, 0.1}));
  CHECK(s.genuine == std::vector<double>{0.9, 0.4});
  CHECK(s.impostor == std::vector<double>{0.5, 0.1});
}

TEST_CASE("score CSV round-trips at 6 decimals") {
  auto t = hand_table({0.9, 1.0 / 3}, {-0.25, 12.0});
  std::ostringstream out;
  write_score_csv(out, t);
  CHECK(out.str() == "candidate_id,true_finger,A,B\nA/c0,A,0.900000,-0.250000\nA/c1,A,0.333333,12.000000\n");
  std::istringstream in(out.str());
  const auto back = read_score_csv(in);
  CHECK(back.fingers == t.fingers);
  CHECK(back.labels == t.labels);
  CHECK(back.candidate_ids == t.candidate_ids);
  for (std::size_t i = 0; i < t.scores.size(); ++i) CHECK(std::abs(back.scores[i] - t.scores[i]) <= 5e-7);
}

TEST_CASE("score CSV parse errors name the line") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_score_csv(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("id,true_finger,A\n") == 1);
  CHECK(line_of("candidate_id,true_finger,A\nx,A,0.5\ny,A\n") == 3);
  CHECK(line_of("candidate_id,true_finger,A\nx,A,abc\n") == 2);
  CHECK(line_of("candidate_id,true_finger,A\nx,A,nan\n") == 2);
  CHECK(line_of("candidate_id,true_finger,A\n,A,0.5\n") == 2);
  CHECK(line_of("candidate_id,true_finger,A\n") == 1);
}

TEST_CASE("synthetic finger: same seed, same image; no minutiae on request") {
  const auto a = generate_synthetic_finger(5, 64, 6.5, 4);
  const auto b = generate_synthetic_finger(5, 64, 6.5, 4);
  CHECK(a.image == b.image);
  CHECK(a.minutiae.size() == 4);
  const auto c = generate_synthetic_finger(6, 64, 6.5, 4);
  CHECK_FALSE(a.image == c.image);
  const auto plain = generate_synthetic_finger(5, 64, 6.5, 0);
  CHECK(plain.minutiae.empty());
  for (double v : plain.image.data()) CHECK((v >= 0.0 && v <= 1.0));
  CHECK_THROWS_AS(generate_synthetic_finger(5, 16, 6.5, 0), ParameterError);
  CHECK_THROWS_AS(generate_synthetic_finger(5, 64, 3.0, 0), ParameterError);
}

// Thresholds frozen after the first calibration run (genuine median 0.90,
// minimum 0.73; impostor median 0.42 from the max over every angle and offset).
TEST_CASE("synthetic acquisitions: genuine ZNCC >= 0.5, impostor median below that") {
  std::vector<double> genuine;
  std::vector<double> impostor;
  const AcquisitionOptions opts;
  auto patch = [](const Image& img) {
    return extract_center_patch(img, segment_foreground(img).foreground).patch;
  };
  for (std::uint64_t t = 0; t < 20; ++t) {
    const SyntheticFinger f(7000 + t, 6.5, 6);
    const SyntheticFinger g(8000 + t, 6.5, 6);
    const auto e = patch(acquire(f, opts, 2 * t).image);
    genuine.push_back(zncc_score(e, patch(acquire(f, opts, 2 * t + 1).image)).score);
    impostor.push_back(zncc_score(e, patch(acquire(g, opts, 2 * t + 1).image)).score);
  }
  MESSAGE("genuine median " << median(genuine) << ", impostor median " << median(impostor));
  CHECK(*std::min_element(genuine.begin(), genuine.end()) >= 0.5);
  CHECK(median(impostor) <= 0.5);
  CHECK(median(genuine) - median(impostor) >= 0.3);
}

TEST_CASE("synthetic dataset layout and determinism") {
  const SyntheticDatasetConfig cfg{.persons = 3, .fingers_per_person = 2, .acquisitions = 4, .seed = 9};
  const auto a = generate_synthetic_dataset(cfg);
  REQUIRE(a.size() == 24);
  CHECK(a[0].id == "s000/f0/a0");
  CHECK(a[0].finger == "s000/f0");
  CHECK(a[0].image.width() == 152);
  CHECK(a[0].image.height() == 200);
  const auto b = generate_synthetic_dataset(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].image == b[i].image);
}

TEST_CASE("patch build collects per-file failures") {
  PatchSet set{{"x/f/a0", "x/f", Image(40, 40, 0.5)}, {"x/f/a1", "x/f", generate_synthetic_finger(1, 100, 6.5, 2).image},
               {"x/f/a2", "x/f", Image(100, 100, 0.5)}};
  const auto built = build_patch_set(set);
  CHECK(built.patches.size() == 1);
  REQUIRE(built.failures.size() == 2);
  CHECK(built.failures[0].id == "x/f/a0");
  CHECK(built.patches[0].image.width() == 70);
}

}  // TEST_SUITE
