#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "fpbench/commands.hpp"
#include "fpbench/run_config.hpp"
#include "fpm/image_io.hpp"
#include "fpm/table_io.hpp"
#include "oracles.hpp"

using namespace fpbench;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "fpm_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fpbench");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Small synthetic run: 3 fingers x 3 acquisitions, one enrolled.
fs::path small_config(const fs::path& dir) {
  RunConfig c;
  c.synthetic.persons = 3;
  c.synthetic.acquisitions = 3;
  c.n_enroll = 1;
  const auto path = dir / "small.json";
  std::ofstream(path) << dump(c);
  return path;
}

void write_acquisitions(const fs::path& root, int persons, int acquisitions) {
  fpm::SyntheticDatasetConfig cfg;
  cfg.persons = persons;
  cfg.acquisitions = acquisitions;
  for (const auto& a : fpm::generate_synthetic_dataset(cfg)) {
    const auto path = root / (a.id + ".png");
    fs::create_directories(path.parent_path());
    fpm::save_image(a.image, path);
  }
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config dump round-trips byte-identically") {
  RunConfig c;
  CHECK(dump(parse_config(dump(c))) == dump(c));
  c.method = fpm::Method::DogHist;
  c.synthetic.ridge_period = 7.1;
  c.scorer.ransac.max_abs_theta = 0.1 + 0.2;
  c.scorer.ransac.rng_seed = 0xffffffffffffffffULL;
  c.dataset_root = "some/where";
  c.source = Source::Raw;
  c.patch.polarity = fpm::Polarity::BrightRidges;
  const auto text = dump(c);
  const auto back = parse_config(text);
  CHECK(dump(back) == text);
  CHECK(back.scorer.ransac.max_abs_theta == c.scorer.ransac.max_abs_theta);
  CHECK(back.scorer.ransac.rng_seed == c.scorer.ransac.rng_seed);
  CHECK(back.method == fpm::Method::DogHist);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), fpm::ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"harris": {"sigma": 1.0}})"), fpm::ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"synthetic": {"acquisition": {"blur": 1}}})"), fpm::ParameterError);
  CHECK_NOTHROW(parse_config(R"({"harris": {"sigma_h": 1.5}})"));
}

TEST_CASE("config type and value errors") {
  CHECK_THROWS_AS(parse_config(R"({"n_enroll": -1})"), fpm::ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"n_enroll": 2.5})"), fpm::ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"method": "orb"})"), fpm::ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"harris": 3})"), fpm::ParameterError);
  CHECK_THROWS_AS(parse_config("{not json"), fpm::ParameterError);
  CHECK(parse_config(R"({"method": "sift"})").method == fpm::Method::DogHist);
  auto c = parse_config(R"({"zncc": {"rotation_step_deg": 0}})");
  CHECK_THROWS_AS(c.validate(), fpm::ParameterError);
  c = parse_config(R"({"source": "raw"})");
  CHECK_THROWS_AS(c.validate(), fpm::ParameterError);
}

TEST_CASE("flags override the config file") {
  const auto dir = scratch_dir("cli_override");
  std::ofstream(dir / "c.json") << R"({"method": "zncc", "n_enroll": 2, "seed": 5})";
  const auto r = cli({"config", "--config", (dir / "c.json").string(), "--method", "sift", "--seed", "9"});
  REQUIRE(r.code == 0);
  const auto c = parse_config(r.out);
  CHECK(c.method == fpm::Method::DogHist);
  CHECK(c.n_enroll == 2);
  CHECK(c.seed == 9);
  CHECK(r.out.find("\"method\": \"dog-hist\"") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kUsage);
  CHECK(cli({"frobnicate"}).code == kUsage);
  CHECK(cli({"score", "--method", "orb"}).code == kUsage);
  CHECK(cli({"score", "--n-enroll", "x"}).code == kUsage);
  CHECK(cli({"roc"}).code == kUsage);
  CHECK(cli({"score", "--config", "/nonexistent/cfg.json"}).code == kUsage);
  const auto dir = scratch_dir("cli_usage");
  std::ofstream(dir / "bad.json") << R"({"nope": true})";
  const auto r = cli({"score", "--config", (dir / "bad.json").string()});
  CHECK(r.code == kUsage);
  CHECK(r.err.find("nope") != std::string::npos);
  CHECK(cli({"--help"}).code == kOk);
}

TEST_CASE("extract: 6 acquisitions give 6 patches, manifest rows and a sidecar") {
  const auto dir = scratch_dir("cli_extract");
  write_acquisitions(dir / "raw", 2, 3);
  const auto r = cli({"extract", "--dataset", (dir / "raw").string(), "--out", (dir / "a").string()});
  REQUIRE(r.code == kOk);
  int pngs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a" / "patches")) {
    if (e.path().extension() == ".png") {
      ++pngs;
      const auto img = fpm::load_image(e.path());
      CHECK(img.width() == 70);
      CHECK(img.height() == 70);
    }
  }
  CHECK(pngs == 6);
  const auto manifest = slurp(dir / "a" / "manifest.csv");
  CHECK(count_lines(manifest) == 7);
  CHECK(manifest.rfind("id,finger,status,file,reason\n", 0) == 0);
  CHECK(manifest.find("s000/f0/a0,s000/f0,ok,patches/s000/f0/a0.png,\n") != std::string::npos);
  const auto side = Json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(side["patches"] == 6);
  CHECK(from_json(side["config"]).dataset_root == dir / "raw");
}

TEST_CASE("extract is idempotent: byte-identical manifest and patches") {
  const auto dir = scratch_dir("cli_idem");
  write_acquisitions(dir / "raw", 2, 2);
  REQUIRE(cli({"extract", "--dataset", (dir / "raw").string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(cli({"extract", "--dataset", (dir / "raw").string(), "--out", (dir / "a").string()}).code == 0);
  const auto first = slurp(dir / "a" / "manifest.csv");
  REQUIRE(cli({"extract", "--dataset", (dir / "raw").string(), "--out", (dir / "b").string()}).code == 0);
  CHECK(slurp(dir / "b" / "manifest.csv") == first);
  CHECK(slurp(dir / "a" / "patches" / "s001" / "f0" / "a1.png") ==
        slurp(dir / "b" / "patches" / "s001" / "f0" / "a1.png"));
}

TEST_CASE("extract: an image smaller than the patch is a recorded failure") {
  const auto dir = scratch_dir("cli_small");
  write_acquisitions(dir / "raw", 1, 2);
  fpm::save_image(oracle::random_image(40, 40, 1), dir / "raw" / "s000" / "f0" / "tiny.png");
  const auto r = cli({"extract", "--dataset", (dir / "raw").string(), "--out", (dir / "a").string()});
  CHECK(r.code == kDataFailure);
  CHECK(r.err.find("tiny") != std::string::npos);
  const auto manifest = slurp(dir / "a" / "manifest.csv");
  CHECK(manifest.find("s000/f0/tiny,,failed,,") != std::string::npos);
  const auto skipped =
      cli({"extract", "--dataset", (dir / "raw").string(), "--out", (dir / "b").string(), "--skip-bad"});
  CHECK(skipped.code == kOk);
  CHECK(slurp(dir / "b" / "manifest.csv") == manifest);
}

TEST_CASE("extract of a missing dataset is a data failure") {
  const auto dir = scratch_dir("cli_missing");
  CHECK(cli({"extract", "--dataset", (dir / "nothing").string(), "--out", (dir / "a").string()}).code ==
        kDataFailure);
}

TEST_CASE("score: synthetic zncc table shape, determinism and sidecar") {
  const auto dir = scratch_dir("cli_score");
  const auto cfg = small_config(dir);
  const auto r = cli({"score", "--config", cfg.string(), "--out", (dir / "a").string()});
  REQUIRE(r.code == kOk);
  const auto csv = slurp(dir / "a" / "scores_zncc.csv");
  std::istringstream in(csv);
  const auto t = fpm::read_score_csv(in);
  CHECK(t.rows() == 6);
  CHECK(t.cols() == 3);
  CHECK(t.scores.size() == 18);
  REQUIRE(cli({"score", "--config", cfg.string(), "--out", (dir / "b").string()}).code == kOk);
  CHECK(slurp(dir / "b" / "scores_zncc.csv") == csv);

  const auto side = Json::parse(slurp(dir / "a" / "scores_zncc.json"));
  CHECK(side["method"] == "zncc");
  CHECK(side["candidates"] == 6);
  auto expected = parse_config(slurp(cfg));
  expected.out = dir / "a";
  CHECK(dump(from_json(side["config"])) == dump(expected));
}

TEST_CASE("score: the sift alias is recorded as dog-hist") {
  const auto dir = scratch_dir("cli_alias");
  const auto cfg = small_config(dir);
  const auto r = cli({"score", "--config", cfg.string(), "--method", "sift", "--out", dir.string()});
  REQUIRE(r.code == kOk);
  CHECK(fs::exists(dir / "scores_dog-hist.csv"));
  const auto side = Json::parse(slurp(dir / "scores_dog-hist.json"));
  CHECK(side["method"] == "dog-hist");
  CHECK(side["config"]["method"] == "dog-hist");
}

TEST_CASE("score: too many enrolled images is a data failure") {
  const auto dir = scratch_dir("cli_nenroll");
  const auto cfg = small_config(dir);
  CHECK(cli({"score", "--config", cfg.string(), "--n-enroll", "3", "--out", dir.string()}).code == kDataFailure);
}

TEST_CASE("roc: perfect table touches (0, 0); hand table row") {
  const auto dir = scratch_dir("cli_roc");
  std::ofstream(dir / "perfect.csv") << "candidate_id,true_finger,A,B\n"
                                        "a1,A,1.000000,0.000000\n"
                                        "b1,B,0.000000,1.000000\n";
  std::ofstream(dir / "hand.csv") << "candidate_id,true_finger,A,B\n"
                                     "a1,A,0.900000,0.500000\n"
                                     "a2,A,0.400000,0.100000\n";
  const auto r = cli({"roc", (dir / "perfect.csv").string(), "--out", (dir / "out").string()});
  REQUIRE(r.code == kOk);
  const auto roc = slurp(dir / "out" / "perfect_roc.csv");
  CHECK(roc.find("\n1,0,0,2,2\n") != std::string::npos);

  std::ifstream in(dir / "hand.csv");
  const auto rows = fpm::compute_roc(fpm::read_score_csv(in), std::vector<double>{0.45});
  std::ostringstream out;
  fpm::write_roc_csv(out, rows);
  CHECK(out.str().find("\n0.45,0.5,0.5,2,2\n") != std::string::npos);
}

TEST_CASE("roc: three tables give three labelled curves in one SVG") {
  const auto dir = scratch_dir("cli_roc3");
  const auto cfg = small_config(dir);
  std::vector<std::string> args{"roc"};
  for (const char* m : {"zncc", "harris-ssd", "dog-hist"}) {
    REQUIRE(cli({"score", "--config", cfg.string(), "--method", m, "--out", dir.string()}).code == kOk);
    args.push_back((dir / (std::string("scores_") + m + ".csv")).string());
  }
  args.insert(args.end(), {"--out", (dir / "plot").string()});
  REQUIRE(cli(args).code == kOk);
  const auto svg = slurp(dir / "plot" / "roc.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  const std::regex curve("<polyline class=\"roc\" data-label=\"([a-z-]+)\"");
  std::vector<std::string> labels;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), curve); it != std::sregex_iterator(); ++it) {
    labels.push_back((*it)[1]);
  }
  CHECK(labels == std::vector<std::string>{"zncc", "harris-ssd", "dog-hist"});
  CHECK(svg.find(">harris-ssd</text>") != std::string::npos);
  CHECK(svg.find("FAR (log scale)") != std::string::npos);
  const auto side = Json::parse(slurp(dir / "plot" / "roc.json"));
  CHECK(side["inputs"].size() == 3);
  CHECK(side["inputs"][1]["config"]["method"] == "harris-ssd");
  for (const char* m : {"zncc", "harris-ssd", "dog-hist"}) {
    CHECK(fs::exists(dir / "plot" / (std::string("scores_") + m + "_roc.csv")));
  }
}

TEST_CASE("roc: a malformed CSV names the line") {
  const auto dir = scratch_dir("cli_roc_bad");
  std::ofstream(dir / "bad.csv") << "candidate_id,true_finger,A\nx,A,0.5\ny,A,zero\n";
  const auto r = cli({"roc", (dir / "bad.csv").string(), "--out", dir.string()});
  CHECK(r.code == kDataFailure);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("SVG renders FAR 0 at the left edge and FAR 1 at the right") {
  const std::vector<RocCurve> curves{
      {"x", {{-INFINITY, 1.0, 0.0, 2, 100}, {0.5, 0.0, 0.5, 2, 100}, {INFINITY, 0.0, 1.0, 2, 100}}}};
  const auto svg = render_roc_svg(curves);
  CHECK(svg.find("points=\"470.00,420.00 70.00,230.00 70.00,40.00\"") != std::string::npos);
  CHECK(svg.find(">1e-2</text>") != std::string::npos);
  CHECK(render_roc_svg(curves) == svg);
}

}  // TEST_SUITE
