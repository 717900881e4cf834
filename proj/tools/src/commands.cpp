#include "fpbench/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "fpm/dataset.hpp"
#include "fpm/errors.hpp"
#include "fpm/image_io.hpp"
#include "fpm/table_io.hpp"

namespace fpbench {

namespace fs = std::filesystem;

namespace {

std::ostream& log_to(const CommandOptions& opts) { return opts.log ? *opts.log : std::cerr; }

struct Loaded {
  fpm::PatchSet patches;
  std::vector<fpm::PatchFailure> failures;
};

void add_index_errors(const fpm::DatasetIndex& index, std::vector<fpm::PatchFailure>& out) {
  for (const auto& e : index.errors) out.push_back({e.path.generic_string(), e.reason});
}

Loaded load_patches(const RunConfig& cfg) {
  Loaded l;
  switch (cfg.source) {
    case Source::Synthetic: {
      auto built = fpm::build_patch_set(fpm::generate_synthetic_dataset(cfg.synthetic), cfg.patch);
      l.patches = std::move(built.patches);
      l.failures = std::move(built.failures);
      break;
    }
    case Source::Raw: {
      const auto index = fpm::index_dataset(cfg.dataset_root, {.skip_bad = true});
      add_index_errors(index, l.failures);
      auto built = fpm::build_patch_set(index, cfg.patch);
      l.patches = std::move(built.patches);
      l.failures.insert(l.failures.end(), built.failures.begin(), built.failures.end());
      break;
    }
    case Source::Patches: {
      const auto index = fpm::index_dataset(cfg.dataset_root, {.skip_bad = true});
      add_index_errors(index, l.failures);
      l.patches = fpm::load_patch_set(index);
      break;
    }
  }
  std::sort(l.failures.begin(), l.failures.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return l;
}

void report_failures(const Loaded& l, const CommandOptions& opts) {
  for (const auto& f : l.failures) log_to(opts) << "failed: " << f.id << ": " << f.reason << "\n";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return q + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw fpm::IoError("cannot write " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

int cmd_extract(const RunConfig& cfg, const CommandOptions& opts) {
  const auto loaded = load_patches(cfg);
  const auto written = fpm::write_image_tree(loaded.patches, cfg.out / "patches");

  std::vector<std::pair<std::string, std::string>> rows;
  for (std::size_t i = 0; i < loaded.patches.size(); ++i) {
    const auto& p = loaded.patches[i];
    const auto rel = fs::relative(written[i], cfg.out).generic_string();
    rows.emplace_back(p.id, csv_field(p.id) + "," + csv_field(p.finger) + ",ok," + csv_field(rel) + ",");
  }
  for (const auto& f : loaded.failures) {
    rows.emplace_back(f.id, csv_field(f.id) + ",,failed,," + csv_field(f.reason));
  }
  std::sort(rows.begin(), rows.end());
  std::string manifest = "id,finger,status,file,reason\n";
  for (const auto& [id, row] : rows) manifest += row + "\n";
  write_text(cfg.out / "manifest.csv", manifest);

  Json side;
  side["command"] = "extract";
  side["patches"] = loaded.patches.size();
  side["failures"] = loaded.failures.size();
  side["config"] = to_json(cfg);
  write_json(cfg.out / "manifest.json", side);

  log_to(opts) << "extracted " << loaded.patches.size() << " patches, " << loaded.failures.size()
               << " failures -> " << (cfg.out / "manifest.csv").string() << "\n";
  if (!loaded.failures.empty()) {
    report_failures(loaded, opts);
    if (!opts.skip_bad) return kDataFailure;
  }
  return kOk;
}

int cmd_score(const RunConfig& cfg, const CommandOptions& opts) {
  const auto loaded = load_patches(cfg);
  if (!loaded.failures.empty()) {
    report_failures(loaded, opts);
    if (!opts.skip_bad) {
      log_to(opts) << loaded.failures.size() << " inputs failed; rerun with --skip-bad to drop them\n";
      return kDataFailure;
    }
  }
  const auto split = fpm::split_enrollment(loaded.patches, cfg.n_enroll, cfg.seed);
  const auto scorer = fpm::make_scorer(cfg.method, cfg.scorer);
  const auto table = fpm::score_table(loaded.patches, split, *scorer,
                                      {.aggregator = cfg.aggregator, .threads = cfg.threads, .log = &log_to(opts)});

  const std::string stem = "scores_" + std::string(fpm::to_string(cfg.method));
  fs::create_directories(cfg.out);
  fpm::write_score_csv(cfg.out / (stem + ".csv"), table);

  Json side;
  side["command"] = "score";
  side["method"] = std::string(fpm::to_string(cfg.method));
  side["candidates"] = table.rows();
  side["fingers"] = table.cols();
  side["pair_failures"] = table.failures;
  side["skipped_inputs"] = loaded.failures.size();
  side["config"] = to_json(cfg);
  write_json(cfg.out / (stem + ".json"), side);

  log_to(opts) << fpm::to_string(cfg.method) << ": " << table.rows() << " candidates x " << table.cols()
               << " fingers -> " << (cfg.out / (stem + ".csv")).string() << "\n";
  return kOk;
}

int cmd_roc(const std::vector<fs::path>& tables, const fs::path& out, const CommandOptions& opts) {
  std::vector<RocCurve> curves;
  Json inputs = Json::array();
  std::set<std::string> stems;
  for (const auto& path : tables) {
    fpm::ScoreTable table;
    try {
      table = fpm::read_score_csv(path);
    } catch (const fpm::ParseError& e) {
      log_to(opts) << path.string() << ": " << e.what() << "\n";
      return kDataFailure;
    }
    std::string label = path.stem().string();
    Json entry;
    entry["path"] = path.generic_string();
    auto sidecar = path;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
      std::ifstream in(sidecar);
      const auto j = Json::parse(in, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("method") && j["method"].is_string()) {
        label = j["method"].get<std::string>();
        if (j.contains("config")) entry["config"] = j["config"];
      }
    }
    auto stem = path.stem().string();
    for (int k = 2; !stems.insert(stem).second; ++k) stem = path.stem().string() + "_" + std::to_string(k);

    const auto roc = fpm::compute_roc(table);
    const auto csv_path = out / (stem + "_roc.csv");
    fs::create_directories(out);
    std::ofstream csv(csv_path, std::ios::binary);
    fpm::write_roc_csv(csv, roc);
    if (!csv) throw fpm::IoError("cannot write " + csv_path.string());

    entry["label"] = label;
    entry["roc"] = csv_path.filename().generic_string();
    entry["points"] = roc.size();
    inputs.push_back(entry);
    curves.push_back({label, roc});
    log_to(opts) << label << ": FRR " << fpm::frr_at_far(roc, 0.01) << " at FAR <= 0.01, "
                 << fpm::frr_at_far(roc, 0.05) << " at FAR <= 0.05\n";
  }
  write_text(out / "roc.svg", render_roc_svg(curves));
  Json side;
  side["command"] = "roc";
  side["inputs"] = inputs;
  write_json(out / "roc.json", side);
  return kOk;
}

std::string render_roc_svg(const std::vector<RocCurve>& curves) {
  constexpr double kW = 640;
  constexpr double kH = 480;
  constexpr double kLeft = 70;
  constexpr double kRight = 170;
  constexpr double kTop = 40;
  constexpr double kBottom = 60;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  // Log FAR axis from the smallest observable rate (1 / impostor count) to 1.
  int lo = -1;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      if (p.impostor_count > 0) {
        lo = std::min(lo, static_cast<int>(std::floor(std::log10(1.0 / static_cast<double>(p.impostor_count)))));
      }
    }
  }
  lo = std::max(lo, -9);
  auto sx = [&](double far) {
    const double e = far > 0.0 ? std::max(std::log10(far), static_cast<double>(lo)) : lo;
    return kLeft + (e - lo) / (0.0 - lo) * pw;
  };
  auto sy = [&](double frr) { return kTop + (1.0 - frr) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed2(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">ROC</text>\n";
  for (int e = lo; e <= 0; ++e) {
    const double x = sx(std::pow(10.0, e));
    s += "<line x1=\"" + fixed2(x) + "\" y1=\"" + fixed2(kTop) + "\" x2=\"" + fixed2(x) + "\" y2=\"" +
         fixed2(kTop + ph) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fixed2(x) + "\" y=\"" + fixed2(kTop + ph + 16) + "\" text-anchor=\"middle\">1e" +
         std::to_string(e) + "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double y = sy(k / 5.0);
    s += "<line x1=\"" + fixed2(kLeft) + "\" y1=\"" + fixed2(y) + "\" x2=\"" + fixed2(kLeft + pw) + "\" y2=\"" +
         fixed2(y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fixed2(kLeft - 6) + "\" y=\"" + fixed2(y + 4) + "\" text-anchor=\"end\">" +
         fixed2(k / 5.0).substr(0, 3) + "</text>\n";
  }
  s += "<rect x=\"" + fixed2(kLeft) + "\" y=\"" + fixed2(kTop) + "\" width=\"" + fixed2(pw) + "\" height=\"" +
       fixed2(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fixed2(kLeft + pw / 2) + "\" y=\"" + fixed2(kH - 18) +
       "\" text-anchor=\"middle\">FAR (log scale)</text>\n";
  s += "<text x=\"18\" y=\"" + fixed2(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       fixed2(kTop + ph / 2) + ")\">FRR</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string pts;
    for (const auto& p : curves[i].points) {
      if (!pts.empty()) pts += ' ';
      pts += fixed2(sx(p.far)) + "," + fixed2(sy(p.frr));
    }
    s += "<polyline class=\"roc\" data-label=\"" + xml_escape(curves[i].label) + "\" fill=\"none\" stroke=\"" +
         color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
    const double lx = kLeft + pw + 14;
    s += "<line x1=\"" + fixed2(lx) + "\" y1=\"" + fixed2(ly) + "\" x2=\"" + fixed2(lx + 24) + "\" y2=\"" +
         fixed2(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text class=\"label\" x=\"" + fixed2(lx + 30) + "\" y=\"" + fixed2(ly + 4) + "\">" +
         xml_escape(curves[i].label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

namespace {

bool given(const CLI::App* sub, const std::string& name) {
  const auto* opt = sub->get_option_no_throw(name);
  return opt && opt->count() > 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fingerprint matcher benchmark: extract patches, score tables, ROC curves"};
  app.require_subcommand(1);

  fs::path config_path;
  std::string method;
  std::size_t n_enroll = 0;
  std::uint64_t seed = 0;
  fs::path out_dir;
  bool skip_bad = false;
  fs::path dataset;
  fs::path patches;
  unsigned threads = 0;
  std::vector<fs::path> tables;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config JSON; flags override it")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_flag("--skip-bad", skip_bad, "Drop unreadable or unsegmentable inputs instead of failing");
    auto* d = sub->add_option("--dataset", dataset, "Raw acquisition tree root/<person>/<finger>/<image>");
    auto* p = sub->add_option("--patches", patches, "Already extracted patch tree");
    d->excludes(p);
    sub->add_option("--seed", seed, "Enrollment split seed");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
  };

  auto* extract = app.add_subcommand("extract", "Segment acquisitions and write centered sensor patches");
  common(extract);
  auto* score = app.add_subcommand("score", "Split into enrollment/candidates and write a score table");
  common(score);
  score->add_option("--method", method, "zncc | harris-ssd | dog-hist (alias: sift)");
  score->add_option("--n-enroll", n_enroll, "Enrolled acquisitions per finger");
  auto* roc = app.add_subcommand("roc", "ROC CSVs and an SVG plot from score tables");
  roc->add_option("tables", tables, "Score CSV files")->required()->check(CLI::ExistingFile);
  roc->add_option("--out", out_dir, "Output directory");
  auto* show = app.add_subcommand("config", "Print the effective run config as JSON");
  common(show);
  show->add_option("--method", method, "zncc | harris-ssd | dog-hist (alias: sift)");
  show->add_option("--n-enroll", n_enroll, "Enrolled acquisitions per finger");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const CommandOptions opts{.skip_bad = skip_bad, .log = &err};
  if (roc->parsed()) {
    try {
      return cmd_roc(tables, out_dir.empty() ? fs::path("out") : out_dir, opts);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kDataFailure;
    }
  }

  auto* sub = app.get_subcommands().front();
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (given(sub, "--method")) {
      const auto m = fpm::parse_method(method);
      if (!m) throw fpm::ParameterError("unknown method \"" + method + "\"");
      cfg.method = *m;
    }
    if (given(sub, "--n-enroll")) cfg.n_enroll = n_enroll;
    if (given(sub, "--seed")) cfg.seed = seed;
    if (given(sub, "--threads")) cfg.threads = threads;
    if (given(sub, "--out")) cfg.out = out_dir;
    if (given(sub, "--dataset")) {
      cfg.source = Source::Raw;
      cfg.dataset_root = dataset;
    }
    if (given(sub, "--patches")) {
      cfg.source = Source::Patches;
      cfg.dataset_root = patches;
    }
    cfg.validate();
  } catch (const fpm::ParameterError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (show->parsed()) {
      out << dump(cfg);
      return kOk;
    }
    if (extract->parsed()) return cmd_extract(cfg, opts);
    return cmd_score(cfg, opts);
  } catch (const fpm::ParameterError& e) {
    // Data-dependent preconditions, e.g. too few acquisitions for the split.
    err << "error: " << e.what() << "\n";
    return kDataFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataFailure;
  }
}

}  // namespace fpbench
