#include "fpbench/run_config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fpm/errors.hpp"

namespace fpbench {

using fpm::ParameterError;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParameterError(path_ + ": expected an object");
  }

  const Json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(key, "a 32-bit integer");
      out = static_cast<int>(x);
    }
  }
  void read(const char* key, unsigned& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned() || v->get<std::uint64_t>() > std::numeric_limits<unsigned>::max()) {
        fail(key, "a non-negative 32-bit integer");
      }
      out = v->get<unsigned>();
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) fail(key, "true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  std::string child_path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ParameterError("unknown config key " + path_ + "." + k);
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ParameterError(path_ + "." + key + ": expected " + what);
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string_view to_string(fpm::Polarity p) noexcept {
  return p == fpm::Polarity::DarkRidges ? "dark-ridges" : "bright-ridges";
}

template <typename T, typename Parse>
void read_enum(Reader& r, const char* key, T& out, Parse parse) {
  std::string s;
  r.read(key, s);
  if (s.empty()) return;
  const auto v = parse(s);
  if (!v) throw ParameterError(r.child_path(key) + ": unknown value \"" + s + "\"");
  out = *v;
}

std::optional<Source> parse_source(std::string_view s) {
  if (s == "synthetic") return Source::Synthetic;
  if (s == "raw") return Source::Raw;
  if (s == "patches") return Source::Patches;
  return std::nullopt;
}

std::optional<fpm::Polarity> parse_polarity(std::string_view s) {
  if (s == "dark-ridges") return fpm::Polarity::DarkRidges;
  if (s == "bright-ridges") return fpm::Polarity::BrightRidges;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::Synthetic:
      return "synthetic";
    case Source::Raw:
      return "raw";
    case Source::Patches:
      return "patches";
  }
  return "synthetic";
}

void RunConfig::validate() const {
  if (source != Source::Synthetic && dataset_root.empty()) {
    throw ParameterError("dataset_root is required for source \"" + std::string(to_string(source)) + "\"");
  }
  if (n_enroll == 0) throw ParameterError("n_enroll must be at least 1");
  if (patch.size < 16) throw ParameterError("patch.size must be at least 16");
  const auto& s = synthetic;
  if (s.persons < 1 || s.fingers_per_person < 1) throw ParameterError("synthetic: need at least one finger");
  if (s.acquisitions < 2) throw ParameterError("synthetic.acquisitions must be at least 2");
  if (!(s.ridge_period >= 4.0)) throw ParameterError("synthetic.ridge_period must be at least 4");
  if (!(s.period_jitter >= 0.0 && s.period_jitter < 1.0)) throw ParameterError("synthetic.period_jitter must be in [0, 1)");
  if (s.minutiae < 0) throw ParameterError("synthetic.minutiae must be non-negative");
  const auto& a = s.acquisition;
  if (a.width < patch.size || a.height < patch.size) {
    throw ParameterError("synthetic.acquisition must be at least as large as the patch");
  }
  if (!(a.noise >= 0.0) || !(a.max_rotation_deg >= 0.0) || !(a.max_translation >= 0.0) ||
      !(a.contrast_jitter >= 0.0 && a.contrast_jitter < 1.0) || !(a.offset_jitter >= 0.0) ||
      !(a.center_jitter >= 0.0)) {
    throw ParameterError("synthetic.acquisition: jitter and noise must be non-negative");
  }
  scorer.zncc.validate();
  scorer.features.harris.validate();
  scorer.features.dog.validate();
  scorer.features.histogram.validate();
  if (scorer.features.patch_half_window < 1) throw ParameterError("patch_descriptor.half_window must be at least 1");
  scorer.ransac.validate();
}

Json to_json(const RunConfig& c) {
  const auto& s = c.synthetic;
  const auto& a = s.acquisition;
  const auto& z = c.scorer.zncc;
  const auto& h = c.scorer.features.harris;
  const auto& d = c.scorer.features.dog;
  const auto& g = c.scorer.features.histogram;
  const auto& r = c.scorer.ransac;
  Json j;
  j["method"] = fpm::to_string(c.method);
  j["source"] = to_string(c.source);
  j["dataset_root"] = c.dataset_root.generic_string();
  j["synthetic"] = {{"persons", s.persons},
                    {"fingers_per_person", s.fingers_per_person},
                    {"acquisitions", s.acquisitions},
                    {"ridge_period", s.ridge_period},
                    {"period_jitter", s.period_jitter},
                    {"minutiae", s.minutiae},
                    {"seed", s.seed},
                    {"acquisition",
                     {{"width", a.width},
                      {"height", a.height},
                      {"noise", a.noise},
                      {"max_rotation_deg", a.max_rotation_deg},
                      {"max_translation", a.max_translation},
                      {"contrast_jitter", a.contrast_jitter},
                      {"offset_jitter", a.offset_jitter},
                      {"contact_area", a.contact_area},
                      {"center_jitter", a.center_jitter}}}};
  j["n_enroll"] = c.n_enroll;
  j["seed"] = c.seed;
  j["aggregator"] = fpm::to_string(c.aggregator);
  j["threads"] = c.threads;
  j["patch"] = {{"size", c.patch.size}, {"polarity", to_string(c.patch.polarity)}};
  j["zncc"] = {{"rotation_min_deg", z.rotation_min_deg},
               {"rotation_max_deg", z.rotation_max_deg},
               {"rotation_step_deg", z.rotation_step_deg},
               {"min_overlap_fraction", z.min_overlap_fraction}};
  j["harris"] = {{"sigma_h", h.sigma_h},
                 {"sigma_theta", h.sigma_theta},
                 {"sigma_window", h.sigma_window},
                 {"response_threshold_rel", h.response_threshold_rel},
                 {"nms_radius", h.nms_radius},
                 {"max_keypoints", h.max_keypoints},
                 {"border_margin", h.border_margin}};
  j["dog"] = {{"octaves", d.octaves},
              {"scales_per_octave", d.scales_per_octave},
              {"base_sigma", d.base_sigma},
              {"contrast_threshold", d.contrast_threshold},
              {"edge_ratio_threshold", d.edge_ratio_threshold},
              {"max_keypoints", d.max_keypoints},
              {"upsample", d.upsample}};
  j["patch_descriptor"] = {{"half_window", c.scorer.features.patch_half_window}};
  j["histogram"] = {{"window", g.window},
                    {"reference_scale", g.reference_scale},
                    {"grid_cells", g.grid_cells},
                    {"orientation_bins", g.orientation_bins},
                    {"clamp", g.clamp}};
  j["ransac"] = {{"epsilon", r.epsilon},
                 {"iterations", r.iterations},
                 {"min_matches", r.min_matches},
                 {"max_abs_theta", r.max_abs_theta},
                 {"rng_seed", r.rng_seed}};
  j["out"] = c.out.generic_string();
  return j;
}

RunConfig from_json(const Json& j, RunConfig c) {
  Reader top(j, "config");
  read_enum(top, "method", c.method, fpm::parse_method);
  read_enum(top, "source", c.source, parse_source);
  std::string root = c.dataset_root.generic_string();
  top.read("dataset_root", root);
  c.dataset_root = root;

  if (const auto* sj = top.find("synthetic")) {
    auto& s = c.synthetic;
    Reader r(*sj, top.child_path("synthetic"));
    r.read("persons", s.persons);
    r.read("fingers_per_person", s.fingers_per_person);
    r.read("acquisitions", s.acquisitions);
    r.read("ridge_period", s.ridge_period);
    r.read("period_jitter", s.period_jitter);
    r.read("minutiae", s.minutiae);
    r.read("seed", s.seed);
    if (const auto* aj = r.find("acquisition")) {
      auto& a = s.acquisition;
      Reader ra(*aj, r.child_path("acquisition"));
      ra.read("width", a.width);
      ra.read("height", a.height);
      ra.read("noise", a.noise);
      ra.read("max_rotation_deg", a.max_rotation_deg);
      ra.read("max_translation", a.max_translation);
      ra.read("contrast_jitter", a.contrast_jitter);
      ra.read("offset_jitter", a.offset_jitter);
      ra.read("contact_area", a.contact_area);
      ra.read("center_jitter", a.center_jitter);
      ra.finish();
    }
    r.finish();
  }

  top.read("n_enroll", c.n_enroll);
  top.read("seed", c.seed);
  read_enum(top, "aggregator", c.aggregator, fpm::parse_aggregator);
  top.read("threads", c.threads);

  if (const auto* pj = top.find("patch")) {
    Reader r(*pj, top.child_path("patch"));
    r.read("size", c.patch.size);
    read_enum(r, "polarity", c.patch.polarity, parse_polarity);
    r.finish();
  }
  if (const auto* zj = top.find("zncc")) {
    auto& z = c.scorer.zncc;
    Reader r(*zj, top.child_path("zncc"));
    r.read("rotation_min_deg", z.rotation_min_deg);
    r.read("rotation_max_deg", z.rotation_max_deg);
    r.read("rotation_step_deg", z.rotation_step_deg);
    r.read("min_overlap_fraction", z.min_overlap_fraction);
    r.finish();
  }
  if (const auto* hj = top.find("harris")) {
    auto& h = c.scorer.features.harris;
    Reader r(*hj, top.child_path("harris"));
    r.read("sigma_h", h.sigma_h);
    r.read("sigma_theta", h.sigma_theta);
    r.read("sigma_window", h.sigma_window);
    r.read("response_threshold_rel", h.response_threshold_rel);
    r.read("nms_radius", h.nms_radius);
    r.read("max_keypoints", h.max_keypoints);
    r.read("border_margin", h.border_margin);
    r.finish();
  }
  if (const auto* dj = top.find("dog")) {
    auto& d = c.scorer.features.dog;
    Reader r(*dj, top.child_path("dog"));
    r.read("octaves", d.octaves);
    r.read("scales_per_octave", d.scales_per_octave);
    r.read("base_sigma", d.base_sigma);
    r.read("contrast_threshold", d.contrast_threshold);
    r.read("edge_ratio_threshold", d.edge_ratio_threshold);
    r.read("max_keypoints", d.max_keypoints);
    r.read("upsample", d.upsample);
    r.finish();
  }
  if (const auto* pj = top.find("patch_descriptor")) {
    Reader r(*pj, top.child_path("patch_descriptor"));
    r.read("half_window", c.scorer.features.patch_half_window);
    r.finish();
  }
  if (const auto* gj = top.find("histogram")) {
    auto& g = c.scorer.features.histogram;
    Reader r(*gj, top.child_path("histogram"));
    r.read("window", g.window);
    r.read("reference_scale", g.reference_scale);
    r.read("grid_cells", g.grid_cells);
    r.read("orientation_bins", g.orientation_bins);
    r.read("clamp", g.clamp);
    r.finish();
  }
  if (const auto* rj = top.find("ransac")) {
    auto& rc = c.scorer.ransac;
    Reader r(*rj, top.child_path("ransac"));
    r.read("epsilon", rc.epsilon);
    r.read("iterations", rc.iterations);
    r.read("min_matches", rc.min_matches);
    r.read("max_abs_theta", rc.max_abs_theta);
    r.read("rng_seed", rc.rng_seed);
    r.finish();
  }
  std::string out = c.out.generic_string();
  top.read("out", out);
  c.out = out;
  top.finish();
  return c;
}

std::string dump(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace fpbench
