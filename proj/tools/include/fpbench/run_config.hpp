#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "fpm/protocol.hpp"
#include "fpm/synthetic.hpp"

namespace fpbench {

enum class Source { Synthetic, Raw, Patches };

std::string_view to_string(Source s) noexcept;

/// Everything one run depends on. Serialized as a single JSON document.
struct RunConfig {
  fpm::Method method = fpm::Method::Zncc;
  Source source = Source::Synthetic;
  std::filesystem::path dataset_root;  ///< Raw or Patches sources
  fpm::SyntheticDatasetConfig synthetic;
  std::size_t n_enroll = 3;
  std::uint64_t seed = 1;  ///< enrollment split
  fpm::Aggregator aggregator = fpm::Aggregator::Max;
  unsigned threads = 0;
  fpm::PatchOptions patch;
  fpm::ScorerConfig scorer;
  std::filesystem::path out = "out";

  /// Throws fpm::ParameterError naming the first bad field.
  void validate() const;
};

using Json = nlohmann::ordered_json;

Json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys and type mismatches throw
/// fpm::ParameterError.
RunConfig from_json(const Json& j, RunConfig base = {});

/// Pretty-printed snapshot; parse(dump(c)) dumps to the same bytes.
std::string dump(const RunConfig& cfg);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace fpbench
