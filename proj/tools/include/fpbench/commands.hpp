#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fpbench/run_config.hpp"
#include "fpm/roc.hpp"

namespace fpbench {

enum ExitCode : int { kOk = 0, kDataFailure = 1, kUsage = 2 };

struct CommandOptions {
  bool skip_bad = false;
  std::ostream* log = nullptr;
};

/// Writes <out>/patches/<id>.png, <out>/manifest.csv and its JSON sidecar.
int cmd_extract(const RunConfig& cfg, const CommandOptions& opts);

/// Writes <out>/scores_<method>.csv and its JSON sidecar.
int cmd_score(const RunConfig& cfg, const CommandOptions& opts);

/// One ROC CSV per table plus <out>/roc.svg and its JSON sidecar.
int cmd_roc(const std::vector<std::filesystem::path>& tables, const std::filesystem::path& out,
            const CommandOptions& opts);

struct RocCurve {
  std::string label;
  std::vector<fpm::RocPoint> points;
};

/// FRR against log-scale FAR, one labelled polyline per curve.
std::string render_roc_svg(const std::vector<RocCurve>& curves);

/// Full command-line entry point: parses argv and dispatches.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fpbench
