#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "fpm/protocol.hpp"
#include "fpm/roc.hpp"

namespace fpm {

/// Shortest decimal text that parses back to the same double; "inf"/"-inf"
/// for the sentinels.
std::string format_shortest(double v);

/// `candidate_id,true_finger,<finger_1>,...` with 6-decimal scores.
void write_score_csv(std::ostream& out, const ScoreTable& table);
void write_score_csv(const std::filesystem::path& path, const ScoreTable& table);

/// Parses a score CSV; the method tag is not part of the CSV and is left at
/// its default. Throws ParseError naming the offending line.
ScoreTable read_score_csv(std::istream& in);
ScoreTable read_score_csv(const std::filesystem::path& path);

/// `threshold,far,frr,genuine_count,impostor_count`.
void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& roc);

}  // namespace fpm
