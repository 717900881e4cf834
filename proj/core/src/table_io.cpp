#include "fpm/table_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fpm/errors.hpp"

namespace fpm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_field(const std::string& s) {
  if (s.empty() || s.find_first_of(",\r\n") != std::string::npos) {
    throw ParameterError("label cannot be written to CSV: '" + s + "'");
  }
}

bool getline_stripped(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::string format_shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_score_csv(std::ostream& out, const ScoreTable& table) {
  if (table.scores.size() != table.rows() * table.cols() || table.labels.size() != table.rows()) {
    throw ParameterError("score table shape is inconsistent");
  }
  out << "candidate_id,true_finger";
  for (const auto& f : table.fingers) {
    check_field(f);
    out << ',' << f;
  }
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    check_field(table.candidate_ids[r]);
    check_field(table.labels[r]);
    out << table.candidate_ids[r] << ',' << table.labels[r];
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const double s = table.at(r, c);
      if (!std::isfinite(s)) throw ParameterError("score table holds a non-finite entry");
      std::snprintf(buf, sizeof buf, "%.6f", s);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_score_csv(const std::filesystem::path& path, const ScoreTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_score_csv(out, table);
  if (!out) throw IoError("write failed: " + path.string());
}

ScoreTable read_score_csv(std::istream& in) {
  ScoreTable table;
  std::string line;
  std::size_t line_no = 1;
  if (!getline_stripped(in, line)) throw ParseError("empty score CSV", line_no);
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "candidate_id" || header[1] != "true_finger") {
    throw ParseError("header must start with candidate_id,true_finger and name at least one finger", line_no);
  }
  table.fingers.assign(header.begin() + 2, header.end());
  for (const auto& f : table.fingers) {
    if (f.empty()) throw ParseError("empty finger column name", line_no);
  }

  while (getline_stripped(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError("empty candidate id or label", line_no);
    table.candidate_ids.push_back(fields[0]);
    table.labels.push_back(fields[1]);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      const auto& f = fields[i];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError("invalid score '" + f + "'", line_no);
      }
      table.scores.push_back(v);
    }
  }
  if (table.rows() == 0) throw ParseError("score CSV has no rows", line_no);
  return table;
}

ScoreTable read_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_score_csv(in);
}

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& roc) {
  out << "threshold,far,frr,genuine_count,impostor_count\n";
  for (const auto& p : roc) {
    out << format_shortest(p.threshold) << ',' << format_shortest(p.far) << ','
        << format_shortest(p.frr) << ',' << p.genuine_count << ',' << p.impostor_count << '\n';
  }
}

}  // namespace fpm
