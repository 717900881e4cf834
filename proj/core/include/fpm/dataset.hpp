#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fpm {

/// One acquisition in a root/<person>/<finger>/<acquisition>.{png,pgm} tree.
struct DatasetEntry {
  std::string person;
  std::string finger;
  std::string acquisition;  ///< file stem
  std::filesystem::path path;

  /// Finger identity "<person>/<finger>".
  std::string finger_label() const { return person + "/" + finger; }
};

struct BadFile {
  std::filesystem::path path;
  std::string reason;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;  ///< lexicographic (person, finger, acquisition)
  std::vector<BadFile> errors;

  std::map<std::string, std::size_t> acquisitions_per_finger() const;
};

struct IndexOptions {
  bool skip_bad = false;
  /// Decode every image to prove it loads; otherwise only extensions are checked.
  bool verify_load = true;
};

/// Walks root/<person>/<finger>/ for .png and .pgm files. Files that fail to
/// load are listed in `errors`; unless skip_bad is set, any such failure
/// throws IoError carrying the full report. A missing root throws IoError;
/// an empty root yields an empty index.
DatasetIndex index_dataset(const std::filesystem::path& root, const IndexOptions& opts = {});

}  // namespace fpm
