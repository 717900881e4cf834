#include "fpm/dataset.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "fpm/errors.hpp"
#include "fpm/image_io.hpp"

namespace fpm {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::map<std::string, std::size_t> DatasetIndex::acquisitions_per_finger() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : entries) ++counts[e.finger_label()];
  return counts;
}

DatasetIndex index_dataset(const fs::path& root, const IndexOptions& opts) {
  if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());

  DatasetIndex index;
  for (const auto& person : sorted_children(root, true)) {
    for (const auto& finger : sorted_children(person, true)) {
      for (const auto& file : sorted_children(finger, false)) {
        if (!is_supported_image(file)) continue;
        if (opts.verify_load) {
          try {
            (void)load_image(file);
          } catch (const std::exception& ex) {
            index.errors.push_back({file, ex.what()});
            continue;
          }
        }
        index.entries.push_back({person.filename().string(), finger.filename().string(),
                                 file.stem().string(), file});
      }
    }
  }
  std::sort(index.entries.begin(), index.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.person, a.finger, a.acquisition) < std::tie(b.person, b.finger, b.acquisition);
  });
  // a.png next to a.pgm would alias one acquisition id.
  for (std::size_t i = 1; i < index.entries.size();) {
    const auto& a = index.entries[i - 1];
    const auto& b = index.entries[i];
    if (std::tie(a.person, a.finger, a.acquisition) == std::tie(b.person, b.finger, b.acquisition)) {
      index.errors.push_back({b.path, "duplicate acquisition id"});
      index.entries.erase(index.entries.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }

  if (!index.errors.empty() && !opts.skip_bad) {
    std::ostringstream report;
    report << index.errors.size() << " unreadable file(s):";
    for (const auto& bad : index.errors) report << "\n  " << bad.path.string() << ": " << bad.reason;
    throw IoError(report.str());
  }
  return index;
}

}  // namespace fpm
