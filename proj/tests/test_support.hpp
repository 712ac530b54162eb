#pragma once

// Shared helpers for the unit suite: temp directories, fixture database
// construction, and a tiny schema builder.

#include <filesystem>
#include <string>

#include "shieldsql/fixtures.hpp"

namespace testsupport {

// Unique scratch directory under the build tree, wiped on construction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("shieldsql_test_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Builds the Students fixture once per tag and returns its path.
inline std::string students_db(const TempDir& dir) {
  std::string path = dir.file("students.db");
  shieldsql::build_students_fixture(path);
  return path;
}

}  // namespace testsupport
