#pragma once

#include <filesystem>

namespace hyperkb::testing {

std::filesystem::path source_dir();
std::filesystem::path data_dir();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace hyperkb::testing

#include <string>
#include <vector>

namespace hyperkb::testing {

struct CorpusQuery {
  std::string name;
  std::filesystem::path query;
  std::filesystem::path golden;
};

/// The ten corpus queries with their golden AST files.
std::vector<CorpusQuery> query_corpus();

std::string read_text(const std::filesystem::path& path);

}  // namespace hyperkb::testing
