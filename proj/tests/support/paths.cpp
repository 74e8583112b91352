#include "paths.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <random>
#include <string>

#include <unistd.h>

namespace hyperkb::testing {

std::filesystem::path source_dir() { return HYPERKB_SOURCE_DIR; }

std::filesystem::path data_dir() { return source_dir() / "data"; }

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("hyperkb-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<CorpusQuery> query_corpus() {
  std::vector<CorpusQuery> out;
  auto golden = source_dir() / "tests" / "fixtures" / "ast";
  for (const char* name : {"retrieval_basic", "retrieval_enhanced", "investigation1", "investigation2", "investigation3"})
    out.push_back({name, data_dir() / "queries" / "examples" / (std::string(name) + ".hyql"), golden / (std::string(name) + ".json")});
  for (const char* name : {"q1", "q2", "q3", "q4", "q5"})
    out.push_back({name, data_dir() / "queries" / "benchmark" / (std::string(name) + ".hyql"), golden / (std::string(name) + ".json")});
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hyperkb::testing
