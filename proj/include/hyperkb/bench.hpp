#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperkb/hyql/eval.hpp"
#include "hyperkb/store.hpp"

namespace hyperkb::bench {

/// Box-plot summary with Tukey fences at 1.5 x IQR. Quartiles interpolate
/// linearly between order statistics.
struct Summary {
  double median = 0;
  double mean = 0;
  double q1 = 0;
  double q3 = 0;
  std::vector<double> outliers;
};

Summary summarize(const std::vector<double>& samples);

/// Linear-interpolated quantile of sorted data, p in [0, 1].
double quantile(const std::vector<double>& sorted, double p);

struct TaskReport {
  std::string task;
  std::vector<double> runs_ms;
  std::vector<std::size_t> cardinalities;
  Summary summary;
  /// Query tasks only.
  std::string query;
  std::size_t link_patterns = 0;

  /// Same cardinality on every repetition.
  bool cardinality_constant() const;
};

struct BenchReport {
  /// "load" first, then queries in file-name order.
  std::vector<TaskReport> tasks;
  std::size_t reps = 0;

  const TaskReport& task(std::string_view name) const;
  nlohmann::json to_json() const;
  /// Columns task,rep,elapsed_ms,cardinality.
  std::string to_csv() const;
};

struct QueryFile {
  std::string name;
  std::string text;
};

/// Every `*.hyql` file in `dir`, sorted; task names are the file stems.
std::vector<QueryFile> load_query_dir(const std::filesystem::path& dir);

/// Re-applies a journal record by record into `kb`.
void replay_journal(KnowledgeBase& kb, const std::filesystem::path& journal);

struct BenchOptions {
  /// Replayed into every fresh store before the timed load. When empty the
  /// dataset vocabulary is bootstrapped instead.
  std::optional<std::filesystem::path> base_journal;
  std::size_t reps = 100;
};

/// Parses every query first (failures abort before any timing). Each load
/// repetition starts from a fresh store; the load is timed from an in-memory
/// copy of the dataset. Queries then run `reps` times each against one
/// snapshot of the last loaded store, timing resolution plus evaluation.
BenchReport run_benchmark(const std::filesystem::path& dataset, const std::vector<QueryFile>& queries,
                          const BenchOptions& options, const hyql::FunctionRegistry& registry);

}  // namespace hyperkb::bench
