#include "hyperkb/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyperkb/hyql/parser.hpp"
#include "hyperkb/mlschema.hpp"

namespace hyperkb::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<KnowledgeBase> fresh_store(const BenchOptions& options) {
  auto kb = std::make_unique<KnowledgeBase>();
  if (options.base_journal)
    replay_journal(*kb, *options.base_journal);
  else
    mlschema::bootstrap_dataset_vocabulary(*kb);
  return kb;
}

}  // namespace

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

Summary summarize(const std::vector<double>& samples) {
  Summary s;
  if (samples.empty()) return s;
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  s.median = quantile(sorted, 0.5);
  s.q1 = quantile(sorted, 0.25);
  s.q3 = quantile(sorted, 0.75);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  double iqr = s.q3 - s.q1;
  double low = s.q1 - 1.5 * iqr;
  double high = s.q3 + 1.5 * iqr;
  for (double x : samples)
    if (x < low || x > high) s.outliers.push_back(x);
  return s;
}

bool TaskReport::cardinality_constant() const {
  return std::adjacent_find(cardinalities.begin(), cardinalities.end(), std::not_equal_to<>()) == cardinalities.end();
}

const TaskReport& BenchReport::task(std::string_view name) const {
  for (const auto& t : tasks)
    if (t.task == name) return t;
  throw NotFoundError("no task '" + std::string(name) + "' in report");
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& t : tasks) {
    nlohmann::json entry{{"runs_ms", t.runs_ms},
                         {"median_ms", t.summary.median},
                         {"mean_ms", t.summary.mean},
                         {"q1_ms", t.summary.q1},
                         {"q3_ms", t.summary.q3},
                         {"outliers_ms", t.summary.outliers},
                         {"cardinality", t.cardinalities.empty() ? 0 : t.cardinalities.front()},
                         {"cardinality_constant", t.cardinality_constant()}};
    if (!t.query.empty()) {
      entry["query"] = t.query;
      entry["link_patterns"] = t.link_patterns;
    }
    j[t.task] = std::move(entry);
  }
  j["meta"] = {{"reps", reps},
               {"clock", "steady_clock"},
               {"load", "fresh store per repetition; parse and apply of an in-memory copy of the dataset"},
               {"queries", "parsed once; resolve and evaluate timed per repetition on one snapshot"},
               {"outliers", "beyond 1.5 x IQR Tukey fences"}};
  return j;
}

std::string BenchReport::to_csv() const {
  std::string out = "task,rep,elapsed_ms,cardinality\n";
  char buf[64];
  for (const auto& t : tasks) {
    for (std::size_t i = 0; i < t.runs_ms.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", t.runs_ms[i]);
      out += t.task + "," + std::to_string(i + 1) + "," + buf + "," +
             std::to_string(i < t.cardinalities.size() ? t.cardinalities[i] : 0) + "\n";
    }
  }
  return out;
}

std::vector<QueryFile> load_query_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".hyql") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<QueryFile> out;
  for (const auto& f : files) out.push_back({f.stem().string(), read_file(f)});
  return out;
}

void replay_journal(KnowledgeBase& kb, const std::filesystem::path& journal) {
  std::ifstream in(journal);
  if (!in) throw IoError("cannot read " + journal.string());
  auto records = hkjsonl::read_records(in);
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      kb.apply(std::span<const hkjsonl::Record>(&records[i], 1));
    } catch (const LoadError& e) {
      throw LoadError(i + 1, e.what());
    }
  }
}

BenchReport run_benchmark(const std::filesystem::path& dataset, const std::vector<QueryFile>& queries,
                          const BenchOptions& options, const hyql::FunctionRegistry& registry) {
  if (options.reps == 0) throw Error("reps must be positive");
  std::vector<hyql::Query> parsed;
  for (const auto& q : queries) {
    try {
      parsed.push_back(hyql::parse(q.text));
    } catch (const hyql::ParseError& e) {
      throw hyql::ParseError(e.line(), e.column(), q.name + ": " + e.what());
    }
  }
  const std::string data = read_file(dataset);

  BenchReport report;
  report.reps = options.reps;
  TaskReport load;
  load.task = "load";
  std::unique_ptr<KnowledgeBase> kb;
  for (std::size_t r = 0; r < options.reps; ++r) {
    kb = fresh_store(options);
    std::istringstream in(data);
    auto start = Clock::now();
    LoadReport lr = kb->bulk_load(in);
    load.runs_ms.push_back(elapsed_ms(start));
    load.cardinalities.push_back(lr.nodes + lr.links + lr.connectors + lr.contexts);
  }
  load.summary = summarize(load.runs_ms);
  report.tasks.push_back(std::move(load));

  Snapshot snap = kb->snapshot();
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    TaskReport t;
    t.task = queries[qi].name;
    t.query = queries[qi].text;
    while (!t.query.empty() && (t.query.back() == '\n' || t.query.back() == ' ')) t.query.pop_back();
    t.link_patterns = hyql::link_pattern_count(parsed[qi]);
    for (std::size_t r = 0; r < options.reps; ++r) {
      auto start = Clock::now();
      hyql::ResolvedQuery rq = hyql::resolve(parsed[qi], snap, registry);
      hyql::ResultSet rs = hyql::evaluate(rq, snap, registry);
      t.runs_ms.push_back(elapsed_ms(start));
      t.cardinalities.push_back(rs.matches());
    }
    t.summary = summarize(t.runs_ms);
    report.tasks.push_back(std::move(t));
  }
  return report;
}

}  // namespace hyperkb::bench
