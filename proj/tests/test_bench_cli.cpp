#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyperkb/bench.hpp"
#include "hyperkb/cli.hpp"
#include "hyperkb/hyql/lexer.hpp"
#include "hyperkb/mlschema.hpp"
#include "paths.hpp"

using namespace hyperkb;
using namespace hyperkb::bench;
using hyperkb::testing::data_dir;
using hyperkb::testing::read_text;
using hyperkb::testing::TempDir;

namespace {

struct Cli {
  int code = -1;
  std::string out;
  std::string err;
};

Cli invoke(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "hyperkb");
  std::istringstream in(input);
  std::ostringstream out, err;
  Cli r;
  r.code = cli::cli_main(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("box-plot summary") {
  auto s = summarize({4, 1, 100, 3, 2});
  CHECK(s.median == 3);
  CHECK(s.q1 == 2);
  CHECK(s.q3 == 4);
  CHECK(s.mean == 22);
  CHECK(s.outliers == std::vector<double>{100});
  CHECK(quantile({1, 2}, 0.5) == 1.5);
  CHECK(quantile({5}, 0.9) == 5);
  CHECK(summarize({}).outliers.empty());
}

TEST_CASE("benchmark on an empty dataset") {
  TempDir dir;
  std::ofstream(dir / "empty.hkjsonl").close();
  std::filesystem::create_directory(dir / "q");
  std::ofstream(dir / "q" / "a.hyql") << "SELECT Model WHERE Run hasOutput Model\n";
  std::ofstream(dir / "q" / "b.hyql") << "SELECT Run WHERE Run achieves Task AND Run hasInput Data\n";
  std::ofstream(dir / "q" / "notes.txt") << "ignored";
  auto queries = load_query_dir(dir / "q");
  REQUIRE(queries.size() == 2);
  BenchOptions opts;
  opts.reps = 3;
  auto report = run_benchmark(dir / "empty.hkjsonl", queries, opts, hyql::FunctionRegistry::with_builtins());
  REQUIRE(report.tasks.size() == 3);
  CHECK(report.tasks[0].task == "load");
  for (const auto& t : report.tasks) {
    CHECK(t.runs_ms.size() == 3);
    CHECK(t.cardinality_constant());
    for (double ms : t.runs_ms) CHECK(ms > 0);
  }
  CHECK(report.task("a").cardinalities == std::vector<std::size_t>{0, 0, 0});
  CHECK(report.task("b").link_patterns == 2);

  auto j = report.to_json();
  CHECK(j["a"]["runs_ms"].size() == 3);
  CHECK(j["load"].contains("median_ms"));
  CHECK(j["a"]["query"] == "SELECT Model WHERE Run hasOutput Model");
  auto csv = report.to_csv();
  CHECK(csv.rfind("task,rep,elapsed_ms,cardinality\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("a query that does not parse aborts before timing") {
  TempDir dir;
  std::ofstream(dir / "d.hkjsonl").close();
  std::vector<QueryFile> queries{{"ok", "SELECT Model WHERE Run hasOutput Model"}, {"bad", "SELECT WHERE"}};
  CHECK_THROWS_AS(run_benchmark(dir / "d.hkjsonl", queries, {}, hyql::FunctionRegistry::with_builtins()),
                  hyql::ParseError);
}

TEST_CASE("command line round trip") {
  TempDir dir;
  std::string kb = (dir / "kb.journal").string();
  std::string data = (dir / "d.hkjsonl").string();

  auto r = invoke({"bootstrap", "--out", kb, "--extend", "seismic=" + (data_dir() / "ontology" / "seismic.json").string()});
  REQUIRE(r.code == cli::kOk);
  r = invoke({"generate", "--scale", "0.02", "--seed", "5", "--out", data});
  REQUIRE(r.code == cli::kOk);
  auto manifest = nlohmann::json::parse(read_text(data + ".manifest.json"));
  r = invoke({"load", "--kb", kb, "--in", data});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("nodes " + std::to_string(manifest["nodes"].get<int>())) != std::string::npos);

  r = invoke({"stats", "--kb", kb, "--format", "json"});
  REQUIRE(r.code == cli::kOk);
  auto stats = nlohmann::json::parse(r.out);
  CHECK(stats["total"] == manifest["nodes"]);
  CHECK(stats["concepts"]["Run"] == manifest["concept_counts"]["Run"]);

  r = invoke({"query", "--kb", kb, "SELECT Subarea WHERE Subarea hasTask object_detection", "--format", "json"});
  REQUIRE(r.code == cli::kOk);
  CHECK(nlohmann::json::parse(r.out)["matches"].get<int>() >= 1);

  r = invoke({"query", "--kb", kb, "--file", (data_dir() / "queries" / "benchmark" / "q4.hyql").string(), "--format", "csv"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.rfind("Model\n", 0) == 0);

  auto direct = invoke({"query", "--kb", kb, "--file", (data_dir() / "queries" / "benchmark" / "q3.hyql").string()});
  auto oracle = invoke({"query", "--kb", kb, "--oracle", "--file", (data_dir() / "queries" / "benchmark" / "q3.hyql").string()});
  CHECK(direct.out == oracle.out);

  r = invoke({"repl", "--kb", kb}, "SELECT Subarea WHERE \\\nSubarea hasTask object_detection\nSELECT nonsense\n:quit\n");
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("subarea_") != std::string::npos);
  CHECK(r.err.find("parse error") != std::string::npos);

  std::filesystem::create_directory(dir / "q");
  std::ofstream(dir / "q" / "q1.hyql") << "SELECT Subarea WHERE Subarea hasTask object_detection";
  r = invoke({"bench", "--data", data, "--reps", "2", "--queries", (dir / "q").string(), "--json",
           (dir / "b.json").string(), "--csv", (dir / "b.csv").string()});
  REQUIRE(r.code == cli::kOk);
  auto report = nlohmann::json::parse(read_text(dir / "b.json"));
  CHECK(report["q1"]["runs_ms"].size() == 2);
  CHECK(report["load"]["cardinality"] == manifest["nodes"].get<int>() + manifest["links"].get<int>() +
                                             manifest["contexts"].get<int>() + manifest["connectors"].get<int>());
}

TEST_CASE("exit codes") {
  TempDir dir;
  std::string kb = (dir / "kb.journal").string();
  REQUIRE(invoke({"bootstrap", "--out", kb}).code == cli::kOk);
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kUsage);
  CHECK(invoke({"query", "--kb", kb}).code == cli::kUsage);
  CHECK(invoke({"query", "--kb", kb, "--format", "xml", "SELECT Run WHERE Run achieves Task"}).code == cli::kUsage);
  CHECK(invoke({"query", "--kb", kb, "SELECT WHERE"}).code == cli::kParseError);
  CHECK(invoke({"query", "--kb", kb, "SELECT Run WHERE Run frobnicates Task"}).code == cli::kEvalError);
  CHECK(invoke({"query", "--kb", (dir / "missing").string(), "SELECT Run WHERE Run achieves Task"}).code == cli::kIoError);
  CHECK(invoke({"load", "--kb", kb, "--in", (dir / "missing.hkjsonl").string()}).code == cli::kIoError);
  CHECK(invoke({"query", "--kb", kb, "--alias", "broken", "SELECT Run WHERE Run achieves Task"}).code == cli::kUsage);
  auto help = invoke({"--help"});
  CHECK(help.code == cli::kOk);
  CHECK(help.out.find("bench") != std::string::npos);
}

TEST_CASE("the knowledge base path can come from the environment") {
  TempDir dir;
  std::string kb = (dir / "kb.journal").string();
  REQUIRE(invoke({"bootstrap", "--out", kb}).code == cli::kOk);
  ::setenv("HYPERKB_KB", kb.c_str(), 1);
  auto r = invoke({"stats"});
  ::unsetenv("HYPERKB_KB");
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("Total\t0") != std::string::npos);
}
