#include "hyperkb/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyperkb/bench.hpp"
#include "hyperkb/exec.hpp"
#include "hyperkb/hyql/eval.hpp"
#include "hyperkb/hyql/parser.hpp"
#include "hyperkb/ingest.hpp"
#include "hyperkb/mlschema.hpp"

namespace hyperkb::cli {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

/// Opens an existing journal. Fails rather than creating one.
std::unique_ptr<KnowledgeBase> open_existing(const std::string& path) {
  if (path.empty()) throw IoError("no knowledge base given (--kb or HYPERKB_KB)");
  if (!fs::exists(path)) throw IoError("no such knowledge base: " + path);
  return KnowledgeBase::open(path);
}

hyql::FunctionRegistry registry_with(const std::vector<std::string>& aliases) {
  auto reg = hyql::FunctionRegistry::with_builtins();
  for (const auto& a : aliases) {
    auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == a.size())
      throw CLI::ValidationError("--alias", "expected NAME=TARGET, got '" + a + "'");
    reg.register_alias(a.substr(0, eq), a.substr(eq + 1));
  }
  return reg;
}

hyql::OutputFormat output_format(const std::string& name) {
  try {
    return hyql::parse_output_format(name);
  } catch (const Error& e) {
    throw CLI::ValidationError("--format", e.what());
  }
}

void print_warnings(const hyql::ResultSet& rs, std::ostream& err) {
  for (const auto& w : rs.warnings) err << "warning: " << w << "\n";
}

struct Options {
  std::string kb;
  std::string out;
  std::string in;
  std::string scale = "1.0";
  std::uint64_t seed = 31256;
  std::string manifest;
  std::string query_text;
  std::string query_file;
  std::string format = "text";
  std::vector<std::string> aliases;
  bool oracle = false;
  std::size_t reps = 100;
  std::string queries_dir;
  std::string json_out;
  std::string csv_out;
  std::vector<std::string> extend;
  std::string triples;
  std::string concepts;
  std::string ns = "pwc";
  std::string context;
  std::string implementation;
  std::string command_template;
  std::string workdir;
  double timeout = 60.0;
  std::string input;
};

int cmd_bootstrap(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw IoError("--out is required");
  auto kb = KnowledgeBase::open(o.out);
  EntityId mls = mlschema::bootstrap_ml_schema(*kb);
  EntityId pwc = mlschema::bootstrap_dataset_vocabulary(*kb);
  out << "context " << mls.str() << "\ncontext " << pwc.str() << "\n";
  for (const auto& spec : o.extend) {
    auto eq = spec.find('=');
    std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (kb->snapshot().context_named(name)) {
      out << "context ctx:" << name << " (exists)\n";
      continue;
    }
    EntityId ctx = mlschema::extend_domain(*kb, mlschema::load_manifest(path), name);
    out << "context " << ctx.str() << "\n";
  }
  auto c = kb->snapshot().counts();
  out << "nodes " << c.nodes << "\nlinks " << c.links << "\nconnectors " << c.connectors << "\ncontexts "
      << c.contexts << "\n";
  return kOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw IoError("--out is required");
  auto spec = ingest::GeneratorSpec::reference(o.seed, ingest::Scale::parse(o.scale));
  std::ofstream data(o.out, std::ios::binary | std::ios::trunc);
  if (!data) throw IoError("cannot write " + o.out);
  auto manifest = ingest::generate(spec, data);
  data.close();
  if (!data) throw IoError("write failed: " + o.out);
  std::string manifest_path = o.manifest.empty() ? o.out + ".manifest.json" : o.manifest;
  write_file(manifest_path, manifest.to_json().dump(2) + "\n");
  out << "nodes " << manifest.nodes << "\nlinks " << manifest.links << "\ncontexts " << manifest.contexts
      << "\nmanifest " << manifest_path << "\n";
  return kOk;
}

int cmd_load(const Options& o, std::ostream& out) {
  if (o.in.empty()) throw IoError("--in is required");
  auto kb = open_existing(o.kb);
  std::ifstream in(o.in, std::ios::binary);
  if (!in) throw IoError("cannot read " + o.in);
  LoadReport r = kb->bulk_load(in);
  out << "nodes " << r.nodes << "\nlinks " << r.links << "\nconnectors " << r.connectors << "\ncontexts "
      << r.contexts << "\nelapsed_ms " << r.elapsed_ms << "\n";
  return kOk;
}

int run_one_query(const std::string& text, const Snapshot& snap, const hyql::FunctionRegistry& reg,
                  hyql::OutputFormat format, bool oracle, std::ostream& out, std::ostream& err) {
  hyql::Query ast = hyql::parse(text);
  hyql::ResolvedQuery rq = hyql::resolve(ast, snap, reg);
  hyql::ResultSet rs = oracle ? hyql::oracle_evaluate(rq, snap, reg) : hyql::evaluate(rq, snap, reg);
  print_warnings(rs, err);
  out << hyql::format_result(rs, format);
  return kOk;
}

int cmd_query(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.query_text.empty() == o.query_file.empty()) throw CLI::ValidationError("query", "give a query or --file");
  std::string text = o.query_file.empty() ? o.query_text : read_file(o.query_file);
  auto format = output_format(o.format);
  auto reg = registry_with(o.aliases);
  auto kb = open_existing(o.kb);
  return run_one_query(text, kb->snapshot(), reg, format, o.oracle, out, err);
}

int cmd_repl(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
  auto reg = registry_with(o.aliases);
  auto kb = open_existing(o.kb);
  auto format = output_format(o.format);
  std::string line;
  std::string pending;
  out << "hyql> " << std::flush;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\\') {
      pending += line.substr(0, line.size() - 1) + "\n";
      out << "...> " << std::flush;
      continue;
    }
    std::string text = pending + line;
    pending.clear();
    auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos) {
      out << "hyql> " << std::flush;
      continue;
    }
    text = text.substr(first);
    if (text == ":quit" || text == ":q") break;
    if (text == ":help") {
      out << "Enter a HyQL query on one line (end a line with \\ to continue it).\n"
             ":format text|json|csv  change output format\n:stats  entity counts\n:quit\n";
    } else if (text.rfind(":format", 0) == 0) {
      try {
        format = hyql::parse_output_format(text.size() > 8 ? text.substr(8) : "");
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
      }
    } else if (text == ":stats") {
      auto c = kb->snapshot().counts();
      out << "nodes " << c.nodes << " links " << c.links << " connectors " << c.connectors << " contexts "
          << c.contexts << "\n";
    } else {
      try {
        run_one_query(text, kb->snapshot(), reg, format, false, out, err);
      } catch (const hyql::ParseError& e) {
        err << "parse error: " << e.what() << "\n";
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
      }
    }
    out << "hyql> " << std::flush;
  }
  out << "\n";
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  if (o.in.empty()) throw IoError("--data is required");
  if (o.queries_dir.empty()) throw IoError("--queries is required");
  auto reg = registry_with(o.aliases);
  bench::BenchOptions opts;
  opts.reps = o.reps;
  if (!o.kb.empty()) {
    if (!fs::exists(o.kb)) throw IoError("no such knowledge base: " + o.kb);
    opts.base_journal = o.kb;
  }
  auto queries = bench::load_query_dir(o.queries_dir);
  auto report = bench::run_benchmark(o.in, queries, opts, reg);
  std::string json = report.to_json().dump(2) + "\n";
  if (o.json_out.empty())
    out << json;
  else
    write_file(o.json_out, json);
  if (!o.csv_out.empty()) write_file(o.csv_out, report.to_csv());
  if (!o.json_out.empty()) {
    for (const auto& t : report.tasks)
      out << t.task << "\tmedian_ms " << t.summary.median << "\tmean_ms " << t.summary.mean << "\tcardinality "
          << (t.cardinalities.empty() ? 0 : t.cardinalities.front()) << "\n";
  }
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  auto kb = open_existing(o.kb);
  Snapshot snap = kb->snapshot();
  auto stats = ingest::concept_stats(snap);
  if (o.format == "json") {
    nlohmann::ordered_json j;
    for (const auto& [name, n] : stats.per_concept) j["concepts"][name] = n;
    j["total"] = stats.total;
    auto c = snap.counts();
    j["nodes"] = c.nodes;
    j["links"] = c.links;
    j["connectors"] = c.connectors;
    j["contexts"] = c.contexts;
    out << j.dump(2) << "\n";
    return kOk;
  }
  if (o.format != "text") throw CLI::ValidationError("--format", "stats supports text or json");
  for (const auto& [name, n] : stats.per_concept) out << name << "\t" << n << "\n";
  out << "Total\t" << stats.total << "\n";
  return kOk;
}

int cmd_import(const Options& o, std::ostream& out) {
  if (o.triples.empty() || o.concepts.empty() || o.out.empty())
    throw IoError("--triples, --concepts and --out are required");
  auto kb = open_existing(o.kb);
  std::ifstream t(o.triples);
  if (!t) throw IoError("cannot read " + o.triples);
  std::ifstream c(o.concepts);
  if (!c) throw IoError("cannot read " + o.concepts);
  auto triples = ingest::read_triples(t);
  auto concepts = ingest::read_concept_map(c);
  std::ofstream dest(o.out, std::ios::binary | std::ios::trunc);
  if (!dest) throw IoError("cannot write " + o.out);
  ingest::ImportOptions opts;
  opts.ns = o.ns;
  opts.context_name = o.context;
  auto r = ingest::import_triples(triples, concepts, kb->snapshot(), dest, opts);
  out << "nodes " << r.nodes << "\nlinks " << r.links << "\nproperties " << r.properties << "\n";
  return kOk;
}

int cmd_bind(const Options& o, std::ostream& out) {
  auto kb = open_existing(o.kb);
  exec::ExecutorBinding b;
  b.implementation = EntityId::parse(o.implementation);
  b.command_template = o.command_template;
  b.working_dir = o.workdir;
  b.timeout_seconds = o.timeout;
  exec::bind_executor(*kb, b);
  out << "bound " << b.implementation.str() << "\n";
  return kOk;
}

int cmd_execute(const Options& o, std::ostream& out) {
  auto kb = open_existing(o.kb);
  auto rec = exec::execute_component(*kb, EntityId::parse(o.implementation), EntityId::parse(o.input),
                                     EntityId::parse(o.context));
  out << "run " << rec.run.str() << "\nstatus " << rec.status << "\nexit_code " << rec.exit_code << "\n";
  for (const auto& id : rec.outputs) out << "output " << id.str() << "\n";
  return rec.status == "succeeded" ? kOk : kEvalError;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperknowledge base for machine learning workflows", args.empty() ? "hyperkb" : args.front()};
  app.require_subcommand(1);
  Options o;
  if (const char* env = std::getenv("HYPERKB_KB")) o.kb = env;

  auto kb_opt = [&](CLI::App* sub) { sub->add_option("--kb", o.kb, "knowledge base journal (default $HYPERKB_KB)"); };
  auto alias_opt = [&](CLI::App* sub) {
    sub->add_option("--alias", o.aliases, "extra function name, NAME=TARGET")->take_all();
  };

  auto* bootstrap = app.add_subcommand("bootstrap", "create a knowledge base with the ML Schema vocabulary");
  bootstrap->add_option("--out", o.out, "journal to create or extend")->required();
  bootstrap->add_option("--extend", o.extend, "domain manifest, [NAME=]PATH");

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--scale", o.scale, "fraction of the full dataset (decimal or a/b)");
  generate->add_option("--seed", o.seed, "random seed");
  generate->add_option("--out", o.out, "HKJSONL output")->required();
  generate->add_option("--manifest", o.manifest, "manifest path (default OUT.manifest.json)");

  auto* load = app.add_subcommand("load", "bulk-load HKJSONL into a knowledge base");
  kb_opt(load);
  load->add_option("--in", o.in, "HKJSONL input")->required();

  auto* query = app.add_subcommand("query", "evaluate one HyQL query");
  kb_opt(query);
  query->add_option("text", o.query_text, "query text");
  query->add_option("--file", o.query_file, "read the query from a .hyql file");
  query->add_option("--format", o.format, "text, json or csv");
  query->add_flag("--oracle", o.oracle, "use the brute-force evaluator");
  alias_opt(query);

  auto* repl = app.add_subcommand("repl", "interactive queries");
  kb_opt(repl);
  repl->add_option("--format", o.format, "text, json or csv");
  alias_opt(repl);

  auto* benchmark = app.add_subcommand("bench", "time dataset loading and queries");
  kb_opt(benchmark);
  benchmark->add_option("--data", o.in, "HKJSONL dataset")->required();
  benchmark->add_option("--reps", o.reps, "repetitions per task")->check(CLI::PositiveNumber);
  benchmark->add_option("--queries", o.queries_dir, "directory of .hyql files")->required();
  benchmark->add_option("--json", o.json_out, "write the JSON report here instead of stdout");
  benchmark->add_option("--csv", o.csv_out, "write per-run CSV here");
  alias_opt(benchmark);

  auto* stats = app.add_subcommand("stats", "instances per concept");
  kb_opt(stats);
  stats->add_option("--format", o.format, "text or json");

  auto* import = app.add_subcommand("import", "convert tab-separated triples to HKJSONL");
  kb_opt(import);
  import->add_option("--triples", o.triples, "subject/predicate/object/kind TSV")->required();
  import->add_option("--concepts", o.concepts, "entity/concept TSV")->required();
  import->add_option("--out", o.out, "HKJSONL output")->required();
  import->add_option("--ns", o.ns, "namespace for bare entity names");
  import->add_option("--context", o.context, "context to create for the entities");

  auto* bind = app.add_subcommand("bind", "attach a command template to an implementation");
  kb_opt(bind);
  bind->add_option("--implementation", o.implementation, "implementation node id")->required();
  bind->add_option("--template", o.command_template, "command with {input} and {output}")->required();
  bind->add_option("--workdir", o.workdir, "working directory");
  bind->add_option("--timeout", o.timeout, "seconds");

  auto* execute = app.add_subcommand("execute", "run a bound implementation and record the run");
  kb_opt(execute);
  execute->add_option("--implementation", o.implementation, "implementation node id")->required();
  execute->add_option("--input", o.input, "input node id")->required();
  execute->add_option("--context", o.context, "context receiving the run")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("hyperkb");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*bootstrap) return cmd_bootstrap(o, out);
    if (*generate) return cmd_generate(o, out);
    if (*load) return cmd_load(o, out);
    if (*query) return cmd_query(o, out, err);
    if (*repl) return cmd_repl(o, in, out, err);
    if (*benchmark) return cmd_bench(o, out);
    if (*stats) return cmd_stats(o, out);
    if (*import) return cmd_import(o, out);
    if (*bind) return cmd_bind(o, out);
    if (*execute) return cmd_execute(o, out);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const hyql::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const LoadError& e) {
    err << "load error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kEvalError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
  return kUsage;
}

}  // namespace hyperkb::cli
