#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hyperkb/bench.hpp"
#include "hyperkb/exec.hpp"
#include "hyperkb/hyql/parser.hpp"
#include "hyperkb/ingest.hpp"
#include "hyperkb/mlschema.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace hyperkb;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Literal to_literal(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return Literal(v.cast<bool>());
  if (py::isinstance<py::int_>(v)) return Literal(v.cast<std::int64_t>());
  if (py::isinstance<py::float_>(v)) return Literal(v.cast<double>());
  if (py::isinstance<py::str>(v)) return Literal(v.cast<std::string>());
  throw py::type_error("property values must be str, int, float or bool");
}

PropertyMap to_properties(const py::dict& d) {
  PropertyMap out;
  for (auto [k, v] : d) out.emplace(k.cast<std::string>(), to_literal(v));
  return out;
}

std::optional<EntityId> opt_id(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return EntityId::parse(*s);
}

hyql::FunctionRegistry registry_with(const std::map<std::string, std::string>& aliases) {
  auto reg = hyql::FunctionRegistry::with_builtins();
  for (const auto& [alias, target] : aliases) reg.register_alias(alias, target);
  return reg;
}

EntityId connector_id(const Snapshot& s, const std::string& ref) {
  if (ref.find(':') != std::string::npos) return EntityId::parse(ref);
  auto named = s.connectors_named(ref);
  if (named.empty()) throw NotFoundError("no connector named " + ref);
  return named.front()->id;
}

EntityId concept_id(const Snapshot& s, const std::string& ref) {
  if (ref.find(':') != std::string::npos) return EntityId::parse(ref);
  auto c = mlschema::find_concept(s, ref);
  if (!c) throw NotFoundError("no concept named " + ref);
  return *c;
}

py::dict load_report(const LoadReport& r) {
  py::dict d;
  d["nodes"] = r.nodes;
  d["links"] = r.links;
  d["connectors"] = r.connectors;
  d["contexts"] = r.contexts;
  d["elapsed_ms"] = r.elapsed_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hyperkb, m) {
  m.doc() = "Hyperknowledge store, HyQL queries, dataset generation and benchmarking";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<hyql::ParseError>(m, "ParseError", error);
  py::register_exception<hyql::EvalError>(m, "EvalError", error);
  py::register_exception<LoadError>(m, "LoadError", error);
  py::register_exception<NotFoundError>(m, "NotFoundError", error);
  py::register_exception<exec::ExecError>(m, "ExecError", error);

  py::class_<KnowledgeBase>(m, "KnowledgeBase")
      .def(py::init<>())
      .def_static("open", &KnowledgeBase::open, py::arg("journal"), "Open or create a journal-backed store.")
      .def_property_readonly("generation", &KnowledgeBase::generation)
      .def("bootstrap_ml_schema", [](KnowledgeBase& kb) { return mlschema::bootstrap_ml_schema(kb).str(); })
      .def("bootstrap_dataset_vocabulary",
           [](KnowledgeBase& kb) { return mlschema::bootstrap_dataset_vocabulary(kb).str(); })
      .def(
          "extend",
          [](KnowledgeBase& kb, const fs::path& manifest, const std::string& context) {
            return mlschema::extend_domain(kb, mlschema::load_manifest(manifest), context).str();
          },
          py::arg("manifest"), py::arg("context"))
      .def(
          "add_context",
          [](KnowledgeBase& kb, const std::string& name, const std::optional<std::string>& parent) {
            return kb.add_context(name, opt_id(parent)).str();
          },
          py::arg("name"), py::arg("parent") = py::none())
      .def(
          "add_node",
          [](KnowledgeBase& kb, const std::optional<std::string>& id, const py::dict& properties,
             const std::optional<std::string>& context) {
            return kb.add_node(opt_id(id), to_properties(properties), {}, opt_id(context)).str();
          },
          py::arg("id") = py::none(), py::arg("properties") = py::dict(), py::arg("context") = py::none())
      .def(
          "relate",
          [](KnowledgeBase& kb, const std::string& subject, const std::string& connector, const std::string& object,
             const std::optional<std::string>& context) {
            auto conn = connector_id(kb.snapshot(), connector);
            return kb.relate(EntityId::parse(subject), conn, EntityId::parse(object), opt_id(context)).str();
          },
          py::arg("subject"), py::arg("connector"), py::arg("object"), py::arg("context") = py::none(),
          "Connector by id or by name.")
      .def(
          "assert_instance",
          [](KnowledgeBase& kb, const std::string& instance, const std::string& concept_ref,
             const std::optional<std::string>& context) {
            auto c = concept_id(kb.snapshot(), concept_ref);
            return kb.assert_instance(EntityId::parse(instance), c, opt_id(context)).str();
          },
          py::arg("instance"), py::arg("concept"), py::arg("context") = py::none(), "Concept by id or by name.")
      .def(
          "load_text",
          [](KnowledgeBase& kb, const std::string& text) {
            std::istringstream in(text);
            return load_report(kb.bulk_load(in));
          },
          py::arg("text"), "Load HKJSONL records atomically.")
      .def(
          "load_file",
          [](KnowledgeBase& kb, const fs::path& path) {
            std::ifstream in(path);
            if (!in) throw IoError("cannot read " + path.string());
            return load_report(kb.bulk_load(in));
          },
          py::arg("path"))
      .def(
          "query",
          [](const KnowledgeBase& kb, const std::string& text, bool oracle,
             const std::map<std::string, std::string>& aliases) {
            auto snap = kb.snapshot();
            auto reg = registry_with(aliases);
            auto rq = hyql::resolve(hyql::parse(text), snap, reg);
            hyql::ResultSet rs;
            {
              py::gil_scoped_release release;
              rs = oracle ? hyql::oracle_evaluate(rq, snap, reg) : hyql::evaluate(rq, snap, reg);
            }
            return to_python(hyql::result_to_json(rs));
          },
          py::arg("text"), py::arg("oracle") = false, py::arg("aliases") = std::map<std::string, std::string>{})
      .def("stats",
           [](const KnowledgeBase& kb) {
             auto stats = ingest::concept_stats(kb.snapshot());
             py::dict concepts;
             for (const auto& [name, n] : stats.per_concept) concepts[py::str(name)] = n;
             py::dict d;
             d["concepts"] = concepts;
             d["total"] = stats.total;
             return d;
           })
      .def("node",
           [](const KnowledgeBase& kb, const std::string& id) -> py::object {
             auto snap = kb.snapshot();
             const Node* n = snap.find_node(EntityId::parse(id));
             if (!n) return py::none();
             py::dict props;
             for (const auto& [k, v] : n->properties)
               props[py::str(k)] = std::visit([](const auto& x) { return py::cast(x); }, v.value());
             return props;
           })
      .def("audit", [](const KnowledgeBase& kb) { return audit_indexes(kb.snapshot()); })
      .def(
          "bind_executor",
          [](KnowledgeBase& kb, const std::string& implementation, const std::string& command_template,
             const fs::path& working_dir, double timeout) {
            exec::bind_executor(kb, {EntityId::parse(implementation), command_template, working_dir, timeout});
          },
          py::arg("implementation"), py::arg("template"), py::arg("working_dir") = fs::path(),
          py::arg("timeout") = 60.0)
      .def(
          "execute",
          [](KnowledgeBase& kb, const std::string& implementation, const std::string& input,
             const std::string& context) {
            exec::ExecutionRecord rec;
            {
              py::gil_scoped_release release;
              rec = exec::execute_component(kb, EntityId::parse(implementation), EntityId::parse(input),
                                            EntityId::parse(context));
            }
            py::dict d;
            d["run"] = rec.run.str();
            d["status"] = rec.status;
            d["exit_code"] = rec.exit_code;
            d["timed_out"] = rec.timed_out;
            std::vector<std::string> outputs;
            for (const auto& o : rec.outputs) outputs.push_back(o.str());
            d["outputs"] = outputs;
            return d;
          },
          py::arg("implementation"), py::arg("input"), py::arg("context"));

  m.def(
      "parse", [](const std::string& text) { return to_python(hyql::to_json(hyql::parse(text))); },
      py::arg("text"), "Parse a HyQL query into its JSON syntax tree.");
  m.def(
      "format_query", [](const std::string& text) { return hyql::to_hyql(hyql::parse(text)); }, py::arg("text"));
  m.def(
      "link_patterns", [](const std::string& text) { return hyql::link_pattern_count(hyql::parse(text)); },
      py::arg("text"));
  m.def("reference_counts", &ingest::reference_counts);
  m.def(
      "generate",
      [](const fs::path& out, const std::string& scale, std::uint64_t seed) {
        std::ofstream file(out);
        if (!file) throw IoError("cannot write " + out.string());
        return to_python(ingest::generate(ingest::GeneratorSpec::reference(seed, ingest::Scale::parse(scale)), file).to_json());
      },
      py::arg("out"), py::arg("scale") = "1.0", py::arg("seed") = 31256, "Write a synthetic dataset; returns its manifest.");
  m.def(
      "benchmark",
      [](const fs::path& dataset, const fs::path& queries, std::size_t reps,
         const std::map<std::string, std::string>& aliases) {
        bench::BenchOptions opts;
        opts.reps = reps;
        auto reg = registry_with(aliases);
        auto files = bench::load_query_dir(queries);
        bench::BenchReport report;
        {
          py::gil_scoped_release release;
          report = bench::run_benchmark(dataset, files, opts, reg);
        }
        return to_python(report.to_json());
      },
      py::arg("dataset"), py::arg("queries"), py::arg("reps") = 100,
      py::arg("aliases") = std::map<std::string, std::string>{});
}
