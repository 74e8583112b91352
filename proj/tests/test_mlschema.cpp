#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyperkb/ingest.hpp"
#include "hyperkb/mlschema.hpp"
#include "paths.hpp"

using namespace hyperkb;
using hyperkb::testing::data_dir;

TEST_CASE("ML Schema bootstrap creates the fifteen concepts once") {
  KnowledgeBase kb;
  auto ctx = mlschema::bootstrap_ml_schema(kb);
  auto gen = kb.generation();
  CHECK(mlschema::bootstrap_ml_schema(kb) == ctx);
  CHECK(kb.generation() == gen);

  Snapshot s = kb.snapshot();
  const char* names[] = {"Task",
                         "Algorithm",
                         "Implementation",
                         "ImplementationCharacteristic",
                         "Run",
                         "Model",
                         "ModelCharacteristic",
                         "ModelEvaluation",
                         "EvaluationMeasure",
                         "Data",
                         "Dataset",
                         "DataCharacteristic",
                         "DatasetCharacteristic",
                         "Area",
                         "Subarea"};
  std::size_t found = 0;
  for (const char* n : names) {
    auto c = mlschema::find_concept(s, n);
    REQUIRE_MESSAGE(c.has_value(), n);
    CHECK(s.is_concept(*c));
    ++found;
  }
  CHECK(found == 15);
  CHECK(s.find_context(ctx)->name == "mls");
  for (const char* r :
       {"achieves", "realizes", "implements", "hasInput", "hasOutput", "hasQuality", "specifiedBy", "hasTask", "hasSubarea"})
    CHECK_MESSAGE(s.connectors_named(r).size() == 1, r);
}

TEST_CASE("a dataset is a kind of data") {
  KnowledgeBase kb;
  mlschema::bootstrap_ml_schema(kb);
  auto s = kb.snapshot();
  auto data = *mlschema::find_concept(s, "Data");
  auto dataset = *mlschema::find_concept(s, "Dataset");
  auto d = kb.add_node(EntityId::parse("x:imagenet"));
  kb.assert_instance(d, dataset);
  s = kb.snapshot();
  CHECK(s.instances_of(data).contains(d));
  CHECK(s.instances_of(dataset).contains(d));
}

TEST_CASE("manifest files mirror the built-in vocabularies") {
  CHECK(mlschema::load_manifest(data_dir() / "ontology" / "mls.json") == mlschema::ml_schema_manifest());
  CHECK(mlschema::load_manifest(data_dir() / "ontology" / "pwc.json") == mlschema::pwc_manifest());
  auto m = mlschema::ml_schema_manifest();
  CHECK(mlschema::manifest_from_json(mlschema::manifest_to_json(m)) == m);
}

TEST_CASE("malformed manifests are rejected") {
  CHECK_THROWS_AS(mlschema::manifest_from_json(nlohmann::json::parse(R"({"concepts":[{"name":"A"},{"name":"A"}]})")),
                  Error);
  CHECK_THROWS_AS(mlschema::manifest_from_json(nlohmann::json::parse(R"({"concepts":[{"parent":"A"}]})")), Error);
  CHECK_THROWS_AS(mlschema::manifest_from_json(nlohmann::json::parse(R"([1,2])")), Error);
}

TEST_CASE("domain extensions live in a child context of ML Schema") {
  KnowledgeBase kb;
  auto mls = mlschema::bootstrap_ml_schema(kb);
  auto ctx = mlschema::extend_domain(kb, mlschema::load_manifest(data_dir() / "ontology" / "seismic.json"), "seismic");
  Snapshot s = kb.snapshot();
  CHECK(s.find_context(ctx)->parent == mls);
  auto seismic = *mlschema::find_concept(s, "Seismic");
  auto data = *mlschema::find_concept(s, "Data");
  auto v = kb.add_node(EntityId::parse("x:parihaka"));
  kb.assert_instance(v, seismic);
  s = kb.snapshot();
  CHECK(s.instances_of(data).contains(v));
  CHECK(s.connectors_named("hasBasin").size() == 1);
  CHECK_THROWS(mlschema::extend_domain(kb, mlschema::load_manifest(data_dir() / "ontology" / "seismic.json"), "seismic"));
}

TEST_CASE("instances stay out of the vocabulary context") {
  KnowledgeBase kb;
  auto mls = mlschema::bootstrap_ml_schema(kb);
  auto run = *mlschema::find_concept(kb.snapshot(), "Run");
  auto ok = kb.add_node(EntityId::parse("x:run_ok"));
  kb.assert_instance(ok, run);
  CHECK(mlschema::check_context_separation(kb.snapshot()).empty());
  auto misplaced = kb.add_node(EntityId::parse("x:run_bad"), {}, {}, mls);
  kb.assert_instance(misplaced, run);
  auto problems = mlschema::check_context_separation(kb.snapshot());
  REQUIRE(problems.size() == 1);
  CHECK(problems.front().find("x:run_bad") != std::string::npos);
}

TEST_CASE("domain and range audit flags misuse without blocking it") {
  KnowledgeBase kb;
  mlschema::bootstrap_ml_schema(kb);
  auto s = kb.snapshot();
  auto run = kb.add_node(EntityId::parse("x:r"));
  kb.assert_instance(run, *mlschema::find_concept(s, "Run"));
  auto model = kb.add_node(EntityId::parse("x:m"));
  kb.assert_instance(model, *mlschema::find_concept(s, "Model"));
  auto has_output = s.connectors_named("hasOutput").front()->id;
  auto has_input = s.connectors_named("hasInput").front()->id;
  kb.relate(run, has_output, model);
  CHECK(mlschema::audit_domain_range(kb.snapshot()).empty());
  kb.relate(run, has_input, model);
  CHECK(mlschema::audit_domain_range(kb.snapshot()).size() == 1);
}

TEST_CASE("generated data respects declared domains and ranges") {
  KnowledgeBase kb;
  mlschema::bootstrap_dataset_vocabulary(kb);
  std::stringstream data;
  ingest::generate(ingest::GeneratorSpec::reference(3, ingest::Scale::parse("0.02")), data);
  kb.bulk_load(data);
  Snapshot s = kb.snapshot();
  CHECK(mlschema::audit_domain_range(s).empty());
  CHECK(mlschema::check_context_separation(s).empty());
}
