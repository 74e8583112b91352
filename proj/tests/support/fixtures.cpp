#include "fixtures.hpp"

#include <fstream>

#include "hyperkb/mlschema.hpp"
#include "paths.hpp"

namespace hyperkb::testing {

std::unique_ptr<KnowledgeBase> seismic_fixture() {
  auto kb = std::make_unique<KnowledgeBase>();
  mlschema::bootstrap_ml_schema(*kb);
  mlschema::extend_domain(*kb, mlschema::load_manifest(data_dir() / "ontology" / "seismic.json"), "seismic");
  std::ifstream in(data_dir() / "fixtures" / "seismic.hkjsonl");
  if (!in) throw IoError("missing seismic fixture");
  kb->bulk_load(in);
  return kb;
}

hyql::FunctionRegistry alias_registry() {
  auto reg = hyql::FunctionRegistry::with_builtins();
  reg.register_alias("similarSiesmic", "similarity");
  return reg;
}

}  // namespace hyperkb::testing
