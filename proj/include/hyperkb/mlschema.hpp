#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperkb/store.hpp"

namespace hyperkb::mlschema {

struct ConceptDecl {
  std::string name;
  std::optional<std::string> parent;
  /// Defaults to `<context name>:<name>`.
  std::optional<std::string> id;
  friend bool operator==(const ConceptDecl&, const ConceptDecl&) = default;
};

struct RelationDecl {
  std::string name;
  std::vector<std::string> domain;
  std::vector<std::string> range;
  friend bool operator==(const RelationDecl&, const RelationDecl&) = default;
};

struct DatatypePropertyDecl {
  std::string name;
  std::string concept_name;
  LiteralKind kind = LiteralKind::text;
  friend bool operator==(const DatatypePropertyDecl&, const DatatypePropertyDecl&) = default;
};

struct OntologyManifest {
  std::vector<ConceptDecl> concepts;
  std::vector<RelationDecl> relations;
  std::vector<DatatypePropertyDecl> datatype_properties;
  friend bool operator==(const OntologyManifest&, const OntologyManifest&) = default;
};

/// Throws hyperkb::Error on a malformed document or repeated concept names.
OntologyManifest manifest_from_json(const nlohmann::json& doc);
nlohmann::json manifest_to_json(const OntologyManifest& manifest);
OntologyManifest load_manifest(const std::filesystem::path& path);

/// The fifteen ML Schema concepts and the relations the engine queries.
const OntologyManifest& ml_schema_manifest();
/// Vocabulary added by the workflow dataset on top of ML Schema.
const OntologyManifest& pwc_manifest();

inline constexpr std::string_view kMlsContextName = "mls";
inline constexpr std::string_view kPwcContextName = "pwc";

/// Creates context `mls` with its concepts and connectors. A second call
/// changes nothing and returns the same id.
EntityId bootstrap_ml_schema(KnowledgeBase& kb);

/// Adds a child context of `mls` (or of the default context when ML Schema is
/// absent) holding the manifest's concepts, subClassOf links and connectors.
EntityId extend_domain(KnowledgeBase& kb, const OntologyManifest& manifest, const std::string& context_name);

/// ML Schema plus the dataset vocabulary; what the generated datasets expect.
EntityId bootstrap_dataset_vocabulary(KnowledgeBase& kb);

/// Concept node named `name`, if there is exactly one.
std::optional<EntityId> find_concept(const Snapshot& snap, std::string_view name);

/// Instances that ended up inside the `mls` context.
std::vector<std::string> check_context_separation(const Snapshot& snap);

/// Links whose ends fall outside the domain/range declared on their
/// connector. Informational only; nothing enforces these.
std::vector<std::string> audit_domain_range(const Snapshot& snap);

}  // namespace hyperkb::mlschema
