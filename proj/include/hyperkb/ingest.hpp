#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperkb/store.hpp"

namespace hyperkb::ingest {

// ---------------------------------------------------------------------------
// Triple import

enum class ObjectKind { resource, literal };

struct TripleRecord {
  std::string subject;
  std::string predicate;
  std::string object;
  ObjectKind kind = ObjectKind::resource;
  /// Literal type from the kind column; empty means inferred.
  std::string literal_type;
};

/// `subject\tpredicate\tobject\tkind` lines. Kind is `resource`, `literal`,
/// or a typed literal: `text`, `number`, `integer`, `boolean`. Blank lines and
/// lines starting with '#' are skipped. Throws LoadError.
std::vector<TripleRecord> read_triples(std::istream& in);

/// `entity\tConceptName` lines.
std::map<std::string, std::string> read_concept_map(std::istream& in);

/// Value of a literal object. Untyped values become integers or numbers when
/// they parse as such, text otherwise.
Literal literal_value(const TripleRecord& t);

struct ImportOptions {
  /// Namespace for entity names without one.
  std::string ns = "pwc";
  /// Emitted as a context record when non-empty; entities are placed in it.
  std::string context_name;
  std::string parent_context_name = "pwc";
};

struct ImportReport {
  std::size_t nodes = 0;
  std::size_t links = 0;
  std::size_t properties = 0;
};

/// Writes HKJSONL for `triples`. Concepts and connectors are looked up by
/// name in `vocabulary`. Every resource must be classified by `concepts`.
/// Throws Error on unknown concepts or predicates and on conflicting literal
/// values for one (subject, predicate).
ImportReport import_triples(std::span<const TripleRecord> triples, const std::map<std::string, std::string>& concepts,
                            const Snapshot& vocabulary, std::ostream& out, const ImportOptions& options = {});

// ---------------------------------------------------------------------------
// Synthetic dataset

/// Non-negative rational written as a decimal ("0.05", "1e-2") or a fraction
/// ("1/20").
struct Scale {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  static Scale parse(std::string_view text);
  std::string str() const;
  /// round(full * scale), halves rounded up.
  std::uint64_t apply(std::uint64_t full) const;
};

/// The fifteen concepts and their full-size instance counts, in table order.
const std::vector<std::pair<std::string, std::uint64_t>>& reference_counts();

struct GeneratorSpec {
  std::uint64_t seed = 31256;
  Scale scale;
  /// Full-size counts per concept name; scaled before use.
  std::map<std::string, std::uint64_t> concept_counts;

  /// Reference dataset counts at scale 1.
  static GeneratorSpec reference(std::uint64_t seed = 31256, Scale scale = {});
  /// Scaled count, never below 1 for a positive full count.
  std::uint64_t count(const std::string& concept_name) const;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::string scale;
  /// Instances per concept, subclasses included (what `stats` reports).
  std::map<std::string, std::uint64_t> concept_counts;
  std::uint64_t nodes = 0;
  std::uint64_t links = 0;
  std::uint64_t contexts = 0;
  std::uint64_t connectors = 0;
  std::map<std::string, std::uint64_t> links_per_connector;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

inline constexpr std::string_view kDatasetContextName = "mlwfd";

/// Streams a dataset shaped like the workflow corpus. Load it into a store
/// prepared with mlschema::bootstrap_dataset_vocabulary. Throws Error when the
/// scale leaves no runs.
DatasetManifest generate(const GeneratorSpec& spec, std::ostream& out);

struct ConceptStats {
  /// Reference concepts in their canonical order, then any other concept with instances,
  /// by name. Counts include subclass instances.
  std::vector<std::pair<std::string, std::uint64_t>> per_concept;
  /// Distinct instances across all listed concepts.
  std::uint64_t total = 0;
};

ConceptStats concept_stats(const Snapshot& snap);

}  // namespace hyperkb::ingest
