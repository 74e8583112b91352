#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperkb/hkjsonl.hpp"
#include "hyperkb/model.hpp"

namespace hyperkb {

using IdSet = std::set<EntityId>;

struct NodeConnector {
  EntityId node;
  EntityId connector;
  friend bool operator==(const NodeConnector&, const NodeConnector&) = default;
};

struct NodeConnectorHash {
  std::size_t operator()(const NodeConnector& k) const noexcept {
    std::size_t h = std::hash<EntityId>{}(k.node);
    return h ^ (std::hash<EntityId>{}(k.connector) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};

/// Node ids per value of one property name. Integers and numbers share the
/// numeric order.
struct PropertyIndex {
  std::map<double, IdSet> numeric;
  std::map<std::string, IdSet, std::less<>> text;
  std::map<bool, IdSet> boolean;

  bool empty() const { return numeric.empty() && text.empty() && boolean.empty(); }
  friend bool operator==(const PropertyIndex&, const PropertyIndex&) = default;
};

/// Secondary indexes, derivable from the primary maps. Empty sets are never
/// stored, so two index sets over the same data compare equal.
struct IndexSet {
  std::unordered_map<EntityId, IdSet> by_connector;
  /// (node bound to `subject`, connector) -> link ids
  std::unordered_map<NodeConnector, IdSet, NodeConnectorHash> by_subject;
  /// (node bound to `object`, connector) -> link ids
  std::unordered_map<NodeConnector, IdSet, NodeConnectorHash> by_object;
  /// node bound under any role -> link ids
  std::unordered_map<EntityId, IdSet> by_node;
  /// concept -> instances, closed over subClassOf
  std::unordered_map<EntityId, IdSet> by_concept;
  std::unordered_map<std::string, PropertyIndex> by_property;
  /// local part of the id, and the `name` text property -> node ids
  std::unordered_map<std::string, IdSet> by_label;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;
};

/// Recomputes every index from the primary maps.
IndexSet rebuild_indexes(const std::unordered_map<EntityId, Node>& nodes,
                         const std::unordered_map<EntityId, Link>& links);

/// Human-readable differences between two index sets; empty when equal.
std::vector<std::string> diff_indexes(const IndexSet& expected, const IndexSet& actual);

namespace detail {
class StoreState;
}

struct EntityCounts {
  std::size_t nodes = 0;  // excludes context nodes
  std::size_t links = 0;
  std::size_t connectors = 0;
  std::size_t contexts = 0;
  friend bool operator==(const EntityCounts&, const EntityCounts&) = default;
};

struct LoadReport {
  std::size_t nodes = 0;
  std::size_t links = 0;
  std::size_t connectors = 0;
  std::size_t contexts = 0;
  double elapsed_ms = 0.0;
};

/// Immutable view of a knowledge base at one generation. Cheap to copy and
/// safe to share between threads.
class Snapshot {
 public:
  explicit Snapshot(std::shared_ptr<const detail::StoreState> state) : state_(std::move(state)) {}

  std::uint64_t generation() const;
  EntityCounts counts() const;

  const Node* find_node(const EntityId& id) const;
  const Link* find_link(const EntityId& id) const;
  const Connector* find_connector(const EntityId& id) const;
  const Context* find_context(const EntityId& id) const;
  /// All connectors with this name, in id order.
  std::vector<const Connector*> connectors_named(std::string_view name) const;
  const Context* context_named(std::string_view name) const;

  const IdSet& links_of_connector(const EntityId& connector) const;
  const IdSet& links_from(const EntityId& subject, const EntityId& connector) const;
  const IdSet& links_to(const EntityId& object, const EntityId& connector) const;
  const IdSet& links_touching(const EntityId& node) const;
  /// Instances of `concept_id` and of all its subconcepts.
  const IdSet& instances_of(const EntityId& concept_id) const;
  /// Nodes whose local id or `name` property equals `label`.
  const IdSet& nodes_labelled(std::string_view label) const;
  /// Nodes whose `property` compares true against `value`. Only values of a
  /// compatible kind are traversed.
  std::vector<EntityId> nodes_where(std::string_view property, CompareOp op, const Literal& value) const;
  const PropertyIndex* property_index(std::string_view property) const;

  /// Explicitly flagged concept, or the target of instanceOf / an end of
  /// subClassOf.
  bool is_concept(const EntityId& node) const;

  const std::unordered_map<EntityId, Node>& nodes() const;
  const std::unordered_map<EntityId, Link>& links() const;
  const std::unordered_map<EntityId, Connector>& connectors() const;
  const std::unordered_map<EntityId, Context>& contexts() const;
  const IndexSet& indexes() const;

 private:
  std::shared_ptr<const detail::StoreState> state_;
};

/// Recomputes every index and structural invariant from the primary maps and
/// reports divergences. Never mutates.
std::vector<std::string> audit_indexes(const Snapshot& snapshot);

/// The knowledge base. Writes are serialized by an internal mutex; readers
/// take snapshots and never observe later writes.
class KnowledgeBase {
 public:
  KnowledgeBase();
  ~KnowledgeBase();
  KnowledgeBase(const KnowledgeBase&) = delete;
  KnowledgeBase& operator=(const KnowledgeBase&) = delete;

  /// Opens (creating if needed) an append-only journal, replays it, and
  /// records every later write to it.
  static std::unique_ptr<KnowledgeBase> open(const std::filesystem::path& journal);

  Snapshot snapshot() const;
  std::uint64_t generation() const;

  EntityId add_context(const std::string& name, std::optional<EntityId> parent = std::nullopt,
                       std::optional<EntityId> id = std::nullopt);
  EntityId add_connector(const std::string& name, const std::vector<std::string>& roles,
                         std::optional<EntityId> context = std::nullopt, PropertyMap properties = {});
  EntityId add_node(std::optional<EntityId> id, PropertyMap properties = {}, std::vector<Anchor> anchors = {},
                    std::optional<EntityId> context = std::nullopt);
  EntityId add_link(const EntityId& connector, std::map<std::string, Binding, std::less<>> bindings,
                    std::optional<EntityId> context = std::nullopt, PropertyMap properties = {});
  /// Convenience for binary connectors.
  EntityId relate(const EntityId& subject, const EntityId& connector, const EntityId& object,
                  std::optional<EntityId> context = std::nullopt);
  EntityId assert_instance(const EntityId& instance, const EntityId& concept_id,
                           std::optional<EntityId> context = std::nullopt);
  EntityId assert_subclass(const EntityId& sub, const EntityId& super, std::optional<EntityId> context = std::nullopt);
  void set_property(const EntityId& node, const std::string& name, Literal value);
  void unset_property(const EntityId& node, const std::string& name);
  /// Removes a link, or a node that no link references.
  void remove(const EntityId& id);

  /// Applies one batch atomically: forward references between records are
  /// allowed, and on any failure the store is left unchanged.
  LoadReport bulk_load(std::istream& in);
  LoadReport apply(std::span<const hkjsonl::Record> records);

 private:
  template <typename Fn>
  auto write(Fn&& fn);

  mutable std::mutex mutex_;
  std::shared_ptr<detail::StoreState> state_;
  std::unique_ptr<std::ofstream> journal_;
};

}  // namespace hyperkb
