#pragma once

#include <cstdint>
#include <unordered_map>

#include "hyperkb/hkjsonl.hpp"
#include "hyperkb/store.hpp"

namespace hyperkb::detail {

/// Primary maps plus indexes. Every mutator validates completely before
/// touching anything, so a throwing call leaves the state unchanged.
class StoreState {
 public:
  StoreState();

  std::unordered_map<EntityId, Node> nodes;  // includes one node per context
  std::unordered_map<EntityId, Link> links;
  std::unordered_map<EntityId, Connector> connectors;
  std::unordered_map<EntityId, Context> contexts;
  IndexSet idx;
  std::uint64_t generation = 0;
  std::uint64_t next_auto = 0;

  // The insert functions return the stored value, with defaults filled in.
  Context insert_context(Context ctx);
  Connector insert_connector(Connector conn);
  Node insert_node(Node node);
  Link insert_link(Link link);
  void set_property(const EntityId& node, const std::string& name, Literal value);
  void unset_property(const EntityId& node, const std::string& name);
  void remove(const EntityId& id);

  /// Dispatches one record and returns its effective (journal) form.
  hkjsonl::Record apply(const hkjsonl::Record& record);

  bool id_in_use(const EntityId& id) const;
  EntityId fresh_id(std::string_view prefix);
  EntityId resolve_context(const EntityId& ctx) const;

 private:
  void index_node_properties(const Node& node, bool add);
  void index_property(const EntityId& node, const std::string& name, const Literal& value, bool add);
  void index_labels(const Node& node, bool add);
  void index_link(const Link& link, bool add);
  std::vector<EntityId> ancestors_inclusive(const EntityId& concept_id) const;
  void on_instance_added(const EntityId& instance, const EntityId& concept_id);
  void on_subclass_added(const EntityId& sub, const EntityId& super);
  void rebuild_concepts();
};

}  // namespace hyperkb::detail
