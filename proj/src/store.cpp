#include "hyperkb/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_set>

#include "store_state.hpp"

namespace hyperkb {

namespace {

const IdSet kEmpty;

template <typename Map, typename Key>
void set_add(Map& map, const Key& key, const EntityId& value) {
  map[key].insert(value);
}

template <typename Map, typename Key>
void set_remove(Map& map, const Key& key, const EntityId& value) {
  auto it = map.find(key);
  if (it == map.end()) return;
  it->second.erase(value);
  if (it->second.empty()) map.erase(it);
}

template <typename Map, typename Key>
const IdSet& set_get(const Map& map, const Key& key) {
  auto it = map.find(key);
  return it == map.end() ? kEmpty : it->second;
}

void check_value(const Literal& value) {
  if (value.kind() == LiteralKind::number && std::isnan(value.number()))
    throw InvariantError("NaN is not a valid property value");
}

void property_index_update(PropertyIndex& pi, const EntityId& node, const Literal& value, bool add) {
  auto update = [&](auto& map, const auto& key) {
    if (add)
      map[key].insert(node);
    else
      set_remove(map, key, node);
  };
  switch (value.kind()) {
    case LiteralKind::number:
    case LiteralKind::integer:
      update(pi.numeric, value.as_double());
      break;
    case LiteralKind::text:
      update(pi.text, value.text());
      break;
    case LiteralKind::boolean:
      update(pi.boolean, value.boolean());
      break;
  }
}

std::vector<std::string> node_labels(const Node& node) {
  std::vector<std::string> out{std::string(node.id.local())};
  if (const Literal* name = node.property("name"); name && name->kind() == LiteralKind::text && name->text() != out[0])
    out.push_back(name->text());
  return out;
}

bool is_structural(const EntityId& connector) {
  return connector == builtin::instance_of() || connector == builtin::sub_class_of();
}

}  // namespace

// ---------------------------------------------------------------------------
// StoreState

namespace detail {

StoreState::StoreState() {
  const EntityId& def = builtin::default_context();
  contexts.emplace(def, Context{def, "default", std::nullopt, {def}});
  Node ctx_node(def, def);
  nodes.emplace(def, ctx_node);
  index_labels(ctx_node, true);
  for (const EntityId* id : {&builtin::instance_of(), &builtin::sub_class_of()}) {
    Connector c{*id, std::string(id->local()), {std::string(kSubjectRole), std::string(kObjectRole)}, def, {}};
    connectors.emplace(*id, c);
    contexts.at(def).members.insert(*id);
  }
}

bool StoreState::id_in_use(const EntityId& id) const {
  return nodes.contains(id) || links.contains(id) || connectors.contains(id);
}

EntityId StoreState::fresh_id(std::string_view prefix) {
  for (;;) {
    EntityId id("_", std::string(prefix) + std::to_string(next_auto++));
    if (!id_in_use(id)) return id;
  }
}

EntityId StoreState::resolve_context(const EntityId& ctx) const {
  if (ctx.empty()) return builtin::default_context();
  if (!contexts.contains(ctx)) throw NotFoundError("unknown context " + ctx.str());
  return ctx;
}

Context StoreState::insert_context(Context ctx) {
  if (ctx.id.empty()) throw InvariantError("context id must not be empty");
  if (ctx.name.empty()) throw InvariantError("context name must not be empty");
  if (id_in_use(ctx.id)) throw DuplicateError("duplicate id " + ctx.id.str());
  for (const auto& [id, other] : contexts)
    if (other.name == ctx.name) throw DuplicateError("duplicate context name '" + ctx.name + "'");
  EntityId parent = resolve_context(ctx.parent.value_or(EntityId{}));
  ctx.parent = parent;
  ctx.members.clear();

  Node node(ctx.id, parent);
  nodes.emplace(ctx.id, node);
  index_labels(node, true);
  contexts.at(parent).members.insert(ctx.id);
  contexts.emplace(ctx.id, ctx);
  return ctx;
}

Connector StoreState::insert_connector(Connector conn) {
  if (conn.name.empty()) throw InvariantError("connector name must not be empty");
  check_roles(conn.roles);
  conn.context = resolve_context(conn.context);
  for (const auto& [id, other] : connectors)
    if (other.name == conn.name && other.context == conn.context)
      throw DuplicateError("duplicate connector name '" + conn.name + "' in context " + conn.context.str());
  for (const auto& [k, v] : conn.properties) check_value(v);
  if (conn.id.empty()) {
    const std::string& ns = contexts.at(conn.context).name;
    EntityId candidate;
    if (ns.find(':') == std::string::npos && conn.name.find(':') == std::string::npos) candidate = EntityId(ns, conn.name);
    conn.id = (!candidate.empty() && !id_in_use(candidate)) ? candidate : fresh_id("c");
  } else if (id_in_use(conn.id)) {
    throw DuplicateError("duplicate id " + conn.id.str());
  }
  contexts.at(conn.context).members.insert(conn.id);
  connectors.emplace(conn.id, conn);
  return conn;
}

Node StoreState::insert_node(Node node) {
  if (node.id.empty()) throw InvariantError("node id must not be empty");
  if (id_in_use(node.id)) throw DuplicateError("duplicate id " + node.id.str());
  node.context = resolve_context(node.context);
  for (const auto& [k, v] : node.properties) {
    if (k.empty()) throw InvariantError("property name must not be empty");
    check_value(v);
  }
  if (!node.has_anchor(builtin::kLambda)) node.add_anchor(Anchor{std::string(builtin::kLambda), std::nullopt});

  contexts.at(node.context).members.insert(node.id);
  index_node_properties(node, true);
  index_labels(node, true);
  return nodes.emplace(node.id, std::move(node)).first->second;
}

Link StoreState::insert_link(Link link) {
  auto conn = connectors.find(link.connector);
  if (conn == connectors.end()) throw NotFoundError("unknown connector " + link.connector.str());
  link.context = resolve_context(link.context);
  for (const auto& [k, v] : link.properties) check_value(v);
  auto violations = validate_link(link, conn->second, [this](const EntityId& id) -> const Node* {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
  });
  if (!violations.empty()) throw LinkValidationError(link.id, std::move(violations));
  if (link.id.empty())
    link.id = fresh_id("l");
  else if (id_in_use(link.id))
    throw DuplicateError("duplicate id " + link.id.str());

  contexts.at(link.context).members.insert(link.id);
  index_link(link, true);
  const Link& stored = links.emplace(link.id, std::move(link)).first->second;
  if (stored.connector == builtin::instance_of()) {
    on_instance_added(stored.binding(kSubjectRole)->node, stored.binding(kObjectRole)->node);
  } else if (stored.connector == builtin::sub_class_of()) {
    on_subclass_added(stored.binding(kSubjectRole)->node, stored.binding(kObjectRole)->node);
  }
  return stored;
}

void StoreState::set_property(const EntityId& id, const std::string& name, Literal value) {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw NotFoundError("unknown node " + id.str());
  if (name.empty()) throw InvariantError("property name must not be empty");
  check_value(value);
  Node& node = it->second;
  if (name == "name") index_labels(node, false);
  if (const Literal* old = node.property(name)) index_property(id, name, *old, false);
  node.set_property(name, value);
  index_property(id, name, value, true);
  if (name == "name") index_labels(node, true);
}

void StoreState::unset_property(const EntityId& id, const std::string& name) {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw NotFoundError("unknown node " + id.str());
  Node& node = it->second;
  const Literal* old = node.property(name);
  if (old == nullptr) return;
  if (name == "name") index_labels(node, false);
  index_property(id, name, *old, false);
  node.properties.erase(node.properties.find(name));
  if (name == "name") index_labels(node, true);
}

void StoreState::remove(const EntityId& id) {
  if (auto it = links.find(id); it != links.end()) {
    const bool structural = is_structural(it->second.connector);
    index_link(it->second, false);
    contexts.at(it->second.context).members.erase(id);
    links.erase(it);
    if (structural) rebuild_concepts();
    return;
  }
  auto it = nodes.find(id);
  if (it == nodes.end()) throw NotFoundError("unknown entity " + id.str());
  if (contexts.contains(id)) throw InvariantError("contexts cannot be removed");
  if (!set_get(idx.by_node, id).empty())
    throw InvariantError("node " + id.str() + " is still referenced by links");
  index_node_properties(it->second, false);
  index_labels(it->second, false);
  contexts.at(it->second.context).members.erase(id);
  nodes.erase(it);
}

hkjsonl::Record StoreState::apply(const hkjsonl::Record& record) {
  struct Visitor {
    StoreState& s;
    hkjsonl::Record operator()(const Context& c) const { return s.insert_context(c); }
    hkjsonl::Record operator()(const Connector& c) const { return s.insert_connector(c); }
    hkjsonl::Record operator()(const Node& n) const { return s.insert_node(n); }
    hkjsonl::Record operator()(const Link& l) const { return s.insert_link(l); }
    hkjsonl::Record operator()(const hkjsonl::SetProperty& r) const {
      s.set_property(r.node, r.name, r.value);
      return r;
    }
    hkjsonl::Record operator()(const hkjsonl::UnsetProperty& r) const {
      s.unset_property(r.node, r.name);
      return r;
    }
    hkjsonl::Record operator()(const hkjsonl::Remove& r) const {
      s.remove(r.id);
      return r;
    }
  };
  return std::visit(Visitor{*this}, record);
}

void StoreState::index_property(const EntityId& node, const std::string& name, const Literal& value, bool add) {
  auto& pi = idx.by_property[name];
  property_index_update(pi, node, value, add);
  if (pi.empty()) idx.by_property.erase(name);
}

void StoreState::index_node_properties(const Node& node, bool add) {
  for (const auto& [name, value] : node.properties) index_property(node.id, name, value, add);
}

void StoreState::index_labels(const Node& node, bool add) {
  for (const auto& label : node_labels(node)) {
    if (add)
      set_add(idx.by_label, label, node.id);
    else
      set_remove(idx.by_label, label, node.id);
  }
}

void StoreState::index_link(const Link& link, bool add) {
  auto update = [&](auto& map, const auto& key) {
    if (add)
      set_add(map, key, link.id);
    else
      set_remove(map, key, link.id);
  };
  update(idx.by_connector, link.connector);
  for (const auto& [role, binding] : link.bindings) {
    update(idx.by_node, binding.node);
    if (role == kSubjectRole) update(idx.by_subject, NodeConnector{binding.node, link.connector});
    if (role == kObjectRole) update(idx.by_object, NodeConnector{binding.node, link.connector});
  }
}

std::vector<EntityId> StoreState::ancestors_inclusive(const EntityId& concept_id) const {
  std::vector<EntityId> out{concept_id};
  std::unordered_set<EntityId> seen{concept_id};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const IdSet& ups = set_get(idx.by_subject, NodeConnector{out[i], builtin::sub_class_of()});
    for (const auto& link_id : ups) {
      const EntityId& super = links.at(link_id).binding(kObjectRole)->node;
      if (seen.insert(super).second) out.push_back(super);
    }
  }
  return out;
}

void StoreState::on_instance_added(const EntityId& instance, const EntityId& concept_id) {
  for (const auto& c : ancestors_inclusive(concept_id)) idx.by_concept[c].insert(instance);
}

void StoreState::on_subclass_added(const EntityId& sub, const EntityId& super) {
  const IdSet instances = set_get(idx.by_concept, sub);
  if (instances.empty()) return;
  for (const auto& c : ancestors_inclusive(super)) idx.by_concept[c].insert(instances.begin(), instances.end());
}

void StoreState::rebuild_concepts() {
  idx.by_concept.clear();
  std::unordered_map<EntityId, std::vector<EntityId>> cache;
  for (const auto& link_id : set_get(idx.by_connector, builtin::instance_of())) {
    const Link& l = links.at(link_id);
    const EntityId& concept_id = l.binding(kObjectRole)->node;
    auto it = cache.find(concept_id);
    if (it == cache.end()) it = cache.emplace(concept_id, ancestors_inclusive(concept_id)).first;
    for (const auto& c : it->second) idx.by_concept[c].insert(l.binding(kSubjectRole)->node);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Index recomputation and diffing

IndexSet rebuild_indexes(const std::unordered_map<EntityId, Node>& nodes,
                         const std::unordered_map<EntityId, Link>& links) {
  IndexSet out;
  for (const auto& [id, node] : nodes) {
    for (const auto& [name, value] : node.properties) property_index_update(out.by_property[name], id, value, true);
    for (const auto& label : node_labels(node)) out.by_label[label].insert(id);
  }
  // Direct superclasses and direct instances, then a depth-first closure per
  // concept_id that has direct instances.
  std::unordered_map<EntityId, std::vector<EntityId>> supers;
  std::unordered_map<EntityId, std::vector<EntityId>> direct;
  for (const auto& [id, link] : links) {
    out.by_connector[link.connector].insert(id);
    for (const auto& [role, binding] : link.bindings) {
      out.by_node[binding.node].insert(id);
      if (role == kSubjectRole) out.by_subject[{binding.node, link.connector}].insert(id);
      if (role == kObjectRole) out.by_object[{binding.node, link.connector}].insert(id);
    }
    const Binding* s = link.binding(kSubjectRole);
    const Binding* o = link.binding(kObjectRole);
    if (s == nullptr || o == nullptr) continue;
    if (link.connector == builtin::sub_class_of()) supers[s->node].push_back(o->node);
    if (link.connector == builtin::instance_of()) direct[o->node].push_back(s->node);
  }
  for (const auto& [concept_id, instances] : direct) {
    std::unordered_set<EntityId> seen;
    std::vector<EntityId> stack{concept_id};
    while (!stack.empty()) {
      EntityId c = stack.back();
      stack.pop_back();
      if (!seen.insert(c).second) continue;
      out.by_concept[c].insert(instances.begin(), instances.end());
      if (auto it = supers.find(c); it != supers.end())
        for (const auto& s : it->second) stack.push_back(s);
    }
  }
  return out;
}

namespace {

std::string show(const EntityId& id) { return id.str(); }
std::string show(const std::string& s) { return s; }
std::string show(const NodeConnector& k) { return "(" + k.node.str() + ", " + k.connector.str() + ")"; }

template <typename Map>
void diff_map(const char* name, const Map& expected, const Map& actual, std::vector<std::string>& out) {
  for (const auto& [key, want] : expected) {
    auto it = actual.find(key);
    if (it == actual.end()) {
      out.push_back(std::string(name) + "[" + show(key) + "] missing (" + std::to_string(want.size()) + " expected)");
    } else if (it->second != want) {
      out.push_back(std::string(name) + "[" + show(key) + "] differs");
    }
  }
  for (const auto& [key, have] : actual)
    if (!expected.contains(key)) out.push_back(std::string(name) + "[" + show(key) + "] unexpected");
}

}  // namespace

std::vector<std::string> diff_indexes(const IndexSet& expected, const IndexSet& actual) {
  std::vector<std::string> out;
  diff_map("by_connector", expected.by_connector, actual.by_connector, out);
  diff_map("by_subject", expected.by_subject, actual.by_subject, out);
  diff_map("by_object", expected.by_object, actual.by_object, out);
  diff_map("by_node", expected.by_node, actual.by_node, out);
  diff_map("by_concept", expected.by_concept, actual.by_concept, out);
  for (const auto& [name, want] : expected.by_property) {
    auto it = actual.by_property.find(name);
    if (it == actual.by_property.end())
      out.push_back("by_property[" + name + "] missing");
    else if (!(it->second == want))
      out.push_back("by_property[" + name + "] differs");
  }
  for (const auto& [name, have] : actual.by_property)
    if (!expected.by_property.contains(name)) out.push_back("by_property[" + name + "] unexpected");
  diff_map("by_label", expected.by_label, actual.by_label, out);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot

std::uint64_t Snapshot::generation() const { return state_->generation; }

EntityCounts Snapshot::counts() const {
  return {state_->nodes.size() - state_->contexts.size(), state_->links.size(), state_->connectors.size(),
          state_->contexts.size()};
}

const Node* Snapshot::find_node(const EntityId& id) const {
  auto it = state_->nodes.find(id);
  return it == state_->nodes.end() ? nullptr : &it->second;
}

const Link* Snapshot::find_link(const EntityId& id) const {
  auto it = state_->links.find(id);
  return it == state_->links.end() ? nullptr : &it->second;
}

const Connector* Snapshot::find_connector(const EntityId& id) const {
  auto it = state_->connectors.find(id);
  return it == state_->connectors.end() ? nullptr : &it->second;
}

const Context* Snapshot::find_context(const EntityId& id) const {
  auto it = state_->contexts.find(id);
  return it == state_->contexts.end() ? nullptr : &it->second;
}

std::vector<const Connector*> Snapshot::connectors_named(std::string_view name) const {
  std::vector<const Connector*> out;
  for (const auto& [id, c] : state_->connectors)
    if (c.name == name) out.push_back(&c);
  std::sort(out.begin(), out.end(), [](const Connector* a, const Connector* b) { return a->id < b->id; });
  return out;
}

const Context* Snapshot::context_named(std::string_view name) const {
  for (const auto& [id, c] : state_->contexts)
    if (c.name == name) return &c;
  return nullptr;
}

const IdSet& Snapshot::links_of_connector(const EntityId& connector) const {
  return set_get(state_->idx.by_connector, connector);
}

const IdSet& Snapshot::links_from(const EntityId& subject, const EntityId& connector) const {
  return set_get(state_->idx.by_subject, NodeConnector{subject, connector});
}

const IdSet& Snapshot::links_to(const EntityId& object, const EntityId& connector) const {
  return set_get(state_->idx.by_object, NodeConnector{object, connector});
}

const IdSet& Snapshot::links_touching(const EntityId& node) const { return set_get(state_->idx.by_node, node); }

const IdSet& Snapshot::instances_of(const EntityId& concept_id) const { return set_get(state_->idx.by_concept, concept_id); }

const IdSet& Snapshot::nodes_labelled(std::string_view label) const {
  return set_get(state_->idx.by_label, std::string(label));
}

const PropertyIndex* Snapshot::property_index(std::string_view property) const {
  auto it = state_->idx.by_property.find(std::string(property));
  return it == state_->idx.by_property.end() ? nullptr : &it->second;
}

namespace {

template <typename Map, typename Key>
void collect_range(const Map& map, CompareOp op, const Key& key, std::vector<EntityId>& out) {
  auto append = [&](auto first, auto last) {
    for (; first != last; ++first) out.insert(out.end(), first->second.begin(), first->second.end());
  };
  switch (op) {
    case CompareOp::eq:
      append(map.lower_bound(key), map.upper_bound(key));
      break;
    case CompareOp::ne:
      append(map.begin(), map.lower_bound(key));
      append(map.upper_bound(key), map.end());
      break;
    case CompareOp::lt:
      append(map.begin(), map.lower_bound(key));
      break;
    case CompareOp::le:
      append(map.begin(), map.upper_bound(key));
      break;
    case CompareOp::gt:
      append(map.upper_bound(key), map.end());
      break;
    case CompareOp::ge:
      append(map.lower_bound(key), map.end());
      break;
  }
}

}  // namespace

std::vector<EntityId> Snapshot::nodes_where(std::string_view property, CompareOp op, const Literal& value) const {
  std::vector<EntityId> out;
  const PropertyIndex* pi = property_index(property);
  if (pi == nullptr) return out;
  switch (value.kind()) {
    case LiteralKind::number:
    case LiteralKind::integer:
      collect_range(pi->numeric, op, value.as_double(), out);
      break;
    case LiteralKind::text:
      collect_range(pi->text, op, value.text(), out);
      break;
    case LiteralKind::boolean:
      if (op != CompareOp::eq && op != CompareOp::ne) throw TypeError("booleans only support = and !=");
      collect_range(pi->boolean, op, value.boolean(), out);
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Snapshot::is_concept(const EntityId& id) const {
  const Node* node = find_node(id);
  if (node == nullptr) return false;
  if (const Literal* kind = node->property(builtin::kKindProperty);
      kind && kind->kind() == LiteralKind::text && kind->text() == builtin::kConceptKind)
    return true;
  return !links_to(id, builtin::instance_of()).empty() || !links_from(id, builtin::sub_class_of()).empty() ||
         !links_to(id, builtin::sub_class_of()).empty();
}

const std::unordered_map<EntityId, Node>& Snapshot::nodes() const { return state_->nodes; }
const std::unordered_map<EntityId, Link>& Snapshot::links() const { return state_->links; }
const std::unordered_map<EntityId, Connector>& Snapshot::connectors() const { return state_->connectors; }
const std::unordered_map<EntityId, Context>& Snapshot::contexts() const { return state_->contexts; }
const IndexSet& Snapshot::indexes() const { return state_->idx; }

// ---------------------------------------------------------------------------
// Audit

std::vector<std::string> audit_indexes(const Snapshot& snap) {
  std::vector<std::string> out = diff_indexes(rebuild_indexes(snap.nodes(), snap.links()), snap.indexes());

  std::unordered_map<EntityId, IdSet> expected_members;
  auto expect_member = [&](const EntityId& entity, const EntityId& ctx) {
    if (snap.find_context(ctx) == nullptr)
      out.push_back(entity.str() + ": unknown context " + ctx.str());
    else
      expected_members[ctx].insert(entity);
  };

  for (const auto& [id, node] : snap.nodes()) {
    if (!node.has_anchor(builtin::kLambda)) out.push_back(id.str() + ": missing lambda anchor");
    expect_member(id, node.context);
  }
  for (const auto& [id, link] : snap.links()) {
    const Connector* conn = snap.find_connector(link.connector);
    if (conn == nullptr) {
      out.push_back(id.str() + ": unknown connector " + link.connector.str());
    } else {
      auto violations = validate_link(link, *conn, [&](const EntityId& n) { return snap.find_node(n); });
      for (const auto& v : violations) out.push_back(id.str() + ": " + v.message());
    }
    expect_member(id, link.context);
  }
  for (const auto& [id, conn] : snap.connectors()) expect_member(id, conn.context);

  for (const auto& [id, ctx] : snap.contexts()) {
    const Node* node = snap.find_node(id);
    if (node == nullptr) {
      out.push_back(id.str() + ": context has no node");
      continue;
    }
    if (id != builtin::default_context() && (!ctx.parent || *ctx.parent != node->context))
      out.push_back(id.str() + ": context parent disagrees with its node");
    // parent chains must reach the root without revisiting a context
    std::unordered_set<EntityId> seen{id};
    std::optional<EntityId> p = ctx.parent;
    while (p) {
      if (!seen.insert(*p).second) {
        out.push_back(id.str() + ": cyclic parent chain");
        break;
      }
      const Context* pc = snap.find_context(*p);
      if (pc == nullptr) {
        out.push_back(id.str() + ": unknown parent " + p->str());
        break;
      }
      p = pc->parent;
    }
    const IdSet& want = expected_members[id];
    if (ctx.members != want) out.push_back(id.str() + ": member set disagrees with entity contexts");
  }
  return out;
}

// ---------------------------------------------------------------------------
// KnowledgeBase

KnowledgeBase::KnowledgeBase() : state_(std::make_shared<detail::StoreState>()) {}

KnowledgeBase::~KnowledgeBase() = default;

Snapshot KnowledgeBase::snapshot() const {
  std::lock_guard lock(mutex_);
  return Snapshot(state_);
}

std::uint64_t KnowledgeBase::generation() const {
  std::lock_guard lock(mutex_);
  return state_->generation;
}

template <typename Fn>
auto KnowledgeBase::write(Fn&& fn) {
  std::lock_guard lock(mutex_);
  if (state_.use_count() > 1) {
    state_ = std::make_shared<detail::StoreState>(*state_);
  } else {
    std::atomic_thread_fence(std::memory_order_acquire);
  }
  std::vector<hkjsonl::Record> journal_records;
  auto result = fn(*state_, journal_records);
  ++state_->generation;
  if (journal_) {
    for (const auto& r : journal_records) *journal_ << hkjsonl::to_line(r) << '\n';
    journal_->flush();
    if (!*journal_) throw IoError("journal write failed");
  }
  return result;
}

EntityId KnowledgeBase::add_context(const std::string& name, std::optional<EntityId> parent,
                                    std::optional<EntityId> id) {
  return write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    Context c;
    c.id = id ? *id : EntityId("ctx", name);
    c.name = name;
    c.parent = parent;
    Context stored = s.insert_context(std::move(c));
    j.emplace_back(stored);
    return stored.id;
  });
}

EntityId KnowledgeBase::add_connector(const std::string& name, const std::vector<std::string>& roles,
                                      std::optional<EntityId> context, PropertyMap properties) {
  return write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    Connector c{{}, name, roles, context.value_or(EntityId{}), std::move(properties)};
    Connector stored = s.insert_connector(std::move(c));
    j.emplace_back(stored);
    return stored.id;
  });
}

EntityId KnowledgeBase::add_node(std::optional<EntityId> id, PropertyMap properties, std::vector<Anchor> anchors,
                                 std::optional<EntityId> context) {
  return write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    Node n(id ? *id : s.fresh_id("n"), context.value_or(EntityId{}));
    for (auto& a : anchors) n.add_anchor(std::move(a));
    n.properties = std::move(properties);
    Node stored = s.insert_node(std::move(n));
    j.emplace_back(stored);
    return stored.id;
  });
}

EntityId KnowledgeBase::add_link(const EntityId& connector, std::map<std::string, Binding, std::less<>> bindings,
                                 std::optional<EntityId> context, PropertyMap properties) {
  return write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    Link l{{}, connector, std::move(bindings), std::move(properties), context.value_or(EntityId{})};
    Link stored = s.insert_link(std::move(l));
    j.emplace_back(stored);
    return stored.id;
  });
}

EntityId KnowledgeBase::relate(const EntityId& subject, const EntityId& connector, const EntityId& object,
                               std::optional<EntityId> context) {
  return add_link(connector,
                  {{std::string(kSubjectRole), Binding{subject}}, {std::string(kObjectRole), Binding{object}}},
                  std::move(context));
}

EntityId KnowledgeBase::assert_instance(const EntityId& instance, const EntityId& concept_id,
                                        std::optional<EntityId> context) {
  return relate(instance, builtin::instance_of(), concept_id, std::move(context));
}

EntityId KnowledgeBase::assert_subclass(const EntityId& sub, const EntityId& super, std::optional<EntityId> context) {
  return relate(sub, builtin::sub_class_of(), super, std::move(context));
}

void KnowledgeBase::set_property(const EntityId& node, const std::string& name, Literal value) {
  write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    s.set_property(node, name, value);
    j.emplace_back(hkjsonl::SetProperty{node, name, value});
    return 0;
  });
}

void KnowledgeBase::unset_property(const EntityId& node, const std::string& name) {
  write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    s.unset_property(node, name);
    j.emplace_back(hkjsonl::UnsetProperty{node, name});
    return 0;
  });
}

void KnowledgeBase::remove(const EntityId& id) {
  write([&](detail::StoreState& s, std::vector<hkjsonl::Record>& j) {
    s.remove(id);
    j.emplace_back(hkjsonl::Remove{id});
    return 0;
  });
}

namespace {

struct Numbered {
  std::size_t line;
  const hkjsonl::Record* record;
};

/// Creation records first (contexts parent-before-child, then connectors,
/// nodes and links), followed by mutation records in input order.
std::vector<Numbered> dependency_order(const std::vector<Numbered>& in) {
  std::vector<Numbered> ctxs, conns, nodes, links, rest;
  for (const auto& n : in) {
    switch (n.record->index()) {
      case 0:
        ctxs.push_back(n);
        break;
      case 1:
        conns.push_back(n);
        break;
      case 2:
        nodes.push_back(n);
        break;
      case 3:
        links.push_back(n);
        break;
      default:
        rest.push_back(n);
    }
  }
  std::vector<Numbered> out;
  out.reserve(in.size());
  std::unordered_set<EntityId> pending;
  for (const auto& n : ctxs) pending.insert(std::get<Context>(*n.record).id);
  while (!ctxs.empty()) {
    std::vector<Numbered> blocked, ready;
    for (const auto& n : ctxs) {
      const auto& c = std::get<Context>(*n.record);
      bool waits = c.parent && *c.parent != c.id && pending.contains(*c.parent);
      (waits ? blocked : ready).push_back(n);
    }
    if (ready.empty())
      throw LoadError(blocked.front().line, "cyclic context parents involving " +
                                                std::get<Context>(*blocked.front().record).id.str());
    for (const auto& n : ready) {
      pending.erase(std::get<Context>(*n.record).id);
      out.push_back(n);
    }
    ctxs = std::move(blocked);
  }
  for (auto* group : {&conns, &nodes, &links, &rest}) out.insert(out.end(), group->begin(), group->end());
  return out;
}

LoadReport count_records(const std::vector<Numbered>& records) {
  LoadReport r;
  for (const auto& n : records) {
    switch (n.record->index()) {
      case 0:
        ++r.contexts;
        break;
      case 1:
        ++r.connectors;
        break;
      case 2:
        ++r.nodes;
        break;
      case 3:
        ++r.links;
        break;
      default:
        break;
    }
  }
  return r;
}

}  // namespace

namespace detail {

/// Applies records to a private copy and swaps it in on success.
struct BatchApplier {
  static std::shared_ptr<StoreState> run(const StoreState& base, const std::vector<Numbered>& ordered,
                                         std::vector<hkjsonl::Record>& journal) {
    auto working = std::make_shared<StoreState>(base);
    journal.reserve(ordered.size());
    for (const auto& n : ordered) {
      try {
        journal.push_back(working->apply(*n.record));
      } catch (const LoadError&) {
        throw;
      } catch (const Error& e) {
        throw LoadError(n.line, e.what());
      }
    }
    ++working->generation;
    return working;
  }
};

}  // namespace detail

LoadReport KnowledgeBase::bulk_load(std::istream& in) {
  auto start = std::chrono::steady_clock::now();
  std::vector<hkjsonl::Record> records;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(hkjsonl::parse_record(line));
    } catch (const Error& e) {
      throw LoadError(lineno, e.what());
    }
    lines.push_back(lineno);
  }
  if (in.bad()) throw IoError("read error while loading");

  std::vector<Numbered> numbered;
  numbered.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) numbered.push_back({lines[i], &records[i]});
  auto ordered = dependency_order(numbered);
  LoadReport report = count_records(numbered);

  std::lock_guard lock(mutex_);
  std::vector<hkjsonl::Record> journal_records;
  state_ = detail::BatchApplier::run(*state_, ordered, journal_records);
  if (journal_) {
    for (const auto& r : journal_records) *journal_ << hkjsonl::to_line(r) << '\n';
    journal_->flush();
    if (!*journal_) throw IoError("journal write failed");
  }
  report.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

LoadReport KnowledgeBase::apply(std::span<const hkjsonl::Record> records) {
  auto start = std::chrono::steady_clock::now();
  std::vector<Numbered> numbered;
  numbered.reserve(records.size());
  for (const auto& r : records) numbered.push_back({0, &r});
  auto ordered = dependency_order(numbered);
  LoadReport report = count_records(numbered);

  std::lock_guard lock(mutex_);
  std::vector<hkjsonl::Record> journal_records;
  state_ = detail::BatchApplier::run(*state_, ordered, journal_records);
  if (journal_) {
    for (const auto& r : journal_records) *journal_ << hkjsonl::to_line(r) << '\n';
    journal_->flush();
    if (!*journal_) throw IoError("journal write failed");
  }
  report.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::unique_ptr<KnowledgeBase> KnowledgeBase::open(const std::filesystem::path& journal) {
  auto kb = std::make_unique<KnowledgeBase>();
  if (std::filesystem::exists(journal)) {
    std::ifstream in(journal);
    if (!in) throw IoError("cannot read journal " + journal.string());
    // Journals are already in dependency order; replay line by line.
    auto state = std::make_shared<detail::StoreState>();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        state->apply(hkjsonl::parse_record(line));
      } catch (const Error& e) {
        throw LoadError(lineno, std::string("journal ") + journal.string() + ": " + e.what());
      }
    }
    state->generation = 1;
    kb->state_ = std::move(state);
  }
  kb->journal_ = std::make_unique<std::ofstream>(journal, std::ios::app);
  if (!*kb->journal_) throw IoError("cannot open journal " + journal.string());
  return kb;
}

}  // namespace hyperkb
