#include "hyperkb/hyql/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "hyperkb/hyql/parser.hpp"

namespace hyperkb::hyql {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Resolution

EntityId connector_named(const Snapshot& snap, const std::string& name) {
  auto found = snap.connectors_named(name);
  if (found.empty()) throw EvalError("unknown connector '" + name + "'");
  if (found.size() > 1) {
    std::string ids;
    for (const auto* c : found) ids += (ids.empty() ? "" : ", ") + c->id.str();
    throw EvalError("ambiguous connector '" + name + "' (" + ids + ")");
  }
  const Connector& c = *found.front();
  if (!c.has_role(kSubjectRole) || !c.has_role(kObjectRole))
    throw EvalError("connector '" + name + "' has no subject/object roles");
  return c.id;
}

class Resolver {
 public:
  Resolver(const Snapshot& snap, const FunctionRegistry& registry, const std::vector<std::string>& visible_lets)
      : snap_(snap), registry_(registry), lets_(visible_lets) {}

  ResolvedQuery run(const std::vector<std::string>& select, const std::vector<Condition>& where) {
    rq_.generation = snap_.generation();
    for (const auto& cond : where) rq_.conditions.push_back(condition(cond));
    for (const auto& name : select) rq_.select.push_back(variable(name));
    return std::move(rq_);
  }

 private:
  std::size_t variable(const std::string& name) {
    for (std::size_t i = 0; i < rq_.variables.size(); ++i)
      if (rq_.variables[i].name == name) return i;
    rq_.variables.push_back(classify(name));
    if (rq_.variables.back().kind == VarKind::constant) rq_.constants.emplace(name, rq_.variables.back().entity);
    return rq_.variables.size() - 1;
  }

  Variable classify(const std::string& name) {
    Variable v;
    v.name = name;
    for (std::size_t i = lets_.size(); i-- > 0;) {
      if (lets_[i] == name) {
        v.kind = VarKind::set_var;
        v.let_index = i;
        return v;
      }
    }
    std::vector<EntityId> individuals;
    std::vector<EntityId> concepts;
    for (const auto& id : snap_.nodes_labelled(name)) {
      if (snap_.is_concept(id))
        concepts.push_back(id);
      else if (snap_.find_context(id) == nullptr)
        individuals.push_back(id);
    }
    if (individuals.size() > 1) throw EvalError("ambiguous identifier '" + name + "': several individuals match");
    if (individuals.size() == 1) {
      if (!concepts.empty())
        rq_.warnings.push_back("'" + name + "' names both an individual and a concept; using individual " +
                               individuals.front().str());
      v.kind = VarKind::constant;
      v.entity = individuals.front();
      return v;
    }
    if (concepts.size() > 1) throw EvalError("ambiguous identifier '" + name + "': several concepts match");
    if (concepts.empty()) throw EvalError("unresolvable identifier '" + name + "'");
    v.kind = VarKind::concept_var;
    v.entity = concepts.front();
    return v;
  }

  ResolvedCondition condition(const Condition& cond) {
    return std::visit(
        overloaded{
            [&](const LinkPattern& p) -> ResolvedCondition {
              ResolvedLink l;
              l.subject = variable(p.subject);
              l.connector = connector_named(snap_, p.connector);
              l.object = variable(p.object);
              return l;
            },
            [&](const AnchorFilter& f) -> ResolvedCondition { return ResolvedAnchor{variable(f.entity), f.anchor}; },
            [&](const Comparison& c) -> ResolvedCondition {
              if (const auto* ref = std::get_if<PropertyRef>(&c.lhs))
                return ResolvedProperty{variable(ref->entity), ref->property, c.op, c.rhs};
              const auto& call = std::get<FunctionCall>(c.lhs);
              ResolvedCall rc;
              rc.fn = registry_.find(call.name);
              if (!rc.fn) throw EvalError("unknown function '" + call.name + "'");
              if (rc.fn->arity != call.args.size())
                throw EvalError("function '" + call.name + "' takes " + std::to_string(rc.fn->arity) +
                                " argument(s), got " + std::to_string(call.args.size()));
              if (!comparable(rc.fn->result_kind, c.rhs.kind()))
                throw EvalError("type error: function '" + call.name + "' returns " +
                                std::string(to_string(rc.fn->result_kind)) + ", compared with " +
                                std::string(to_string(c.rhs.kind())));
              if (rc.fn->result_kind == LiteralKind::boolean && c.op != CompareOp::eq && c.op != CompareOp::ne)
                throw EvalError("type error: booleans only support = and !=");
              rc.called_as = call.name;
              for (const auto& a : call.args) rc.args.push_back(variable(a));
              rc.op = c.op;
              rc.rhs = c.rhs;
              return rc;
            },
        },
        cond);
  }

  const Snapshot& snap_;
  const FunctionRegistry& registry_;
  const std::vector<std::string>& lets_;
  ResolvedQuery rq_;
};

// ---------------------------------------------------------------------------
// Shared condition semantics

const Literal* property_of(const Snapshot& snap, const EntityId& id, const std::string& name) {
  const Node* n = snap.find_node(id);
  return n ? n->property(name) : nullptr;
}

/// A stored value of this kind cannot be compared with `rhs` under `op`.
bool kind_conflicts(LiteralKind stored, CompareOp op, const Literal& rhs) {
  if (!comparable(stored, rhs.kind())) return true;
  return stored == LiteralKind::boolean && op != CompareOp::eq && op != CompareOp::ne;
}

std::string describe(const ResolvedQuery& q, const ResolvedProperty& p) {
  return q.variables[p.entity].name + "." + p.property + " " + std::string(to_string(p.op)) + " " +
         p.rhs.to_display();
}

[[noreturn]] void type_failure(const ResolvedQuery& q, const ResolvedProperty& p, const EntityId& id,
                               LiteralKind kind) {
  throw EvalError("type error in '" + describe(q, p) + "': " + id.str() + " has a " + std::string(to_string(kind)) +
                  " value");
}

bool property_holds(const Snapshot& snap, const ResolvedQuery& q, const ResolvedProperty& p, const EntityId& id) {
  const Literal* v = property_of(snap, id, p.property);
  if (v == nullptr) return false;
  try {
    return compare(*v, p.op, p.rhs);
  } catch (const TypeError&) {
    type_failure(q, p, id, v->kind());
  }
}

bool anchor_holds(const Snapshot& snap, const ResolvedAnchor& a, const EntityId& id) {
  const Node* n = snap.find_node(id);
  return n != nullptr && n->has_anchor(a.anchor);
}

bool call_holds(const Snapshot& snap, const ResolvedCall& c, std::span<const EntityId> args) {
  Literal value;
  try {
    value = c.fn->fn(snap, args);
  } catch (const std::exception& e) {
    throw EvalError("function '" + c.called_as + "' failed: " + e.what());
  }
  try {
    return compare(value, c.op, c.rhs);
  } catch (const TypeError& e) {
    throw EvalError("function '" + c.called_as + "' returned " + std::string(to_string(value.kind())) + ": " +
                    e.what());
  }
}

std::vector<std::size_t> vars_of(const ResolvedCondition& c) {
  return std::visit(overloaded{
                        [](const ResolvedLink& l) { return std::vector<std::size_t>{l.subject, l.object}; },
                        [](const ResolvedAnchor& a) { return std::vector<std::size_t>{a.entity}; },
                        [](const ResolvedProperty& p) { return std::vector<std::size_t>{p.entity}; },
                        [](const ResolvedCall& c) { return c.args; },
                    },
                    c);
}

ResultSet make_result(const ResolvedQuery& q, std::set<std::vector<EntityId>> rows) {
  ResultSet rs;
  for (auto i : q.select) rs.columns.push_back(q.variables[i].name);
  for (const auto& name : rs.columns) rs.sets[name];
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) rs.sets[rs.columns[c]].insert(row[c]);
  rs.rows.assign(rows.begin(), rows.end());
  rs.warnings = q.warnings;
  return rs;
}

// ---------------------------------------------------------------------------
// Indexed evaluation

class Join {
 public:
  Join(const ResolvedQuery& q, const Snapshot& snap, std::vector<std::vector<EntityId>> domains)
      : q_(q), snap_(snap), domains_(std::move(domains)) {}

  std::set<std::vector<EntityId>> run() {
    std::set<std::vector<EntityId>> rows;
    std::vector<bool> consumed(q_.conditions.size(), false);
    filter_unary(consumed);
    for (const auto& d : domains_)
      if (d.empty()) return rows;
    plan(consumed);
    binding_.assign(q_.variables.size(), EntityId{});
    search(0, rows);
    return rows;
  }

 private:
  void filter_unary(std::vector<bool>& consumed) {
    for (std::size_t ci = 0; ci < q_.conditions.size(); ++ci) {
      auto vars = vars_of(q_.conditions[ci]);
      std::sort(vars.begin(), vars.end());
      vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
      if (vars.size() != 1) continue;
      consumed[ci] = true;
      auto& dom = domains_[vars.front()];
      const auto& cond = q_.conditions[ci];
      if (const auto* p = std::get_if<ResolvedProperty>(&cond); p && indexed_filter(*p, dom)) continue;
      std::vector<EntityId> kept;
      for (const auto& id : dom)
        if (unary_holds(cond, id)) kept.push_back(id);
      dom = std::move(kept);
    }
  }

  /// Narrows `dom` through the property index when that is cheaper.
  bool indexed_filter(const ResolvedProperty& p, std::vector<EntityId>& dom) {
    const PropertyIndex* pi = snap_.property_index(p.property);
    if (pi == nullptr) {
      dom.clear();
      return true;
    }
    constexpr double kExact = 9007199254740992.0;  // 2^53
    if (p.rhs.kind() == LiteralKind::integer && std::fabs(p.rhs.as_double()) >= kExact) return false;
    if (p.op == CompareOp::ne || dom.size() < 64) return false;
    if (p.rhs.kind() == LiteralKind::boolean && p.op != CompareOp::eq) return false;
    std::vector<EntityId> hits = snap_.nodes_where(p.property, p.op, p.rhs);
    std::vector<EntityId> kept;
    std::set_intersection(dom.begin(), dom.end(), hits.begin(), hits.end(), std::back_inserter(kept));
    dom = std::move(kept);
    return true;
  }

  bool unary_holds(const ResolvedCondition& cond, const EntityId& id) {
    return std::visit(overloaded{
                          [&](const ResolvedLink& l) { return link_holds(id, l.connector, id); },
                          [&](const ResolvedAnchor& a) { return anchor_holds(snap_, a, id); },
                          [&](const ResolvedProperty& p) { return property_holds(snap_, q_, p, id); },
                          [&](const ResolvedCall& c) {
                            std::vector<EntityId> args(c.args.size(), id);
                            return call_holds(snap_, c, args);
                          },
                      },
                      cond);
  }

  bool link_holds(const EntityId& s, const EntityId& conn, const EntityId& o) const {
    const IdSet& out = snap_.links_from(s, conn);
    const IdSet& in = snap_.links_to(o, conn);
    if (out.size() <= in.size()) {
      for (const auto& lid : out)
        if (snap_.find_link(lid)->binding(kObjectRole)->node == o) return true;
    } else {
      for (const auto& lid : in)
        if (snap_.find_link(lid)->binding(kSubjectRole)->node == s) return true;
    }
    return false;
  }

  /// Greedy order: smallest domain first, then the smallest domain connected
  /// to what is already bound.
  void plan(const std::vector<bool>& consumed) {
    const std::size_t n = q_.variables.size();
    std::vector<std::vector<std::size_t>> cond_vars(q_.conditions.size());
    for (std::size_t ci = 0; ci < q_.conditions.size(); ++ci)
      if (!consumed[ci]) cond_vars[ci] = vars_of(q_.conditions[ci]);

    std::vector<bool> bound(n, false);
    position_.assign(n, 0);
    while (order_.size() < n) {
      std::optional<std::size_t> best;
      bool best_connected = false;
      for (std::size_t v = 0; v < n; ++v) {
        if (bound[v]) continue;
        bool connected = false;
        for (const auto& vars : cond_vars) {
          if (std::find(vars.begin(), vars.end(), v) == vars.end()) continue;
          for (auto u : vars) connected = connected || bound[u];
        }
        if (!best || (connected && !best_connected) ||
            (connected == best_connected && domains_[v].size() < domains_[*best].size())) {
          best = v;
          best_connected = connected;
        }
      }
      position_[*best] = order_.size();
      bound[*best] = true;
      order_.push_back(*best);
    }

    checks_.assign(n, {});
    generators_.assign(n, {});
    for (std::size_t ci = 0; ci < q_.conditions.size(); ++ci) {
      if (consumed[ci]) continue;
      std::size_t last = 0;
      for (auto v : cond_vars[ci]) last = std::max(last, position_[v]);
      checks_[last].push_back(ci);
      if (const auto* l = std::get_if<ResolvedLink>(&q_.conditions[ci]); l && l->subject != l->object) {
        std::size_t other = position_[l->subject] == last ? l->object : l->subject;
        if (position_[other] < last) generators_[last].push_back(ci);
      }
    }

    members_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (generators_[position_[v]].empty()) continue;
      members_[v] = std::unordered_set<EntityId>(domains_[v].begin(), domains_[v].end());
    }

    last_select_ = 0;
    for (auto v : q_.select) last_select_ = std::max(last_select_, position_[v] + 1);
  }

  /// Candidates for the variable at `depth` given earlier bindings.
  std::vector<EntityId> candidates(std::size_t depth) {
    const std::size_t v = order_[depth];
    const auto& gens = generators_[depth];
    if (gens.empty()) return domains_[v];
    const IdSet* best = nullptr;
    bool v_is_object = false;
    for (auto ci : gens) {
      const auto& l = std::get<ResolvedLink>(q_.conditions[ci]);
      bool as_object = l.object == v;
      const IdSet& links = as_object ? snap_.links_from(binding_[l.subject], l.connector)
                                     : snap_.links_to(binding_[l.object], l.connector);
      if (best == nullptr || links.size() < best->size()) {
        best = &links;
        v_is_object = as_object;
      }
    }
    std::vector<EntityId> out;
    out.reserve(best->size());
    const auto& member = members_[v];
    for (const auto& lid : *best) {
      const Binding* b = snap_.find_link(lid)->binding(v_is_object ? kObjectRole : kSubjectRole);
      if (member.contains(b->node)) out.push_back(b->node);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool check(std::size_t ci) {
    return std::visit(overloaded{
                          [&](const ResolvedLink& l) {
                            return link_holds(binding_[l.subject], l.connector, binding_[l.object]);
                          },
                          [&](const ResolvedAnchor& a) { return anchor_holds(snap_, a, binding_[a.entity]); },
                          [&](const ResolvedProperty& p) { return property_holds(snap_, q_, p, binding_[p.entity]); },
                          [&](const ResolvedCall& c) {
                            std::vector<EntityId> args;
                            for (auto a : c.args) args.push_back(binding_[a]);
                            return call_holds(snap_, c, args);
                          },
                      },
                      q_.conditions[ci]);
  }

  /// Returns true once a full binding was found below an all-selected depth.
  bool search(std::size_t depth, std::set<std::vector<EntityId>>& rows) {
    if (depth == order_.size()) {
      std::vector<EntityId> row;
      for (auto v : q_.select) row.push_back(binding_[v]);
      rows.insert(std::move(row));
      return true;
    }
    const bool existential = depth >= last_select_;
    if (depth == last_select_ && depth > 0) {
      std::vector<EntityId> row;
      for (auto v : q_.select) row.push_back(binding_[v]);
      if (rows.contains(row)) return true;
    }
    const std::size_t v = order_[depth];
    for (const auto& id : candidates(depth)) {
      binding_[v] = id;
      bool ok = true;
      for (auto ci : checks_[depth]) {
        if (!check(ci)) {
          ok = false;
          break;
        }
      }
      if (ok && search(depth + 1, rows) && existential) return true;
    }
    return false;
  }

  const ResolvedQuery& q_;
  const Snapshot& snap_;
  std::vector<std::vector<EntityId>> domains_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;
  std::vector<std::vector<std::size_t>> checks_;
  std::vector<std::vector<std::size_t>> generators_;
  std::vector<std::unordered_set<EntityId>> members_;
  std::vector<EntityId> binding_;
  std::size_t last_select_ = 0;
};

/// Conflicting value kinds anywhere in a property-compared variable's
/// unfiltered domain are an error, whether or not other conditions would
/// have excluded the entity.
void type_check_indexed(const ResolvedQuery& q, const Snapshot& snap, const std::vector<std::vector<EntityId>>& domains) {
  for (const auto& cond : q.conditions) {
    const auto* p = std::get_if<ResolvedProperty>(&cond);
    if (p == nullptr) continue;
    const PropertyIndex* pi = snap.property_index(p->property);
    if (pi == nullptr) continue;
    const auto& dom = domains[p->entity];
    auto scan = [&](LiteralKind kind, const auto& buckets) {
      if (!kind_conflicts(kind, p->op, p->rhs)) return;
      for (const auto& [value, ids] : buckets) {
        for (const auto& id : ids) {
          if (!std::binary_search(dom.begin(), dom.end(), id)) continue;
          type_failure(q, *p, id, property_of(snap, id, p->property)->kind());
        }
      }
    };
    scan(LiteralKind::number, pi->numeric);
    scan(LiteralKind::text, pi->text);
    scan(LiteralKind::boolean, pi->boolean);
  }
}

// ---------------------------------------------------------------------------
// Oracle

class Oracle {
 public:
  Oracle(const Snapshot& snap, const FunctionRegistry& registry, std::uint64_t limit)
      : snap_(snap), registry_(registry), limit_(limit) {
    for (const auto& [id, link] : snap.links()) {
      const Binding* s = link.binding(kSubjectRole);
      const Binding* o = link.binding(kObjectRole);
      if (s == nullptr || o == nullptr) continue;
      triples_.emplace(s->node, link.connector, o->node);
      if (link.connector == builtin::sub_class_of()) supers_[s->node].insert(o->node);
      if (link.connector == builtin::instance_of()) typed_.emplace_back(s->node, o->node);
    }
  }

  std::set<std::vector<EntityId>> rows(const ResolvedQuery& q) {
    std::vector<std::vector<EntityId>> domains;
    for (const auto& v : q.variables) domains.push_back(domain(q, v));

    for (const auto& cond : q.conditions) {
      const auto* p = std::get_if<ResolvedProperty>(&cond);
      if (p == nullptr) continue;
      for (const auto& id : domains[p->entity]) {
        const Literal* value = property_of(snap_, id, p->property);
        if (value && kind_conflicts(value->kind(), p->op, p->rhs)) type_failure(q, *p, id, value->kind());
      }
    }

    std::uint64_t product = 1;
    for (const auto& d : domains) {
      if (d.empty()) return {};
      if (product > limit_ / d.size()) throw EvalError("oracle refuses: more than " + std::to_string(limit_) + " tuples");
      product *= d.size();
    }
    if (product > limit_) throw EvalError("oracle refuses: more than " + std::to_string(limit_) + " tuples");

    // Each condition is tested as soon as its highest-numbered variable is bound.
    std::vector<std::vector<std::size_t>> at(q.variables.size());
    for (std::size_t ci = 0; ci < q.conditions.size(); ++ci) {
      auto vars = vars_of(q.conditions[ci]);
      at[*std::max_element(vars.begin(), vars.end())].push_back(ci);
    }
    std::set<std::vector<EntityId>> out;
    std::vector<EntityId> tuple(q.variables.size());
    enumerate(q, domains, at, 0, tuple, out);
    return out;
  }

 private:
  std::vector<EntityId> domain(const ResolvedQuery& q, const Variable& v) {
    switch (v.kind) {
      case VarKind::constant:
        return {v.entity};
      case VarKind::set_var: {
        auto sub = rows(q.lets.at(v.let_index));
        std::set<EntityId> ids;
        for (const auto& row : sub) ids.insert(row.front());
        return {ids.begin(), ids.end()};
      }
      case VarKind::concept_var: {
        std::set<EntityId> ids;
        for (const auto& [inst, cls] : typed_)
          if (reaches(cls, v.entity)) ids.insert(inst);
        return {ids.begin(), ids.end()};
      }
    }
    return {};
  }

  bool reaches(const EntityId& from, const EntityId& target) const {
    std::set<EntityId> seen{from};
    std::vector<EntityId> stack{from};
    while (!stack.empty()) {
      EntityId cur = stack.back();
      stack.pop_back();
      if (cur == target) return true;
      auto it = supers_.find(cur);
      if (it == supers_.end()) continue;
      for (const auto& s : it->second)
        if (seen.insert(s).second) stack.push_back(s);
    }
    return false;
  }

  bool holds(const ResolvedQuery& q, const ResolvedCondition& cond, const std::vector<EntityId>& t) const {
    return std::visit(
        overloaded{
            [&](const ResolvedLink& l) { return triples_.contains({t[l.subject], l.connector, t[l.object]}); },
            [&](const ResolvedAnchor& a) {
              auto it = snap_.nodes().find(t[a.entity]);
              return it != snap_.nodes().end() && it->second.anchors.contains(a.anchor);
            },
            [&](const ResolvedProperty& p) {
              auto it = snap_.nodes().find(t[p.entity]);
              if (it == snap_.nodes().end()) return false;
              auto prop = it->second.properties.find(p.property);
              if (prop == it->second.properties.end()) return false;
              try {
                return compare(prop->second, p.op, p.rhs);
              } catch (const TypeError&) {
                type_failure(q, p, t[p.entity], prop->second.kind());
              }
            },
            [&](const ResolvedCall& c) {
              std::vector<EntityId> args;
              for (auto a : c.args) args.push_back(t[a]);
              return call_holds(snap_, c, args);
            },
        },
        cond);
  }

  void enumerate(const ResolvedQuery& q, const std::vector<std::vector<EntityId>>& domains,
                 const std::vector<std::vector<std::size_t>>& at, std::size_t i, std::vector<EntityId>& t,
                 std::set<std::vector<EntityId>>& out) {
    if (i == domains.size()) {
      std::vector<EntityId> row;
      for (auto v : q.select) row.push_back(t[v]);
      out.insert(std::move(row));
      return;
    }
    for (const auto& id : domains[i]) {
      t[i] = id;
      bool ok = true;
      for (auto ci : at[i]) {
        if (!holds(q, q.conditions[ci], t)) {
          ok = false;
          break;
        }
      }
      if (ok) enumerate(q, domains, at, i + 1, t, out);
    }
  }

  const Snapshot& snap_;
  const FunctionRegistry& registry_;
  std::uint64_t limit_;
  std::set<std::tuple<EntityId, EntityId, EntityId>> triples_;
  std::map<EntityId, std::set<EntityId>> supers_;
  std::vector<std::pair<EntityId, EntityId>> typed_;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------
// Functions

std::optional<std::vector<double>> feature_vector(const Node& node) {
  const Literal* v = node.property("features");
  if (v == nullptr) return std::nullopt;
  if (v->is_numeric()) return std::vector<double>{v->as_double()};
  if (v->kind() != LiteralKind::text) return std::nullopt;
  std::vector<double> out;
  const std::string& s = v->text();
  std::size_t i = 0;
  auto sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ';'; };
  while (i < s.size()) {
    while (i < s.size() && sep(s[i])) ++i;
    if (i == s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !sep(s[j])) ++j;
    double x = 0;
    auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + j, x);
    if (ec != std::errc() || ptr != s.data() + j || !std::isfinite(x)) return std::nullopt;
    out.push_back(x);
    i = j;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

double similarity(const Snapshot& snap, const EntityId& a, const EntityId& b) {
  const Node* na = snap.find_node(a);
  const Node* nb = snap.find_node(b);
  if (na == nullptr || nb == nullptr) return 0.0;
  auto x = feature_vector(*na);
  auto y = feature_vector(*nb);
  if (!x || !y || x->size() != y->size()) return 0.0;
  double dot = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x->size(); ++i) {
    dot += (*x)[i] * (*y)[i];
    nx += (*x)[i] * (*x)[i];
    ny += (*y)[i] * (*y)[i];
  }
  if (nx == 0 || ny == 0) return 0.0;
  return std::clamp(dot / std::sqrt(nx * ny), 0.0, 1.0);
}

FunctionRegistry FunctionRegistry::with_builtins() {
  FunctionRegistry r;
  r.register_function("similarity", 2, [](const Snapshot& snap, std::span<const EntityId> args) {
    return Literal(similarity(snap, args[0], args[1]));
  });
  return r;
}

void FunctionRegistry::register_function(const std::string& name, std::size_t arity, QueryFunction fn,
                                         LiteralKind result_kind) {
  if (!is_identifier(name) || is_keyword(name)) throw InvariantError("invalid function name '" + name + "'");
  if (fns_.contains(name)) throw DuplicateError("function '" + name + "' already registered");
  if (!fn) throw InvariantError("function '" + name + "' has no body");
  auto spec = std::make_shared<FunctionSpec>();
  spec->name = name;
  spec->arity = arity;
  spec->result_kind = result_kind;
  spec->fn = [name, arity, inner = std::move(fn)](const Snapshot& snap, std::span<const EntityId> args) {
    if (args.size() != arity)
      throw EvalError("function '" + name + "' called with " + std::to_string(args.size()) + " argument(s)");
    return inner(snap, args);
  };
  fns_.emplace(name, std::move(spec));
}

void FunctionRegistry::register_alias(const std::string& alias, const std::string& target) {
  auto spec = find(target);
  if (!spec) throw NotFoundError("no function '" + target + "' to alias");
  if (!is_identifier(alias) || is_keyword(alias)) throw InvariantError("invalid function name '" + alias + "'");
  if (fns_.contains(alias)) throw DuplicateError("function '" + alias + "' already registered");
  fns_.emplace(alias, std::move(spec));
}

std::shared_ptr<const FunctionSpec> FunctionRegistry::find(std::string_view name) const {
  auto it = fns_.find(name);
  return it == fns_.end() ? nullptr : it->second;
}

std::vector<std::string> FunctionRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, spec] : fns_) out.push_back(name);
  return out;
}

// ---------------------------------------------------------------------------
// Entry points

std::size_t ResolvedQuery::variable(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == name) return i;
  throw NotFoundError("no variable '" + std::string(name) + "'");
}

ResolvedQuery resolve(const Query& ast, const Snapshot& snap, const FunctionRegistry& registry) {
  std::vector<std::string> visible;
  std::vector<ResolvedQuery> lets;
  std::vector<std::string> warnings;
  for (const auto& let : ast.lets) {
    for (const auto& id : snap.nodes_labelled(let.name))
      if (snap.find_context(id) == nullptr) {
        warnings.push_back("LET name '" + let.name + "' hides node " + id.str());
        break;
      }
    lets.push_back(Resolver(snap, registry, visible).run({let.get}, let.where));
    for (auto& w : lets.back().warnings) warnings.push_back(std::move(w));
    visible.push_back(let.name);
  }
  ResolvedQuery rq = Resolver(snap, registry, visible).run(ast.select, ast.where);
  warnings.insert(warnings.end(), rq.warnings.begin(), rq.warnings.end());
  rq.warnings = std::move(warnings);
  rq.lets = std::move(lets);
  rq.let_names = std::move(visible);
  return rq;
}

ResultSet evaluate(const ResolvedQuery& q, const Snapshot& snap, const FunctionRegistry& registry) {
  auto start = Clock::now();
  if (q.generation != snap.generation())
    throw EvalError("query was resolved against generation " + std::to_string(q.generation) +
                    ", snapshot is at " + std::to_string(snap.generation()));

  std::vector<std::vector<EntityId>> let_sets;
  for (const auto& let : q.lets) {
    ResultSet r = evaluate(let, snap, registry);
    const IdSet& s = r.sets.at(r.columns.front());
    let_sets.emplace_back(s.begin(), s.end());
  }

  std::vector<std::vector<EntityId>> domains;
  for (const auto& v : q.variables) {
    switch (v.kind) {
      case VarKind::constant:
        domains.push_back({v.entity});
        break;
      case VarKind::set_var:
        domains.push_back(let_sets.at(v.let_index));
        break;
      case VarKind::concept_var: {
        const IdSet& s = snap.instances_of(v.entity);
        domains.emplace_back(s.begin(), s.end());
        break;
      }
    }
  }
  type_check_indexed(q, snap, domains);

  ResultSet rs = make_result(q, Join(q, snap, std::move(domains)).run());
  rs.elapsed_ms = ms_since(start);
  return rs;
}

ResultSet oracle_evaluate(const ResolvedQuery& q, const Snapshot& snap, const FunctionRegistry& registry,
                          std::uint64_t limit) {
  auto start = Clock::now();
  Oracle oracle(snap, registry, limit);
  ResultSet rs = make_result(q, oracle.rows(q));
  rs.elapsed_ms = ms_since(start);
  return rs;
}

ResultSet run_query(std::string_view text, const Snapshot& snap, const FunctionRegistry& registry) {
  return evaluate(resolve(parse(text), snap, registry), snap, registry);
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "text") return OutputFormat::text;
  if (name == "json") return OutputFormat::json;
  if (name == "csv") return OutputFormat::csv;
  throw Error("unknown output format '" + std::string(name) + "'");
}

nlohmann::json result_to_json(const ResultSet& rs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& col : rs.columns) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& id : rs.sets.at(col)) ids.push_back(id.str());
    j[col] = std::move(ids);
  }
  if (rs.columns.size() > 1) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rs.rows) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& id : row) r.push_back(id.str());
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
  }
  j["matches"] = rs.matches();
  j["elapsed_ms"] = rs.elapsed_ms;
  return j;
}

std::string format_result(const ResultSet& rs, OutputFormat format) {
  std::string out;
  switch (format) {
    case OutputFormat::text:
      for (const auto& row : rs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "\t" : "") + row[i].str();
        out += '\n';
      }
      break;
    case OutputFormat::json:
      out = result_to_json(rs).dump(2) + "\n";
      break;
    case OutputFormat::csv:
      for (std::size_t i = 0; i < rs.columns.size(); ++i) out += (i ? "," : "") + csv_field(rs.columns[i]);
      out += '\n';
      for (const auto& row : rs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i].str());
        out += '\n';
      }
      break;
  }
  return out;
}

}  // namespace hyperkb::hyql
