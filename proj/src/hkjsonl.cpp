#include "hyperkb/hkjsonl.hpp"

#include <limits>

#include <nlohmann/json.hpp>

namespace hyperkb::hkjsonl {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

EntityId require_id(const json& j, const char* key) { return EntityId::parse(require_string(j, key)); }

EntityId optional_id(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
  return EntityId::parse(it->get<std::string>());
}

PropertyMap props_from_json(const json& j) {
  PropertyMap out;
  auto it = j.find("props");
  if (it == j.end()) return out;
  if (!it->is_object()) throw Error("field \"props\" must be an object");
  for (const auto& [k, v] : it->items()) {
    if (k.empty()) throw Error("empty property name");
    out.emplace(k, literal_from_json(v));
  }
  return out;
}

template <typename J>
void props_to_json(J& j, const PropertyMap& props) {
  if (props.empty()) return;
  auto& obj = j["props"] = J::object();
  for (const auto& [k, v] : props) obj[k] = literal_to_json(v);
}

Context context_from_json(const json& j) {
  Context c;
  c.id = require_id(j, "id");
  c.name = require_string(j, "name");
  EntityId parent = optional_id(j, "parent");
  if (!parent.empty()) c.parent = parent;
  if (auto it = j.find("members"); it != j.end()) {
    if (!it->is_array()) throw Error("field \"members\" must be an array");
    for (const auto& m : *it) c.members.insert(EntityId::parse(m.get<std::string>()));
  }
  return c;
}

Connector connector_from_json(const json& j) {
  Connector c;
  c.id = require_id(j, "id");
  c.name = require_string(j, "name");
  const json& roles = require(j, "roles");
  if (!roles.is_array()) throw Error("field \"roles\" must be an array");
  for (const auto& r : roles) {
    if (!r.is_string()) throw Error("roles must be strings");
    c.roles.push_back(r.get<std::string>());
  }
  check_roles(c.roles);
  c.context = optional_id(j, "ctx");
  c.properties = props_from_json(j);
  return c;
}

Node node_from_json(const json& j) {
  Node n(require_id(j, "id"), optional_id(j, "ctx"));
  if (auto it = j.find("anchors"); it != j.end()) {
    if (!it->is_array()) throw Error("field \"anchors\" must be an array");
    for (const auto& a : *it) {
      if (a.is_string()) {
        n.add_anchor(Anchor{a.get<std::string>(), std::nullopt});
      } else if (a.is_object()) {
        Anchor anchor{require_string(a, "name"), std::nullopt};
        if (auto d = a.find("descriptor"); d != a.end()) anchor.descriptor = d->get<std::string>();
        n.add_anchor(std::move(anchor));
      } else {
        throw Error("anchors must be strings or objects");
      }
    }
  }
  n.properties = props_from_json(j);
  return n;
}

Link link_from_json(const json& j) {
  Link l;
  l.id = optional_id(j, "id");
  l.connector = require_id(j, "conn");
  l.context = optional_id(j, "ctx");
  const json& b = require(j, "b");
  if (!b.is_object()) throw Error("field \"b\" must be an object");
  for (const auto& [role, target] : b.items()) {
    Binding binding;
    if (target.is_string()) {
      binding.node = EntityId::parse(target.get<std::string>());
    } else if (target.is_object()) {
      binding.node = require_id(target, "n");
      if (auto a = target.find("a"); a != target.end()) binding.anchor = a->get<std::string>();
    } else {
      throw Error("binding for role '" + role + "' must be an object");
    }
    if (binding.anchor.empty()) throw Error("empty anchor name in binding '" + role + "'");
    l.bindings.emplace(role, std::move(binding));
  }
  l.properties = props_from_json(j);
  return l;
}

}  // namespace

Literal literal_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::string:
      return Literal(j.get<std::string>());
    case json::value_t::boolean:
      return Literal(j.get<bool>());
    case json::value_t::number_integer:
      return Literal(j.get<std::int64_t>());
    case json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw Error("integer property out of range");
      return Literal(static_cast<std::int64_t>(u));
    }
    case json::value_t::number_float:
      return Literal(j.get<double>());
    default:
      throw Error("property values must be strings, numbers or booleans");
  }
}

json literal_to_json(const Literal& lit) {
  switch (lit.kind()) {
    case LiteralKind::text:
      return lit.text();
    case LiteralKind::number:
      return lit.number();
    case LiteralKind::integer:
      return lit.integer();
    case LiteralKind::boolean:
      return lit.boolean();
  }
  return nullptr;
}

Record record_from_json(const json& j) {
  if (!j.is_object()) throw Error("record must be a JSON object");
  const std::string t = require_string(j, "t");
  if (t == "node") return node_from_json(j);
  if (t == "link") return link_from_json(j);
  if (t == "conn") return connector_from_json(j);
  if (t == "ctx") return context_from_json(j);
  if (t == "set") return SetProperty{require_id(j, "id"), require_string(j, "k"), literal_from_json(require(j, "v"))};
  if (t == "unset") return UnsetProperty{require_id(j, "id"), require_string(j, "k")};
  if (t == "del") return Remove{require_id(j, "id")};
  throw Error("unknown record type \"" + t + "\"");
}

Record parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed JSON: ") + e.what());
  }
  try {
    return record_from_json(j);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed record: ") + e.what());
  }
}

namespace {

struct Writer {
  ojson operator()(const Context& c) const {
    ojson j{{"t", "ctx"}, {"id", c.id.str()}, {"name", c.name}};
    if (c.parent) j["parent"] = c.parent->str();
    if (!c.members.empty()) {
      auto& m = j["members"] = ojson::array();
      for (const auto& id : c.members) m.push_back(id.str());
    }
    return j;
  }
  ojson operator()(const Connector& c) const {
    ojson j{{"t", "conn"}, {"id", c.id.str()}, {"name", c.name}, {"roles", c.roles}};
    if (!c.context.empty()) j["ctx"] = c.context.str();
    props_to_json(j, c.properties);
    return j;
  }
  ojson operator()(const Node& n) const {
    ojson j{{"t", "node"}, {"id", n.id.str()}};
    if (!n.context.empty()) j["ctx"] = n.context.str();
    ojson anchors = ojson::array();
    for (const auto& [name, a] : n.anchors) {
      if (name == builtin::kLambda && !a.descriptor) continue;
      if (a.descriptor)
        anchors.push_back(ojson{{"name", a.name}, {"descriptor", *a.descriptor}});
      else
        anchors.push_back(a.name);
    }
    if (!anchors.empty()) j["anchors"] = std::move(anchors);
    props_to_json(j, n.properties);
    return j;
  }
  ojson operator()(const Link& l) const {
    ojson j{{"t", "link"}};
    if (!l.id.empty()) j["id"] = l.id.str();
    j["conn"] = l.connector.str();
    if (!l.context.empty()) j["ctx"] = l.context.str();
    auto& b = j["b"] = ojson::object();
    for (const auto& [role, binding] : l.bindings) {
      ojson target{{"n", binding.node.str()}};
      if (binding.anchor != builtin::kLambda) target["a"] = binding.anchor;
      b[role] = std::move(target);
    }
    props_to_json(j, l.properties);
    return j;
  }
  ojson operator()(const SetProperty& s) const {
    return ojson{{"t", "set"}, {"id", s.node.str()}, {"k", s.name}, {"v", literal_to_json(s.value)}};
  }
  ojson operator()(const UnsetProperty& s) const { return ojson{{"t", "unset"}, {"id", s.node.str()}, {"k", s.name}}; }
  ojson operator()(const Remove& r) const { return ojson{{"t", "del"}, {"id", r.id.str()}}; }
};

}  // namespace

std::string to_line(const Record& record) { return std::visit(Writer{}, record).dump(); }

std::vector<Record> read_records(std::istream& in) {
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      throw LoadError(lineno, e.what());
    }
  }
  if (in.bad()) throw IoError("read error");
  return out;
}

}  // namespace hyperkb::hkjsonl
