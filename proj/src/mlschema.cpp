#include "hyperkb/mlschema.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace hyperkb::mlschema {

using nlohmann::json;

namespace {

std::vector<std::string> names_from(const json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(it->get<std::string>());
  } else if (it->is_array()) {
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  } else {
    throw Error(std::string("manifest: \"") + key + "\" must be a string or an array of strings");
  }
  return out;
}

LiteralKind kind_from(const std::string& s) {
  if (s == "text" || s == "string") return LiteralKind::text;
  if (s == "number" || s == "float") return LiteralKind::number;
  if (s == "integer") return LiteralKind::integer;
  if (s == "boolean") return LiteralKind::boolean;
  throw Error("manifest: unknown literal kind '" + s + "'");
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '|';
    out += p;
  }
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto bar = s.find('|', start);
    if (bar == std::string::npos) bar = s.size();
    if (bar > start) out.push_back(s.substr(start, bar - start));
    start = bar + 1;
  }
  return out;
}

void check_unique(const OntologyManifest& m) {
  std::set<std::string> seen;
  for (const auto& c : m.concepts) {
    if (c.name.empty()) throw Error("manifest: empty concept name");
    if (!seen.insert(c.name).second) throw Error("manifest: duplicate concept '" + c.name + "'");
  }
  std::set<std::string> rels;
  for (const auto& r : m.relations) {
    if (r.name.empty()) throw Error("manifest: empty relation name");
    if (!rels.insert(r.name).second) throw Error("manifest: duplicate relation '" + r.name + "'");
  }
}

OntologyManifest make_ml_schema() {
  OntologyManifest m;
  for (const char* name : {"Task", "Algorithm", "Implementation", "ImplementationCharacteristic", "Run", "Model",
                           "ModelCharacteristic", "ModelEvaluation", "EvaluationMeasure", "Data",
                           "DataCharacteristic", "Dataset", "DatasetCharacteristic", "Area", "Subarea"})
    m.concepts.push_back({name, std::nullopt, std::nullopt});
  for (auto& c : m.concepts)
    if (c.name == "Dataset") c.parent = "Data";
  m.relations = {
      {"achieves", {"Run"}, {"Task"}},
      {"realizes", {"Run"}, {"Algorithm"}},
      {"implements", {"Implementation"}, {"Algorithm"}},
      {"hasInput", {"Run"}, {"Data", "Dataset"}},
      {"hasOutput", {"Run"}, {"Model", "ModelEvaluation"}},
      {"hasQuality",
       {"Model", "Implementation", "Dataset", "Data"},
       {"ModelCharacteristic", "ImplementationCharacteristic", "DatasetCharacteristic", "DataCharacteristic"}},
      {"specifiedBy", {"ModelEvaluation"}, {"EvaluationMeasure"}},
      {"hasTask", {"Subarea"}, {"Task"}},
      {"hasSubarea", {"Area"}, {"Subarea"}},
  };
  m.datatype_properties = {
      {"accuracy", "Model", LiteralKind::number},
      {"accuracy", "ModelEvaluation", LiteralKind::number},
      {"id", "Data", LiteralKind::text},
      {"output", "ModelCharacteristic", LiteralKind::text},
  };
  return m;
}

OntologyManifest make_pwc() {
  OntologyManifest m;
  m.relations = {{"evaluatedOn", {"ModelEvaluation"}, {"Dataset"}}};
  return m;
}

/// Records that materialize `manifest` inside context `ctx_id`.
std::vector<hkjsonl::Record> manifest_records(const Snapshot& snap, const OntologyManifest& manifest,
                                              const EntityId& ctx_id, const std::string& ctx_name,
                                              const EntityId& parent_ctx) {
  check_unique(manifest);
  std::vector<hkjsonl::Record> out;
  out.emplace_back(Context{ctx_id, ctx_name, parent_ctx, {}});

  std::unordered_map<std::string, EntityId> local;
  for (const auto& c : manifest.concepts)
    local.emplace(c.name, c.id ? EntityId::parse(*c.id) : EntityId(ctx_name, c.name));
  auto resolve = [&](const std::string& name) -> EntityId {
    if (auto it = local.find(name); it != local.end()) return it->second;
    if (auto found = find_concept(snap, name)) return *found;
    throw NotFoundError("unknown concept '" + name + "'");
  };

  for (const auto& c : manifest.concepts) {
    Node n(local.at(c.name), ctx_id);
    n.set_property("name", c.name);
    n.set_property(std::string(builtin::kKindProperty), std::string(builtin::kConceptKind));
    for (const auto& d : manifest.datatype_properties)
      if (d.concept_name == c.name) n.set_property("hk:datatype:" + d.name, std::string(to_string(d.kind)));
    out.emplace_back(std::move(n));
  }
  for (const auto& d : manifest.datatype_properties) {
    if (!local.contains(d.concept_name)) {
      EntityId target = resolve(d.concept_name);
      out.emplace_back(hkjsonl::SetProperty{target, "hk:datatype:" + d.name, std::string(to_string(d.kind))});
    }
  }
  for (const auto& c : manifest.concepts) {
    if (!c.parent) continue;
    Link l;
    l.connector = builtin::sub_class_of();
    l.context = ctx_id;
    l.bindings.emplace(std::string(kSubjectRole), Binding{local.at(c.name)});
    l.bindings.emplace(std::string(kObjectRole), Binding{resolve(*c.parent)});
    out.emplace_back(std::move(l));
  }
  for (const auto& r : manifest.relations) {
    for (const auto& name : r.domain) resolve(name);
    for (const auto& name : r.range) resolve(name);
    Connector conn{EntityId(ctx_name, r.name), r.name, {std::string(kSubjectRole), std::string(kObjectRole)}, ctx_id,
                   {}};
    if (!r.domain.empty()) conn.properties.emplace("domain", join(r.domain));
    if (!r.range.empty()) conn.properties.emplace("range", join(r.range));
    out.emplace_back(std::move(conn));
  }
  return out;
}

}  // namespace

OntologyManifest manifest_from_json(const json& doc) {
  if (!doc.is_object()) throw Error("manifest: expected a JSON object");
  OntologyManifest m;
  try {
    for (const auto& c : doc.value("concepts", json::array())) {
      ConceptDecl decl;
      decl.name = c.at("name").get<std::string>();
      if (auto p = c.find("parent"); p != c.end() && !p->is_null()) decl.parent = p->get<std::string>();
      if (auto id = c.find("id"); id != c.end() && !id->is_null()) decl.id = id->get<std::string>();
      m.concepts.push_back(std::move(decl));
    }
    for (const auto& r : doc.value("relations", json::array()))
      m.relations.push_back({r.at("name").get<std::string>(), names_from(r, "domain"), names_from(r, "range")});
    for (const auto& d : doc.value("datatype_properties", json::array()))
      m.datatype_properties.push_back({d.at("name").get<std::string>(), d.at("concept").get<std::string>(),
                                       kind_from(d.value("kind", std::string("text")))});
  } catch (const json::exception& e) {
    throw Error(std::string("manifest: ") + e.what());
  }
  check_unique(m);
  return m;
}

json manifest_to_json(const OntologyManifest& m) {
  json doc{{"concepts", json::array()}, {"relations", json::array()}, {"datatype_properties", json::array()}};
  for (const auto& c : m.concepts) {
    json j{{"name", c.name}};
    if (c.parent) j["parent"] = *c.parent;
    if (c.id) j["id"] = *c.id;
    doc["concepts"].push_back(std::move(j));
  }
  for (const auto& r : m.relations) doc["relations"].push_back({{"name", r.name}, {"domain", r.domain}, {"range", r.range}});
  for (const auto& d : m.datatype_properties)
    doc["datatype_properties"].push_back({{"name", d.name}, {"concept", d.concept_name}, {"kind", to_string(d.kind)}});
  return doc;
}

OntologyManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(doc);
}

const OntologyManifest& ml_schema_manifest() {
  static const OntologyManifest m = make_ml_schema();
  return m;
}

const OntologyManifest& pwc_manifest() {
  static const OntologyManifest m = make_pwc();
  return m;
}

EntityId bootstrap_ml_schema(KnowledgeBase& kb) {
  Snapshot snap = kb.snapshot();
  if (const Context* existing = snap.context_named(kMlsContextName)) return existing->id;
  const EntityId ctx("ctx", kMlsContextName);
  auto records =
      manifest_records(snap, ml_schema_manifest(), ctx, std::string(kMlsContextName), builtin::default_context());
  try {
    kb.apply(records);
  } catch (const LoadError&) {
    // lost a race with a concurrent bootstrap
    if (const Context* existing = kb.snapshot().context_named(kMlsContextName)) return existing->id;
    throw;
  }
  return ctx;
}

EntityId extend_domain(KnowledgeBase& kb, const OntologyManifest& manifest, const std::string& context_name) {
  Snapshot snap = kb.snapshot();
  if (context_name.empty() || context_name.find(':') != std::string::npos)
    throw InvariantError("invalid context name '" + context_name + "'");
  if (snap.context_named(context_name) != nullptr)
    throw DuplicateError("duplicate context name '" + context_name + "'");
  const Context* mls = snap.context_named(kMlsContextName);
  EntityId parent = mls ? mls->id : builtin::default_context();
  EntityId ctx("ctx", context_name);
  kb.apply(manifest_records(snap, manifest, ctx, context_name, parent));
  return ctx;
}

EntityId bootstrap_dataset_vocabulary(KnowledgeBase& kb) {
  bootstrap_ml_schema(kb);
  if (const Context* existing = kb.snapshot().context_named(kPwcContextName)) return existing->id;
  return extend_domain(kb, pwc_manifest(), std::string(kPwcContextName));
}

std::optional<EntityId> find_concept(const Snapshot& snap, std::string_view name) {
  std::optional<EntityId> found;
  for (const auto& id : snap.nodes_labelled(name)) {
    if (!snap.is_concept(id)) continue;
    if (found) throw Error("ambiguous concept name '" + std::string(name) + "'");
    found = id;
  }
  return found;
}

std::vector<std::string> check_context_separation(const Snapshot& snap) {
  std::vector<std::string> out;
  const Context* mls = snap.context_named(kMlsContextName);
  if (mls == nullptr) return out;
  for (const auto& member : mls->members) {
    if (snap.find_node(member) == nullptr) continue;
    if (!snap.links_from(member, builtin::instance_of()).empty())
      out.push_back("instance " + member.str() + " is a member of the mls context");
  }
  return out;
}

std::vector<std::string> audit_domain_range(const Snapshot& snap) {
  std::vector<std::string> out;
  auto fits = [&](const EntityId& node, const std::vector<std::string>& concepts) {
    if (snap.is_concept(node)) return true;
    for (const auto& name : concepts) {
      auto c = find_concept(snap, name);
      if (c && snap.instances_of(*c).contains(node)) return true;
    }
    return false;
  };
  for (const auto& [id, conn] : snap.connectors()) {
    const Literal* domain = conn.properties.count("domain") ? &conn.properties.at("domain") : nullptr;
    const Literal* range = conn.properties.count("range") ? &conn.properties.at("range") : nullptr;
    if (domain == nullptr && range == nullptr) continue;
    for (const auto& link_id : snap.links_of_connector(id)) {
      const Link& link = *snap.find_link(link_id);
      const Binding* s = link.binding(kSubjectRole);
      const Binding* o = link.binding(kObjectRole);
      if (domain && s && !fits(s->node, split(domain->text())))
        out.push_back(link_id.str() + ": subject " + s->node.str() + " outside domain of " + conn.name);
      if (range && o && !fits(o->node, split(range->text())))
        out.push_back(link_id.str() + ": object " + o->node.str() + " outside range of " + conn.name);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hyperkb::mlschema
