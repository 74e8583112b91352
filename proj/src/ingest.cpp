#include "hyperkb/ingest.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hyperkb/mlschema.hpp"

namespace hyperkb::ingest {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool skippable(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos || line.front() == '#';
}

std::optional<std::int64_t> as_integer(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> as_number(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

EntityId entity_of(const std::string& name, const std::string& ns) {
  return name.find(':') == std::string::npos ? EntityId(ns, name) : EntityId::parse(name);
}

/// mt19937_64 is specified bit-exactly; the bounded draw is done here rather
/// than with a standard distribution, whose output differs across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % n + 1) % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x > limit);
    return x % n;
  }

  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

std::string snake(const std::string& camel) {
  std::string out;
  for (std::size_t i = 0; i < camel.size(); ++i) {
    char c = camel[i];
    if (c >= 'A' && c <= 'Z') {
      if (i) out += '_';
      out += static_cast<char>(c - 'A' + 'a');
    } else {
      out += c;
    }
  }
  return out;
}

double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

// Full-size link counts not implied by the entity counts.
constexpr std::uint64_t kExtraHasTask = 1497;
constexpr std::uint64_t kDualTaskRuns = 160;
constexpr std::uint64_t kSpecifiedBy = 7269;

constexpr std::string_view kSentinelTasks[] = {"object_detection", "semantic_segmentation",
                                               "unsupervised_image_classification"};
constexpr std::string_view kSentinelData[] = {"pascal_voc_2012", "imagenet_detection"};
constexpr std::string_view kOutputs[] = {"Horizon", "Fault", "Salt", "BoundingBox", "Mask", "Label"};
constexpr std::string_view kFrameworks[] = {"pytorch", "tensorflow", "jax", "mxnet", "caffe"};

class DatasetWriter {
 public:
  DatasetWriter(std::ostream& out, DatasetManifest& m)
      : out_(out), m_(m), ctx_("ctx", std::string(kDatasetContextName)) {}

  const EntityId& context() const { return ctx_; }

  void context_record() {
    out_ << hkjsonl::to_line(Context{ctx_, std::string(kDatasetContextName), EntityId("ctx", "pwc"), {}}) << '\n';
    ++m_.contexts;
  }

  void node(Node n) {
    out_ << hkjsonl::to_line(n) << '\n';
    ++m_.nodes;
  }

  void link(const EntityId& connector, const EntityId& s, const EntityId& o) {
    Link l;
    l.id = EntityId(std::string(kDatasetContextName), "l" + std::to_string(seq_++));
    l.connector = connector;
    l.context = ctx_;
    l.bindings.emplace(std::string(kSubjectRole), Binding{s});
    l.bindings.emplace(std::string(kObjectRole), Binding{o});
    out_ << hkjsonl::to_line(l) << '\n';
    ++m_.links;
    ++m_.links_per_connector[std::string(connector.local())];
  }

 private:
  std::ostream& out_;
  DatasetManifest& m_;
  EntityId ctx_;
  std::uint64_t seq_ = 0;
};

EntityId mls(const std::string& name) { return EntityId(std::string(mlschema::kMlsContextName), name); }

}  // namespace

// ---------------------------------------------------------------------------
// Triple import

std::vector<TripleRecord> read_triples(std::istream& in) {
  std::vector<TripleRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(std::move(line));
    if (skippable(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 4) throw LoadError(lineno, "expected 4 tab-separated fields, found " + std::to_string(f.size()));
    for (const auto& field : f)
      if (field.empty()) throw LoadError(lineno, "empty field");
    TripleRecord t{f[0], f[1], f[2], ObjectKind::resource, {}};
    const std::string& kind = f[3];
    if (kind == "resource") {
      t.kind = ObjectKind::resource;
    } else if (kind == "literal") {
      t.kind = ObjectKind::literal;
    } else if (kind == "text" || kind == "number" || kind == "integer" || kind == "boolean") {
      t.kind = ObjectKind::literal;
      t.literal_type = kind;
    } else {
      throw LoadError(lineno, "unknown object kind '" + kind + "'");
    }
    try {
      if (t.kind == ObjectKind::literal) literal_value(t);
    } catch (const Error& e) {
      throw LoadError(lineno, e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::map<std::string, std::string> read_concept_map(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(std::move(line));
    if (skippable(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty()) throw LoadError(lineno, "expected entity<TAB>concept");
    auto [it, fresh] = out.emplace(f[0], f[1]);
    if (!fresh && it->second != f[1]) throw LoadError(lineno, "entity '" + f[0] + "' classified twice");
  }
  return out;
}

Literal literal_value(const TripleRecord& t) {
  const std::string& v = t.object;
  const std::string& type = t.literal_type;
  if (type == "text") return Literal(v);
  if (type == "integer") {
    if (auto i = as_integer(v)) return Literal(*i);
    throw Error("'" + v + "' is not an integer");
  }
  if (type == "number") {
    if (auto d = as_number(v)) return Literal(*d);
    throw Error("'" + v + "' is not a number");
  }
  if (type == "boolean") {
    if (v == "true") return Literal(true);
    if (v == "false") return Literal(false);
    throw Error("'" + v + "' is not a boolean");
  }
  if (auto i = as_integer(v)) return Literal(*i);
  if (auto d = as_number(v)) return Literal(*d);
  return Literal(v);
}

ImportReport import_triples(std::span<const TripleRecord> triples, const std::map<std::string, std::string>& concepts,
                            const Snapshot& vocabulary, std::ostream& out, const ImportOptions& options) {
  ImportReport report;
  EntityId ctx;
  if (!options.context_name.empty()) {
    ctx = EntityId("ctx", options.context_name);
    std::optional<EntityId> parent;
    if (const Context* p = vocabulary.context_named(options.parent_context_name)) parent = p->id;
    out << hkjsonl::to_line(Context{ctx, options.context_name, parent, {}}) << '\n';
  }

  std::unordered_map<std::string, EntityId> concept_ids;
  auto concept_of = [&](const std::string& entity) -> const EntityId& {
    auto c = concepts.find(entity);
    if (c == concepts.end()) throw Error("no concept for entity '" + entity + "'");
    auto it = concept_ids.find(c->second);
    if (it != concept_ids.end()) return it->second;
    auto found = mlschema::find_concept(vocabulary, c->second);
    if (!found) throw Error("unknown concept '" + c->second + "' for entity '" + entity + "'");
    return concept_ids.emplace(c->second, *found).first->second;
  };
  std::unordered_map<std::string, EntityId> connector_ids;
  auto connector_of = [&](const std::string& predicate) -> const EntityId& {
    auto it = connector_ids.find(predicate);
    if (it != connector_ids.end()) return it->second;
    auto found = vocabulary.connectors_named(predicate);
    if (found.empty()) throw Error("unknown predicate '" + predicate + "'");
    if (found.size() > 1) throw Error("ambiguous predicate '" + predicate + "'");
    return connector_ids.emplace(predicate, found.front()->id).first->second;
  };

  std::vector<std::string> order;
  std::unordered_map<std::string, Node> nodes;
  auto node_for = [&](const std::string& name) -> Node& {
    auto it = nodes.find(name);
    if (it != nodes.end()) return it->second;
    concept_of(name);
    order.push_back(name);
    return nodes.emplace(name, Node(entity_of(name, options.ns), ctx)).first->second;
  };

  std::set<std::tuple<std::string, std::string, std::string>> seen_links;
  std::vector<std::tuple<EntityId, EntityId, EntityId>> links;
  for (const auto& t : triples) {
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) throw Error("triple with an empty field");
    Node& subject = node_for(t.subject);
    if (t.kind == ObjectKind::literal) {
      Literal value = literal_value(t);
      if (const Literal* prev = subject.property(t.predicate)) {
        if (!(*prev == value))
          throw Error("conflicting values for " + t.subject + "." + t.predicate + ": " + prev->to_display() +
                      " and " + value.to_display());
        continue;
      }
      subject.set_property(t.predicate, std::move(value));
      ++report.properties;
    } else {
      const EntityId& conn = connector_of(t.predicate);
      EntityId s = subject.id;
      EntityId o = node_for(t.object).id;
      if (seen_links.emplace(t.subject, t.predicate, t.object).second) links.emplace_back(conn, s, o);
    }
  }

  auto emit_link = [&](const EntityId& conn, const EntityId& s, const EntityId& o) {
    Link l;
    l.connector = conn;
    l.context = ctx;
    l.bindings.emplace(std::string(kSubjectRole), Binding{s});
    l.bindings.emplace(std::string(kObjectRole), Binding{o});
    out << hkjsonl::to_line(l) << '\n';
    ++report.links;
  };
  for (const auto& name : order) {
    out << hkjsonl::to_line(nodes.at(name)) << '\n';
    ++report.nodes;
  }
  for (const auto& name : order) emit_link(builtin::instance_of(), nodes.at(name).id, concept_of(name));
  for (const auto& [conn, s, o] : links) emit_link(conn, s, o);
  return report;
}

// ---------------------------------------------------------------------------
// Scale

Scale Scale::parse(std::string_view text) {
  std::string s(text);
  auto bad = [&]() -> Error { return Error("invalid scale '" + s + "'"); };
  if (auto slash = s.find('/'); slash != std::string::npos) {
    auto n = as_integer(s.substr(0, slash));
    auto d = as_integer(s.substr(slash + 1));
    if (!n || !d || *n < 0 || *d <= 0) throw bad();
    return Scale{static_cast<std::uint64_t>(*n), static_cast<std::uint64_t>(*d)};
  }
  std::string mantissa = s;
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    auto ex = as_integer(s.substr(e + 1).starts_with('+') ? s.substr(e + 2) : s.substr(e + 1));
    if (!ex || *ex < -18 || *ex > 18) throw bad();
    exponent = static_cast<long>(*ex);
    mantissa = s.substr(0, e);
  }
  std::string digits;
  long frac = 0;
  bool dot = false;
  for (char c : mantissa) {
    if (c == '.' && !dot) {
      dot = true;
    } else if (c >= '0' && c <= '9') {
      digits += c;
      frac += dot;
    } else {
      throw bad();
    }
  }
  if (digits.empty()) throw bad();
  auto n = as_integer(digits);
  if (!n) throw bad();
  std::uint64_t num = static_cast<std::uint64_t>(*n);
  std::uint64_t den = 1;
  long shift = frac - exponent;
  for (; shift > 0; --shift) {
    if (den > std::numeric_limits<std::uint64_t>::max() / 10) throw bad();
    den *= 10;
  }
  for (; shift < 0; ++shift) {
    if (num > std::numeric_limits<std::uint64_t>::max() / 10) throw bad();
    num *= 10;
  }
  return Scale{num, den};
}

std::string Scale::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

std::uint64_t Scale::apply(std::uint64_t full) const {
  unsigned __int128 twice = static_cast<unsigned __int128>(full) * num * 2 + den;
  return static_cast<std::uint64_t>(twice / (static_cast<unsigned __int128>(den) * 2));
}

const std::vector<std::pair<std::string, std::uint64_t>>& reference_counts() {
  static const std::vector<std::pair<std::string, std::uint64_t>> counts{
      {"Area", 17},
      {"Subarea", 553},
      {"Task", 1097},
      {"Dataset", 615},
      {"DatasetCharacteristic", 615},
      {"Data", 615},
      {"DataCharacteristic", 615},
      {"Model", 3185},
      {"Run", 3187},
      {"ModelCharacteristic", 3185},
      {"Algorithm", 3185},
      {"Implementation", 3186},
      {"ImplementationCharacteristic", 3182},
      {"ModelEvaluation", 3186},
      {"EvaluationMeasure", 5448},
  };
  return counts;
}

GeneratorSpec GeneratorSpec::reference(std::uint64_t seed, Scale scale) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.scale = scale;
  for (const auto& [name, n] : reference_counts()) spec.concept_counts.emplace(name, n);
  return spec;
}

std::uint64_t GeneratorSpec::count(const std::string& concept_name) const {
  auto it = concept_counts.find(concept_name);
  if (it == concept_counts.end() || it->second == 0) return 0;
  return std::max<std::uint64_t>(1, scale.apply(it->second));
}

nlohmann::json DatasetManifest::to_json() const {
  return {{"seed", seed},
          {"scale", scale},
          {"concept_counts", concept_counts},
          {"nodes", nodes},
          {"links", links},
          {"contexts", contexts},
          {"connectors", connectors},
          {"links_per_connector", links_per_connector}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.scale = j.at("scale").get<std::string>();
    m.concept_counts = j.at("concept_counts").get<std::map<std::string, std::uint64_t>>();
    m.nodes = j.at("nodes").get<std::uint64_t>();
    m.links = j.at("links").get<std::uint64_t>();
    m.contexts = j.at("contexts").get<std::uint64_t>();
    m.connectors = j.at("connectors").get<std::uint64_t>();
    m.links_per_connector = j.at("links_per_connector").get<std::map<std::string, std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("dataset manifest: ") + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Generator

DatasetManifest generate(const GeneratorSpec& spec, std::ostream& out) {
  if (spec.scale.num == 0) throw Error("scale must be positive");
  for (const auto& [name, n] : spec.concept_counts) {
    bool known = false;
    for (const auto& [table_name, full] : reference_counts()) known = known || table_name == name;
    if (!known) throw Error("generator: unknown concept '" + name + "'");
  }
  const std::uint64_t R = spec.count("Run");
  if (R == 0) throw Error("scale produces zero runs");

  DatasetManifest m;
  m.seed = spec.seed;
  m.scale = spec.scale.str();
  Rng rng(spec.seed);
  DatasetWriter w(out, m);
  w.context_record();

  // Data instances are the datasets (Dataset is a subclass of Data); only a
  // surplus of Data over Dataset becomes plain Data nodes.
  std::map<std::string, std::uint64_t> direct;
  for (const auto& [name, full] : reference_counts()) direct[name] = spec.count(name);
  direct["Data"] = direct["Data"] > direct["Dataset"] ? direct["Data"] - direct["Dataset"] : 0;

  std::map<std::string, std::vector<EntityId>> ids;
  const std::string ns(kDatasetContextName);
  for (const auto& [name, full] : reference_counts()) {
    auto& list = ids[name];
    const std::string prefix = snake(name);
    for (std::uint64_t i = 0; i < direct[name]; ++i) {
      std::string local = prefix + "_" + std::to_string(i);
      if (name == "Task" && i < std::size(kSentinelTasks)) local = kSentinelTasks[i];
      if (name == "EvaluationMeasure" && i == 0) local = "accuracy";
      Node n(EntityId(ns, local), w.context());
      if (name == "Task" || name == "EvaluationMeasure" || name == "Area" || name == "Subarea")
        n.set_property("name", local);
      if (name == "Dataset" || name == "Data") {
        std::string id = local;
        if (name == "Dataset" && i < std::size(kSentinelData)) id = kSentinelData[i];
        n.set_property("id", id);
      } else if (name == "Model" || name == "ModelEvaluation") {
        n.set_property("accuracy", round4(0.5 + 0.5 * rng.unit()));
      } else if (name == "ModelCharacteristic") {
        n.set_property("output", std::string(kOutputs[rng.below(std::size(kOutputs))]));
      } else if (name == "Implementation") {
        n.set_property("framework", std::string(kFrameworks[rng.below(std::size(kFrameworks))]));
      } else if (name == "Algorithm") {
        if (rng.unit() < 0.3) n.add_anchor(Anchor{"ConvolutionLayer", std::nullopt});
      }
      list.push_back(n.id);
      w.node(std::move(n));
    }
  }

  for (const auto& [name, full] : reference_counts())
    for (const auto& id : ids[name]) w.link(builtin::instance_of(), id, mls(name));

  const auto& area = ids["Area"];
  const auto& subarea = ids["Subarea"];
  const auto& task = ids["Task"];
  const auto& run = ids["Run"];
  const auto& algorithm = ids["Algorithm"];
  const auto& implementation = ids["Implementation"];
  const auto& model = ids["Model"];
  const auto& evaluation = ids["ModelEvaluation"];
  const auto& measure = ids["EvaluationMeasure"];
  const auto& dataset = ids["Dataset"];
  std::vector<EntityId> inputs = dataset;
  inputs.insert(inputs.end(), ids["Data"].begin(), ids["Data"].end());

  // Draw index `k` of a covering assignment: the first `n` go in order.
  auto pick = [&](std::uint64_t k, std::uint64_t n) { return k < n ? k : rng.below(n); };
  auto require = [](const std::vector<EntityId>& v, const char* name) {
    if (v.empty()) throw Error(std::string("generator: no ") + name + " instances at this scale");
  };
  for (const auto& name : {"Area", "Subarea", "Task", "Run", "Algorithm", "Implementation", "Model",
                           "ModelEvaluation", "EvaluationMeasure", "Dataset"})
    require(ids[name], name);

  for (std::uint64_t s = 0; s < subarea.size(); ++s)
    w.link(mls("hasSubarea"), area[pick(s, area.size())], subarea[s]);

  std::set<std::pair<std::uint64_t, std::uint64_t>> has_task;
  for (std::uint64_t t = 0; t < task.size(); ++t) {
    std::uint64_t s = pick(t, subarea.size());
    has_task.emplace(s, t);
    w.link(mls("hasTask"), subarea[s], task[t]);
  }
  {
    std::uint64_t room = subarea.size() * task.size() - has_task.size();
    std::uint64_t extra = std::min(room, spec.scale.apply(kExtraHasTask));
    while (extra > 0) {
      std::uint64_t s = rng.below(subarea.size());
      std::uint64_t t = rng.below(task.size());
      if (!has_task.emplace(s, t).second) continue;
      w.link(mls("hasTask"), subarea[s], task[t]);
      --extra;
    }
  }

  const std::uint64_t T = task.size();
  std::vector<std::uint64_t> first_task(R);
  for (std::uint64_t i = 0; i < R; ++i) {
    if (i == 0 || i == 2)
      first_task[i] = 0;
    else if (i == 1)
      first_task[i] = 1 % T;
    else
      first_task[i] = rng.below(T);
    w.link(mls("achieves"), run[i], task[first_task[i]]);
  }
  if (T >= 2) {
    std::uint64_t dual = std::max<std::uint64_t>(1, spec.scale.apply(kDualTaskRuns));
    std::set<std::uint64_t> chosen;
    w.link(mls("achieves"), run[0], task[T >= 3 ? 2 : 1]);
    chosen.insert(0);
    const std::uint64_t pool = R > 3 ? R - 3 : 0;
    while (chosen.size() < std::min<std::uint64_t>(dual, pool + 1)) {
      std::uint64_t i = 3 + rng.below(pool);
      if (!chosen.insert(i).second) continue;
      std::uint64_t t;
      do {
        t = rng.below(T);
      } while (t == first_task[i]);
      w.link(mls("achieves"), run[i], task[t]);
    }
  }

  std::vector<std::uint64_t> run_input(R);
  for (std::uint64_t i = 0; i < R; ++i) {
    w.link(mls("realizes"), run[i], algorithm[pick(i, algorithm.size())]);
    run_input[i] = i < inputs.size() ? (i + 1) % inputs.size() : rng.below(inputs.size());
    w.link(mls("hasInput"), run[i], inputs[run_input[i]]);
    w.link(mls("hasOutput"), run[i], model[pick(i, model.size())]);
    w.link(mls("hasOutput"), run[i], evaluation[pick(i, evaluation.size())]);
  }
  for (std::uint64_t j = 0; j < implementation.size(); ++j)
    w.link(mls("implements"), implementation[j], algorithm[pick(j, algorithm.size())]);

  auto qualities = [&](const std::vector<EntityId>& owners, const std::vector<EntityId>& traits) {
    if (owners.empty()) return;
    for (std::uint64_t k = 0; k < traits.size(); ++k)
      w.link(mls("hasQuality"), owners[pick(k, owners.size())], traits[k]);
  };
  qualities(model, ids["ModelCharacteristic"]);
  qualities(implementation, ids["ImplementationCharacteristic"]);
  qualities(dataset, ids["DatasetCharacteristic"]);
  qualities(inputs, ids["DataCharacteristic"]);

  const EntityId evaluated_on("pwc", "evaluatedOn");
  for (std::uint64_t j = 0; j < evaluation.size(); ++j) {
    std::uint64_t d = (j < R && run_input[j] < dataset.size()) ? run_input[j] : rng.below(dataset.size());
    w.link(evaluated_on, evaluation[j], dataset[d]);
  }

  {
    const std::uint64_t E = evaluation.size();
    const std::uint64_t M = measure.size();
    std::set<std::pair<std::uint64_t, std::uint64_t>> pairs;
    const std::uint64_t cover = std::max(E, M);
    for (std::uint64_t k = 0; k < cover; ++k) {
      if (!pairs.emplace(k % E, k % M).second) continue;
      w.link(mls("specifiedBy"), evaluation[k % E], measure[k % M]);
    }
    std::uint64_t target = std::min(E * M, std::max<std::uint64_t>(pairs.size(), spec.scale.apply(kSpecifiedBy)));
    while (pairs.size() < target) {
      std::uint64_t e = rng.below(E);
      std::uint64_t mm = rng.unit() < 0.5 ? 0 : rng.below(M);
      if (!pairs.emplace(e, mm).second) continue;
      w.link(mls("specifiedBy"), evaluation[e], measure[mm]);
    }
  }

  for (const auto& [name, full] : reference_counts()) m.concept_counts[name] = ids[name].size();
  m.concept_counts["Data"] += ids["Dataset"].size();
  return m;
}

ConceptStats concept_stats(const Snapshot& snap) {
  ConceptStats stats;
  std::set<EntityId> all;
  std::set<EntityId> listed;
  auto add = [&](const std::string& name, const EntityId& concept_id) {
    const IdSet& inst = snap.instances_of(concept_id);
    stats.per_concept.emplace_back(name, inst.size());
    all.insert(inst.begin(), inst.end());
    listed.insert(concept_id);
  };
  for (const auto& [name, full] : reference_counts()) {
    auto id = mlschema::find_concept(snap, name);
    if (id)
      add(name, *id);
    else
      stats.per_concept.emplace_back(name, 0);
  }
  std::vector<std::pair<std::string, EntityId>> others;
  for (const auto& [concept_id, inst] : snap.indexes().by_concept) {
    if (listed.contains(concept_id)) continue;
    const Node* n = snap.find_node(concept_id);
    const Literal* name = n ? n->property("name") : nullptr;
    others.emplace_back(name && name->kind() == LiteralKind::text ? name->text() : concept_id.str(), concept_id);
  }
  std::sort(others.begin(), others.end());
  for (const auto& [name, id] : others) add(name, id);
  stats.total = all.size();
  return stats;
}

}  // namespace hyperkb::ingest
