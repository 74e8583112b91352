#include "hyperkb/hyql/ast.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hyperkb/hyql/lexer.hpp"

namespace hyperkb::hyql {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

const std::string& word(const std::string& s) {
  if (!is_identifier(s) || is_keyword(s)) throw Error("cannot print '" + s + "' as a HyQL identifier");
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string literal_text(const Literal& lit) {
  switch (lit.kind()) {
    case LiteralKind::text:
      return (is_identifier(lit.text()) && !is_keyword(lit.text())) ? lit.text() : quote(lit.text());
    case LiteralKind::integer:
      return std::to_string(lit.integer());
    case LiteralKind::number: {
      double v = lit.number();
      if (!std::isfinite(v)) throw Error("cannot print a non-finite number");
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      std::string out(buf, res.ptr);
      if (out.find_first_of(".e") == std::string::npos) out += ".0";
      return out;
    }
    case LiteralKind::boolean:
      return lit.boolean() ? "true" : "false";
  }
  return {};
}

nlohmann::json literal_json(const Literal& lit) {
  nlohmann::json j{{"kind", std::string(to_string(lit.kind()))}};
  std::visit([&](const auto& v) { j["value"] = v; }, lit.value());
  return j;
}

nlohmann::json condition_json(const Condition& c) {
  return std::visit(
      overloaded{
          [](const LinkPattern& p) -> nlohmann::json {
            return {{"link", {{"subject", p.subject}, {"connector", p.connector}, {"object", p.object}}}};
          },
          [](const AnchorFilter& f) -> nlohmann::json {
            return {{"anchor", {{"entity", f.entity}, {"anchor", f.anchor}}}};
          },
          [](const Comparison& cmp) -> nlohmann::json {
            nlohmann::json lhs = std::visit(
                overloaded{
                    [](const PropertyRef& r) -> nlohmann::json {
                      return {{"property", {{"entity", r.entity}, {"name", r.property}}}};
                    },
                    [](const FunctionCall& f) -> nlohmann::json {
                      return {{"call", {{"name", f.name}, {"args", f.args}}}};
                    },
                },
                cmp.lhs);
            return {{"compare", {{"lhs", lhs}, {"op", std::string(to_string(cmp.op))}, {"rhs", literal_json(cmp.rhs)}}}};
          },
      },
      c);
}

std::string cond_list(const std::vector<Condition>& where) {
  std::string out;
  for (std::size_t i = 0; i < where.size(); ++i) {
    if (i) out += " AND ";
    out += to_hyql(where[i]);
  }
  return out;
}

}  // namespace

std::vector<std::string> terms_of(const Condition& cond) {
  return std::visit(overloaded{
                        [](const LinkPattern& p) { return std::vector<std::string>{p.subject, p.object}; },
                        [](const AnchorFilter& f) { return std::vector<std::string>{f.entity}; },
                        [](const Comparison& c) {
                          if (const auto* r = std::get_if<PropertyRef>(&c.lhs)) return std::vector<std::string>{r->entity};
                          return std::get<FunctionCall>(c.lhs).args;
                        },
                    },
                    cond);
}

std::size_t link_pattern_count(const Query& q) {
  std::size_t n = 0;
  for (const auto& c : q.where) n += std::holds_alternative<LinkPattern>(c);
  return n;
}

std::string to_hyql(const Condition& cond) {
  return std::visit(
      overloaded{
          [](const LinkPattern& p) { return word(p.subject) + " " + word(p.connector) + " " + word(p.object); },
          [](const AnchorFilter& f) { return word(f.entity) + "#" + word(f.anchor); },
          [](const Comparison& c) {
            std::string lhs;
            if (const auto* r = std::get_if<PropertyRef>(&c.lhs)) {
              lhs = word(r->entity) + "." + word(r->property);
            } else {
              const auto& f = std::get<FunctionCall>(c.lhs);
              lhs = word(f.name) + "(";
              for (std::size_t i = 0; i < f.args.size(); ++i) lhs += (i ? ", " : "") + word(f.args[i]);
              lhs += ")";
            }
            return lhs + " " + std::string(to_string(c.op)) + " " + literal_text(c.rhs);
          },
      },
      cond);
}

std::string to_hyql(const Query& q) {
  std::string out;
  for (const auto& let : q.lets)
    out += "LET " + word(let.name) + " = { GET " + word(let.get) + " WHERE " + cond_list(let.where) + " }\n";
  out += "SELECT ";
  for (std::size_t i = 0; i < q.select.size(); ++i) out += (i ? ", " : "") + word(q.select[i]);
  out += " WHERE " + cond_list(q.where);
  return out;
}

nlohmann::json to_json(const Query& q) {
  nlohmann::json lets = nlohmann::json::array();
  for (const auto& let : q.lets) {
    nlohmann::json where = nlohmann::json::array();
    for (const auto& c : let.where) where.push_back(condition_json(c));
    lets.push_back({{"name", let.name}, {"get", let.get}, {"where", where}});
  }
  nlohmann::json where = nlohmann::json::array();
  for (const auto& c : q.where) where.push_back(condition_json(c));
  return {{"lets", lets}, {"select", q.select}, {"where", where}};
}

}  // namespace hyperkb::hyql
