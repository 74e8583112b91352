#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperkb/literal.hpp"

namespace hyperkb::hyql {

/// `subject connector object`. Terms are resolved later.
struct LinkPattern {
  std::string subject;
  std::string connector;
  std::string object;
  friend bool operator==(const LinkPattern&, const LinkPattern&) = default;
};

/// `entity#anchor`
struct AnchorFilter {
  std::string entity;
  std::string anchor;
  friend bool operator==(const AnchorFilter&, const AnchorFilter&) = default;
};

/// `entity.property`
struct PropertyRef {
  std::string entity;
  std::string property;
  friend bool operator==(const PropertyRef&, const PropertyRef&) = default;
};

struct FunctionCall {
  std::string name;
  std::vector<std::string> args;
  friend bool operator==(const FunctionCall&, const FunctionCall&) = default;
};

struct Comparison {
  std::variant<PropertyRef, FunctionCall> lhs;
  CompareOp op = CompareOp::eq;
  Literal rhs;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

using Condition = std::variant<LinkPattern, AnchorFilter, Comparison>;

/// `LET name = { GET get WHERE where }`
struct LetBinding {
  std::string name;
  std::string get;
  std::vector<Condition> where;
  friend bool operator==(const LetBinding&, const LetBinding&) = default;
};

struct Query {
  std::vector<LetBinding> lets;
  std::vector<std::string> select;
  std::vector<Condition> where;
  friend bool operator==(const Query&, const Query&) = default;
};

/// Entity terms a condition mentions (subject/object, filtered entity,
/// function arguments). Connector and function names are not terms.
std::vector<std::string> terms_of(const Condition& cond);

std::size_t link_pattern_count(const Query& q);

/// Canonical HyQL text. Parsing the output yields an equal Query.
std::string to_hyql(const Query& q);
std::string to_hyql(const Condition& cond);

nlohmann::json to_json(const Query& q);

}  // namespace hyperkb::hyql
