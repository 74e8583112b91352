#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperkb/hyql/ast.hpp"
#include "hyperkb/store.hpp"

namespace hyperkb::hyql {

/// Resolution and evaluation failures: unknown names, type errors, function
/// errors, an exceeded oracle guard.
class EvalError : public Error {
 public:
  using Error::Error;
};

using QueryFunction = std::function<Literal(const Snapshot&, std::span<const EntityId>)>;

struct FunctionSpec {
  std::string name;
  std::size_t arity = 0;
  /// Declared kind of every result; comparisons against an incompatible
  /// literal are rejected when the query is resolved.
  LiteralKind result_kind = LiteralKind::number;
  QueryFunction fn;
};

class FunctionRegistry {
 public:
  /// Registry holding the built-in `similarity`.
  static FunctionRegistry with_builtins();

  /// Throws DuplicateError when the name is taken.
  void register_function(const std::string& name, std::size_t arity, QueryFunction fn,
                         LiteralKind result_kind = LiteralKind::number);
  /// Makes `alias` call the function registered as `target`.
  void register_alias(const std::string& alias, const std::string& target);

  std::shared_ptr<const FunctionSpec> find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const FunctionSpec>, std::less<>> fns_;
};

/// Numbers in a `features` value: a text list separated by commas and/or
/// whitespace, or a single number. nullopt when absent or malformed.
std::optional<std::vector<double>> feature_vector(const Node& node);

/// Cosine of the two `features` vectors, clamped to [0, 1]. 0 when either is
/// missing, malformed, zero, or the lengths differ.
double similarity(const Snapshot& snap, const EntityId& a, const EntityId& b);

enum class VarKind { concept_var, set_var, constant };

struct Variable {
  std::string name;
  VarKind kind = VarKind::concept_var;
  /// The concept for concept_var, the entity for constant.
  EntityId entity;
  /// Index into ResolvedQuery::lets for set_var.
  std::size_t let_index = 0;
};

struct ResolvedLink {
  std::size_t subject = 0;
  EntityId connector;
  std::size_t object = 0;
};

struct ResolvedAnchor {
  std::size_t entity = 0;
  std::string anchor;
};

struct ResolvedProperty {
  std::size_t entity = 0;
  std::string property;
  CompareOp op = CompareOp::eq;
  Literal rhs;
};

struct ResolvedCall {
  std::shared_ptr<const FunctionSpec> fn;
  std::string called_as;
  std::vector<std::size_t> args;
  CompareOp op = CompareOp::eq;
  Literal rhs;
};

using ResolvedCondition = std::variant<ResolvedLink, ResolvedAnchor, ResolvedProperty, ResolvedCall>;

/// Every term is a variable; constants are variables with one fixed value.
/// Condition fields hold indexes into `variables`.
struct ResolvedQuery {
  std::vector<Variable> variables;
  std::map<std::string, EntityId> constants;
  std::vector<ResolvedCondition> conditions;
  std::vector<std::size_t> select;
  /// Each LET body, resolved as a GET query selecting one variable.
  std::vector<ResolvedQuery> lets;
  std::vector<std::string> let_names;
  std::uint64_t generation = 0;
  std::vector<std::string> warnings;

  std::size_t variable(std::string_view name) const;
};

ResolvedQuery resolve(const Query& ast, const Snapshot& snap, const FunctionRegistry& registry);

struct ResultSet {
  std::vector<std::string> columns;
  /// Distinct projections onto `columns`, sorted.
  std::vector<std::vector<EntityId>> rows;
  /// Distinct entities per selected variable.
  std::map<std::string, IdSet> sets;
  std::vector<std::string> warnings;
  double elapsed_ms = 0.0;

  std::size_t matches() const { return rows.size(); }
  /// Same rows; timing and warnings ignored.
  bool same_rows(const ResultSet& other) const { return columns == other.columns && rows == other.rows; }
};

/// Index-driven join. Throws EvalError on type errors and function failures.
ResultSet evaluate(const ResolvedQuery& q, const Snapshot& snap, const FunctionRegistry& registry);

inline constexpr std::uint64_t kOracleTupleLimit = 10'000'000;

/// Nested loops over the full cross-product of variable domains computed by
/// scanning the primary maps; uses no secondary index. Refuses (EvalError)
/// when the product exceeds `limit`.
ResultSet oracle_evaluate(const ResolvedQuery& q, const Snapshot& snap, const FunctionRegistry& registry,
                          std::uint64_t limit = kOracleTupleLimit);

/// parse + resolve + evaluate.
ResultSet run_query(std::string_view text, const Snapshot& snap, const FunctionRegistry& registry);

enum class OutputFormat { text, json, csv };

OutputFormat parse_output_format(std::string_view name);
std::string format_result(const ResultSet& rs, OutputFormat format);
nlohmann::json result_to_json(const ResultSet& rs);

}  // namespace hyperkb::hyql
