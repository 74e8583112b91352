#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>

#include "hyperkb/error.hpp"

namespace hyperkb {

enum class LiteralKind { text, number, integer, boolean };

std::string_view to_string(LiteralKind kind);

/// A property value. `number` and `integer` compare numerically with each
/// other; any other cross-kind comparison is a type error.
class Literal {
 public:
  using Value = std::variant<std::string, double, std::int64_t, bool>;

  Literal() : value_(std::string{}) {}
  Literal(std::string text) : value_(std::move(text)) {}
  Literal(const char* text) : value_(std::string(text)) {}
  Literal(double number) : value_(number) {}
  Literal(std::int64_t integer) : value_(integer) {}
  Literal(int integer) : value_(static_cast<std::int64_t>(integer)) {}
  Literal(bool boolean) : value_(boolean) {}

  LiteralKind kind() const { return static_cast<LiteralKind>(value_.index()); }
  bool is_numeric() const { return kind() == LiteralKind::number || kind() == LiteralKind::integer; }

  const std::string& text() const { return std::get<std::string>(value_); }
  double number() const { return std::get<double>(value_); }
  std::int64_t integer() const { return std::get<std::int64_t>(value_); }
  bool boolean() const { return std::get<bool>(value_); }
  /// Numeric value of a number or integer literal.
  double as_double() const;

  const Value& value() const { return value_; }

  /// Human-readable rendering (text unquoted).
  std::string to_display() const;

  /// Structural equality: same kind and same value.
  friend bool operator==(const Literal& a, const Literal& b) = default;

 private:
  Value value_;
};

std::ostream& operator<<(std::ostream& os, const Literal& lit);

class TypeError : public Error {
 public:
  using Error::Error;
};

enum class CompareOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(CompareOp op);

/// True when values of these kinds may be compared.
bool comparable(LiteralKind a, LiteralKind b);

/// Three-way comparison under the literal-kind rules. Booleans only support
/// equality; ordering them (or mixing kinds) throws TypeError.
bool compare(const Literal& lhs, CompareOp op, const Literal& rhs);

}  // namespace hyperkb
