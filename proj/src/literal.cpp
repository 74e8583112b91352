#include "hyperkb/literal.hpp"

#include <charconv>
#include <compare>

namespace hyperkb {

std::string_view to_string(LiteralKind kind) {
  switch (kind) {
    case LiteralKind::text:
      return "text";
    case LiteralKind::number:
      return "number";
    case LiteralKind::integer:
      return "integer";
    case LiteralKind::boolean:
      return "boolean";
  }
  return "?";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq:
      return "=";
    case CompareOp::ne:
      return "!=";
    case CompareOp::lt:
      return "<";
    case CompareOp::le:
      return "<=";
    case CompareOp::gt:
      return ">";
    case CompareOp::ge:
      return ">=";
  }
  return "?";
}

double Literal::as_double() const {
  if (kind() == LiteralKind::integer) return static_cast<double>(integer());
  return number();
}

std::string Literal::to_display() const {
  switch (kind()) {
    case LiteralKind::text:
      return text();
    case LiteralKind::integer:
      return std::to_string(integer());
    case LiteralKind::boolean:
      return boolean() ? "true" : "false";
    case LiteralKind::number: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, number());
      return std::string(buf, res.ptr);
    }
  }
  return {};
}

std::ostream& operator<<(std::ostream& os, const Literal& lit) { return os << lit.to_display(); }

bool comparable(LiteralKind a, LiteralKind b) {
  auto numeric = [](LiteralKind k) { return k == LiteralKind::number || k == LiteralKind::integer; };
  if (numeric(a) || numeric(b)) return numeric(a) && numeric(b);
  return a == b;
}

namespace {

bool apply(std::partial_ordering ord, CompareOp op) {
  switch (op) {
    case CompareOp::eq:
      return ord == std::partial_ordering::equivalent;
    case CompareOp::ne:
      return ord != std::partial_ordering::equivalent;
    case CompareOp::lt:
      return ord == std::partial_ordering::less;
    case CompareOp::le:
      return ord == std::partial_ordering::less || ord == std::partial_ordering::equivalent;
    case CompareOp::gt:
      return ord == std::partial_ordering::greater;
    case CompareOp::ge:
      return ord == std::partial_ordering::greater || ord == std::partial_ordering::equivalent;
  }
  return false;
}

std::partial_ordering numeric_order(const Literal& a, const Literal& b) {
  if (a.kind() == LiteralKind::integer && b.kind() == LiteralKind::integer) return a.integer() <=> b.integer();
  return a.as_double() <=> b.as_double();
}

}  // namespace

bool compare(const Literal& lhs, CompareOp op, const Literal& rhs) {
  if (!comparable(lhs.kind(), rhs.kind()))
    throw TypeError("cannot compare " + std::string(to_string(lhs.kind())) + " with " +
                    std::string(to_string(rhs.kind())));
  switch (lhs.kind()) {
    case LiteralKind::number:
    case LiteralKind::integer:
      return apply(numeric_order(lhs, rhs), op);
    case LiteralKind::text:
      return apply(lhs.text().compare(rhs.text()) <=> 0, op);
    case LiteralKind::boolean:
      if (op != CompareOp::eq && op != CompareOp::ne) throw TypeError("booleans only support = and !=");
      return apply(lhs.boolean() <=> rhs.boolean(), op);
  }
  return false;
}

}  // namespace hyperkb
