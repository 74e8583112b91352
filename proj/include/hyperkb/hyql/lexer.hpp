#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hyperkb/error.hpp"
#include "hyperkb/literal.hpp"

namespace hyperkb::hyql {

enum class TokenKind {
  kw_select,
  kw_get,
  kw_where,
  kw_and,
  kw_let,
  ident,
  number,
  string,
  hash,
  dot,
  eq,
  ne,
  lt,
  le,
  gt,
  ge,
  lbrace,
  rbrace,
  lparen,
  rparen,
  comma,
  end,
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::end;
  /// Source spelling; for strings, the unescaped contents.
  std::string text;
  /// Set for numbers and strings.
  Literal value;
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Lexical, syntax and semantic errors. Positions are 1-based; both are 0 for
/// errors not tied to a location.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// The final token is always `end`.
std::vector<Token> tokenize(std::string_view text);

bool is_keyword(std::string_view word);
bool is_identifier(std::string_view word);

}  // namespace hyperkb::hyql
