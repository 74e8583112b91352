#include "hyperkb/hyql/lexer.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <utility>

namespace hyperkb::hyql {

namespace {

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (lower(a[i]) != lower(b[i])) return false;
  return true;
}

constexpr std::array<std::pair<std::string_view, TokenKind>, 5> kKeywords{{
    {"select", TokenKind::kw_select},
    {"get", TokenKind::kw_get},
    {"where", TokenKind::kw_where},
    {"and", TokenKind::kw_and},
    {"let", TokenKind::kw_let},
}};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        out.push_back(std::move(t));
        return out;
      }
      char c = src_[pos_];
      if (ident_start(c)) {
        lex_word(t);
      } else if (digit(c) || (c == '-' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
        lex_number(t);
      } else if (c == '"' || c == '\'') {
        lex_string(t);
      } else {
        lex_symbol(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      char c = src_[pos_++];
      if (c == '\n') {
        ++line_;
        column_ = 1;
      } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
        ++column_;
      }
    }
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
        advance();
      else
        break;
    }
  }

  [[noreturn]] void fail(const Token& at, const std::string& what) const {
    throw ParseError(at.line, at.column, what);
  }

  void lex_word(Token& t) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
    t.text = std::string(src_.substr(start, pos_ - start));
    t.kind = TokenKind::ident;
    for (const auto& [kw, kind] : kKeywords)
      if (iequals(t.text, kw)) t.kind = kind;
  }

  void lex_number(Token& t) {
    std::size_t start = pos_;
    bool real = false;
    if (src_[pos_] == '-') advance();
    while (pos_ < src_.size() && digit(src_[pos_])) advance();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && digit(src_[pos_ + 1])) {
      real = true;
      advance();
      while (pos_ < src_.size() && digit(src_[pos_])) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && digit(src_[look])) {
        real = true;
        advance(look - pos_);
        while (pos_ < src_.size() && digit(src_[pos_])) advance();
      }
    }
    if (pos_ < src_.size() && ident_char(src_[pos_])) {
      Token bad;
      bad.line = line_;
      bad.column = column_;
      fail(bad, std::string("malformed number near '") + src_[pos_] + "'");
    }
    t.kind = TokenKind::number;
    t.text = std::string(src_.substr(start, pos_ - start));
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (real) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) fail(t, "number out of range: " + t.text);
      t.value = Literal(v);
    } else {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) fail(t, "integer out of range: " + t.text);
      t.value = Literal(v);
    }
  }

  void lex_string(Token& t) {
    char quote = src_[pos_];
    advance();
    std::string out;
    for (;;) {
      if (pos_ >= src_.size()) fail(t, "unterminated string");
      char c = src_[pos_];
      if (c == quote) {
        advance();
        break;
      }
      if (c == '\\') {
        if (pos_ + 1 >= src_.size()) fail(t, "unterminated string");
        char e = src_[pos_ + 1];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\':
          case '"':
          case '\'': out += e; break;
          default: {
            Token bad;
            bad.line = line_;
            bad.column = column_;
            fail(bad, std::string("unknown escape '\\") + e + "'");
          }
        }
        advance(2);
        continue;
      }
      out += c;
      advance();
    }
    t.kind = TokenKind::string;
    t.text = out;
    t.value = Literal(std::move(out));
  }

  void lex_symbol(Token& t) {
    std::string_view rest = src_.substr(pos_);
    auto take = [&](TokenKind kind, std::size_t bytes) {
      t.kind = kind;
      t.text = std::string(rest.substr(0, bytes));
      advance(bytes);
    };
    if (rest.starts_with(">=")) return take(TokenKind::ge, 2);
    if (rest.starts_with("<=")) return take(TokenKind::le, 2);
    if (rest.starts_with("!=")) return take(TokenKind::ne, 2);
    if (rest.starts_with("≠")) return take(TokenKind::ne, 3);
    if (rest.starts_with("≤")) return take(TokenKind::le, 3);
    if (rest.starts_with("≥")) return take(TokenKind::ge, 3);
    switch (rest[0]) {
      case '#': return take(TokenKind::hash, 1);
      case '.': return take(TokenKind::dot, 1);
      case '=': return take(TokenKind::eq, 1);
      case '<': return take(TokenKind::lt, 1);
      case '>': return take(TokenKind::gt, 1);
      case '{': return take(TokenKind::lbrace, 1);
      case '}': return take(TokenKind::rbrace, 1);
      case '(': return take(TokenKind::lparen, 1);
      case ')': return take(TokenKind::rparen, 1);
      case ',': return take(TokenKind::comma, 1);
      default: break;
    }
    unsigned char c = static_cast<unsigned char>(rest[0]);
    std::string shown;
    if (c >= 0x20 && c < 0x7f) {
      shown = std::string("'") + rest[0] + "'";
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "0x%02X", c);
      shown = buf;
    }
    fail(t, "illegal character " + shown);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
    : Error(line == 0 ? what : std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kw_select: return "SELECT";
    case TokenKind::kw_get: return "GET";
    case TokenKind::kw_where: return "WHERE";
    case TokenKind::kw_and: return "AND";
    case TokenKind::kw_let: return "LET";
    case TokenKind::ident: return "identifier";
    case TokenKind::number: return "number";
    case TokenKind::string: return "string";
    case TokenKind::hash: return "'#'";
    case TokenKind::dot: return "'.'";
    case TokenKind::eq: return "'='";
    case TokenKind::ne: return "'!='";
    case TokenKind::lt: return "'<'";
    case TokenKind::le: return "'<='";
    case TokenKind::gt: return "'>'";
    case TokenKind::ge: return "'>='";
    case TokenKind::lbrace: return "'{'";
    case TokenKind::rbrace: return "'}'";
    case TokenKind::lparen: return "'('";
    case TokenKind::rparen: return "')'";
    case TokenKind::comma: return "','";
    case TokenKind::end: return "end of input";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

bool is_keyword(std::string_view word) {
  for (const auto& [kw, kind] : kKeywords)
    if (iequals(word, kw)) return true;
  return false;
}

bool is_identifier(std::string_view word) {
  if (word.empty() || !ident_start(word[0])) return false;
  for (char c : word)
    if (!ident_char(c)) return false;
  return true;
}

}  // namespace hyperkb::hyql
