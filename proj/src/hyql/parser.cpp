#include "hyperkb/hyql/parser.hpp"

#include <algorithm>
#include <set>

namespace hyperkb::hyql {

namespace {

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Query query() {
    Query q;
    while (at(TokenKind::kw_let)) q.lets.push_back(let_clause());
    expect(TokenKind::kw_select);
    q.select.push_back(expect(TokenKind::ident).text);
    for (;;) {
      if (accept(TokenKind::comma)) {
        q.select.push_back(expect(TokenKind::ident).text);
      } else if (at(TokenKind::ident)) {
        q.select.push_back(next().text);
      } else {
        break;
      }
    }
    expect(TokenKind::kw_where);
    q.where = cond_list();
    expect(TokenKind::end);
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at(TokenKind k) const { return peek().kind == k; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(TokenKind k) {
    if (!at(k)) return false;
    next();
    return true;
  }

  [[noreturn]] void unexpected(std::string_view wanted) const {
    const Token& t = peek();
    std::string found(to_string(t.kind));
    if (t.kind == TokenKind::ident || t.kind == TokenKind::number) found += " '" + t.text + "'";
    throw ParseError(t.line, t.column, "expected " + std::string(wanted) + ", found " + found);
  }

  const Token& expect(TokenKind k) {
    if (!at(k)) unexpected(to_string(k));
    return next();
  }

  LetBinding let_clause() {
    expect(TokenKind::kw_let);
    LetBinding let;
    let.name = expect(TokenKind::ident).text;
    expect(TokenKind::eq);
    expect(TokenKind::lbrace);
    expect(TokenKind::kw_get);
    let.get = expect(TokenKind::ident).text;
    expect(TokenKind::kw_where);
    let.where = cond_list();
    expect(TokenKind::rbrace);
    return let;
  }

  std::vector<Condition> cond_list() {
    std::vector<Condition> out;
    out.push_back(condition());
    while (accept(TokenKind::kw_and)) out.push_back(condition());
    return out;
  }

  Condition condition() {
    if (!at(TokenKind::ident)) unexpected("condition");
    switch (peek(1).kind) {
      case TokenKind::hash: {
        AnchorFilter f;
        f.entity = next().text;
        next();
        f.anchor = expect(TokenKind::ident).text;
        return f;
      }
      case TokenKind::dot: {
        PropertyRef ref;
        ref.entity = next().text;
        next();
        ref.property = expect(TokenKind::ident).text;
        return comparison_tail(ref);
      }
      case TokenKind::lparen: {
        FunctionCall call;
        call.name = next().text;
        next();
        call.args.push_back(expect(TokenKind::ident).text);
        while (accept(TokenKind::comma)) call.args.push_back(expect(TokenKind::ident).text);
        expect(TokenKind::rparen);
        return comparison_tail(std::move(call));
      }
      case TokenKind::ident: {
        LinkPattern p;
        p.subject = next().text;
        p.connector = next().text;
        p.object = expect(TokenKind::ident).text;
        return p;
      }
      default:
        next();
        unexpected("'#', '.', '(' or connector");
    }
  }

  Comparison comparison_tail(std::variant<PropertyRef, FunctionCall> lhs) {
    Comparison c;
    c.lhs = std::move(lhs);
    switch (peek().kind) {
      case TokenKind::eq: c.op = CompareOp::eq; break;
      case TokenKind::ne: c.op = CompareOp::ne; break;
      case TokenKind::lt: c.op = CompareOp::lt; break;
      case TokenKind::le: c.op = CompareOp::le; break;
      case TokenKind::gt: c.op = CompareOp::gt; break;
      case TokenKind::ge: c.op = CompareOp::ge; break;
      default: unexpected("comparison operator");
    }
    next();
    switch (peek().kind) {
      case TokenKind::number:
      case TokenKind::string: c.rhs = next().value; break;
      case TokenKind::ident: c.rhs = Literal(next().text); break;
      default: unexpected("literal");
    }
    return c;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

[[noreturn]] void semantic(const std::string& what) { throw ParseError(0, 0, what); }

std::set<std::string> all_terms(const std::vector<Condition>& where) {
  std::set<std::string> out;
  for (const auto& c : where)
    for (auto& t : terms_of(c)) out.insert(std::move(t));
  return out;
}

void check_scope(const std::vector<Condition>& where, const std::string& scope) {
  std::set<std::string> linked;
  for (const auto& c : where) {
    if (const auto* p = std::get_if<LinkPattern>(&c)) {
      linked.insert(p->subject);
      linked.insert(p->object);
    }
  }
  for (const auto& c : where) {
    if (const auto* f = std::get_if<AnchorFilter>(&c)) {
      if (!linked.contains(f->entity))
        semantic("anchor filter on '" + f->entity + "' which no link pattern in " + scope + " binds");
    } else if (const auto* cmp = std::get_if<Comparison>(&c)) {
      if (const auto* ref = std::get_if<PropertyRef>(&cmp->lhs); ref && !linked.contains(ref->entity))
        semantic("comparison on '" + ref->entity + "' which no link pattern in " + scope + " binds");
    }
  }
}

}  // namespace

Query parse(std::string_view text) {
  Query q = Parser(tokenize(text)).query();
  check_semantics(q);
  return q;
}

void check_semantics(const Query& q) {
  if (q.select.empty()) semantic("SELECT needs at least one variable");
  if (q.where.empty()) semantic("WHERE needs at least one condition");

  std::set<std::string> selected;
  std::set<std::string> main_terms = all_terms(q.where);
  for (const auto& v : q.select) {
    if (!selected.insert(v).second) semantic("variable '" + v + "' selected twice");
    if (!main_terms.contains(v)) semantic("SELECT variable '" + v + "' does not occur in WHERE");
  }
  check_scope(q.where, "the main query");

  std::set<std::string> let_names;
  std::set<std::string> earlier_terms;
  for (const auto& let : q.lets) {
    if (let.where.empty()) semantic("LET " + let.name + " needs at least one condition");
    std::set<std::string> inner = all_terms(let.where);
    if (!let_names.insert(let.name).second) semantic("LET name '" + let.name + "' bound twice");
    if (inner.contains(let.name)) semantic("LET name '" + let.name + "' is used inside its own definition");
    if (earlier_terms.contains(let.name))
      semantic("LET name '" + let.name + "' shadows a name used by an earlier LET");
    if (!inner.contains(let.get)) semantic("GET variable '" + let.get + "' does not occur in its WHERE");
    check_scope(let.where, "LET " + let.name);
    earlier_terms.insert(inner.begin(), inner.end());
  }
}

}  // namespace hyperkb::hyql
