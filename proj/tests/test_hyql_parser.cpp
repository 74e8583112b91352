#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "hyperkb/hyql/ast.hpp"
#include "hyperkb/hyql/lexer.hpp"
#include "hyperkb/hyql/parser.hpp"
#include "paths.hpp"

using namespace hyperkb;
using namespace hyperkb::hyql;
using hyperkb::testing::query_corpus;
using hyperkb::testing::read_text;

namespace {

ParseError parse_error(std::string_view text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("accepted: " << text);
  return ParseError(0, 0, "");
}

}  // namespace

TEST_CASE("tokens carry kinds, values and positions") {
  auto t = tokenize("select X\n  WHERE X.acc >= -1.5e1 AND y ≠ 'a\\'b'");
  std::vector<TokenKind> kinds;
  for (const auto& tok : t) kinds.push_back(tok.kind);
  CHECK(kinds == std::vector<TokenKind>{TokenKind::kw_select, TokenKind::ident, TokenKind::kw_where, TokenKind::ident,
                                        TokenKind::dot, TokenKind::ident, TokenKind::ge, TokenKind::number,
                                        TokenKind::kw_and, TokenKind::ident, TokenKind::ne, TokenKind::string,
                                        TokenKind::end});
  CHECK(t[2].line == 2);
  CHECK(t[2].column == 3);
  CHECK(t[7].value == Literal(-15.0));
  CHECK(t[11].value == Literal("a'b"));
  CHECK(tokenize("42")[0].value == Literal(42));
  CHECK(tokenize("4.0")[0].value == Literal(4.0));
}

TEST_CASE("lexical errors point at the offending character") {
  auto e = parse_error("SELECT a WHERE a r b AND\n  a.x = 'open");
  CHECK(e.line() == 2);
  CHECK(e.column() == 9);
  e = parse_error("SELECT a WHERE a r b @");
  CHECK(e.line() == 1);
  CHECK(e.column() == 22);
}

TEST_CASE("syntax errors") {
  CHECK(parse_error("").line() == 1);
  CHECK(parse_error("SELECT WHERE a r b").column() == 8);
  CHECK(parse_error("SELECT a WHERE a r").line() == 1);
  CHECK(parse_error("SELECT a WHERE a r b AND").line() == 1);
  CHECK(parse_error("SELECT a WHERE a.x > ").line() == 1);
  CHECK(parse_error("SELECT a WHERE a r b c").line() == 1);
  CHECK(parse_error("LET x = { GET a WHERE a r b SELECT a WHERE a r x").line() == 1);
}

TEST_CASE("semantic errors have no position") {
  for (const char* q : {
           "SELECT a, a WHERE a r b",
           "SELECT c WHERE a r b",
           "SELECT a WHERE a r b AND c.x = 1",
           "SELECT a WHERE a r b AND c#frag",
           "LET x = { GET c WHERE a r b } SELECT a WHERE a r x",
           "LET x = { GET a WHERE a r x } SELECT a WHERE a r x",
           "LET x = { GET a WHERE a r b } LET x = { GET a WHERE a r b } SELECT a WHERE a r x",
           "LET x = { GET a WHERE a r y } LET y = { GET a WHERE a r b } SELECT a WHERE a r x",
       }) {
    auto e = parse_error(q);
    CHECK_MESSAGE(e.line() == 0, q);
    CHECK(e.column() == 0);
  }
}

TEST_CASE("function arguments need no link pattern") {
  auto q = parse("SELECT a WHERE a r b AND sim(a, Other) > 0.5");
  const auto& cmp = std::get<Comparison>(q.where[1]);
  CHECK(std::get<FunctionCall>(cmp.lhs).args == std::vector<std::string>{"a", "Other"});
}

TEST_CASE("keywords ignore case and select lists take commas or spaces") {
  CHECK(parse("select a b where a r b and b.x = c") == parse("SELECT a, b WHERE a r b AND b.x = 'c'"));
}

TEST_CASE("the corpus queries parse into their golden trees") {
  auto corpus = query_corpus();
  REQUIRE(corpus.size() == 10);
  for (const auto& c : corpus) {
    CAPTURE(c.name);
    Query q = parse(read_text(c.query));
    CHECK(to_json(q) == nlohmann::json::parse(read_text(c.golden)));
    CHECK(parse(to_hyql(q)) == q);
  }
}

TEST_CASE("link pattern counts") {
  auto count = [](const char* name) {
    for (const auto& c : query_corpus())
      if (c.name == name) return link_pattern_count(parse(read_text(c.query)));
    return std::size_t{0};
  };
  CHECK(count("q1") == 1);
  CHECK(count("q2") == 1);
  CHECK(count("q3") == 3);
  CHECK(count("q4") == 3);
  CHECK(count("q5") == 4);
}

TEST_CASE("printing then parsing gives back the same tree") {
  std::mt19937_64 rng(99);
  auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  const std::vector<std::string> names = {"Run", "Model", "x_1", "Data", "select_me", "A", "b2", "Seismic"};
  const std::vector<std::string> texts = {"Horizon", "two words", "it's", "back\\slash", "line\nbreak", "WHERE",
                                          "", "123", "tab\there", "\"q\""};
  auto literal = [&]() -> Literal {
    switch (below(4)) {
      case 0: return Literal(static_cast<std::int64_t>(rng() % 2001) - 1000);
      case 1: return Literal(std::ldexp(static_cast<double>(rng() % 100000) - 50000, static_cast<int>(below(40)) - 20));
      case 2: return Literal(static_cast<double>(rng() % 7));
      default: return Literal(texts[below(texts.size())]);
    }
  };
  auto scope = [&](std::vector<std::string>& used) {
    std::vector<Condition> where;
    std::size_t n = 1 + below(4);
    for (std::size_t i = 0; i < n; ++i) {
      LinkPattern p{names[below(names.size())], names[below(names.size())], names[below(names.size())]};
      used.push_back(p.subject);
      used.push_back(p.object);
      where.push_back(p);
    }
    std::size_t extra = below(4);
    for (std::size_t i = 0; i < extra; ++i) {
      const auto& e = used[below(used.size())];
      switch (below(3)) {
        case 0: where.push_back(AnchorFilter{e, names[below(names.size())]}); break;
        case 1:
          where.push_back(Comparison{PropertyRef{e, names[below(names.size())]}, static_cast<CompareOp>(below(6)), literal()});
          break;
        default:
          where.push_back(Comparison{FunctionCall{"f", {names[below(names.size())], e}}, static_cast<CompareOp>(below(6)),
                                     literal()});
      }
    }
    return where;
  };
  for (int i = 0; i < 2000; ++i) {
    Query q;
    if (below(3) == 0) {
      std::vector<std::string> used;
      auto where = scope(used);
      q.lets.push_back(LetBinding{"letvar", used[below(used.size())], where});
    }
    std::vector<std::string> used;
    q.where = scope(used);
    if (!q.lets.empty()) {
      q.where.push_back(LinkPattern{"letvar", "rel", used.front()});
      used.push_back("letvar");
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::shuffle(used.begin(), used.end(), rng);
    q.select.assign(used.begin(), used.begin() + static_cast<std::ptrdiff_t>(1 + below(used.size())));
    std::string text = to_hyql(q);
    CAPTURE(text);
    CHECK(parse(text) == q);
  }
}
