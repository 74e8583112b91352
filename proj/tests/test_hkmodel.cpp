#include <doctest.h>

#include <random>

#include "hyperkb/model.hpp"

using namespace hyperkb;

TEST_CASE("entity ids split at the first colon") {
  auto id = EntityId::parse("mlwfd:run_3");
  CHECK(id.ns() == "mlwfd");
  CHECK(id.local() == "run_3");
  CHECK(EntityId::parse("a:b:c").local() == "b:c");
  CHECK(EntityId::parse("plain").ns().empty());
  CHECK_THROWS_AS(EntityId::parse(""), InvariantError);
  CHECK_THROWS_AS(EntityId::parse("ns:"), InvariantError);
}

TEST_CASE("entity id text round-trips") {
  std::mt19937_64 rng(7);
  const std::string alphabet = "abcXYZ019_:-.";
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    std::size_t n = 1 + rng() % 12;
    for (std::size_t k = 0; k < n; ++k) text += alphabet[rng() % alphabet.size()];
    EntityId id;
    try {
      id = EntityId::parse(text);
    } catch (const InvariantError&) {
      continue;
    }
    CHECK(EntityId::parse(id.str()) == id);
  }
}

TEST_CASE("literal comparison follows kind rules") {
  CHECK(compare(Literal(3), CompareOp::lt, Literal(3.5)));
  CHECK(compare(Literal(2.0), CompareOp::eq, Literal(2)));
  CHECK(compare(Literal("abc"), CompareOp::lt, Literal("abd")));
  CHECK(compare(Literal(true), CompareOp::ne, Literal(false)));
  CHECK_THROWS_AS(compare(Literal(true), CompareOp::lt, Literal(false)), TypeError);
  CHECK_THROWS_AS(compare(Literal("1"), CompareOp::eq, Literal(1)), TypeError);
  CHECK(comparable(LiteralKind::integer, LiteralKind::number));
  CHECK_FALSE(comparable(LiteralKind::text, LiteralKind::boolean));
  CHECK(Literal(1) != Literal(1.0));
}

TEST_CASE("connector roles") {
  CHECK_NOTHROW(check_roles({"subject", "object"}));
  CHECK_NOTHROW(check_roles({"run", "input", "output"}));
  CHECK_THROWS_AS(check_roles({"only"}), InvariantError);
  CHECK_THROWS_AS(check_roles({"a", "a"}), InvariantError);
  CHECK_THROWS_AS(check_roles({"a", ""}), InvariantError);
}

TEST_CASE("nodes always carry the lambda anchor") {
  Node n(EntityId::parse("x:n"));
  CHECK(n.has_anchor("lambda"));
  n.add_anchor({"ConvolutionLayer", "layers[3]"});
  CHECK(n.has_anchor("ConvolutionLayer"));
  n.set_property("accuracy", 0.5);
  n.set_property("accuracy", 0.75);
  REQUIRE(n.property("accuracy") != nullptr);
  CHECK(n.property("accuracy")->number() == 0.75);
}

TEST_CASE("link validation reports each problem") {
  Connector c{EntityId::parse("x:uses"), "uses", {"run", "input", "output"}, builtin::default_context(), {}};
  Node a(EntityId::parse("x:a"));
  Node b(EntityId::parse("x:b"));
  auto lookup = [&](const EntityId& id) -> const Node* {
    if (id == a.id) return &a;
    if (id == b.id) return &b;
    return nullptr;
  };

  Link ok{EntityId::parse("x:l1"), c.id, {{"run", {a.id}}, {"input", {b.id}}, {"output", {b.id}}}, {}, {}};
  CHECK(validate_link(ok, c, lookup).empty());

  Link bad{EntityId::parse("x:l2"),
           c.id,
           {{"run", {a.id, "missing"}}, {"input", {EntityId::parse("x:ghost")}}, {"extra", {b.id}}},
           {},
           {}};
  auto v = validate_link(bad, c, lookup);
  std::set<ViolationKind> kinds;
  for (const auto& x : v) kinds.insert(x.kind);
  CHECK(kinds == std::set<ViolationKind>{ViolationKind::missing_role, ViolationKind::extra_role,
                                         ViolationKind::unknown_anchor, ViolationKind::dangling_node});
}
