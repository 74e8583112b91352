#include <doctest.h>

#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include "hyperkb/hkjsonl.hpp"
#include "hyperkb/store.hpp"
#include "paths.hpp"

using namespace hyperkb;
using hyperkb::testing::TempDir;

namespace {

EntityId id(const char* text) { return EntityId::parse(text); }

EntityId binary(KnowledgeBase& kb, const std::string& name) { return kb.add_connector(name, {"subject", "object"}); }

}  // namespace

TEST_CASE("basic writes are visible in later snapshots") {
  KnowledgeBase kb;
  auto uses = binary(kb, "uses");
  auto a = kb.add_node(id("t:a"), {{"score", Literal(3)}});
  auto b = kb.add_node(id("t:b"));
  auto l = kb.relate(a, uses, b);
  Snapshot s = kb.snapshot();
  CHECK(s.find_node(a) != nullptr);
  CHECK(s.links_from(a, uses) == IdSet{l});
  CHECK(s.links_to(b, uses) == IdSet{l});
  CHECK(s.links_touching(b) == IdSet{l});
  CHECK(s.nodes_labelled("a") == IdSet{a});
  CHECK(s.nodes_where("score", CompareOp::ge, Literal(2.5)) == std::vector<EntityId>{a});
  CHECK_THROWS_AS(kb.add_node(a), DuplicateError);
  CHECK_THROWS_AS(kb.remove(b), InvariantError);
  CHECK_THROWS_AS(kb.relate(a, uses, id("t:ghost")), LinkValidationError);
  CHECK_THROWS_AS(kb.set_property(a, "score", Literal(std::nan(""))), InvariantError);
  kb.remove(l);
  kb.remove(b);
  CHECK(kb.snapshot().find_node(b) == nullptr);
  CHECK(s.find_node(b) != nullptr);
}

TEST_CASE("snapshots never observe later writes") {
  KnowledgeBase kb;
  auto n = kb.add_node(id("t:n"), {{"v", Literal(1)}});
  Snapshot before = kb.snapshot();
  auto gen = before.generation();
  kb.set_property(n, "v", Literal(2));
  kb.add_node(id("t:m"));
  CHECK(before.generation() == gen);
  CHECK(before.find_node(n)->property("v")->integer() == 1);
  CHECK(before.find_node(id("t:m")) == nullptr);
  CHECK(before.counts().nodes + 1 == kb.snapshot().counts().nodes);
  CHECK(audit_indexes(before).empty());
}

TEST_CASE("concurrent readers see consistent snapshots") {
  KnowledgeBase kb;
  auto rel = binary(kb, "next");
  kb.add_node(id("t:n0"));
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!done) {
      Snapshot s = kb.snapshot();
      // every write adds one node and one link, so these stay in lockstep
      auto c = s.counts();
      if (c.links + 1 != c.nodes) ++bad;
      if (s.links_of_connector(rel).size() != c.links) ++bad;
    }
  });
  for (int i = 1; i < 400; ++i) {
    std::string prev = "t:n" + std::to_string(i - 1);
    std::string cur = "t:n" + std::to_string(i);
    std::vector<hkjsonl::Record> batch;
    batch.push_back(hkjsonl::parse_record(R"({"t":"node","id":")" + cur + R"("})"));
    batch.push_back(hkjsonl::parse_record(R"({"t":"link","conn":")" + rel.str() + R"(","b":{"subject":{"n":")" + prev +
                                          R"("},"object":{"n":")" + cur + R"("}}})"));
    kb.apply(batch);
  }
  done = true;
  reader.join();
  CHECK(bad == 0);
}

TEST_CASE("bulk load is atomic and allows forward references") {
  KnowledgeBase kb;
  std::string good =
      R"({"t":"link","conn":"t:uses","b":{"subject":{"n":"t:a"},"object":{"n":"t:b"}}})"
      "\n"
      R"({"t":"conn","id":"t:uses","name":"uses","roles":["subject","object"]})"
      "\n"
      R"({"t":"node","id":"t:a"})"
      "\n\n"
      R"({"t":"node","id":"t:b"})"
      "\n";
  std::istringstream in(good);
  auto r = kb.bulk_load(in);
  CHECK(r.nodes == 2);
  CHECK(r.links == 1);
  CHECK(r.connectors == 1);

  auto before = kb.snapshot();
  std::string bad = R"({"t":"node","id":"t:c"})"
                    "\n"
                    R"({"t":"node","id":"t:a"})"
                    "\n";
  std::istringstream in2(bad);
  try {
    kb.bulk_load(in2);
    FAIL("duplicate accepted");
  } catch (const LoadError& e) {
    CHECK(e.line() == 2);
  }
  CHECK(kb.snapshot().generation() == before.generation());
  CHECK(kb.snapshot().find_node(id("t:c")) == nullptr);

  std::istringstream in3("{\"t\":\"node\",\"id\":\"t:d\"}\n{not json\n");
  CHECK_THROWS_AS(kb.bulk_load(in3), LoadError);
  CHECK(kb.snapshot().find_node(id("t:d")) == nullptr);
}

TEST_CASE("indexes agree with scans of the primary maps") {
  std::mt19937_64 rng(11);
  KnowledgeBase kb;
  std::vector<EntityId> conns{binary(kb, "p"), binary(kb, "q")};
  std::vector<EntityId> nodes;
  for (int i = 0; i < 60; ++i)
    nodes.push_back(kb.add_node(EntityId("t", "n" + std::to_string(i)), {{"w", Literal(static_cast<int>(rng() % 5))}}));
  for (int i = 0; i < 300; ++i) {
    try {
      kb.relate(nodes[rng() % nodes.size()], conns[rng() % 2], nodes[rng() % nodes.size()]);
    } catch (const DuplicateError&) {
    }
  }
  Snapshot s = kb.snapshot();
  for (const auto& n : nodes) {
    for (const auto& c : conns) {
      IdSet from, to;
      for (const auto& [lid, link] : s.links()) {
        if (link.connector != c) continue;
        if (link.binding("subject")->node == n) from.insert(lid);
        if (link.binding("object")->node == n) to.insert(lid);
      }
      CHECK(s.links_from(n, c) == from);
      CHECK(s.links_to(n, c) == to);
    }
    for (int w = 0; w < 5; ++w) {
      for (auto op : {CompareOp::eq, CompareOp::ne, CompareOp::lt, CompareOp::ge}) {
        std::vector<EntityId> scan;
        for (const auto& [nid, node] : s.nodes())
          if (const Literal* v = node.property("w"); v && compare(*v, op, Literal(w))) scan.push_back(nid);
        std::sort(scan.begin(), scan.end());
        auto got = s.nodes_where("w", op, Literal(w));
        std::sort(got.begin(), got.end());
        CHECK(got == scan);
      }
    }
  }
  CHECK(rebuild_indexes(s.nodes(), s.links()) == s.indexes());
}

TEST_CASE("subclass closure matches Floyd-Warshall") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 20; ++round) {
    KnowledgeBase kb;
    const int n = 12;
    std::vector<EntityId> cls;
    for (int i = 0; i < n; ++i) cls.push_back(kb.add_node(EntityId("c", "K" + std::to_string(i))));
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) reach[i][i] = true;
    for (int k = 0; k < 18; ++k) {
      int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
      if (a == b || reach[a][b]) continue;
      kb.assert_subclass(cls[a], cls[b]);
      reach[a][b] = true;
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::vector<EntityId> inst;
    for (int i = 0; i < n; ++i) {
      inst.push_back(kb.add_node(EntityId("i", "x" + std::to_string(i))));
      kb.assert_instance(inst.back(), cls[i]);
    }
    Snapshot s = kb.snapshot();
    for (int j = 0; j < n; ++j) {
      IdSet expected;
      for (int i = 0; i < n; ++i)
        if (reach[i][j]) expected.insert(inst[i]);
      CHECK(s.instances_of(cls[j]) == expected);
    }
    CHECK(audit_indexes(s).empty());
  }
}

TEST_CASE("random mutations keep indexes consistent and the journal replays") {
  TempDir dir;
  auto path = dir / "kb.journal";
  std::mt19937_64 rng(42);
  auto kb = KnowledgeBase::open(path);
  std::vector<EntityId> conns{kb->add_connector("p", {"subject", "object"}),
                              kb->add_connector("t", {"a", "b", "c"})};
  auto concept_a = kb->add_node(id("k:A"), {{"hk:kind", Literal("concept")}});
  auto concept_b = kb->add_node(id("k:B"), {{"hk:kind", Literal("concept")}});
  kb->assert_subclass(concept_b, concept_a);
  std::vector<EntityId> nodes;
  std::vector<EntityId> links;
  int failures = 0;
  int counter = 0;
  for (int step = 0; step < 10000; ++step) {
    auto gen = kb->generation();
    try {
      switch (rng() % 8) {
        case 0:
        case 1:
          nodes.push_back(kb->add_node(EntityId("n", std::to_string(counter++)),
                                       {{"s", Literal(static_cast<int>(rng() % 7))}}, {{"frag", std::nullopt}}));
          break;
        case 2:
          if (nodes.size() < 2) break;
          links.push_back(kb->relate(nodes[rng() % nodes.size()], conns[0], nodes[rng() % nodes.size()]));
          break;
        case 3:
          if (nodes.size() < 3) break;
          links.push_back(kb->add_link(conns[1],
                                       {{"a", {nodes[rng() % nodes.size()]}},
                                        {"b", {nodes[rng() % nodes.size()], "frag"}},
                                        {"c", {nodes[rng() % nodes.size()]}}}));
          break;
        case 4:
          if (nodes.empty()) break;
          links.push_back(kb->assert_instance(nodes[rng() % nodes.size()], rng() % 2 ? concept_a : concept_b));
          break;
        case 5:
          if (nodes.empty()) break;
          if (rng() % 3 == 0)
            kb->unset_property(nodes[rng() % nodes.size()], "s");
          else
            kb->set_property(nodes[rng() % nodes.size()], rng() % 2 ? "s" : "label",
                             rng() % 2 ? Literal(static_cast<double>(rng() % 9) / 2) : Literal("v" + std::to_string(rng() % 4)));
          break;
        case 6:
          if (links.empty()) break;
          {
            auto i = rng() % links.size();
            kb->remove(links[i]);
            links.erase(links.begin() + static_cast<std::ptrdiff_t>(i));
          }
          break;
        case 7:
          if (nodes.empty()) break;
          {
            // fails while links still reference the node
            auto i = rng() % nodes.size();
            kb->remove(nodes[i]);
            nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(i));
          }
          break;
      }
    } catch (const Error&) {
      ++failures;
      CHECK(kb->generation() == gen);
    }
    if (step % 2500 == 0) REQUIRE(audit_indexes(kb->snapshot()).empty());
  }
  CHECK(failures > 0);
  Snapshot final_state = kb->snapshot();
  CHECK(audit_indexes(final_state).empty());
  kb.reset();
  auto again = KnowledgeBase::open(path);
  Snapshot replayed = again->snapshot();
  CHECK(replayed.nodes() == final_state.nodes());
  CHECK(replayed.links() == final_state.links());
  CHECK(replayed.connectors() == final_state.connectors());
  CHECK(replayed.contexts() == final_state.contexts());
}

TEST_CASE("journal survives a torn final line") {
  TempDir dir;
  auto path = dir / "kb.journal";
  {
    auto kb = KnowledgeBase::open(path);
    kb->add_node(id("t:a"));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"t":"node","id":"t:b")";
  }
  std::unique_ptr<KnowledgeBase> kb;
  try {
    kb = KnowledgeBase::open(path);
  } catch (const LoadError& e) {
    CHECK(e.line() == 2);
    return;
  }
  CHECK(kb->snapshot().find_node(id("t:a")) != nullptr);
  CHECK(kb->snapshot().find_node(id("t:b")) == nullptr);
}

TEST_CASE("hkjsonl records round-trip") {
  const char* lines[] = {
      R"({"t":"ctx","id":"ctx:a","name":"a","parent":"hk:default"})",
      R"({"t":"conn","id":"a:r","name":"r","roles":["subject","object"],"ctx":"ctx:a","props":{"domain":"X"}})",
      R"({"t":"node","id":"a:n","ctx":"ctx:a","anchors":[{"name":"lambda"},{"name":"f","descriptor":"0-4"}],"props":{"b":true,"i":3,"s":"x","x":0.5}})",
      R"({"t":"link","id":"a:l","conn":"a:r","ctx":"ctx:a","b":{"object":{"n":"a:n","a":"f"},"subject":{"n":"a:n"}}})",
      R"({"t":"set","id":"a:n","k":"x","v":1.5})",
      R"({"t":"unset","id":"a:n","k":"x"})",
      R"({"t":"del","id":"a:l"})",
  };
  for (const char* line : lines) {
    auto rec = hkjsonl::parse_record(line);
    CHECK(hkjsonl::parse_record(hkjsonl::to_line(rec)) == rec);
  }
  CHECK_THROWS_AS(hkjsonl::parse_record(R"({"t":"node"})"), Error);
  CHECK_THROWS_AS(hkjsonl::parse_record(R"({"t":"bogus","id":"a:b"})"), Error);
}
