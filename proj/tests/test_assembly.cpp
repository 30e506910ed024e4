#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/helpers.hpp"

using namespace modforge;
using namespace testsupport;

namespace {

/// Heights of the shipped modules along the chain axis (at q = 0).
double module_height(const std::string& id) {
  if (id == "base") return 0.10;
  if (id == "eef") return 0.04;
  if (id == "J1") return 0.12;
  if (id == "J2") return 0.20;
  if (id[0] == 'i') return std::stod(id.substr(2)) / 100.0;
  FAIL("unexpected module");
  return 0.0;
}

}  // namespace

TEST_CASE("new_assembly") {
  auto set = load_sample_set();

  SUBCASE("minimal two-instance assembly") {
    Assembly a = Assembly::create(set, {"base", "i_30"}, {{0, "out", 1, "in"}});
    CHECK(a.instances().size() == 2);
    CHECK(a.base().instance == 0);
    CHECK(a.base().connector == "trunk/world");
    CHECK(a.connections().size() == 1);
    CHECK(a.connections()[0].connector_a == "trunk/out");
    CHECK(a.degrees_of_freedom() == 0);
  }

  SUBCASE("incompatible connectors") {
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"i_30", "i_45"}, {{0, "in", 1, "in"}},
                                          BaseDesignation{0, "in"}),
                         doctest::Contains("incompatible connectors"), std::invalid_argument);
  }

  SUBCASE("connector reuse") {
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"base", "i_30", "i_45"},
                                          {{0, "out", 1, "in"}, {0, "out", 2, "in"}}),
                         doctest::Contains("is used by multiple connections"),
                         std::invalid_argument);
  }

  SUBCASE("disconnected composition") {
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"base", "i_30", "i_45"},
                                          {{0, "out", 1, "in"}}),
                         doctest::Contains("not connected"), std::invalid_argument);
  }

  SUBCASE("base designation") {
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"i_30"}, {}),
                         doctest::Contains("no base connector"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"base", "base"}, {}),
                         doctest::Contains("2 base connectors"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"base"}, {}, BaseDesignation{0, "out"}),
                         doctest::Contains("expected 'base'"), std::invalid_argument);
  }

  SUBCASE("unknown module id") {
    CHECK_THROWS_WITH_AS(Assembly::create(set, {"nope"}, {}),
                         doctest::Contains("unknown module id"), std::invalid_argument);
  }
}

TEST_CASE("from_serial_modules") {
  auto set = load_sample_set();

  SUBCASE("six-instance serial chain") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "J2", "i_45", "J2", "J2", "eef"});
    CHECK(a.instances().size() == 6);
    CHECK(a.connections().size() == 5);
    CHECK(a.degrees_of_freedom() == 3);
    CHECK(a.base().instance == 0);
    CHECK(approx_eq(a.base_pose(), Transform::identity(), 0.0));  // default
  }

  SUBCASE("shortest chain") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "eef"});
    CHECK(a.instances().size() == 2);
    CHECK(a.connections().size() == 1);
  }

  SUBCASE("no matching pair") {
    CHECK_THROWS_WITH_AS(Assembly::from_serial_modules(set, {"base", "base", "eef"}),
                         doctest::Contains("no connection"), std::invalid_argument);
  }

  SUBCASE("ambiguous connection") {
    // A variant link with two identical female outputs facing its successor.
    ModuleSet twin = *set;
    twin.id = "twin";
    Module fork = *set->find("i_30");
    fork.id = "fork";
    fork.bodies[0].connectors.push_back(
        {"out2", Transform::translate(0.05, 0, 0.30), Gender::female, "clamp", 0.08});
    twin.modules.emplace("fork", fork);
    auto shared = std::make_shared<const ModuleSet>(std::move(twin));
    CHECK_THROWS_WITH_AS(Assembly::from_serial_modules(shared, {"base", "fork", "J1", "eef"}),
                         doctest::Contains("ambiguous connection"), std::invalid_argument);
  }

  SUBCASE("invalid chain endpoints") {
    CHECK_THROWS_WITH_AS(Assembly::from_serial_modules(set, {"i_30", "eef"}),
                         doctest::Contains("invalid chain endpoints"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(Assembly::from_serial_modules(set, {"base", "i_30"}),
                         doctest::Contains("invalid chain endpoints"), std::invalid_argument);
  }
}

TEST_CASE("graph_of_modules") {
  auto set = load_sample_set();

  SUBCASE("serial chain is a path") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "J2", "i_45", "J2", "J2", "eef"});
    GraphOfModules g = graph_of_modules(a);
    CHECK(g.node_count == 6);
    CHECK(g.edges.size() == 5);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      CHECK(g.edges[i].u == i);
      CHECK(g.edges[i].v == i + 1);
    }
  }

  SUBCASE("star topology and label round trip") {
    std::mt19937_64 rng(11);
    ModuleSet set_star;
    set_star.id = "star";
    Module hub = random_blob_module(rng, "hub", 3, true);
    Module leaf = random_blob_module(rng, "leaf", 1, false);
    set_star.modules.emplace("hub", hub);
    set_star.modules.emplace("leaf", leaf);
    auto shared = std::make_shared<const ModuleSet>(std::move(set_star));
    Assembly a = Assembly::create(shared, {"hub", "leaf", "leaf", "leaf"},
                                  {{0, "c0", 1, "c0"}, {0, "c1", 2, "c0"}, {0, "c2", 3, "c0"}});
    GraphOfModules g = graph_of_modules(a);
    CHECK(g.node_count == 4);
    CHECK(g.edges.size() == 3);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      CHECK(g.edges[i].u == a.connections()[i].module_a);
      CHECK(g.edges[i].connector_u.qualified() == a.connections()[i].connector_a);
      CHECK(g.edges[i].v == a.connections()[i].module_b);
      CHECK(g.edges[i].connector_v.qualified() == a.connections()[i].connector_b);
    }
  }
}

TEST_CASE("assembly_graph") {
  auto set = load_sample_set();

  SUBCASE("node and connection-edge counts") {
    // Two single-body modules, two connectors each, one connection.
    Assembly a = Assembly::create(set, {"base", "i_30"}, {{0, "out", 1, "in"}});
    AssemblyGraph g = assembly_graph(a);
    CHECK(g.node_count() == 6);
    CHECK(g.connection_edge_count() == 2);
    CHECK(g.directed_edge_count() == 4 + 4 + 2);
  }

  SUBCASE("powerball module graph embeds per instance") {
    auto pbset = sample_set_with_powerball();
    Assembly a = Assembly::from_serial_modules(pbset, {"base", "powerball", "eef"});
    AssemblyGraph g = assembly_graph(a);
    ModuleGraph pb = build_module_graph(*pbset->find("powerball"));
    for (const auto& [local, edges] : pb.adjacency) {
      AssemblyNode qualified{1, local};
      REQUIRE(g.contains(qualified));
      for (const ModuleGraph::Edge& e : edges) {
        const auto& out = g.adjacency.at(qualified);
        auto found = std::find_if(out.begin(), out.end(), [&](const AssemblyGraph::Edge& ge) {
          return ge.to == AssemblyNode{1, e.to};
        });
        REQUIRE(found != out.end());
        CHECK(approx_eq(found->transition, e.transition, 0.0));
      }
    }
  }

  SUBCASE("connection edges are self-inverse flips") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "J1", "i_15", "J2", "eef"});
    AssemblyGraph g = assembly_graph(a);
    std::size_t seen = 0;
    for (const auto& [from, edges] : g.adjacency) {
      for (const auto& e : edges) {
        if (!e.is_connection) continue;
        ++seen;
        CHECK(approx_eq(compose(e.transition, e.transition), Transform::identity(), 1e-12));
        CHECK(approx_eq(e.transition, connection_flip(), 1e-12));
      }
    }
    CHECK(seen == 2 * a.connections().size());
  }
}

TEST_CASE("frame_placement") {
  auto set = load_sample_set();

  SUBCASE("base connector maps to identity") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "J1", "eef"});
    AssemblyGraph g = assembly_graph(a);
    CHECK(approx_eq(frame_placement(g, g.base_node), Transform::identity(), 0.0));
  }

  SUBCASE("straight chain accumulates translations: explicit product oracle") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "i_15", "i_30", "i_45", "eef"});
    AssemblyGraph g = assembly_graph(a);
    // The base connector frame looks away from the module, so the chain
    // grows along its -z axis.
    double height = 0.0;
    for (std::size_t i = 0; i + 1 < a.instances().size(); ++i) {
      height += module_height(a.instances()[i]);
      AssemblyNode in_conn{static_cast<int>(i) + 1,
                           LocalNode::connector(a.module_at(i + 1).resolve_connector("in"))};
      Transform placed = frame_placement(g, in_conn);
      CHECK(placed.translation().isApprox(Eigen::Vector3d(0, 0, -height), 1e-12));
    }
  }

  SUBCASE("mated connectors differ by exactly the flip") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "J2", "i_45", "J2", "J2", "eef"});
    AssemblyGraph g = assembly_graph(a);
    for (const Connection& c : a.connections()) {
      AssemblyNode u{static_cast<int>(c.module_a),
                     LocalNode::connector(
                         a.module_at(c.module_a).resolve_connector(c.connector_a))};
      AssemblyNode v{static_cast<int>(c.module_b),
                     LocalNode::connector(
                         a.module_at(c.module_b).resolve_connector(c.connector_b))};
      CHECK(approx_eq(frame_placement(g, v), frame_placement(g, u) * connection_flip(), 1e-12));
    }
  }
}

TEST_CASE("relative_transform") {
  auto set = load_sample_set();
  Assembly a = Assembly::from_serial_modules(set, {"base", "J1", "i_30", "J2", "eef"});
  AssemblyGraph g = assembly_graph(a);

  AssemblyNode u{0, LocalNode::body("trunk")};
  AssemblyNode v{2, LocalNode::body("tube")};
  AssemblyNode w{4, LocalNode::body("flange")};

  CHECK(approx_eq(relative_transform(g, u, u), Transform::identity(), 0.0));
  CHECK(approx_eq(relative_transform(g, u, v), invert(relative_transform(g, v, u)), 1e-12));
  // v lies on the u-w path of the serial chain.
  CHECK(approx_eq(relative_transform(g, u, w),
                  compose(relative_transform(g, u, v), relative_transform(g, v, w)), 1e-10));
}

TEST_CASE("is_tree") {
  auto set = load_sample_set();

  SUBCASE("serial chain") {
    Assembly a = Assembly::from_serial_modules(set, {"base", "J1", "i_30", "J2", "eef"});
    CHECK(is_tree(assembly_graph(a)));
  }

  SUBCASE("parallel connections form a cycle") {
    std::mt19937_64 rng(3);
    ModuleSet two;
    two.id = "two";
    Module a = random_blob_module(rng, "a", 2, true);
    Module b = random_blob_module(rng, "b", 2, false);
    two.modules.emplace("a", a);
    two.modules.emplace("b", b);
    auto shared = std::make_shared<const ModuleSet>(std::move(two));
    Assembly cyclic = Assembly::create(shared, {"a", "b"},
                                       {{0, "c0", 1, "c0"}, {0, "c1", 1, "c1"}});
    CHECK_FALSE(is_tree(assembly_graph(cyclic)));
    // Cyclic assemblies still support frame placement through BFS.
    AssemblyGraph g = assembly_graph(cyclic);
    CHECK_NOTHROW(frame_placement(g, AssemblyNode{1, LocalNode::body("core")}));
  }

  SUBCASE("star") {
    std::mt19937_64 rng(4);
    Assembly star = random_tree_assembly(rng, 5);
    CHECK(is_tree(assembly_graph(star)));
  }
}

TEST_CASE("degrees_of_freedom") {
  auto set = load_sample_set();
  auto pbset = sample_set_with_powerball();

  Assembly two_pb =
      Assembly::from_serial_modules(pbset, {"base", "powerball", "powerball", "eef"});
  CHECK(two_pb.degrees_of_freedom() == 4);

  Assembly links_only = Assembly::create(set, {"base", "i_30"}, {{0, "out", 1, "in"}});
  CHECK(links_only.degrees_of_freedom() == 0);

  // One revolute and one prismatic joint.
  Assembly best = Assembly::from_serial_modules(set, {"base", "J1", "i_30", "J2", "eef"});
  CHECK(best.degrees_of_freedom() == 2);
}

TEST_CASE("path independence on randomized tree assemblies") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Assembly a = random_tree_assembly(rng, 2 + static_cast<int>(rng() % 5));
    AssemblyGraph g = assembly_graph(a);
    auto placements = all_frame_placements(g);
    CHECK(placements.size() == g.node_count());
    // Reverse edges carry exact inverses, so whichever direction an edge is
    // walked, placements stay consistent.
    for (const auto& [node, placement] : placements) {
      for (const AssemblyGraph::Edge& e : g.adjacency.at(node)) {
        CHECK(approx_eq(placements.at(e.to), placement * e.transition, 1e-10));
      }
    }
  }
}

TEST_CASE("serial eef placement equals the straight-line product oracle") {
  auto set = load_sample_set();
  const std::vector<std::string> chain = {"base", "J1", "i_30", "J2", "eef"};
  Assembly a = Assembly::from_serial_modules(set, chain);
  AssemblyGraph g = assembly_graph(a);

  // Oracle: walk the chain by hand, multiplying each module's internal
  // pass-through with a connection flip between modules.
  Transform oracle = Transform::identity();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Module& m = a.module_at(i);
    if (i == 0) {
      oracle = oracle * invert(m.find_connector(m.resolve_connector("world"))->body2connector);
    } else {
      oracle = oracle * connection_flip() *
               invert(m.find_connector(m.resolve_connector("in"))->body2connector);
    }
    for (const Joint& j : m.joints) {
      oracle = oracle * j.parent2joint * j.joint2child;
    }
    const char* out = i + 1 < chain.size() ? "out" : "tool";
    oracle = oracle * m.find_connector(m.resolve_connector(out))->body2connector;
  }

  AssemblyNode tool{4, LocalNode::connector({"flange", "tool"})};
  CHECK(approx_eq(frame_placement(g, tool), oracle, 1e-10));
}

TEST_CASE("assembly JSON round trip") {
  auto set = load_sample_set();
  const std::string original = read_file(data_file("sample_assembly.json"));
  Assembly a = parse_assembly(original, set);
  CHECK(a.instances() == std::vector<std::string>{"base", "J1", "i_30", "J2", "eef"});
  CHECK(a.degrees_of_freedom() == 2);

  const std::string once = serialize_assembly(a);
  CHECK(once == original);
  CHECK(serialize_assembly(parse_assembly(once, set)) == once);

  SUBCASE("wrong module set id") {
    ModuleSet renamed = *set;
    renamed.id = "other";
    CHECK_THROWS_AS(parse_assembly(original, std::make_shared<const ModuleSet>(renamed)),
                    ParseError);
  }

  SUBCASE("invalid connection surfaces as validation error") {
    std::string broken = original;
    auto at = broken.find("\"trunk/out\"");
    REQUIRE(at != std::string::npos);
    broken.replace(at, 11, "\"trunk/world\"");
    CHECK_THROWS_AS(parse_assembly(broken, set), ValidationError);
  }
}
