#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "mnci/graph.hpp"
#include "mnci/synth.hpp"

using namespace mnci;

TEST_CASE("parse assigns first-seen indices after the time sort") {
  std::istringstream in("1 2 5.0\n3 1 2.0\n");
  TemporalGraph g = parse_edge_list(in);
  REQUIRE(g.events().size() == 2);
  CHECK(g.events()[0].src == 3);
  CHECK(g.events()[0].dst == 1);
  CHECK(g.events()[0].time == 2.0);
  CHECK(g.events()[1].src == 1);
  CHECK(g.events()[1].dst == 2);
  CHECK(g.events()[1].time == 5.0);
  CHECK(g.index_of(3) == 0);
  CHECK(g.index_of(1) == 1);
  CHECK(g.index_of(2) == 2);
  CHECK(g.node_count() == 3);
}

TEST_CASE("equal timestamps keep file order") {
  std::istringstream in("1 2 1.0\n3 4 1.0\n5 6 1.0\n");
  TemporalGraph g = parse_edge_list(in);
  CHECK(g.events()[0].src == 1);
  CHECK(g.events()[1].src == 3);
  CHECK(g.events()[2].src == 5);
}

TEST_CASE("self-loop is rejected with its line number") {
  std::istringstream in("1 2 1.0\n1 1 3.0\n");
  CHECK_THROWS_MATCHES(parse_edge_list(in), DataError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 2")));
}

TEST_CASE("malformed lines name the offender") {
  SECTION("missing field") {
    std::istringstream in("1 2\n");
    CHECK_THROWS_MATCHES(parse_edge_list(in), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 1")));
  }
  SECTION("extra field") {
    std::istringstream in("1 2 1.0 9\n");
    CHECK_THROWS_AS(parse_edge_list(in), DataError);
  }
  SECTION("non-numeric time") {
    std::istringstream in("1 2 soon\n");
    CHECK_THROWS_AS(parse_edge_list(in), DataError);
  }
  SECTION("negative node id") {
    std::istringstream in("-1 2 1.0\n");
    CHECK_THROWS_AS(parse_edge_list(in), DataError);
  }
  SECTION("negative time") {
    std::istringstream in("1 2 -1.0\n");
    CHECK_THROWS_AS(parse_edge_list(in), DataError);
  }
}

TEST_CASE("empty input is an error") {
  std::istringstream empty("");
  CHECK_THROWS_MATCHES(parse_edge_list(empty), DataError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("no events")));
  std::istringstream comments("# header\n\n# another\n");
  CHECK_THROWS_AS(parse_edge_list(comments), DataError);
}

TEST_CASE("comments and blank lines are skipped, events counted") {
  std::istringstream in("# comment\n1 2 1.0\n\n2 3 2.0\n# tail\n");
  TemporalGraph g = parse_edge_list(in);
  CHECK(g.events().size() == 2);
}

TEST_CASE("first_seen positions are dense and bijective") {
  SynthConfig cfg;
  cfg.nodes_per_community = 8;
  cfg.communities = 3;
  cfg.events_per_node = 4;
  cfg.seed = 5;
  TemporalGraph g = synth_planted_graph(cfg).graph;
  std::vector<bool> seen(g.node_count(), false);
  for (const auto& [id, idx] : g.first_seen()) {
    REQUIRE(idx >= 0);
    REQUIRE(idx < g.node_count());
    CHECK_FALSE(seen[idx]);
    seen[idx] = true;
    CHECK(g.node_ids()[idx] == id);
  }
  for (bool b : seen) CHECK(b);
}

TEST_CASE("edge list round-trips through serialization") {
  SynthConfig cfg;
  cfg.nodes_per_community = 6;
  cfg.communities = 2;
  cfg.events_per_node = 5;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    cfg.seed = seed;
    TemporalGraph g = synth_planted_graph(cfg).graph;
    std::ostringstream out;
    write_edge_list(g, out);
    std::istringstream in(out.str());
    TemporalGraph g2 = parse_edge_list(in);
    REQUIRE(g2.events().size() == g.events().size());
    for (std::size_t i = 0; i < g.events().size(); ++i) {
      CHECK(g2.events()[i].src == g.events()[i].src);
      CHECK(g2.events()[i].dst == g.events()[i].dst);
      CHECK(g2.events()[i].time == g.events()[i].time);
    }
    CHECK(g2.first_seen() == g.first_seen());
  }
}

TEST_CASE("history push appends and evicts") {
  NeighborHistory h(2);
  h.push(7, 1.0);
  REQUIRE(h.size() == 1);
  CHECK(h.entries()[0].neighbor == 7);
  CHECK(h.entries()[0].time == 1.0);

  NeighborHistory full(2);
  full.push(1, 1.0);
  full.push(2, 2.0);
  full.push(3, 3.0);
  REQUIRE(full.size() == 2);
  CHECK(full.entries()[0].neighbor == 2);
  CHECK(full.entries()[1].neighbor == 3);
}

TEST_CASE("history rejects time regressions, allows ties") {
  NeighborHistory h(4);
  h.push(1, 5.0);
  CHECK_THROWS_AS(h.push(2, 4.0), DataError);
  CHECK_NOTHROW(h.push(2, 5.0));

  NeighborHistory byval(4);
  NeighborHistory grown = push_history(byval, 9, 1.5);
  CHECK(byval.empty());
  CHECK(grown.size() == 1);
}

TEST_CASE("label parsing handles duplicates") {
  SECTION("basic") {
    std::istringstream in("1 0\n2 1\n");
    LabelMap m = parse_labels(in);
    REQUIRE(m.size() == 2);
    CHECK(m.at(1) == 0);
    CHECK(m.at(2) == 1);
  }
  SECTION("duplicate identical allowed") {
    std::istringstream in("1 0\n1 0\n");
    LabelMap m = parse_labels(in);
    CHECK(m.size() == 1);
    CHECK(m.at(1) == 0);
  }
  SECTION("conflicting duplicate rejected") {
    std::istringstream in("1 0\n1 1\n");
    CHECK_THROWS_MATCHES(parse_labels(in), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 2")));
  }
  SECTION("malformed line rejected") {
    std::istringstream in("1 zero\n");
    CHECK_THROWS_MATCHES(parse_labels(in), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 1")));
  }
}
