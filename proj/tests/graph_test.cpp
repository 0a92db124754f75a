#include <gtest/gtest.h>

#include <deque>
#include <sstream>

#include "cpsbm/graph.hpp"
#include "test_graphs.hpp"

namespace cpsbm {
namespace {

RawEdgeList parse(const std::string& text) {
  std::istringstream in(text);
  return load_edge_list(in);
}

TEST(LoadEdgeList, ParsesPairs) {
  auto raw = parse("1 2\n2 3");
  ASSERT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw[0].source, "1");
  EXPECT_EQ(raw[0].target, "2");
  EXPECT_EQ(raw[1].source, "2");
  EXPECT_EQ(raw[1].target, "3");
  EXPECT_FALSE(raw[0].weight);
}

TEST(LoadEdgeList, SkipsCommentsAndCapturesWeight) {
  auto raw = parse("% header\n1 2 5.0");
  ASSERT_EQ(raw.size(), 1u);
  ASSERT_TRUE(raw[0].weight);
  EXPECT_DOUBLE_EQ(*raw[0].weight, 5.0);
  EXPECT_EQ(parse("# c\n\n  \n% m\na\tb\n").size(), 1u);
}

TEST(LoadEdgeList, KonectTsvIgnoresTimestampColumns) {
  std::istringstream in("% sym unweighted\n% 3 3 3\n1\t2\t1\t1300000000\n2\t3\t1\t1300000001\n");
  auto raw = load_edge_list(in, EdgeListFormat::konect_tsv);
  ASSERT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw[1].target, "3");
}

TEST(LoadEdgeList, MalformedLineReportsLineNumber) {
  try {
    parse("1");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse("1 2\n% c\n3\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Preprocess, DropsLoopsMultiedgesAndIsolatedLoopNodes) {
  auto g = preprocess(parse("1 1\n1 2\n2 1\n9 9\n"));
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.label(0), "1");
  EXPECT_EQ(g.label(1), "2");
}

TEST(Preprocess, KeepsLargestComponent) {
  auto g = preprocess(parse("1 2\n2 3\n3 1\n3 4\n10 11\n11 12\n12 10\n"));
  EXPECT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 4u);
  EXPECT_EQ(g.labels(), (std::vector<std::string>{"1", "2", "3", "4"}));
}

TEST(Preprocess, TieKeepsComponentWithSmallestLabel) {
  auto g = preprocess(parse("20 21\n21 22\n5 6\n6 7\n"));
  EXPECT_EQ(g.labels(), (std::vector<std::string>{"5", "6", "7"}));
  // Numeric labels order numerically, not lexicographically.
  auto h = preprocess(parse("10 11\n9 8\n"));
  EXPECT_EQ(h.labels(), (std::vector<std::string>{"8", "9"}));
}

TEST(Preprocess, WeightedMultiedgesCollapse) {
  auto g = preprocess(parse("1 2 5.0\n1 2 7.0\n"));
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Preprocess, StringLabelsAndDirectionsSymmetrized) {
  auto g = preprocess(parse("alice bob\nbob alice\nbob carol\n"));
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.label(0), "alice");
}

TEST(Preprocess, EmptyAfterPreprocessingThrows) {
  EXPECT_THROW(preprocess(parse("1 1\n2 2\n")), Error);
  EXPECT_THROW(preprocess({}), Error);
}

TEST(Graph, RejectsInvalidEdges) {
  EXPECT_THROW(Graph(3, {{0, 0}}), Error);
  EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), Error);
  EXPECT_THROW(Graph(3, {{0, 3}}), Error);
}

TEST(Degree, SmallGraphs) {
  auto tri = testing::complete_graph(3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(degree(tri, i), 2u);
  auto star = testing::star_graph(5);
  EXPECT_EQ(degree(star, 0), 5u);
  EXPECT_EQ(degree(star, 3), 1u);
  EXPECT_THROW(degree(star, 6), Error);
}

// Random edge lists with loops, duplicates, reversed pairs and several
// components.
RawEdgeList random_raw(Rng& rng) {
  RawEdgeList raw;
  const auto n = 2 + uniform_index(rng, 30);
  const auto m = 1 + uniform_index(rng, 60);
  for (std::size_t e = 0; e < m; ++e)
    raw.push_back({std::to_string(uniform_index(rng, n)), std::to_string(uniform_index(rng, n)), std::nullopt});
  raw.push_back({"0", "1", 2.5});
  return raw;
}

TEST(PreprocessProperty, IdempotentDegreeSumAndConnected) {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto raw = random_raw(rng);
    Graph g = preprocess(raw);
    EXPECT_EQ(preprocess(to_raw(g)), g);

    std::size_t degree_sum = 0;
    for (NodeId i = 0; i < g.node_count(); ++i) {
      degree_sum += g.degree(i);
      for (NodeId j : g.neighbors(i)) EXPECT_TRUE(g.has_edge(j, i));
    }
    EXPECT_EQ(degree_sum, 2 * g.edge_count());

    std::vector<bool> seen(g.node_count(), false);
    std::deque<NodeId> queue{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!queue.empty()) {
      NodeId v = queue.front();
      queue.pop_front();
      for (NodeId u : g.neighbors(v))
        if (!seen[u]) {
          seen[u] = true;
          ++reached;
          queue.push_back(u);
        }
    }
    EXPECT_EQ(reached, g.node_count());
  }
}

TEST(LabelMap, TwoColumnCsv) {
  auto g = preprocess(parse("b a\n"));
  std::ostringstream out;
  write_label_map(out, g);
  EXPECT_EQ(out.str(), "id,label\n0,a\n1,b\n");
}

}  // namespace
}  // namespace cpsbm
