#include <gtest/gtest.h>

#include <cmath>

#include "cpsbm/gibbs.hpp"
#include "cpsbm/metrics.hpp"
#include "cpsbm/synth.hpp"
#include "oracles.hpp"
#include "posterior_oracle.hpp"
#include "test_graphs.hpp"

namespace cpsbm {
namespace {

Partition random_partition(std::size_t n, std::size_t l, Rng& rng) {
  Partition p;
  p.block_count = static_cast<BlockId>(l);
  p.block.resize(n);
  do {
    for (auto& b : p.block) b = static_cast<BlockId>(uniform_index(rng, l));
  } while (p.has_empty_block());
  return p;
}

double full_log_posterior(const Graph& g, const Partition& theta, const DensityVector& p, const ModelKind& kind) {
  BlockStats s(g, theta);
  return log_likelihood(s, p, kind) + log_prior_theta(s.sizes()) + log_prior_p(p, kind);
}

TEST(SampleDensities, SingleSlotIsPlainBeta) {
  Graph g = testing::path_graph(6);  // 5 of 15 pairs present
  Partition one{std::vector<BlockId>(6, 0), 1};
  BlockStats s(g, one);
  auto kind = ModelKind::layered(1);
  Rng rng = make_rng(1);
  std::vector<double> x(10000);
  DensityVector p{0.5};
  for (auto& v : x) v = (p = sample_densities(s, p, kind, rng))[0];
  oracle::TruncatedBetaCdf cdf(5, 10, 0.0, 1.0);
  EXPECT_GT(oracle::ks_p_value(oracle::ks_statistic(x, cdf), x.size()), 0.01);
}

TEST(SampleDensities, DenseCoreConcentratesNearOne) {
  // Complete core of 30 nodes over a sparse ring periphery.
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < 30; ++i)
    for (NodeId j = i + 1; j < 30; ++j) e.emplace_back(i, j);
  for (NodeId i = 30; i < 60; ++i) e.emplace_back(i, i + 1 < 60 ? i + 1 : 30);
  Graph g(60, e);
  Partition theta{std::vector<BlockId>(60, 1), 2};
  for (NodeId i = 0; i < 30; ++i) theta.block[i] = 0;
  BlockStats s(g, theta);
  auto kind = ModelKind::layered(2);
  Rng rng = make_rng(2);
  DensityVector p{0.5, 0.4};
  for (int t = 0; t < 200; ++t) {
    p = sample_densities(s, p, kind, rng);
    ASSERT_TRUE(satisfies_ordering(p));
  }
  // alpha_1 = 435, beta_1 = 0: the 1% quantile of Beta(436, 1) is 0.01^(1/436).
  EXPECT_GT(p[0], std::pow(0.01, 1.0 / 436));
  EXPECT_GT(p[0], p[1]);
}

TEST(SampleDensities, AlwaysOrdered) {
  Rng rng = make_rng(3);
  for (int t = 0; t < 300; ++t) {
    Graph g = testing::erdos_renyi(20, 0.05 + 0.5 * uniform_open(rng), rng);
    const bool hub = t % 2 == 0;
    auto kind = hub ? ModelKind::hub_and_spoke() : ModelKind::layered(1 + uniform_index(rng, 6));
    if (g.node_count() < kind.blocks()) continue;
    BlockStats s(g, random_partition(20, kind.blocks(), rng));
    auto p = sample_prior_densities(kind.density_count(), rng);
    for (int k = 0; k < 5; ++k) {
      p = sample_densities(s, p, kind, rng);
      ASSERT_TRUE(satisfies_ordering(p));
    }
  }
}

TEST(ChainState, SameLabelIsAcceptedNoOp) {
  Rng rng = make_rng(4);
  Graph g = testing::erdos_renyi(20, 0.3, rng);
  auto state = ChainState::random_start(g, ModelKind::layered(3), make_rng(5));
  auto before = state.partition();
  for (NodeId i = 0; i < 20; ++i) EXPECT_TRUE(state.propose(i, before.block[i]));
  EXPECT_EQ(state.partition(), before);
  EXPECT_EQ(state.moves_proposed(), 0u);
}

TEST(ChainState, FavorableUniformMovesAlwaysAccepted) {
  Rng rng = make_rng(6);
  Graph g = testing::erdos_renyi(25, 0.25, rng);
  for (auto kind : {ModelKind::hub_and_spoke(), ModelKind::layered(3)}) {
    auto state = ChainState::random_start(g, kind, make_rng(7));
    int favorable = 0;
    for (int t = 0; t < 400; ++t) {
      const auto i = static_cast<NodeId>(uniform_index(rng, 25));
      const auto target = static_cast<BlockId>(uniform_index(rng, kind.blocks()));
      const auto from = state.partition().block[i];
      if (target == from || state.stats().size(from) == 1) continue;
      Partition moved = state.partition();
      moved.block[i] = target;
      const double gain = full_log_posterior(g, moved, state.densities(), kind) -
                          full_log_posterior(g, state.partition(), state.densities(), kind);
      if (gain < 0) continue;
      ++favorable;
      auto copy = state;
      EXPECT_TRUE(copy.propose(i, target));
      EXPECT_EQ(copy.partition(), moved);
    }
    EXPECT_GT(favorable, 10);
  }
}

TEST(ChainState, MovesThatEmptyABlockAreRejected) {
  Graph g = testing::path_graph(4);
  Partition theta{{0, 1, 1, 1}, 2};
  ChainState state(g, ModelKind::layered(2), theta, {0.6, 0.2}, make_rng(8));
  EXPECT_FALSE(state.propose(0, 1));
  EXPECT_EQ(state.partition(), theta);
}

TEST(ChainState, IncrementalStatsMatchRecount) {
  Rng rng = make_rng(9);
  Graph g = testing::erdos_renyi(60, 0.1, rng);
  for (auto proposal : {ProposalKind::uniform, ProposalKind::neighborhood})
    for (auto kind : {ModelKind::hub_and_spoke(), ModelKind::layered(4)}) {
      auto state = ChainState::random_start(g, kind, make_rng(10), {proposal, 0.1});
      while (state.moves_accepted() < 1000) {
        state.label_step();
        if (state.moves_proposed() % 97 == 0) state.resample_densities();
      }
      EXPECT_EQ(state.stats(), BlockStats(g, state.partition()));
      EXPECT_FALSE(state.partition().has_empty_block());
      EXPECT_TRUE(satisfies_ordering(state.densities()));
    }
}

// Both proposals leave the exact posterior invariant on a tiny graph.
TEST(ChainState, StationaryDistributionMatchesEnumeration) {
  Graph g = oracle::six_node_graph();
  EXPECT_LT(oracle::chain_total_variation(g, ModelKind::hub_and_spoke(), {}, 40000, 11), 0.05);
  EXPECT_LT(oracle::chain_total_variation(g, ModelKind::layered(2), {}, 40000, 12), 0.05);
  EXPECT_LT(oracle::chain_total_variation(g, ModelKind::layered(2), {ProposalKind::neighborhood, 0.1}, 40000, 13),
            0.05);
  // About 540 states: more sweeps keep the sampling noise well below 0.05.
  EXPECT_LT(oracle::chain_total_variation(g, ModelKind::layered(3), {ProposalKind::neighborhood, 0.5}, 400000, 14),
            0.05);
}

TEST(Coreness, Examples) {
  EXPECT_DOUBLE_EQ(coreness({{0, 0, 1}}, 3)[0], 0.0);
  EXPECT_DOUBLE_EQ(coreness({{1, 0, 0}}, 3)[0], 1 - 1.0 / 3);
  EXPECT_DOUBLE_EQ(coreness({{0.5, 0.5}}, 2)[0], 0.25);
}

TEST(RunGibbs, MinimalRun) {
  Rng rng = make_rng(15);
  Graph g = testing::erdos_renyi(30, 0.2, rng);
  GibbsOptions opt;
  opt.gibbs_iterations = 2;
  auto r = run_gibbs(g, ModelKind::layered(3), opt, 16);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.log_posterior_trace.size(), 2u);
  for (std::size_t i = 0; i < 30; ++i) {
    double sum = 0, max = 0;
    for (double v : r.marginals[i]) {
      sum += v;
      max = std::max(max, v);
    }
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(max, 1.0);
    EXPECT_EQ(r.map_partition.block[i], r.samples[0].block[i]);
  }
  opt.gibbs_iterations = 1;
  EXPECT_THROW(run_gibbs(g, ModelKind::layered(3), opt, 16), Error);
  EXPECT_THROW(run_gibbs(testing::path_graph(3), ModelKind::layered(4), {}, 1), Error);
}

TEST(RunGibbs, ResultInvariants) {
  Rng rng = make_rng(17);
  Graph g = testing::erdos_renyi(50, 0.15, rng);
  GibbsOptions opt;
  opt.gibbs_iterations = 20;
  for (auto kind : {ModelKind::hub_and_spoke(), ModelKind::layered(4)}) {
    auto r = run_gibbs(g, kind, opt, 18);
    EXPECT_EQ(r.samples.size(), 10u);
    EXPECT_EQ(r.log_posterior_trace.size(), 20u);
    EXPECT_TRUE(satisfies_ordering(r.final_densities));
    for (std::size_t i = 0; i < 50; ++i) {
      double sum = 0;
      for (double v : r.marginals[i]) sum += v;
      EXPECT_NEAR(sum, 1.0, 1e-12);
      const auto& row = r.marginals[i];
      const auto arg = static_cast<BlockId>(std::max_element(row.begin(), row.end()) - row.begin());
      EXPECT_EQ(r.map_partition.block[i], arg);
      EXPECT_GE(r.coreness[i], 0.0);
      EXPECT_LE(r.coreness[i], 1 - 1.0 / static_cast<double>(kind.blocks()) + 1e-12);
    }
    EXPECT_FALSE(r.fitted_partition().has_empty_block());
  }
}

TEST(RunGibbs, SameSeedSameResult) {
  Rng rng = make_rng(19);
  Graph g = testing::erdos_renyi(40, 0.2, rng);
  GibbsOptions opt;
  opt.gibbs_iterations = 10;
  auto a = run_gibbs(g, ModelKind::layered(3), opt, 20);
  auto b = run_gibbs(g, ModelKind::layered(3), opt, 20);
  EXPECT_EQ(a.log_posterior_trace, b.log_posterior_trace);
  EXPECT_EQ(a.map_partition, b.map_partition);
}

// Work per Gibbs iteration stays within a constant of
// l^2 + T_MCMC (mean degree + l).
TEST(RunGibbs, WorkCountersScaleWithDegreeAndBlocks) {
  for (std::size_t n : {200u, 400u}) {
    Rng rng = make_rng(21);
    Graph g = testing::erdos_renyi(n, 10.0 / static_cast<double>(n), rng);
    const double mean_degree = 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(n);
    for (std::size_t l : {2u, 5u}) {
      GibbsOptions opt;
      opt.gibbs_iterations = 10;
      auto r = run_gibbs(g, ModelKind::layered(l), opt, 22);
      const double steps = 10.0 * static_cast<double>(n);
      const double per_iteration =
          static_cast<double>(r.work.neighbor_visits + r.work.pair_terms + r.work.density_draws) / 10.0;
      const double bound = static_cast<double>(l * l) + steps * (mean_degree + static_cast<double>(l));
      EXPECT_LE(per_iteration, 5 * bound);
      EXPECT_GE(per_iteration, 0.2 * steps * mean_degree * (1 - 1.0 / static_cast<double>(l)));
      EXPECT_EQ(r.work.proposals, static_cast<std::uint64_t>(10 * steps));
      EXPECT_EQ(r.work.density_draws, 10 * l);
    }
  }
}

TEST(RunGibbs, RecoversPlantedHubAndSpoke) {
  Rng rng = make_rng(23);
  PlantedConfig cfg{{150, 450}, {{0.3, 0.1}, {0.1, 0.02}}};
  auto planted = sbm_generate(cfg, rng);
  GibbsOptions opt;
  opt.gibbs_iterations = 60;
  auto r = run_gibbs(planted.graph, ModelKind::hub_and_spoke(), opt, 24);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 600; ++i) agree += r.map_partition.block[i] == planted.planted.block[i];
  EXPECT_GE(static_cast<double>(agree) / 600, 0.95);
  EXPECT_LT(variation_of_information(r.map_partition, planted.planted), 0.1);
}

TEST(RunGibbs, ErdosRenyiHasNoConfidentStructure) {
  Rng rng = make_rng(25);
  Graph g = testing::erdos_renyi(200, 0.05, rng);
  GibbsOptions opt;
  opt.gibbs_iterations = 100;
  auto r = run_gibbs(g, ModelKind::hub_and_spoke(), opt, 26);
  double mean_max = 0;
  for (const auto& row : r.marginals) mean_max += *std::max_element(row.begin(), row.end());
  mean_max /= 200;
  std::cout << "ER acceptance " << r.acceptance_rate << ", mean max marginal " << mean_max << "\n";
  EXPECT_GT(r.acceptance_rate, 0.3);
  EXPECT_LT(mean_max, 0.9);
}

}  // namespace
}  // namespace cpsbm
