#pragma once

// Exhaustive posterior over block assignments of a tiny graph with the
// densities integrated out by quadrature, plus a chain-vs-enumeration
// total-variation check.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "cpsbm/gibbs.hpp"
#include "oracles.hpp"

namespace cpsbm::oracle {

inline std::uint64_t encode(const std::vector<BlockId>& block, std::size_t blocks) {
  std::uint64_t code = 0;
  for (std::size_t i = block.size(); i-- > 0;) code = code * blocks + block[i];
  return code;
}

// code -> posterior probability for every assignment with no empty block.
inline std::map<std::uint64_t, double> exhaustive_posterior(const Graph& g, bool hub_and_spoke, std::size_t blocks) {
  const std::size_t n = g.node_count();
  const std::size_t slots = hub_and_spoke ? 3 : blocks;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < n; ++i) count *= blocks;
  std::map<std::uint64_t, double> weight;
  double total = 0;
  for (std::uint64_t code = 0; code < count; ++code) {
    std::vector<BlockId> b(n);
    std::vector<double> sizes(blocks, 0);
    std::uint64_t c = code;
    for (std::size_t i = 0; i < n; ++i, c /= blocks) ++sizes[b[i] = static_cast<BlockId>(c % blocks)];
    if (std::find(sizes.begin(), sizes.end(), 0.0) != sizes.end()) continue;
    std::vector<std::int64_t> present(slots, 0), absent(slots, 0);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j) {
        std::size_t r = std::min(b[i], b[j]), s = std::max(b[i], b[j]);
        std::size_t slot = hub_and_spoke ? r + s : s;
        ++(g.has_edge(i, j) ? present : absent)[slot];
      }
    // P(theta) = prod n_r! / N! / C(N-1, l-1) / N.
    double prior = 1;
    for (double s : sizes) prior *= std::tgamma(s + 1);
    const double nn = static_cast<double>(n), l = static_cast<double>(blocks);
    prior /= std::tgamma(nn + 1) * (std::tgamma(nn) / (std::tgamma(l) * std::tgamma(nn - l + 1))) * nn;
    double w = prior * ordered_evidence(present, absent, 24);
    weight[code] = w;
    total += w;
  }
  for (auto& [code, w] : weight) w /= total;
  return weight;
}

// Runs `sweeps` rounds of N label steps plus one density update and returns
// the total variation distance between visited assignments and the posterior.
inline double chain_total_variation(const Graph& g, const ModelKind& kind, ProposalConfig proposal,
                                    std::size_t sweeps, std::uint64_t seed) {
  const auto exact = exhaustive_posterior(g, !kind.is_layered(), kind.blocks());
  auto state = ChainState::random_start(g, kind, make_rng(seed), proposal);
  std::map<std::uint64_t, double> visits;
  for (std::size_t t = 0; t < 1000; ++t) {
    for (std::size_t k = 0; k < g.node_count(); ++k) state.label_step();
    state.resample_densities();
  }
  for (std::size_t t = 0; t < sweeps; ++t) {
    for (std::size_t k = 0; k < g.node_count(); ++k) state.label_step();
    state.resample_densities();
    visits[encode(state.partition().block, kind.blocks())] += 1.0 / static_cast<double>(sweeps);
  }
  double tv = 0;
  for (auto [code, p] : exact) {
    auto it = visits.find(code);
    tv += std::abs(p - (it == visits.end() ? 0.0 : it->second));
  }
  for (auto [code, q] : visits)
    if (!exact.count(code)) tv += q;
  return tv / 2;
}

// Fixed six-node test graph: a triangle core with a pendant chain.
inline Graph six_node_graph() { return Graph(6, {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 4}, {2, 5}, {3, 4}}); }

}  // namespace cpsbm::oracle
