#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/partition.hpp"

namespace cpsbm {

struct KCoreDecomposition {
  std::vector<std::size_t> core_number;
  // One block per distinct core number, block 0 holding the largest.
  Partition shells;
};

// Batagelj-Zaversnik bucket peeling, O(N + M).
inline KCoreDecomposition k_core_decomposition(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw Error("k-core decomposition of an empty graph");

  std::size_t max_degree = 0;
  std::vector<std::size_t> deg(n);
  for (NodeId v = 0; v < n; ++v) max_degree = std::max(max_degree, deg[v] = g.degree(v));

  std::vector<std::size_t> bin(max_degree + 1, 0);
  for (auto d : deg) ++bin[d];
  std::size_t start = 0;
  for (auto& b : bin) {
    std::size_t count = b;
    b = start;
    start += count;
  }
  std::vector<NodeId> order(n);
  std::vector<std::size_t> pos(n);
  for (NodeId v = 0; v < n; ++v) {
    pos[v] = bin[deg[v]]++;
    order[pos[v]] = v;
  }
  for (std::size_t d = max_degree; d > 0; --d) bin[d] = bin[d - 1];
  bin[0] = 0;

  for (std::size_t i = 0; i < n; ++i) {
    NodeId v = order[i];
    for (NodeId u : g.neighbors(v)) {
      if (deg[u] <= deg[v]) continue;
      // Swap u with the first node of its bin, then shrink the bin.
      std::size_t du = deg[u];
      std::size_t pu = pos[u];
      std::size_t pw = bin[du];
      NodeId w = order[pw];
      if (u != w) {
        order[pu] = w;
        pos[w] = pu;
        order[pw] = u;
        pos[u] = pw;
      }
      ++bin[du];
      --deg[u];
    }
  }

  KCoreDecomposition out;
  out.core_number = std::move(deg);
  std::vector<std::size_t> distinct(out.core_number);
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<BlockId> shell_of(max_degree + 1, 0);
  for (std::size_t b = 0; b < distinct.size(); ++b) shell_of[distinct[b]] = static_cast<BlockId>(b);
  out.shells.block_count = static_cast<BlockId>(distinct.size());
  out.shells.block.resize(n);
  for (NodeId v = 0; v < n; ++v) out.shells.block[v] = shell_of[out.core_number[v]];
  return out;
}

// Discrete Borgatti-Everett error count of a two-block partition (block 0 =
// core): absent core-core pairs plus present periphery-periphery edges.
inline std::size_t borgatti_everett_errors(const Graph& g, const Partition& p) {
  std::size_t core = 0;
  for (BlockId b : p.block) core += (b == 0);
  std::size_t core_edges = 0, periphery_edges = 0;
  for (auto [a, b] : g.edges()) {
    if (p.block[a] == 0 && p.block[b] == 0) ++core_edges;
    if (p.block[a] != 0 && p.block[b] != 0) ++periphery_edges;
  }
  return core * (core - 1) / 2 - core_edges + periphery_edges;
}

struct TwoBlockResult {
  Partition partition;
  std::size_t errors = 0;
};

// Best degree-ordered prefix core under the Borgatti-Everett error count.
// Nodes are ranked by degree (descending, id ascending on ties); every core
// size 1..N-1 is scored incrementally and the smallest minimizing size wins.
inline TwoBlockResult two_block_partition(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw Error("two-block partition of an empty graph");

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return g.degree(a) > g.degree(b); });
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;

  std::size_t core_edges = 0;
  std::size_t periphery_edges = g.edge_count();
  std::size_t best_size = n == 1 ? 1 : 0;
  std::size_t best_errors = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    NodeId v = order[k];
    for (NodeId u : g.neighbors(v)) {
      if (rank[u] < k) ++core_edges;
      else --periphery_edges;  // every later neighbor leaves the periphery
    }
    std::size_t size = k + 1;
    std::size_t errors = size * (size - 1) / 2 - core_edges + periphery_edges;
    if (errors < best_errors) {
      best_errors = errors;
      best_size = size;
    }
  }

  TwoBlockResult out;
  out.partition.block_count = n == 1 ? 1 : 2;
  out.partition.block.assign(n, 1);
  for (std::size_t i = 0; i < best_size; ++i) out.partition.block[order[i]] = 0;
  if (n == 1) out.partition.block[0] = 0;
  out.errors = n == 1 ? 0 : best_errors;
  return out;
}

// Merges k-shells (innermost first) into a core whose size is closest to
// `target_core_size`; the rest becomes the periphery. The core is always a
// proper prefix of the shells unless there is only one shell, in which case
// a one-block partition is returned.
inline Partition binned_kcores(const Partition& shells, std::size_t target_core_size) {
  const std::size_t n = shells.node_count();
  if (target_core_size == 0 || target_core_size >= n)
    throw Error("target core size must lie in (0, N)");
  auto sizes = shells.sizes();

  std::size_t cut = 1;  // number of shells in the core
  if (sizes.size() > 1) {
    std::size_t cumulative = 0;
    std::size_t best_distance = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 1; k < sizes.size(); ++k) {
      cumulative += sizes[k - 1];
      std::size_t distance = cumulative > target_core_size ? cumulative - target_core_size
                                                           : target_core_size - cumulative;
      if (distance < best_distance) {
        best_distance = distance;
        cut = k;
      }
    }
  }

  Partition out;
  out.block_count = sizes.size() > 1 ? 2 : 1;
  out.block.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.block[i] = shells.block[i] < cut ? 0 : 1;
  return out;
}

}  // namespace cpsbm
