#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/partition.hpp"
#include "cpsbm/rng.hpp"

namespace cpsbm {

using BlockMatrix = std::vector<std::vector<double>>;

// Planted block sizes (nodes are assigned to blocks in order) and the full
// symmetric block connection matrix.
struct PlantedConfig {
  std::vector<std::size_t> sizes;
  BlockMatrix matrix;

  std::size_t node_count() const {
    std::size_t n = 0;
    for (auto s : sizes) n += s;
    return n;
  }

  void validate() const {
    const std::size_t l = sizes.size();
    if (l == 0) throw Error("planted configuration has no blocks");
    if (matrix.size() != l) throw Error("block matrix size does not match block count");
    for (std::size_t r = 0; r < l; ++r) {
      if (matrix[r].size() != l) throw Error("block matrix is not square");
      for (std::size_t s = 0; s < l; ++s) {
        double p = matrix[r][s];
        if (!(p >= 0.0 && p <= 1.0)) throw Error("block matrix entries must lie in [0, 1]");
        if (p != matrix[s][r]) throw Error("block matrix is not symmetric");
      }
    }
  }
};

inline PlantedConfig equal_blocks(std::size_t nodes, BlockMatrix matrix) {
  const std::size_t l = matrix.size();
  if (l == 0) throw Error("block matrix is empty");
  PlantedConfig cfg;
  cfg.sizes.assign(l, nodes / l);
  for (std::size_t r = 0; r < nodes % l; ++r) ++cfg.sizes[r];
  cfg.matrix = std::move(matrix);
  return cfg;
}

struct PlantedGraph {
  Graph graph;
  Partition planted;
};

// Every pair i < j is linked independently with probability p_{theta_i theta_j}.
inline PlantedGraph sbm_generate(const PlantedConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = cfg.node_count();
  Partition theta;
  theta.block_count = static_cast<BlockId>(cfg.sizes.size());
  for (std::size_t r = 0; r < cfg.sizes.size(); ++r) theta.block.insert(theta.block.end(), cfg.sizes[r], static_cast<BlockId>(r));

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i) {
    const auto& row = cfg.matrix[theta.block[i]];
    for (NodeId j = i + 1; j < n; ++j) {
      double p = row[theta.block[j]];
      if (p > 0.0 && (p >= 1.0 || uniform_open(rng) < p)) edges.emplace_back(i, j);
    }
  }
  return {Graph(n, std::move(edges)), std::move(theta)};
}

// Three-block interpolation between hub-and-spoke (delta = 0) and a
// three-layer structure (delta = 1); gamma = 1 is an Erdos-Renyi graph.
inline BlockMatrix discernment_matrix(double p, double gamma, double delta) {
  if (!(p > 0.0)) throw Error("baseline density must be positive");
  if (!(gamma >= 1.0 && gamma <= 1.0 / p)) throw Error("gamma must lie in [1, 1/p]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error("delta must lie in [0, 1]");
  const double hi = p * gamma;
  const double lo = p / gamma;
  const double corner = p * (1 - delta) + lo * delta;
  const double middle = p * delta + lo * (1 - delta);
  return {{hi, p, corner}, {p, middle, lo}, {corner, lo, lo}};
}

// p_r = p_1 (p_l / p_1)^((r-1)/(l-1)).
inline std::vector<double> geometric_layer_densities(double first, double last, std::size_t layers) {
  if (layers < 1) throw Error("need at least one layer");
  if (!(first > 0.0) || !(last > 0.0)) throw Error("layer densities must be positive");
  std::vector<double> p(layers, first);
  for (std::size_t r = 1; r < layers; ++r)
    p[r] = first * std::pow(last / first, static_cast<double>(r) / static_cast<double>(layers - 1));
  return p;
}

// p_rs = p_max(r,s).
inline BlockMatrix layered_block_matrix(const std::vector<double>& layer_density) {
  const std::size_t l = layer_density.size();
  BlockMatrix m(l, std::vector<double>(l));
  for (std::size_t r = 0; r < l; ++r)
    for (std::size_t s = 0; s < l; ++s) m[r][s] = layer_density[std::max(r, s)];
  return m;
}

// Density q_k shared by layers k..l (1-based) such that a layered graph with
// l equal layers of n nodes keeps its expected average degree.
inline double merged_layer_density(const std::vector<double>& layer_density, std::size_t k, std::size_t n) {
  const std::size_t l = layer_density.size();
  if (k < 1 || k > l) throw Error("merge index out of range");
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double cross = static_cast<double>(n) * static_cast<double>(n);
  double num = 0, den = 0;
  for (std::size_t r = k; r <= l; ++r) {
    const double p = layer_density[r - 1];
    const double outer = static_cast<double>(r - 1);
    num += pairs * p + cross * outer * p;
    den += pairs + cross * outer;
  }
  return num / den;
}

// Layer densities of G_k: unchanged below k, q_k from layer k outward.
inline std::vector<double> merged_layer_densities(const std::vector<double>& layer_density, std::size_t k,
                                                  std::size_t n) {
  std::vector<double> out(layer_density);
  const double q = merged_layer_density(layer_density, k, n);
  for (std::size_t r = k; r <= out.size(); ++r) out[r - 1] = q;
  return out;
}

// Expected average degree of an SBM with the given block sizes.
inline double expected_average_degree(const PlantedConfig& cfg) {
  double edges = 0;
  const std::size_t l = cfg.sizes.size();
  for (std::size_t r = 0; r < l; ++r)
    for (std::size_t s = r; s < l; ++s) {
      const double nr = static_cast<double>(cfg.sizes[r]), ns = static_cast<double>(cfg.sizes[s]);
      edges += cfg.matrix[r][s] * (r == s ? nr * (nr - 1) / 2 : nr * ns);
    }
  return 2 * edges / static_cast<double>(cfg.node_count());
}

}  // namespace cpsbm
