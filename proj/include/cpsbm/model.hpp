#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/partition.hpp"
#include "cpsbm/rng.hpp"

namespace cpsbm {

// The two constrained core-periphery block models.
//
// Hub-and-spoke: two blocks with three free densities ordered
//   p11 > p12 > p22.
// Layered: l blocks (layers) with p_rs = p_max(r,s) and
//   p_1 > p_2 > ... > p_l.
//
// Both are expressed through a map from block pairs (r <= s) to a density
// slot; the slots of a DensityVector are strictly decreasing in both models,
// which lets likelihood, Gibbs updates and prior draws share one code path.
class ModelKind {
 public:
  enum class Family { hub_and_spoke, layered };

  static ModelKind hub_and_spoke() { return ModelKind(Family::hub_and_spoke, 2); }

  static ModelKind layered(std::size_t layers) {
    if (layers < 1) throw Error("layered model needs at least one layer");
    return ModelKind(Family::layered, layers);
  }

  Family family() const noexcept { return family_; }
  bool is_layered() const noexcept { return family_ == Family::layered; }
  std::size_t blocks() const noexcept { return blocks_; }
  std::size_t density_count() const noexcept { return is_layered() ? blocks_ : 3; }

  // Density slot governing the pair of blocks (r, s).
  std::size_t slot(std::size_t r, std::size_t s) const noexcept {
    if (is_layered()) return r > s ? r : s;
    return r + s;  // (0,0)->p11, (0,1)->p12, (1,1)->p22
  }

  std::string name() const { return is_layered() ? "layered" : "hub-spoke"; }

  bool operator==(const ModelKind&) const = default;

 private:
  ModelKind(Family f, std::size_t blocks) : family_(f), blocks_(blocks) {}

  Family family_;
  std::size_t blocks_;
};

// Ordered connection probabilities, one per density slot.
using DensityVector = std::vector<double>;

inline bool satisfies_ordering(std::span<const double> p) {
  if (p.empty()) return false;
  if (!(p.front() < 1.0) || !(p.back() > 0.0)) return false;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p[i] < p[i - 1])) return false;
  return true;
}

// Full symmetric block matrix implied by a density vector.
inline std::vector<std::vector<double>> expand_densities(const DensityVector& p, const ModelKind& kind) {
  const std::size_t l = kind.blocks();
  std::vector<std::vector<double>> m(l, std::vector<double>(l));
  for (std::size_t r = 0; r < l; ++r)
    for (std::size_t s = 0; s < l; ++s) m[r][s] = p[kind.slot(std::min(r, s), std::max(r, s))];
  return m;
}

// Per-block-pair edge counts for a graph under a partition.
class BlockStats {
 public:
  BlockStats() = default;

  BlockStats(const Graph& g, const Partition& theta) : blocks_(theta.block_count) {
    validate(theta, g.node_count());
    size_.assign(blocks_, 0);
    edges_.assign(blocks_ * blocks_, 0);
    for (BlockId b : theta.block) ++size_[b];
    for (std::size_t r = 0; r < blocks_; ++r)
      if (size_[r] == 0) throw Error("block " + std::to_string(r + 1) + " is empty");
    for (auto [a, b] : g.edges()) add_edges(theta.block[a], theta.block[b], 1);
  }

  std::size_t blocks() const noexcept { return blocks_; }
  std::size_t size(std::size_t r) const noexcept { return size_[r]; }
  const std::vector<std::size_t>& sizes() const noexcept { return size_; }

  std::size_t node_count() const noexcept {
    std::size_t n = 0;
    for (auto s : size_) n += s;
    return n;
  }

  // m_rs: edges between blocks r and s (within r when r == s).
  std::int64_t edges(std::size_t r, std::size_t s) const noexcept { return edges_[r * blocks_ + s]; }

  // M_rs: node pairs between blocks r and s.
  std::int64_t capacity(std::size_t r, std::size_t s) const noexcept {
    auto nr = static_cast<std::int64_t>(size_[r]);
    if (r == s) return nr * (nr - 1) / 2;
    return nr * static_cast<std::int64_t>(size_[s]);
  }

  // Sum of degrees of the nodes in block r (m_rr counted twice).
  std::int64_t degree_total(std::size_t r) const noexcept {
    std::int64_t t = 0;
    for (std::size_t s = 0; s < blocks_; ++s) t += edges(r, s);
    return t + edges(r, r);
  }

  // (alpha, beta) per density slot: existing and missing edges summed over
  // the block pairs that share the slot.
  struct SlotCounts {
    std::vector<std::int64_t> present;
    std::vector<std::int64_t> absent;
  };

  SlotCounts slot_counts(const ModelKind& kind) const {
    SlotCounts c{std::vector<std::int64_t>(kind.density_count(), 0),
                 std::vector<std::int64_t>(kind.density_count(), 0)};
    for (std::size_t r = 0; r < blocks_; ++r)
      for (std::size_t s = r; s < blocks_; ++s) {
        auto k = kind.slot(r, s);
        c.present[k] += edges(r, s);
        c.absent[k] += capacity(r, s) - edges(r, s);
      }
    return c;
  }

  void add_edges(std::size_t r, std::size_t s, std::int64_t delta) noexcept {
    edges_[r * blocks_ + s] += delta;
    if (r != s) edges_[s * blocks_ + r] += delta;
  }

  void move_node(std::size_t from, std::size_t to) noexcept {
    --size_[from];
    ++size_[to];
  }

  bool operator==(const BlockStats&) const = default;

 private:
  std::size_t blocks_ = 0;
  std::vector<std::size_t> size_;
  std::vector<std::int64_t> edges_;
};

inline BlockStats block_stats(const Graph& g, const Partition& theta) { return BlockStats(g, theta); }

// Bernoulli log-likelihood of one block pair; 0 log 0 terms vanish.
inline double pair_log_likelihood(std::int64_t present, std::int64_t absent, double p) {
  double ll = 0;
  if (present > 0) ll += static_cast<double>(present) * std::log(p);
  if (absent > 0) ll += static_cast<double>(absent) * std::log1p(-p);
  return ll;
}

// log P(A | theta, p) in nats.
inline double log_likelihood(const BlockStats& stats, const DensityVector& p, const ModelKind& kind) {
  if (p.size() != kind.density_count()) throw Error("density vector has the wrong length");
  auto c = stats.slot_counts(kind);
  double ll = 0;
  for (std::size_t k = 0; k < p.size(); ++k) ll += pair_log_likelihood(c.present[k], c.absent[k], p[k]);
  return ll;
}

// log P(theta) = log[ prod_r n_r! / N! * C(N-1, l-1)^-1 * N^-1 ].
inline double log_prior_theta(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw Error("no blocks");
  double n = 0;
  double lp = 0;
  for (auto s : sizes) {
    if (s == 0) throw Error("empty block is outside the prior support");
    lp += std::lgamma(static_cast<double>(s) + 1);
    n += static_cast<double>(s);
  }
  const double l = static_cast<double>(sizes.size());
  const double log_binom = std::lgamma(n) - std::lgamma(l) - std::lgamma(n - l + 1);
  return lp - std::lgamma(n + 1) - log_binom - std::log(n);
}

// log P(p): uniform on the ordered simplex, normalized by (number of slots)!.
inline double log_prior_p(const DensityVector& p, const ModelKind& kind) {
  if (p.size() != kind.density_count()) throw Error("density vector has the wrong length");
  if (!satisfies_ordering(p)) throw Error("densities violate the core-periphery ordering");
  return std::lgamma(static_cast<double>(p.size()) + 1);
}

// Uniform draw from the ordered simplex {0 < p_k < ... < p_1 < 1}: the k+1
// spacings 1-p_1, p_1-p_2, ..., p_k are Dirichlet(1, ..., 1).
inline DensityVector sample_prior_densities(std::size_t count, Rng& rng) {
  if (count < 1) throw Error("need at least one density");
  std::vector<double> spacing(count + 1);
  double total = 0;
  for (auto& x : spacing) total += (x = standard_exponential(rng));
  // p_s = 1 - sum_{r<=s} pi_r, accumulated from the small end for accuracy.
  DensityVector p(count);
  double tail = spacing[count];
  for (std::size_t s = count; s-- > 0;) {
    p[s] = tail / total;
    tail += spacing[s];
  }
  return p;
}

}  // namespace cpsbm
