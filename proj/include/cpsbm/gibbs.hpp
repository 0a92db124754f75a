#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/model.hpp"
#include "cpsbm/partition.hpp"
#include "cpsbm/rng.hpp"
#include "cpsbm/truncated_beta.hpp"

namespace cpsbm {

// One Gibbs sweep over the densities given the block counts: slots are
// redrawn in order, slot s bounded above by the freshly drawn s-1 and below
// by the current s+1 (virtual bounds 1 and 0 at the ends).
inline DensityVector sample_densities(const BlockStats& stats, const DensityVector& current,
                                      const ModelKind& kind, Rng& rng) {
  if (current.size() != kind.density_count()) throw Error("density vector has the wrong length");
  auto counts = stats.slot_counts(kind);
  DensityVector next(current);
  for (std::size_t s = 0; s < next.size(); ++s) {
    double hi = s == 0 ? 1.0 : next[s - 1];
    double lo = s + 1 == next.size() ? 0.0 : next[s + 1];
    next[s] = sample_truncated_beta(counts.present[s], counts.absent[s], lo, hi, rng);
  }
  return next;
}

enum class ProposalKind { uniform, neighborhood };

struct ProposalConfig {
  ProposalKind kind = ProposalKind::uniform;
  double epsilon = 0.1;
};

// Operation counters used to check the per-sweep cost.
struct WorkCounters {
  std::uint64_t proposals = 0;
  std::uint64_t neighbor_visits = 0;
  std::uint64_t pair_terms = 0;
  std::uint64_t density_draws = 0;
};

// Joint state (theta, p) of one chain over an immutable graph.
class ChainState {
 public:
  ChainState(const Graph& g, ModelKind kind, Partition theta, DensityVector p, Rng rng,
             ProposalConfig proposal = {})
      : graph_(&g),
        kind_(kind),
        theta_(std::move(theta)),
        p_(std::move(p)),
        stats_(g, theta_),
        rng_(std::move(rng)),
        proposal_(proposal),
        neighbor_count_(kind.blocks(), 0) {
    if (theta_.block_count != kind_.blocks()) throw Error("partition block count does not match the model");
    if (!satisfies_ordering(p_) || p_.size() != kind_.density_count())
      throw Error("initial densities violate the model constraint");
    refresh_logs();
  }

  // Random start: uniform labels (redrawn until no block is empty), blocks
  // relabeled by decreasing internal edge density, densities drawn from the
  // prior and then refined by a few Gibbs sweeps.
  static ChainState random_start(const Graph& g, ModelKind kind, Rng rng, ProposalConfig proposal = {}) {
    const std::size_t n = g.node_count();
    const std::size_t l = kind.blocks();
    if (n < l) throw Error("graph has fewer nodes than the model has blocks");
    Partition theta;
    theta.block_count = static_cast<BlockId>(l);
    theta.block.resize(n);
    do {
      for (auto& b : theta.block) b = static_cast<BlockId>(uniform_index(rng, l));
    } while (theta.has_empty_block());

    BlockStats initial(g, theta);
    std::vector<double> density(l);
    for (std::size_t r = 0; r < l; ++r) {
      auto cap = initial.capacity(r, r);
      density[r] = cap > 0 ? static_cast<double>(initial.edges(r, r)) / static_cast<double>(cap) : 0.0;
    }
    std::vector<BlockId> order(l);
    std::iota(order.begin(), order.end(), BlockId{0});
    std::stable_sort(order.begin(), order.end(), [&](BlockId a, BlockId b) { return density[a] > density[b]; });
    std::vector<BlockId> relabel(l);
    for (std::size_t r = 0; r < l; ++r) relabel[order[r]] = static_cast<BlockId>(r);
    for (auto& b : theta.block) b = relabel[b];

    DensityVector p = sample_prior_densities(kind.density_count(), rng);
    BlockStats stats(g, theta);
    for (int sweep = 0; sweep < 10; ++sweep) p = sample_densities(stats, p, kind, rng);
    return ChainState(g, kind, std::move(theta), std::move(p), std::move(rng), proposal);
  }

  const Graph& graph() const noexcept { return *graph_; }
  const ModelKind& kind() const noexcept { return kind_; }
  const Partition& partition() const noexcept { return theta_; }
  const DensityVector& densities() const noexcept { return p_; }
  const BlockStats& stats() const noexcept { return stats_; }
  const WorkCounters& work() const noexcept { return work_; }
  Rng& rng() noexcept { return rng_; }

  std::uint64_t moves_proposed() const noexcept { return moves_proposed_; }
  std::uint64_t moves_accepted() const noexcept { return moves_accepted_; }

  void resample_densities() {
    p_ = sample_densities(stats_, p_, kind_, rng_);
    work_.density_draws += p_.size();
    work_.pair_terms += kind_.blocks() * (kind_.blocks() + 1) / 2;
    refresh_logs();
  }

  // log P(A | theta, p) + log P(theta) + log P(p), in nats.
  double log_posterior() const {
    return log_likelihood(stats_, p_, kind_) + log_prior_theta(stats_.sizes()) + log_prior_p(p_, kind_);
  }

  // One Metropolis-Hastings label proposal for a random node. Returns true
  // when the proposal is accepted (a proposal of the current label counts
  // as an accepted no-op).
  bool label_step() {
    const auto i = static_cast<NodeId>(uniform_index(rng_, theta_.node_count()));
    return propose(i, draw_target(i));
  }

  // Metropolis-Hastings decision for moving node i to block `target`.
  bool propose(NodeId i, BlockId target) {
    ++work_.proposals;
    const BlockId from = theta_.block[i];
    if (target == from) return true;
    ++moves_proposed_;
    if (stats_.size(from) == 1) return false;  // would empty a block

    count_neighbors(i);
    const std::size_t l = kind_.blocks();
    double log_q_forward = 0, log_q_reverse = 0;
    const bool use_neighborhood = proposal_.kind == ProposalKind::neighborhood && graph_->degree(i) > 0;
    if (use_neighborhood) log_q_forward = std::log(neighborhood_probability(i, target));

    double before = touched_log_likelihood(from, target);
    apply_move(i, from, target);
    double after = touched_log_likelihood(from, target);
    if (use_neighborhood) log_q_reverse = std::log(neighborhood_probability(i, from));

    // prod_r n_r! changes by (n_target + 1) / n_from, with sizes taken
    // before the move.
    const double log_prior_ratio = std::log(static_cast<double>(stats_.size(target))) -
                                   std::log(static_cast<double>(stats_.size(from) + 1));
    const double log_a = after - before + log_prior_ratio + log_q_reverse - log_q_forward;
    work_.pair_terms += 4 * l;
    if (log_a >= 0 || std::log(uniform_open(rng_)) < log_a) {
      ++moves_accepted_;
      return true;
    }
    apply_move(i, target, from);
    return false;
  }

 private:
  void refresh_logs() {
    log_p_.resize(p_.size());
    log_1mp_.resize(p_.size());
    for (std::size_t k = 0; k < p_.size(); ++k) {
      log_p_[k] = std::log(p_[k]);
      log_1mp_[k] = std::log1p(-p_[k]);
    }
  }

  BlockId draw_target(NodeId i) {
    const std::size_t l = kind_.blocks();
    if (proposal_.kind == ProposalKind::uniform || graph_->degree(i) == 0)
      return static_cast<BlockId>(uniform_index(rng_, l));
    auto nb = graph_->neighbors(i);
    const BlockId s = theta_.block[nb[uniform_index(rng_, nb.size())]];
    const double e_s = static_cast<double>(stats_.degree_total(s));
    const double eps_total = proposal_.epsilon * static_cast<double>(l);
    if (uniform_open(rng_) * (e_s + eps_total) < eps_total) return static_cast<BlockId>(uniform_index(rng_, l));
    // r with probability e_sr / e_s.
    double target = uniform_open(rng_) * e_s;
    for (std::size_t r = 0; r < l; ++r) {
      target -= static_cast<double>(edge_ends(s, r));
      if (target < 0) return static_cast<BlockId>(r);
    }
    return static_cast<BlockId>(l - 1);
  }

  // Edge ends from block s landing in block r (within-block edges twice).
  std::int64_t edge_ends(std::size_t s, std::size_t r) const noexcept {
    return s == r ? 2 * stats_.edges(s, s) : stats_.edges(s, r);
  }

  // P(propose r | theta) = sum_t k_t/k_i * (e_tr + eps)/(e_t + eps l), with
  // neighbor counts k_t already in neighbor_count_.
  double neighborhood_probability(NodeId i, BlockId r) const {
    const double l = static_cast<double>(kind_.blocks());
    const double k = static_cast<double>(graph_->degree(i));
    double prob = 0;
    for (std::size_t t = 0; t < kind_.blocks(); ++t) {
      if (neighbor_count_[t] == 0) continue;
      prob += static_cast<double>(neighbor_count_[t]) / k *
              (static_cast<double>(edge_ends(t, r)) + proposal_.epsilon) /
              (static_cast<double>(stats_.degree_total(t)) + proposal_.epsilon * l);
    }
    return prob;
  }

  void count_neighbors(NodeId i) {
    std::fill(neighbor_count_.begin(), neighbor_count_.end(), 0);
    for (NodeId j : graph_->neighbors(i)) ++neighbor_count_[theta_.block[j]];
    work_.neighbor_visits += graph_->degree(i);
  }

  void apply_move(NodeId i, BlockId from, BlockId to) {
    for (std::size_t t = 0; t < kind_.blocks(); ++t) {
      auto k = static_cast<std::int64_t>(neighbor_count_[t]);
      if (k == 0) continue;
      stats_.add_edges(from, t, -k);
      stats_.add_edges(to, t, k);
    }
    stats_.move_node(from, to);
    theta_.block[i] = to;
  }

  double pair_term(std::size_t r, std::size_t s) const {
    const auto k = kind_.slot(std::min(r, s), std::max(r, s));
    const auto m = stats_.edges(r, s);
    const auto absent = stats_.capacity(r, s) - m;
    double v = 0;
    if (m > 0) v += static_cast<double>(m) * log_p_[k];
    if (absent > 0) v += static_cast<double>(absent) * log_1mp_[k];
    return v;
  }

  // Log-likelihood terms of every block pair touching blocks a or b.
  double touched_log_likelihood(BlockId a, BlockId b) const {
    double v = 0;
    for (std::size_t t = 0; t < kind_.blocks(); ++t) {
      v += pair_term(a, t);
      if (t != a) v += pair_term(b, t);
    }
    return v;
  }

  const Graph* graph_;
  ModelKind kind_;
  Partition theta_;
  DensityVector p_;
  BlockStats stats_;
  Rng rng_;
  ProposalConfig proposal_;
  std::vector<std::size_t> neighbor_count_;
  std::vector<double> log_p_, log_1mp_;
  WorkCounters work_;
  std::uint64_t moves_proposed_ = 0;
  std::uint64_t moves_accepted_ = 0;
};

// c_i = 1 - (1/l) sum_r r P(theta_i = r), blocks numbered from 1 at the core.
// Ranges over [0, 1 - 1/l].
inline std::vector<double> coreness(const std::vector<std::vector<double>>& marginals, std::size_t blocks) {
  std::vector<double> c;
  c.reserve(marginals.size());
  for (const auto& row : marginals) {
    double mean_block = 0;
    for (std::size_t r = 0; r < row.size(); ++r) mean_block += static_cast<double>(r + 1) * row[r];
    c.push_back(1.0 - mean_block / static_cast<double>(blocks));
  }
  return c;
}

struct GibbsOptions {
  std::size_t gibbs_iterations = 250;  // T_Gibbs
  std::size_t mcmc_steps = 0;          // T_MCMC; 0 means 10 N
  ProposalConfig proposal{};
  bool keep_samples = true;
};

struct ChainResult {
  ModelKind kind = ModelKind::hub_and_spoke();
  std::uint64_t seed = 0;
  std::vector<Partition> samples;                // retained second half of the chain
  std::vector<std::vector<double>> marginals;    // P(theta_i = r | A), rows sum to 1
  Partition map_partition;                       // per-node argmax, ties to the core
  std::vector<double> coreness;
  Partition best_sample;                         // retained sample of highest log posterior
  double best_log_posterior = -std::numeric_limits<double>::infinity();
  DensityVector final_densities;
  double acceptance_rate = 0;                    // over proposals that change a label
  std::vector<double> log_posterior_trace;       // one entry per Gibbs iteration
  WorkCounters work;

  // Partition used for description lengths: the MAP partition when it keeps
  // every block occupied, otherwise the best retained sample.
  const Partition& fitted_partition() const {
    return map_partition.has_empty_block() ? best_sample : map_partition;
  }
};

inline ChainResult run_gibbs(const Graph& g, const ModelKind& kind, const GibbsOptions& options,
                             std::uint64_t seed) {
  if (options.gibbs_iterations < 2) throw Error("need at least two Gibbs iterations");
  if (g.node_count() < kind.blocks())
    throw Error("graph has " + std::to_string(g.node_count()) + " nodes, fewer than " +
                std::to_string(kind.blocks()) + " blocks");
  const std::size_t n = g.node_count();
  const std::size_t l = kind.blocks();
  const std::size_t steps = options.mcmc_steps > 0 ? options.mcmc_steps : 10 * n;

  ChainState state = ChainState::random_start(g, kind, make_rng(seed), options.proposal);
  ChainResult result;
  result.kind = kind;
  result.seed = seed;
  result.marginals.assign(n, std::vector<double>(l, 0.0));

  const std::size_t burn_in = options.gibbs_iterations / 2;
  std::size_t retained = 0;
  for (std::size_t t = 1; t <= options.gibbs_iterations; ++t) {
    for (std::size_t tau = 0; tau < steps; ++tau) state.label_step();
    state.resample_densities();
    const double lp = state.log_posterior();
    result.log_posterior_trace.push_back(lp);
    if (t <= burn_in) continue;
    ++retained;
    const auto& theta = state.partition();
    for (std::size_t i = 0; i < n; ++i) result.marginals[i][theta.block[i]] += 1.0;
    if (lp > result.best_log_posterior) {
      result.best_log_posterior = lp;
      result.best_sample = theta;
    }
    if (options.keep_samples) result.samples.push_back(theta);
  }

  result.map_partition.block_count = static_cast<BlockId>(l);
  result.map_partition.block.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = result.marginals[i];
    for (auto& x : row) x /= static_cast<double>(retained);
    result.map_partition.block[i] = static_cast<BlockId>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  result.coreness = coreness(result.marginals, l);
  result.final_densities = state.densities();
  result.acceptance_rate = state.moves_proposed() > 0
                               ? static_cast<double>(state.moves_accepted()) / static_cast<double>(state.moves_proposed())
                               : 1.0;
  result.work = state.work();
  return result;
}

}  // namespace cpsbm
