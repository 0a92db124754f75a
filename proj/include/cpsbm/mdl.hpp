#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/model.hpp"
#include "cpsbm/parallel.hpp"
#include "cpsbm/partition.hpp"
#include "cpsbm/rng.hpp"

namespace cpsbm {

enum class Estimator { naive, importance };

inline std::string to_string(Estimator e) { return e == Estimator::naive ? "naive" : "importance"; }

// Importance sampling pays off once the layered model has many slots.
inline Estimator default_estimator(const ModelKind& kind) {
  return kind.density_count() >= 4 ? Estimator::importance : Estimator::naive;
}

inline std::uint64_t default_samples(const ModelKind& kind) {
  return kind.density_count() <= 3 ? 10'000'000ULL : 100'000'000ULL;
}

// Log-sum-exp accumulator over one shard of Monte-Carlo terms.
struct ShardSum {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0;      // sum exp(term - max)
  double sum_sq = 0;   // sum exp(2 (term - max))
  std::uint64_t count = 0;

  void add(double term) {
    ++count;
    if (term <= max) {
      double w = std::exp(term - max);
      sum += w;
      sum_sq += w * w;
      return;
    }
    double scale = std::exp(max - term);
    sum = sum * scale + 1.0;
    sum_sq = sum_sq * scale * scale + 1.0;
    max = term;
  }

  void merge(const ShardSum& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    if (o.max > max) {
      double scale = std::exp(max - o.max);
      sum = sum * scale + o.sum;
      sum_sq = sum_sq * scale * scale + o.sum_sq;
      max = o.max;
    } else {
      double scale = std::exp(o.max - max);
      sum += o.sum * scale;
      sum_sq += o.sum_sq * scale * scale;
    }
    count += o.count;
  }

  double log_sum() const { return max + std::log(sum); }
};

struct DLEstimate {
  double dl_bits = 0;          // description length Sigma in bits
  double dl_bits_per_edge = 0;
  std::uint64_t samples = 0;
  Estimator estimator = Estimator::naive;
  double log_term_max = 0;     // L_max (nats), weights folded in for importance sampling
  double log_prior_theta = 0;  // nats
  double ess = 0;              // (sum w)^2 / sum w^2
  bool low_ess = false;        // ess < 100
  std::uint64_t seed = 0;
  std::vector<ShardSum> shards;  // per-shard sums in shard order, bootstrap units
};

namespace detail {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr std::size_t kShards = 64;

inline double dl_bits_from(double log_sum, std::uint64_t count, double log_prior_theta) {
  return -(log_sum - std::log(static_cast<double>(count)) + log_prior_theta) / kLn2;
}

}  // namespace detail

// Monte-Carlo estimate of Sigma = -log P(A, theta | M) with p integrated out.
//
// naive:      p ~ P(p), term = log P(A | theta, p)
// importance: p_1 ~ U(0,1), p_{r+1} ~ U(0, p_r);
//             term = log P(A | theta, p) + log P(p) - log Q(p)
// Sigma = -[L_max - log n + log P(theta) + log sum_i exp(term_i - L_max)].
//
// Samples are split over a fixed number of shards with keyed substreams and
// merged in shard order, so the result does not depend on `threads`.
inline DLEstimate estimate_dl(const Graph& g, const Partition& theta, const ModelKind& kind,
                              std::uint64_t n_samples, Estimator estimator, std::uint64_t seed,
                              std::size_t threads = 1) {
  if (n_samples < 1) throw Error("need at least one Monte-Carlo sample");
  if (theta.block_count != kind.blocks()) throw Error("partition block count does not match the model");
  BlockStats stats(g, theta);
  const auto counts = stats.slot_counts(kind);
  const std::size_t k = kind.density_count();
  const double log_prior_p = std::lgamma(static_cast<double>(k) + 1);

  const std::size_t shard_count = static_cast<std::size_t>(std::min<std::uint64_t>(detail::kShards, n_samples));
  std::vector<ShardSum> shards(shard_count);
  parallel_for(shard_count, threads, [&](std::size_t shard) {
    const std::uint64_t base = n_samples / shard_count;
    const std::uint64_t quota = base + (shard < n_samples % shard_count ? 1 : 0);
    Rng rng = make_rng(seed, shard);
    std::vector<double> p(k), spacing(k + 1);
    ShardSum acc;
    for (std::uint64_t i = 0; i < quota; ++i) {
      double term = 0;
      if (estimator == Estimator::naive) {
        double total = 0;
        for (auto& x : spacing) total += (x = standard_exponential(rng));
        // p_s = 1 - sum_{r<=s} pi_r, accumulated from the small end.
        double tail = spacing[k];
        for (std::size_t s = k; s-- > 0;) {
          p[s] = tail / total;
          tail += spacing[s];
        }
      } else {
        double upper = 1.0;
        double log_q = 0;
        for (std::size_t s = 0; s < k; ++s) {
          p[s] = upper * uniform_open(rng);
          if (s + 1 < k) log_q -= std::log(p[s]);
          upper = p[s];
        }
        term += log_prior_p - log_q;
      }
      for (std::size_t s = 0; s < k; ++s) {
        if (counts.present[s] > 0) term += static_cast<double>(counts.present[s]) * std::log(p[s]);
        if (counts.absent[s] > 0) term += static_cast<double>(counts.absent[s]) * std::log1p(-p[s]);
      }
      acc.add(term);
    }
    shards[shard] = acc;
  });

  ShardSum total;
  for (const auto& s : shards) total.merge(s);

  DLEstimate out;
  out.estimator = estimator;
  out.samples = n_samples;
  out.seed = seed;
  out.log_prior_theta = log_prior_theta(stats.sizes());
  out.log_term_max = total.max;
  out.dl_bits = detail::dl_bits_from(total.log_sum(), total.count, out.log_prior_theta);
  out.dl_bits_per_edge = g.edge_count() > 0 ? out.dl_bits / static_cast<double>(g.edge_count()) : 0.0;
  out.ess = total.sum * total.sum / total.sum_sq;
  out.low_ess = out.ess < 100;
  out.shards = std::move(shards);
  return out;
}

inline DLEstimate estimate_dl_naive(const Graph& g, const Partition& theta, const ModelKind& kind,
                                    std::uint64_t n_samples, std::uint64_t seed, std::size_t threads = 1) {
  return estimate_dl(g, theta, kind, n_samples, Estimator::naive, seed, threads);
}

inline DLEstimate estimate_dl_importance(const Graph& g, const Partition& theta, const ModelKind& kind,
                                         std::uint64_t n_samples, std::uint64_t seed, std::size_t threads = 1) {
  return estimate_dl(g, theta, kind, n_samples, Estimator::importance, seed, threads);
}

enum class Verdict { hub_and_spoke, layered, indeterminate };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::hub_and_spoke: return "hub-and-spoke";
    case Verdict::layered: return "layered";
    default: return "indeterminate";
  }
}

struct ModelComparison {
  double hub_spoke_bits = 0;
  double layered_bits = 0;
  double difference_bits = 0;  // Sigma_H - Sigma_L; negative favors hub-and-spoke
  double ci_low = 0;           // 95% bootstrap interval of the difference
  double ci_high = 0;
  Verdict verdict = Verdict::indeterminate;
};

// Percentile bootstrap of a description length over its shards.
inline std::vector<double> bootstrap_dl(const DLEstimate& e, std::size_t replicates, Rng& rng) {
  std::vector<double> out;
  out.reserve(replicates);
  const std::size_t m = e.shards.size();
  for (std::size_t b = 0; b < replicates; ++b) {
    ShardSum acc;
    for (std::size_t j = 0; j < m; ++j) acc.merge(e.shards[uniform_index(rng, m)]);
    out.push_back(detail::dl_bits_from(acc.log_sum(), acc.count, e.log_prior_theta));
  }
  return out;
}

// Equal model priors: the sign of Sigma_H - Sigma_L decides.
inline ModelComparison compare_models(const DLEstimate& hub_spoke, const DLEstimate& layered,
                                      std::size_t bootstrap_replicates = 1000, std::uint64_t seed = 0) {
  ModelComparison c;
  c.hub_spoke_bits = hub_spoke.dl_bits;
  c.layered_bits = layered.dl_bits;
  c.difference_bits = hub_spoke.dl_bits - layered.dl_bits;
  c.verdict = c.difference_bits < 0   ? Verdict::hub_and_spoke
              : c.difference_bits > 0 ? Verdict::layered
                                      : Verdict::indeterminate;
  c.ci_low = c.ci_high = c.difference_bits;
  if (bootstrap_replicates > 0 && !hub_spoke.shards.empty() && !layered.shards.empty()) {
    Rng rng = make_rng(seed, 0xb007);
    auto h = bootstrap_dl(hub_spoke, bootstrap_replicates, rng);
    auto l = bootstrap_dl(layered, bootstrap_replicates, rng);
    std::vector<double> diff(bootstrap_replicates);
    for (std::size_t b = 0; b < bootstrap_replicates; ++b) diff[b] = h[b] - l[b];
    std::sort(diff.begin(), diff.end());
    auto at = [&](double q) {
      return diff[static_cast<std::size_t>(q * static_cast<double>(bootstrap_replicates - 1))];
    };
    c.ci_low = std::min(at(0.025), c.difference_bits);
    c.ci_high = std::max(at(0.975), c.difference_bits);
  }
  return c;
}

struct LayerSelection {
  std::size_t best_layers = 0;
  std::map<std::size_t, DLEstimate> table;
};

// Description length per candidate layer count; ties go to fewer layers.
inline LayerSelection select_layers(const Graph& g, const std::map<std::size_t, Partition>& fitted,
                                    std::optional<std::uint64_t> n_samples, std::uint64_t seed,
                                    std::optional<Estimator> estimator = std::nullopt, std::size_t threads = 1) {
  if (fitted.empty()) throw Error("no candidate layer counts");
  LayerSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [layers, theta] : fitted) {
    auto kind = ModelKind::layered(layers);
    auto e = estimate_dl(g, theta, kind, n_samples.value_or(default_samples(kind)),
                         estimator.value_or(default_estimator(kind)), substream_seed(seed, layers), threads);
    if (e.dl_bits < best) {
      best = e.dl_bits;
      out.best_layers = layers;
    }
    out.table.emplace(layers, std::move(e));
  }
  return out;
}

}  // namespace cpsbm
