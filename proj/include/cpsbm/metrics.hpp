#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/partition.hpp"

namespace cpsbm {

// Joint block counts of two partitions over the same nodes.
struct Contingency {
  std::vector<std::vector<std::size_t>> joint;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::size_t total = 0;

  Contingency(std::span<const BlockId> a, std::span<const BlockId> b) {
    if (a.size() != b.size()) throw Error("partitions cover different node sets");
    // Labels are compacted so arbitrary label values are accepted.
    std::map<BlockId, std::size_t> ra, rb;
    for (BlockId x : a) ra.try_emplace(x, ra.size());
    for (BlockId x : b) rb.try_emplace(x, rb.size());
    joint.assign(ra.size(), std::vector<std::size_t>(rb.size(), 0));
    rows.assign(ra.size(), 0);
    cols.assign(rb.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::size_t u = ra[a[i]], v = rb[b[i]];
      ++joint[u][v];
      ++rows[u];
      ++cols[v];
    }
    total = a.size();
  }
};

namespace detail {

inline double entropy_bits(const std::vector<std::size_t>& counts, std::size_t total) {
  double h = 0;
  for (auto c : counts)
    if (c > 0) {
      double q = static_cast<double>(c) / static_cast<double>(total);
      h -= q * std::log2(q);
    }
  return h;
}

// Terms are summed in sorted order so that swapping the two partitions gives
// a bit-identical result.
inline double mutual_information_bits(const Contingency& t) {
  const double n = static_cast<double>(t.total);
  std::vector<double> terms;
  for (std::size_t u = 0; u < t.rows.size(); ++u)
    for (std::size_t v = 0; v < t.cols.size(); ++v) {
      auto c = t.joint[u][v];
      if (c == 0) continue;
      double nuv = static_cast<double>(c);
      terms.push_back(nuv / n *
                      std::log2(n * nuv / (static_cast<double>(t.rows[u]) * static_cast<double>(t.cols[v]))));
    }
  std::sort(terms.begin(), terms.end());
  double mi = 0;
  for (double x : terms) mi += x;
  return std::max(mi, 0.0);
}

// True when both partitions induce the same grouping of nodes.
inline bool same_grouping(const Contingency& t) {
  if (t.rows.size() != t.cols.size()) return false;
  for (const auto& row : t.joint)
    if (std::count_if(row.begin(), row.end(), [](std::size_t c) { return c > 0; }) != 1) return false;
  return true;
}

// Expected mutual information under the permutation (hypergeometric) model.
inline double expected_mutual_information_bits(const Contingency& t) {
  const auto N = static_cast<double>(t.total);
  const double lgN = std::lgamma(N + 1);
  double emi = 0;
  for (auto a : t.rows)
    for (auto b : t.cols) {
      const double ad = static_cast<double>(a), bd = static_cast<double>(b);
      const std::size_t lo = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(a + b) -
                                                             static_cast<std::ptrdiff_t>(t.total));
      const std::size_t hi = std::min(a, b);
      const double fixed = std::lgamma(ad + 1) + std::lgamma(bd + 1) + std::lgamma(N - ad + 1) +
                           std::lgamma(N - bd + 1) - lgN;
      for (std::size_t k = lo; k <= hi; ++k) {
        const double kd = static_cast<double>(k);
        const double log_p = fixed - std::lgamma(kd + 1) - std::lgamma(ad - kd + 1) -
                             std::lgamma(bd - kd + 1) - std::lgamma(N - ad - bd + kd + 1);
        emi += kd / N * std::log2(N * kd / (ad * bd)) * std::exp(log_p);
      }
    }
  return emi;
}

}  // namespace detail

inline double variation_of_information(std::span<const BlockId> a, std::span<const BlockId> b) {
  Contingency t(a, b);
  if (detail::same_grouping(t)) return 0.0;
  double vi = detail::entropy_bits(t.rows, t.total) + detail::entropy_bits(t.cols, t.total) -
              2 * detail::mutual_information_bits(t);
  return std::max(vi, 0.0);
}

inline double variation_of_information(const Partition& a, const Partition& b) {
  return variation_of_information(std::span<const BlockId>(a.block), std::span<const BlockId>(b.block));
}

// VI as a fraction of its maximum log2(N).
inline double normalized_vi(const Partition& a, const Partition& b) {
  if (a.node_count() < 2) throw Error("normalized VI needs at least two nodes");
  return variation_of_information(a, b) / std::log2(static_cast<double>(a.node_count()));
}

// Adjusted mutual information, arithmetic-mean normalization. When the
// denominator vanishes the result is 1 for identical groupings, else 0.
inline double adjusted_mutual_information(const Partition& a, const Partition& b) {
  Contingency t(a.block, b.block);
  const double ha = detail::entropy_bits(t.rows, t.total);
  const double hb = detail::entropy_bits(t.cols, t.total);
  const double mi = detail::mutual_information_bits(t);
  const double emi = detail::expected_mutual_information_bits(t);
  const double denom = 0.5 * (ha + hb) - emi;
  if (std::abs(denom) < 1e-12) return detail::same_grouping(t) ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

}  // namespace cpsbm
