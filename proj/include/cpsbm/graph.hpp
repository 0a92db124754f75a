#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpsbm/error.hpp"

namespace cpsbm {

using NodeId = std::uint32_t;

struct RawEdge {
  std::string source;
  std::string target;
  std::optional<double> weight;
};

using RawEdgeList = std::vector<RawEdge>;

enum class EdgeListFormat { plain, konect_tsv };

// Immutable simple undirected graph with dense node ids 0..N-1.
// Neighbor lists are sorted; every edge is stored once in `edges()` with
// first < second.
class Graph {
 public:
  Graph() = default;

  // Throws Error on self-loops, duplicate edges or out-of-range endpoints.
  Graph(std::size_t node_count, std::vector<std::pair<NodeId, NodeId>> edges,
        std::vector<std::string> labels = {})
      : labels_(std::move(labels)) {
    if (labels_.empty()) {
      labels_.reserve(node_count);
      for (std::size_t i = 0; i < node_count; ++i) labels_.push_back(std::to_string(i));
    }
    if (labels_.size() != node_count) throw Error("label count does not match node count");

    for (auto& [a, b] : edges) {
      if (a >= node_count || b >= node_count) throw Error("edge endpoint out of range");
      if (a == b) throw Error("self-loop at node " + std::to_string(a));
      if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
      throw Error("duplicate edge");
    edges_ = std::move(edges);

    offsets_.assign(node_count + 1, 0);
    for (auto [a, b] : edges_) {
      ++offsets_[a + 1];
      ++offsets_[b + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    neighbors_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (auto [a, b] : edges_) {
      neighbors_[fill[a]++] = b;
      neighbors_[fill[b]++] = a;
    }
    for (std::size_t i = 0; i < node_count; ++i)
      std::sort(neighbors_.begin() + offsets_[i], neighbors_.begin() + offsets_[i + 1]);
  }

  std::size_t node_count() const noexcept { return labels_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
  }

  std::size_t degree(NodeId i) const noexcept { return offsets_[i + 1] - offsets_[i]; }

  bool has_edge(NodeId a, NodeId b) const {
    auto nb = neighbors(a);
    return std::binary_search(nb.begin(), nb.end(), b);
  }

  const std::vector<std::pair<NodeId, NodeId>>& edges() const noexcept { return edges_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(NodeId i) const { return labels_[i]; }

  bool operator==(const Graph& other) const {
    return labels_ == other.labels_ && edges_ == other.edges_;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

// Checked degree lookup.
inline std::size_t degree(const Graph& g, std::size_t i) {
  if (i >= g.node_count())
    throw Error("node id " + std::to_string(i) + " out of range (N=" +
                std::to_string(g.node_count()) + ")");
  return g.degree(static_cast<NodeId>(i));
}

namespace detail {

inline std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// Ordering on node labels: integers numerically and before non-integers,
// everything else lexicographically.
inline bool label_less(std::string_view a, std::string_view b) {
  auto ia = detail::parse_integer(a);
  auto ib = detail::parse_integer(b);
  if (ia && ib) return *ia < *ib;
  if (ia || ib) return ia.has_value();
  return a < b;
}

inline RawEdgeList load_edge_list(std::istream& in,
                                  EdgeListFormat format = EdgeListFormat::plain) {
  // Both formats share a tokenizer; konect-tsv only adds `%` metadata lines,
  // which are comments here as well.
  (void)format;
  RawEdgeList out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string first;
    if (!(tokens >> first)) continue;
    if (first.front() == '#' || first.front() == '%') continue;
    RawEdge edge;
    edge.source = std::move(first);
    if (!(tokens >> edge.target)) throw ParseError(line_no, "expected at least two tokens");
    std::string weight;
    if (tokens >> weight) {
      double w = 0;
      auto [ptr, ec] = std::from_chars(weight.data(), weight.data() + weight.size(), w);
      if (ec == std::errc{} && ptr == weight.data() + weight.size()) edge.weight = w;
    }
    out.push_back(std::move(edge));
  }
  return out;
}

// Drops weights, loops and multiedges, symmetrizes, keeps the largest
// connected component and relabels it densely in label order.
inline Graph preprocess(const RawEdgeList& raw) {
  if (raw.empty()) throw Error("edge list is empty");

  std::unordered_map<std::string, NodeId> index;
  std::vector<std::string> names;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = index.try_emplace(s, static_cast<NodeId>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };
  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(raw.size());
  for (const auto& e : raw) {
    NodeId a = intern(e.source);
    NodeId b = intern(e.target);
    if (a == b) continue;
    pairs.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  const std::size_t n = names.size();
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), NodeId{0});
  auto find = [&](NodeId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : pairs) parent[find(a)] = find(b);

  std::vector<std::size_t> size(n, 0);
  std::vector<NodeId> smallest(n);
  for (NodeId v = 0; v < n; ++v) {
    NodeId root = find(v);
    if (size[root] == 0 || label_less(names[v], names[smallest[root]])) smallest[root] = v;
    ++size[root];
  }
  std::optional<NodeId> best;
  for (NodeId v = 0; v < n; ++v) {
    if (find(v) != v) continue;
    if (!best || size[v] > size[*best] ||
        (size[v] == size[*best] && label_less(names[smallest[v]], names[smallest[*best]])))
      best = v;
  }
  if (!best || size[*best] < 2) throw Error("graph is empty after preprocessing");

  std::vector<NodeId> kept;
  for (NodeId v = 0; v < n; ++v)
    if (find(v) == *best) kept.push_back(v);
  std::sort(kept.begin(), kept.end(),
            [&](NodeId a, NodeId b) { return label_less(names[a], names[b]); });
  std::vector<NodeId> dense(n, static_cast<NodeId>(-1));
  std::vector<std::string> labels;
  labels.reserve(kept.size());
  for (NodeId v : kept) {
    dense[v] = static_cast<NodeId>(labels.size());
    labels.push_back(names[v]);
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (auto [a, b] : pairs)
    if (dense[a] != static_cast<NodeId>(-1)) edges.emplace_back(dense[a], dense[b]);
  const std::size_t kept_count = labels.size();
  return Graph(kept_count, std::move(edges), std::move(labels));
}

inline RawEdgeList to_raw(const Graph& g) {
  RawEdgeList out;
  out.reserve(g.edge_count());
  for (auto [a, b] : g.edges()) out.push_back({g.label(a), g.label(b), std::nullopt});
  return out;
}

inline void write_label_map(std::ostream& out, const Graph& g) {
  out << "id,label\n";
  for (NodeId i = 0; i < g.node_count(); ++i) out << i << ',' << g.label(i) << '\n';
}

}  // namespace cpsbm
