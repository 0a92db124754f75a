#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpsbm/error.hpp"
#include "cpsbm/graph.hpp"

namespace cpsbm {

using BlockId = std::uint32_t;

// Node -> block assignment. Blocks are 0-based internally with block 0 the
// innermost (core) block; files and reports use 1-based indices.
struct Partition {
  std::vector<BlockId> block;
  BlockId block_count = 0;

  std::size_t node_count() const noexcept { return block.size(); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> n(block_count, 0);
    for (BlockId b : block) ++n[b];
    return n;
  }

  bool has_empty_block() const {
    auto n = sizes();
    return std::find(n.begin(), n.end(), 0) != n.end();
  }

  bool operator==(const Partition&) const = default;
};

inline void validate(const Partition& p, std::size_t node_count) {
  if (p.block.size() != node_count)
    throw Error("partition covers " + std::to_string(p.block.size()) + " nodes, graph has " +
                std::to_string(node_count));
  if (p.block_count == 0) throw Error("partition has no blocks");
  for (BlockId b : p.block)
    if (b >= p.block_count) throw Error("block index out of range");
}

// Relabels blocks to 0..k-1 in order of first appearance.
inline Partition compact(const Partition& p) {
  std::unordered_map<BlockId, BlockId> map;
  Partition out;
  out.block.reserve(p.block.size());
  for (BlockId b : p.block) {
    auto [it, inserted] = map.try_emplace(b, static_cast<BlockId>(map.size()));
    out.block.push_back(it->second);
  }
  out.block_count = static_cast<BlockId>(map.size());
  return out;
}

inline void write_partition_csv(std::ostream& out, const Graph& g, const Partition& p) {
  out << "label,block\n";
  for (NodeId i = 0; i < p.node_count(); ++i) out << g.label(i) << ',' << p.block[i] + 1 << '\n';
}

// Rows of a `label,block` CSV with 1-based blocks (header optional).
inline std::vector<std::pair<std::string, BlockId>> read_labeled_blocks(std::istream& in) {
  std::vector<std::pair<std::string, BlockId>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected label,block");
    std::string label = line.substr(0, comma);
    std::string field = line.substr(comma + 1);
    if (auto next = field.find(','); next != std::string::npos) field.resize(next);
    auto value = detail::parse_integer(field);
    if (!value) {
      if (line_no == 1) continue;  // header
      throw ParseError(line_no, "block index is not an integer");
    }
    if (*value < 1) throw ParseError(line_no, "block indices start at 1");
    rows.emplace_back(std::move(label), static_cast<BlockId>(*value - 1));
  }
  return rows;
}

// Aligns a labeled partition file with the node ids of `g`.
inline Partition read_partition_csv(std::istream& in, const Graph& g) {
  std::unordered_map<std::string, NodeId> ids;
  for (NodeId i = 0; i < g.node_count(); ++i) ids.emplace(g.label(i), i);
  Partition p;
  p.block.assign(g.node_count(), 0);
  std::vector<bool> seen(g.node_count(), false);
  for (auto& [label, b] : read_labeled_blocks(in)) {
    auto it = ids.find(label);
    if (it == ids.end()) throw Error("partition names unknown node '" + label + "'");
    if (seen[it->second]) throw Error("node '" + label + "' assigned twice");
    seen[it->second] = true;
    p.block[it->second] = b;
    p.block_count = std::max(p.block_count, b + 1);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw Error("partition does not cover every node");
  return p;
}

}  // namespace cpsbm
