#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "expnet/types.hpp"

namespace expnet {

/// Directed edge i -> j, 0-based.
struct Edge {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

/// Directed network on n nodes storing only present edges.
///
/// Absent pairs are the (0,0) dyad state. Adjacency is kept in two CSR
/// indexes (out- and in-neighbours, each sorted) so that the full dyad row
/// of a node can be materialised in O(n + degree).
class Network {
 public:
  Network() = default;

  // Throws std::invalid_argument on self-loops, duplicates, or indices >= n.
  Network(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }

  bool has_edge(std::size_t i, std::size_t j) const;
  DyadOutcome dyad(std::size_t i, std::size_t j) const {
    return {has_edge(i, j), has_edge(j, i)};
  }

  std::span<const std::uint32_t> out_neighbors(std::size_t i) const {
    return {out_targets_.data() + out_offsets_[i], out_targets_.data() + out_offsets_[i + 1]};
  }
  std::span<const std::uint32_t> in_neighbors(std::size_t i) const {
    return {in_sources_.data() + in_offsets_[i], in_sources_.data() + in_offsets_[i + 1]};
  }

  /// Writes the state code of dyad (i, j) for every j into `row`
  /// (size n); row[i] is set to 0 and must be skipped by callers.
  void fill_dyad_row(std::size_t i, std::span<std::uint8_t> row) const;

  friend bool operator==(const Network& a, const Network& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;  // sorted by (from, to)
  std::vector<std::size_t> out_offsets_{0};
  std::vector<std::uint32_t> out_targets_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<std::uint32_t> in_sources_;
};

}  // namespace expnet
