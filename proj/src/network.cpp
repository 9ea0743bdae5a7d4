#include "expnet/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace expnet {

Network::Network(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ == 0) throw std::invalid_argument("network must have at least one node");
  for (const Edge& e : edges_) {
    if (e.from >= n_ || e.to >= n_) {
      throw std::invalid_argument("edge (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                                  ") out of range for n = " + std::to_string(n_));
    }
    if (e.from == e.to) {
      throw std::invalid_argument("self-loop at node " + std::to_string(e.from));
    }
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    throw std::invalid_argument("duplicate edge (" + std::to_string(dup->from) + ", " +
                                std::to_string(dup->to) + ")");
  }

  out_offsets_.assign(n_ + 1, 0);
  in_offsets_.assign(n_ + 1, 0);
  for (const Edge& e : edges_) {
    ++out_offsets_[e.from + 1];
    ++in_offsets_[e.to + 1];
  }
  for (std::size_t i = 0; i < n_; ++i) {
    out_offsets_[i + 1] += out_offsets_[i];
    in_offsets_[i + 1] += in_offsets_[i];
  }
  out_targets_.resize(edges_.size());
  in_sources_.resize(edges_.size());
  std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
  // edges_ is sorted by (from, to), so out-lists come out sorted directly and
  // in-lists are filled in increasing source order.
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    out_targets_[k] = edges_[k].to;
    in_sources_[in_fill[edges_[k].to]++] = edges_[k].from;
  }
}

bool Network::has_edge(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) return false;
  auto out = out_neighbors(i);
  return std::binary_search(out.begin(), out.end(), static_cast<std::uint32_t>(j));
}

void Network::fill_dyad_row(std::size_t i, std::span<std::uint8_t> row) const {
  std::fill(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n_), std::uint8_t{0});
  for (std::uint32_t j : out_neighbors(i)) row[j] |= 1;
  for (std::uint32_t j : in_neighbors(i)) row[j] |= 2;
}

}  // namespace expnet
