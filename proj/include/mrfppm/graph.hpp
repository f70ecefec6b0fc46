#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mrfppm {

/// Undirected edge with a < b.
struct Edge {
  int a;
  int b;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Known spatial adjacency over N locations, indexed densely 0..N-1.
///
/// Keeps both the sorted edge list and per-vertex sorted neighbor lists, plus a
/// dense adjacency bitmap for constant-time pair checks. Immutable once built.
class SpatialGraph {
 public:
  SpatialGraph() = default;

  /// Builds from index pairs. Pairs may come in either orientation; duplicates
  /// are merged. Throws ValidationError on out-of-range endpoints or self-loops.
  /// `labels` must be empty or hold exactly `n` entries.
  SpatialGraph(std::size_t n, std::span<const std::pair<int, int>> pairs,
               std::vector<std::string> labels = {});

  std::size_t size() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const int> neighbors(int i) const;
  bool adjacent(int a, int b) const;

  /// Location names; defaults to the decimal index when none were given.
  const std::vector<std::string>& labels() const { return labels_; }
  /// Index of a label, or -1.
  int index_of(std::string_view label) const;

  std::vector<int> isolated() const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<int> adjacency_;
  std::vector<bool> bitmap_;
  std::vector<std::string> labels_;
};

/// Parses the adjacency text format:
///   `# comment` lines and blank lines are ignored,
///   an optional first entry `vertices: id1,id2,...` fixes the index order and
///   may declare isolated vertices,
///   every other line holds `idA idB`.
/// Identifiers are mapped to indices in first-appearance order. Emits a warning
/// naming isolated locations.
SpatialGraph parse_adjacency(std::istream& in);
SpatialGraph load_adjacency(const std::filesystem::path& path);

/// Writes `g` in the format read by parse_adjacency (with a vertices line).
void write_adjacency(std::ostream& out, const SpatialGraph& g);

/// Number of edges with both endpoints in `cluster` (E_c).
std::size_t within_cluster_edges(const SpatialGraph& g, std::span<const int> cluster);

/// |neighbors(i) ∩ cluster|; i itself never counts.
std::size_t neighbors_in(const SpatialGraph& g, int i, std::span<const int> cluster);

}  // namespace mrfppm
