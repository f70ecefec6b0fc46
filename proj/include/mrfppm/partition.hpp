#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mrfppm {

/// A set partition of {0..N-1} stored as a canonical assignment vector: cluster
/// ids are 0..K-1, numbered in order of first appearance, so two partitions are
/// equal exactly when their assignment vectors are equal.
class Partition {
 public:
  Partition() = default;

  /// Canonicalizes arbitrary non-negative labels. Throws ValidationError on a
  /// negative label.
  explicit Partition(std::span<const int> labels);
  explicit Partition(const std::vector<int>& labels) : Partition(std::span<const int>(labels)) {}

  static Partition singletons(std::size_t n);
  static Partition one_block(std::size_t n);

  std::size_t size() const { return assignment_.size(); }
  std::size_t num_clusters() const { return members_.size(); }
  int cluster_of(int i) const { return assignment_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& assignment() const { return assignment_; }
  const std::vector<int>& members(std::size_t cluster) const { return members_[cluster]; }
  const std::vector<std::vector<int>>& clusters() const { return members_; }

  bool same_cluster(int i, int j) const { return cluster_of(i) == cluster_of(j); }

  friend bool operator==(const Partition& a, const Partition& b) { return a.assignment_ == b.assignment_; }
  friend auto operator<=>(const Partition& a, const Partition& b) { return a.assignment_ <=> b.assignment_; }

 private:
  std::vector<int> assignment_;
  std::vector<std::vector<int>> members_;
};

/// Calls `visit` once for every set partition of {0..n-1}, in restricted-growth-string order.
void for_each_partition(std::size_t n, const std::function<void(const Partition&)>& visit);

/// Bell number B(n) for n ≤ 25.
unsigned long long bell_number(std::size_t n);

}  // namespace mrfppm

template <>
struct std::hash<mrfppm::Partition> {
  std::size_t operator()(const mrfppm::Partition& p) const noexcept;
};
