#include "mrfppm/partition.hpp"

#include <string>
#include <unordered_map>

#include "mrfppm/errors.hpp"

namespace mrfppm {

Partition::Partition(std::span<const int> labels) {
  assignment_.resize(labels.size());
  std::unordered_map<int, int> canon;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw ValidationError("partition: negative cluster label at position " + std::to_string(i));
    auto [it, inserted] = canon.try_emplace(labels[i], static_cast<int>(members_.size()));
    if (inserted) members_.emplace_back();
    assignment_[i] = it->second;
    members_[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
  }
}

Partition Partition::singletons(std::size_t n) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i);
  return Partition(labels);
}

Partition Partition::one_block(std::size_t n) { return Partition(std::vector<int>(n, 0)); }

void for_each_partition(std::size_t n, const std::function<void(const Partition&)>& visit) {
  if (n == 0) {
    visit(Partition());
    return;
  }
  // Restricted growth strings: a[0] = 0, a[i] ≤ 1 + max(a[0..i-1]).
  std::vector<int> a(n, 0);
  std::vector<int> prefix_max(n, 0);
  while (true) {
    visit(Partition(a));
    std::size_t i = n - 1;
    while (i > 0 && a[i] > prefix_max[i - 1]) --i;
    if (i == 0) return;
    ++a[i];
    prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
}

unsigned long long bell_number(std::size_t n) {
  if (n > 25) throw DomainError("bell_number: n > 25 overflows");
  // Bell triangle.
  std::vector<unsigned long long> row{1};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<unsigned long long> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

}  // namespace mrfppm

std::size_t std::hash<mrfppm::Partition>::operator()(const mrfppm::Partition& p) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (int v : p.assignment()) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}
