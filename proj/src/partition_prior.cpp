#include "mrfppm/partition_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mrfppm/errors.hpp"

namespace mrfppm {

double KPrior::log_pmf(std::size_t k) const {
  if (k == 0) return -std::numeric_limits<double>::infinity();
  const double kd = static_cast<double>(k);
  switch (kind) {
    case Kind::kShiftedPoisson:
      return (kd - 1.0) * std::log(rate) - rate - std::lgamma(kd);
    case Kind::kTruncatedPoisson:
      return kd * std::log(rate) - rate - std::lgamma(kd + 1.0) - std::log(-std::expm1(-rate));
  }
  return -std::numeric_limits<double>::infinity();
}

double log_vn_series(double gamma, const KPrior& k_prior, std::size_t n, std::size_t t) {
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  double log_sum = -std::numeric_limits<double>::infinity();
  double prev_term = -std::numeric_limits<double>::infinity();
  int small_run = 0;
  // Terms with k < t vanish because the falling factorial k_(t) is zero.
  for (std::size_t k = std::max<std::size_t>(t, 1);; ++k) {
    const double kd = static_cast<double>(k);
    const double gk = gamma * kd;
    const double term = std::lgamma(kd + 1.0) - std::lgamma(kd - td + 1.0) - (std::lgamma(gk + nd) - std::lgamma(gk)) +
                        k_prior.log_pmf(k);
    if (term > log_sum) {
      log_sum = term + std::log1p(std::exp(log_sum - term));
    } else {
      log_sum += std::log1p(std::exp(term - log_sum));
    }
    const bool decreasing = term < prev_term;
    prev_term = term;
    if (decreasing && term - log_sum < std::log(1e-15)) {
      if (++small_run >= 5) break;
    } else {
      small_run = 0;
    }
    if (k > 100'000'000) throw NumericalError("log_vn: series did not converge");
  }
  return log_sum;
}

MfmSpec::MfmSpec(std::size_t n_items, double gamma, KPrior k_prior)
    : n_(n_items), gamma_(gamma), k_prior_(k_prior) {
  if (n_items == 0) throw DomainError("MfmSpec: need at least one item");
  if (!(gamma > 0.0)) throw DomainError("MfmSpec: gamma must be positive");
  if (!(k_prior.rate > 0.0)) throw DomainError("MfmSpec: k-prior rate must be positive");
  vn_cache_.resize(n_);
  for (std::size_t t = 1; t <= n_; ++t) vn_cache_[t - 1] = log_vn_series(gamma_, k_prior_, n_, t);
}

double MfmSpec::log_block_weight(std::size_t size) const {
  const double s = static_cast<double>(size);
  return std::lgamma(gamma_ + s) - std::lgamma(gamma_);
}

double MfmSpec::log_vn(std::size_t t) const {
  if (t < 1 || t > n_) {
    throw DomainError("log_vn: t = " + std::to_string(t) + " outside [1, " + std::to_string(n_) + "]");
  }
  return vn_cache_[t - 1];
}

double log_vn(const MfmSpec& spec, std::size_t n, std::size_t t) {
  if (t < 1 || t > n) {
    throw DomainError("log_vn: t = " + std::to_string(t) + " outside [1, " + std::to_string(n) + "]");
  }
  if (n == spec.n_items()) return spec.log_vn(t);
  return log_vn_series(spec.gamma(), spec.k_prior(), n, t);
}

DpSpec::DpSpec(std::size_t n_items, double concentration) : n_(n_items), concentration_(concentration) {
  if (n_items == 0) throw DomainError("DpSpec: need at least one item");
  if (!(concentration > 0.0)) throw DomainError("DpSpec: concentration must be positive");
}

double DpSpec::log_count_weight(std::size_t t) const { return static_cast<double>(t) * std::log(concentration_); }

double DpSpec::log_block_weight(std::size_t size) const { return std::lgamma(static_cast<double>(size)); }

MrfSpec::MrfSpec(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("MrfSpec: lambda must be finite and >= 0");
}

PartitionPrior::PartitionPrior(std::shared_ptr<const Eppf> eppf, std::shared_ptr<const SpatialGraph> graph,
                               std::shared_ptr<const GraphCost> cost)
    : eppf_(std::move(eppf)), graph_(std::move(graph)), cost_(std::move(cost)) {
  if (!eppf_ || !graph_) throw ValidationError("PartitionPrior: eppf and graph are required");
  if (eppf_->n_items() != graph_->size()) {
    throw ValidationError("PartitionPrior: EPPF built for " + std::to_string(eppf_->n_items()) +
                          " items but graph has " + std::to_string(graph_->size()) + " locations");
  }
  const std::size_t n = graph_->size();
  new_weight_cache_.resize(n);
  const double block1 = eppf_->log_block_weight(1);
  // With no other clusters a new cluster is the only choice; its weight is immaterial.
  new_weight_cache_[0] = block1;
  for (std::size_t t = 1; t < n; ++t) {
    new_weight_cache_[t] = eppf_->log_count_weight(t + 1) - eppf_->log_count_weight(t) + block1;
  }
}

PartitionPrior PartitionPrior::mrf_mfm(std::shared_ptr<const SpatialGraph> graph, std::shared_ptr<const MfmSpec> mfm,
                                       double lambda) {
  return PartitionPrior(std::move(mfm), std::move(graph), std::make_shared<MrfSpec>(lambda));
}

double PartitionPrior::log_score(const Partition& partition) const {
  if (partition.size() != size()) {
    throw ValidationError("log_score: partition over " + std::to_string(partition.size()) + " items, prior over " +
                          std::to_string(size()));
  }
  double score = eppf_->log_count_weight(partition.num_clusters());
  for (const auto& members : partition.clusters()) score += eppf_->log_block_weight(members.size());
  if (cost_) {
    std::vector<std::size_t> within(partition.num_clusters(), 0);
    for (const auto& e : graph_->edges()) {
      if (partition.same_cluster(e.a, e.b)) ++within[static_cast<std::size_t>(partition.cluster_of(e.a))];
    }
    for (auto ec : within) score += cost_->log_k(ec);
  }
  return score;
}

double log_prior_score(const Partition& partition, const PartitionPrior& prior) { return prior.log_score(partition); }

std::vector<double> ConditionalWeights::probabilities() const {
  std::vector<double> p(log_weights.size());
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] = std::exp(log_weights[k] - top);
  for (auto& v : p) v /= total;
  return p;
}

ConditionalWeights conditional_weights(const Partition& partition, int item, const PartitionPrior& prior) {
  if (partition.size() != prior.size()) throw ValidationError("conditional_weights: size mismatch");
  if (item < 0 || static_cast<std::size_t>(item) >= partition.size()) {
    throw ValidationError("conditional_weights: item out of range");
  }
  const auto& g = prior.graph();
  std::vector<std::size_t> neighbor_count(partition.num_clusters(), 0);
  for (int j : g.neighbors(item)) ++neighbor_count[static_cast<std::size_t>(partition.cluster_of(j))];

  ConditionalWeights out;
  const int own = partition.cluster_of(item);
  for (std::size_t c = 0; c < partition.num_clusters(); ++c) {
    std::size_t size = partition.members(c).size();
    if (static_cast<int>(c) == own) --size;
    if (size == 0) continue;
    out.clusters.push_back(static_cast<int>(c));
    out.log_weights.push_back(prior.log_existing_weight(size, neighbor_count[c]));
  }
  out.log_weights.push_back(prior.log_new_weight(out.clusters.size()));
  return out;
}

namespace testing {

std::vector<std::pair<Partition, double>> normalized_prior_small_n(const PartitionPrior& prior, std::size_t max_n) {
  const std::size_t n = prior.size();
  if (max_n > 12 || n > max_n) {
    throw DomainError("normalized_prior_small_n: refusing N = " + std::to_string(n) + " (limit " +
                      std::to_string(std::min<std::size_t>(max_n, 12)) +
                      "); exact enumeration visits Bell(N) partitions, Bell(12) = 4213597");
  }
  std::vector<std::pair<Partition, double>> out;
  out.reserve(static_cast<std::size_t>(bell_number(n)));
  double top = -std::numeric_limits<double>::infinity();
  for_each_partition(n, [&](const Partition& p) {
    const double s = prior.log_score(p);
    top = std::max(top, s);
    out.emplace_back(p, s);
  });
  double total = 0.0;
  for (auto& [p, s] : out) total += s = std::exp(s - top);
  for (auto& [p, s] : out) s /= total;
  return out;
}

}  // namespace testing

}  // namespace mrfppm
