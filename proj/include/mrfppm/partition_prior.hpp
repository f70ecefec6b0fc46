#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "mrfppm/graph.hpp"
#include "mrfppm/partition.hpp"

namespace mrfppm {

/// Prior on the number of mixture components K ∈ {1, 2, ...}.
struct KPrior {
  enum class Kind {
    kShiftedPoisson,    ///< p(k) = rate^(k-1) e^(-rate) / (k-1)!
    kTruncatedPoisson,  ///< Poisson(rate) conditioned on k ≥ 1
  };
  Kind kind = Kind::kShiftedPoisson;
  double rate = 10.0;

  double log_pmf(std::size_t k) const;
};

/// Gibbs-type exchangeable partition probability function:
///   p(C) ∝ exp(log_count_weight(|C|)) · Π_c exp(log_block_weight(|c|)).
/// Implementations are immutable after construction.
class Eppf {
 public:
  virtual ~Eppf() = default;
  virtual std::size_t n_items() const = 0;
  virtual double log_count_weight(std::size_t num_clusters) const = 0;
  virtual double log_block_weight(std::size_t cluster_size) const = 0;
};

/// Mixture-of-finite-mixtures EPPF: count weight V_N(t), block weight γ^(|c|).
class MfmSpec final : public Eppf {
 public:
  explicit MfmSpec(std::size_t n_items, double gamma = 1.0, KPrior k_prior = {});

  std::size_t n_items() const override { return n_; }
  double log_count_weight(std::size_t t) const override { return log_vn(t); }
  double log_block_weight(std::size_t size) const override;

  double gamma() const { return gamma_; }
  const KPrior& k_prior() const { return k_prior_; }
  /// Cached log V_N(t) for 1 ≤ t ≤ N.
  double log_vn(std::size_t t) const;

 private:
  std::size_t n_;
  double gamma_;
  KPrior k_prior_;
  std::vector<double> vn_cache_;  // index t-1
};

/// log V_n(t) = log Σ_k k_(t) / (γk)^(n) · p_K(k), summed in the log domain.
/// Uses the cache when n matches the spec's item count.
double log_vn(const MfmSpec& spec, std::size_t n, std::size_t t);
double log_vn_series(double gamma, const KPrior& k_prior, std::size_t n, std::size_t t);

/// Dirichlet-process EPPF with concentration α: count weight α^t, block weight (|c|-1)!.
class DpSpec final : public Eppf {
 public:
  DpSpec(std::size_t n_items, double concentration);
  std::size_t n_items() const override { return n_; }
  double log_count_weight(std::size_t t) const override;
  double log_block_weight(std::size_t size) const override;
  double concentration() const { return concentration_; }

 private:
  std::size_t n_;
  double concentration_;
};

/// Markov cost k(c|G) on the spatial graph, satisfying
///   k(c ∪ {i}) = k(c) · k_i(∂(i) ∩ c).
/// Both factors are expressed through edge counts.
class GraphCost {
 public:
  virtual ~GraphCost() = default;
  virtual double log_k(std::size_t within_edges) const = 0;
  virtual double log_k_i(std::size_t neighbor_count) const = 0;
};

/// k(c|G) = exp{λ E_c}; k_i = exp{λ |∂(i) ∩ c|}.
class MrfSpec final : public GraphCost {
 public:
  explicit MrfSpec(double lambda);
  double lambda() const { return lambda_; }
  double log_k(std::size_t within_edges) const override { return lambda_ * static_cast<double>(within_edges); }
  double log_k_i(std::size_t neighbor_count) const override { return lambda_ * static_cast<double>(neighbor_count); }

 private:
  double lambda_;
};

/// EPPF optionally tilted by a graph cost. Without a cost this is the plain EPPF.
class PartitionPrior {
 public:
  PartitionPrior(std::shared_ptr<const Eppf> eppf, std::shared_ptr<const SpatialGraph> graph,
                 std::shared_ptr<const GraphCost> cost = nullptr);

  static PartitionPrior mrf_mfm(std::shared_ptr<const SpatialGraph> graph, std::shared_ptr<const MfmSpec> mfm,
                                double lambda);

  std::size_t size() const { return graph_->size(); }
  const SpatialGraph& graph() const { return *graph_; }
  const std::shared_ptr<const SpatialGraph>& graph_ptr() const { return graph_; }
  const Eppf& eppf() const { return *eppf_; }
  const std::shared_ptr<const Eppf>& eppf_ptr() const { return eppf_; }
  const GraphCost* cost() const { return cost_.get(); }

  /// Unnormalized log p(C): log count weight + Σ_c [log block weight + log k(c|G)].
  double log_score(const Partition& partition) const;

  /// Log weight for joining an existing cluster of `cluster_size` members, of
  /// which `neighbor_count` are graph neighbors of the moving item.
  double log_existing_weight(std::size_t cluster_size, std::size_t neighbor_count) const {
    double w = eppf_->log_block_weight(cluster_size + 1) - eppf_->log_block_weight(cluster_size);
    if (cost_) w += cost_->log_k_i(neighbor_count);
    return w;
  }

  /// Log weight for opening a new cluster when the other items form `num_clusters` clusters.
  double log_new_weight(std::size_t num_clusters) const {
    return new_weight_cache_[num_clusters];
  }

 private:
  std::shared_ptr<const Eppf> eppf_;
  std::shared_ptr<const SpatialGraph> graph_;
  std::shared_ptr<const GraphCost> cost_;
  std::vector<double> new_weight_cache_;
};

double log_prior_score(const Partition& partition, const PartitionPrior& prior);

/// Full conditional of one item's cluster given the others. `clusters[k]` is a
/// cluster id of the input partition that stays non-empty once `item` leaves;
/// `log_weights` has one entry per such cluster followed by the new-cluster weight.
struct ConditionalWeights {
  std::vector<int> clusters;
  std::vector<double> log_weights;

  std::vector<double> probabilities() const;
};

ConditionalWeights conditional_weights(const Partition& partition, int item, const PartitionPrior& prior);

namespace testing {

/// Exact prior over all partitions by restricted-growth enumeration. Refuses
/// graphs larger than `max_n` (at most 12, B(12) = 4213597 partitions).
std::vector<std::pair<Partition, double>> normalized_prior_small_n(const PartitionPrior& prior,
                                                                   std::size_t max_n = 12);

}  // namespace testing

}  // namespace mrfppm
