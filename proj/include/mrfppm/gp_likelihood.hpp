#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mrfppm/panel.hpp"
#include "mrfppm/rng.hpp"

namespace mrfppm {

/// Cluster parameters θ_c: regression coefficients, scale σ², nugget ratio α, length-scale ℓ.
struct ClusterParams {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  double alpha = 1.0;
  double ell = 1.0;
};

/// Base-measure hyperparameters: β|σ² ~ N(mu0, σ² lambda0⁻¹), σ⁻² ~ Gamma(a0, b0),
/// α ~ Gamma(a1, b1), ℓ ~ Gamma(a2, b2). All gammas use the rate parameterization.
struct Hyperparams {
  Eigen::VectorXd mu0;
  Eigen::MatrixXd lambda0;
  double a0 = 0.1;
  double b0 = 1.0;
  double a1 = 2.0;
  double b1 = 1.0;
  double a2 = 2.0;
  double b2 = 1.0;

  /// mu0 = 0, lambda0 = 1e-6 I, a0 = 0.1, b0 = 1, a1 = a2 = 2, b1 = b2 = 1.
  static Hyperparams defaults(Eigen::Index p);
  /// Throws ValidationError on shape mismatch, non-positive rates/shapes or a
  /// lambda0 that is not symmetric positive definite.
  void validate() const;
};

/// K = exp{-(t_k - t_l)² / (2ℓ)} + α I with its Cholesky factor. σ² is not part of K:
/// cov(Y_i | β, σ²) = σ² K.
struct CorrelationMatrix {
  Eigen::MatrixXd matrix;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
};

CorrelationMatrix correlation_matrix(const Eigen::VectorXd& t, double alpha, double ell);

/// Per-grid memo of correlation factors keyed on (grid id, α, ℓ). Not synchronized;
/// give each worker its own cache. Callers clear it when the (α, ℓ) set turns over.
class KernelCache {
 public:
  const CorrelationMatrix& get(const PanelData& data, std::size_t location, double alpha, double ell);
  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Key {
    int grid;
    std::uint64_t alpha_bits;
    std::uint64_t ell_bits;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  std::unordered_map<Key, CorrelationMatrix, KeyHash> entries_;
};

/// One location's whitened Gram contribution: XᵀK⁻¹X, XᵀK⁻¹y, yᵀK⁻¹y, log det K.
struct LocationGram {
  Eigen::MatrixXd xtkx;
  Eigen::VectorXd xtky;
  double ytky = 0.0;
  double log_det = 0.0;
  Eigen::Index n = 0;
};

LocationGram location_gram(const PanelData& data, std::size_t location, double alpha, double ell,
                           KernelCache* cache = nullptr);

/// Running sum of Gram contributions over a cluster's members.
struct GramSum {
  Eigen::MatrixXd xtkx;
  Eigen::VectorXd xtky;
  double ytky = 0.0;
  double log_det = 0.0;
  Eigen::Index n = 0;

  explicit GramSum(Eigen::Index p) : xtkx(Eigen::MatrixXd::Zero(p, p)), xtky(Eigen::VectorXd::Zero(p)) {}
  GramSum& operator+=(const LocationGram& g);
};

/// Normal-inverse-gamma posterior of (β, σ²) for one cluster at fixed (α, ℓ).
struct ClusterSuffStats {
  Eigen::MatrixXd lambda_c;
  Eigen::LLT<Eigen::MatrixXd> lambda_llt;
  Eigen::VectorXd mu_c;
  double a_c = 0.0;
  double b_c = 0.0;
  Eigen::Index n_total = 0;
  double log_det_sum = 0.0;
  /// Set when the Cholesky-based condition estimate of lambda_c exceeds 1e12.
  bool ill_conditioned = false;
};

ClusterSuffStats finalize_suffstats(const GramSum& sum, const Hyperparams& hp);
ClusterSuffStats cluster_suffstats(const PanelData& data, std::span<const int> cluster, const Hyperparams& hp,
                                   double alpha, double ell, KernelCache* cache = nullptr);

/// Second moments of a fixed member set, per time grid. Re-evaluates the
/// cluster statistics at new (α, ℓ) at a cost that does not grow with the
/// cluster size; used when the members stay put and (α, ℓ) move.
class ClusterMoments {
 public:
  ClusterMoments(const PanelData& data, std::span<const int> cluster);
  ClusterSuffStats suffstats(const PanelData& data, const Hyperparams& hp, double alpha, double ell,
                             KernelCache* cache = nullptr) const;

 private:
  struct Block {
    std::size_t representative = 0;
    Eigen::Index count = 0;
    Eigen::Index n = 0;
    std::vector<Eigen::MatrixXd> moments;  // upper triangle of column pairs of [X y], row-major
  };
  Eigen::Index q_;
  std::vector<Block> blocks_;
};

/// log ∫ Π_{i∈c} N(Y_i | X_i β, σ² K_i) dNIG(β, σ²).
double integrated_loglik(const ClusterSuffStats& ss, const Hyperparams& hp);
double integrated_loglik(const PanelData& data, std::span<const int> cluster, const Hyperparams& hp, double alpha,
                         double ell, KernelCache* cache = nullptr);

/// log N(Y_i | X_i β, σ² K_i(α, ℓ)).
double conditional_loglik(const PanelData& data, std::size_t location, const ClusterParams& theta,
                          KernelCache* cache = nullptr);

struct BetaSigma2 {
  Eigen::VectorXd beta;
  double sigma2;
};

/// σ⁻² ~ Gamma(a_c, rate b_c), then β | σ² ~ N(mu_c, σ² lambda_c⁻¹).
BetaSigma2 draw_beta_sigma2(const ClusterSuffStats& ss, Rng& rng);
/// Same draw from the prior NIG(mu0, lambda0, a0, b0).
BetaSigma2 draw_beta_sigma2_prior(const Hyperparams& hp, Rng& rng);

/// log density of NIG(mu, precision, a, b) at (β, σ²), with respect to dβ dσ².
double log_nig_density(const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& mu,
                       const Eigen::MatrixXd& precision, double a, double b);

/// log g(θ) under the base measure (NIG × Gamma(α) × Gamma(ℓ)).
double log_base_density(const ClusterParams& theta, const Hyperparams& hp);

}  // namespace mrfppm
