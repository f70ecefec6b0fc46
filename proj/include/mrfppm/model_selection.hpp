#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mrfppm/gp_likelihood.hpp"
#include "mrfppm/graph.hpp"
#include "mrfppm/panel.hpp"
#include "mrfppm/partition_prior.hpp"
#include "mrfppm/sampler.hpp"

namespace mrfppm {

struct SelectionConfig {
  std::vector<double> lambda_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t m_total = 1'000'000;
  std::size_t m_burnin = 10'000;
  /// Short posterior run whose last partition seeds the prior chain; 0 disables.
  std::size_t warmstart_iters = 1000;
  std::size_t warmstart_burnin = 500;
  std::uint64_t shared_seed = 1;
  PriorChainOptions prior_chain;

  void validate() const;
};

/// Log of the prior-sampling marginal-likelihood estimate at one λ:
///   log (1/(M-M')) Σ_{k>M'} Π_{c∈C_(k)} f(Y_c | X_c, α_c, ℓ_c),
/// accumulated with a running-max log-sum-exp. `warm_cfg` supplies the MCMC
/// settings of the warm-start run (its seed is replaced by the shared seed).
double estimate_log_marginal(const PanelData& data, std::shared_ptr<const SpatialGraph> graph, const Hyperparams& hp,
                             std::shared_ptr<const Eppf> eppf, double lambda, const SelectionConfig& cfg,
                             const McmcConfig& warm_cfg = {});

struct SelectionResult {
  std::vector<double> lambda_grid;
  std::vector<double> log_marginal;
  double selected = 0.0;
};

/// Grid search over λ, every grid point replaying the same shared-seed streams.
/// Ties go to the smaller λ (the earlier grid entry). `workers` > 1 evaluates
/// grid points concurrently; results do not depend on it.
SelectionResult select_lambda(const PanelData& data, std::shared_ptr<const SpatialGraph> graph,
                              const Hyperparams& hp, std::shared_ptr<const Eppf> eppf, const SelectionConfig& cfg,
                              const McmcConfig& warm_cfg = {}, std::size_t workers = 1);

}  // namespace mrfppm
