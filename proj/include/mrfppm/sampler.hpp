#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mrfppm/errors.hpp"
#include "mrfppm/gp_likelihood.hpp"
#include "mrfppm/panel.hpp"
#include "mrfppm/partition.hpp"
#include "mrfppm/partition_prior.hpp"
#include "mrfppm/rng.hpp"

namespace mrfppm {

/// Target of the Metropolis moves on (α, ℓ) in the parameter update.
enum class MhTarget {
  kCollapsed,    ///< (β, σ²)-integrated cluster likelihood; (β, σ²) redrawn after the moves
  kConditional,  ///< likelihood at the current (β, σ²)
};

struct McmcConfig {
  std::size_t n_iter = 1000;
  std::size_t n_burnin = 500;
  std::size_t n_rep = 30;
  std::size_t m_aux = 3;
  double proposal_sd = 0.01;
  std::uint64_t seed = 1;
  std::size_t thin = 1;
  bool random_scan = false;
  MhTarget mh_target = MhTarget::kCollapsed;
  /// Test hook: pins every cluster's (α, ℓ) to this pair and disables the
  /// Metropolis moves; auxiliary pairs use the same values.
  std::optional<std::pair<double, double>> fixed_alpha_ell;

  void validate() const;
};

struct ChainState {
  Partition partition;
  std::vector<ClusterParams> params;  // indexed by canonical cluster id
  std::size_t iteration = 0;
  Rng rng;
};

struct ChainSample {
  std::size_t iteration = 0;
  Partition partition;
  std::vector<ClusterParams> params;
  double log_post = 0.0;
};

struct MhCounters {
  std::size_t alpha_proposed = 0;
  std::size_t alpha_accepted = 0;
  std::size_t ell_proposed = 0;
  std::size_t ell_accepted = 0;
};

struct ChainOutput {
  std::vector<ChainSample> samples;
  double alpha_acceptance = 0.0;
  double ell_acceptance = 0.0;
  std::vector<double> log_post_trace;
};

/// Immutable view of everything the posterior depends on. Holds references;
/// the referenced objects must outlive the model.
class Model {
 public:
  /// Throws ValidationError when data, prior and hyperparameters disagree on sizes.
  Model(const PanelData& data, const Hyperparams& hp, const PartitionPrior& prior);

  const PanelData& data() const { return *data_; }
  const Hyperparams& hp() const { return *hp_; }
  const PartitionPrior& prior() const { return *prior_; }
  const SpatialGraph& graph() const { return prior_->graph(); }
  std::size_t size() const { return data_->size(); }

 private:
  const PanelData* data_;
  const Hyperparams* hp_;
  const PartitionPrior* prior_;
};

/// Thrown by run_chain when a numerical failure interrupts sampling; carries the
/// last state that completed a full iteration.
class ChainFailure : public NumericalError {
 public:
  ChainFailure(const std::string& what, ChainState last) : NumericalError(what), last_state(std::move(last)) {}
  ChainState last_state;
};

/// Random-walk Metropolis step for a positive scalar. Proposals ≤ 0 are rejected
/// without evaluating the target. Returns the new value; `log_target_value` holds
/// the target at the current value on entry and at the returned value on exit.
double mh_positive_step(double current, double& log_target_value, double proposal_sd,
                        const std::function<double(double)>& log_target, Rng& rng, bool& accepted);

/// Prior-driven starting state (all singletons unless `init` is given).
ChainState initial_state(const Model& model, const McmcConfig& cfg, const std::optional<Partition>& init);

/// Parameter update for every cluster, repeated n_rep times; partition untouched.
void step1_update_params(ChainState& state, const Model& model, const McmcConfig& cfg, KernelCache& cache,
                         MhCounters* counters = nullptr);

/// One sweep of auxiliary-parameter reassignment over all locations.
void step2_update_partition(ChainState& state, const Model& model, const McmcConfig& cfg, KernelCache& cache);

/// Unnormalized log posterior of a state: prior score + base densities + likelihood.
double log_posterior(const ChainState& state, const Model& model, KernelCache& cache);

ChainOutput run_chain(const Model& model, const McmcConfig& cfg, const std::optional<Partition>& init = {});

/// Length-scale pair carried by a cluster in the prior-only chain.
struct AlphaEll {
  double alpha;
  double ell;
};

struct PriorDraw {
  Partition partition;
  std::vector<AlphaEll> phi;  // indexed by canonical cluster id
};

struct PriorChainOptions {
  bool random_scan = false;
  /// Redraw every cluster's (α, ℓ) from its prior after each sweep. The pairs do
  /// not enter the partition moves, so this leaves the target unchanged.
  bool refresh_params = true;
};

using PriorSweepVisitor = std::function<void(std::size_t sweep, const Partition&, std::span<const AlphaEll>)>;

/// Gibbs sweeps over the partition prior alone. New clusters receive fresh
/// (α, ℓ) prior draws. `visit` sees the state after every sweep.
void for_each_prior_sweep(const PartitionPrior& prior, const Hyperparams& hp, const Partition& init,
                          std::size_t n_sweeps, Rng& rng, const PriorChainOptions& options,
                          const PriorSweepVisitor& visit);

std::vector<PriorDraw> run_prior_chain(const PartitionPrior& prior, const Hyperparams& hp, const Partition& init,
                                       std::size_t n_sweeps, std::uint64_t seed,
                                       const PriorChainOptions& options = {});

}  // namespace mrfppm
