#include "mrfppm/model_selection.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

namespace mrfppm {

void SelectionConfig::validate() const {
  if (lambda_grid.empty()) throw ValidationError("selection: lambda grid is empty");
  for (double l : lambda_grid) {
    if (!std::isfinite(l) || l < 0.0) throw ValidationError("selection: lambda values must be finite and >= 0");
  }
  if (m_burnin >= m_total) throw ValidationError("selection: m_burnin must be < m_total");
  if (warmstart_iters > 0 && warmstart_burnin >= warmstart_iters) {
    throw ValidationError("selection: warmstart_burnin must be < warmstart_iters");
  }
}

double estimate_log_marginal(const PanelData& data, std::shared_ptr<const SpatialGraph> graph, const Hyperparams& hp,
                             std::shared_ptr<const Eppf> eppf, double lambda, const SelectionConfig& cfg,
                             const McmcConfig& warm_cfg) {
  cfg.validate();
  const PartitionPrior prior(eppf, graph, std::make_shared<const MrfSpec>(lambda));
  const Model model(data, hp, prior);

  Partition init = Partition::singletons(data.size());
  if (cfg.warmstart_iters > 0) {
    McmcConfig mc = warm_cfg;
    mc.n_iter = cfg.warmstart_iters;
    mc.n_burnin = cfg.warmstart_burnin;
    mc.thin = 1;
    mc.seed = cfg.shared_seed;
    const auto warm = run_chain(model, mc);
    init = warm.samples.back().partition;
  }

  Rng rng = make_stream(cfg.shared_seed, Stream::kPriorChain);
  KernelCache cache;
  double running_max = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;  // Σ exp(term - running_max)
  for_each_prior_sweep(prior, hp, init, cfg.m_total, rng, cfg.prior_chain,
                       [&](std::size_t sweep, const Partition& p, std::span<const AlphaEll> phi) {
                         if (sweep <= cfg.m_burnin) return;
                         cache.clear();
                         double term = 0.0;
                         for (std::size_t c = 0; c < p.num_clusters(); ++c) {
                           term += integrated_loglik(data, p.members(c), hp, phi[c].alpha, phi[c].ell, &cache);
                         }
                         if (!(term > -std::numeric_limits<double>::infinity())) return;
                         if (term > running_max) {
                           scaled_sum = scaled_sum * std::exp(running_max - term) + 1.0;
                           running_max = term;
                         } else {
                           scaled_sum += std::exp(term - running_max);
                         }
                       });
  const double kept = static_cast<double>(cfg.m_total - cfg.m_burnin);
  return running_max + std::log(scaled_sum) - std::log(kept);
}

SelectionResult select_lambda(const PanelData& data, std::shared_ptr<const SpatialGraph> graph,
                              const Hyperparams& hp, std::shared_ptr<const Eppf> eppf, const SelectionConfig& cfg,
                              const McmcConfig& warm_cfg, std::size_t workers) {
  cfg.validate();
  SelectionResult result;
  result.lambda_grid = cfg.lambda_grid;
  result.log_marginal.assign(cfg.lambda_grid.size(), 0.0);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t g = next++; g < cfg.lambda_grid.size(); g = next++) {
      try {
        result.log_marginal[g] = estimate_log_marginal(data, graph, hp, eppf, cfg.lambda_grid[g], cfg, warm_cfg);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, cfg.lambda_grid.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t best = 0;
  for (std::size_t g = 1; g < result.log_marginal.size(); ++g) {
    if (result.log_marginal[g] > result.log_marginal[best]) best = g;
  }
  result.selected = result.lambda_grid[best];
  return result;
}

}  // namespace mrfppm
