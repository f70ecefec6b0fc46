#include "mrfppm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mrfppm {

void McmcConfig::validate() const {
  if (n_burnin >= n_iter) throw ValidationError("mcmc: n_burnin must be < n_iter");
  if (n_rep < 1) throw ValidationError("mcmc: n_rep must be >= 1");
  if (m_aux < 1) throw ValidationError("mcmc: m_aux must be >= 1");
  if (thin < 1) throw ValidationError("mcmc: thin must be >= 1");
  if (!(proposal_sd > 0.0)) throw ValidationError("mcmc: proposal_sd must be > 0");
  if (fixed_alpha_ell && !(fixed_alpha_ell->first > 0.0 && fixed_alpha_ell->second > 0.0)) {
    throw ValidationError("mcmc: fixed alpha/ell must be positive");
  }
}

Model::Model(const PanelData& data, const Hyperparams& hp, const PartitionPrior& prior)
    : data_(&data), hp_(&hp), prior_(&prior) {
  if (data.size() != prior.size()) {
    throw ValidationError("model: panel has " + std::to_string(data.size()) + " locations but graph has " +
                          std::to_string(prior.size()));
  }
  hp.validate();
  if (hp.mu0.size() != data.num_covariates()) {
    throw ValidationError("model: hyperparameters sized for p = " + std::to_string(hp.mu0.size()) +
                          " but panel has p = " + std::to_string(data.num_covariates()));
  }
}

double mh_positive_step(double current, double& log_target_value, double proposal_sd,
                        const std::function<double(double)>& log_target, Rng& rng, bool& accepted) {
  accepted = false;
  const double proposal = current + proposal_sd * draw_normal(rng);
  if (!(proposal > 0.0)) return current;
  double proposed_value;
  try {
    proposed_value = log_target(proposal);
  } catch (const NumericalError&) {
    return current;  // treated as zero density
  }
  const double log_u = std::log(draw_uniform(rng));
  if (log_u < proposed_value - log_target_value) {
    accepted = true;
    log_target_value = proposed_value;
    return proposal;
  }
  return current;
}

namespace {

AlphaEll draw_alpha_ell(const Hyperparams& hp, Rng& rng) {
  const double alpha = draw_gamma(hp.a1, hp.b1, rng);
  const double ell = draw_gamma(hp.a2, hp.b2, rng);
  return {alpha, ell};
}

ClusterParams prior_params(const Model& model, const McmcConfig& cfg, Rng& rng) {
  ClusterParams theta;
  if (cfg.fixed_alpha_ell) {
    theta.alpha = cfg.fixed_alpha_ell->first;
    theta.ell = cfg.fixed_alpha_ell->second;
  } else {
    const auto phi = draw_alpha_ell(model.hp(), rng);
    theta.alpha = phi.alpha;
    theta.ell = phi.ell;
  }
  auto bs = draw_beta_sigma2_prior(model.hp(), rng);
  theta.beta = std::move(bs.beta);
  theta.sigma2 = bs.sigma2;
  return theta;
}

std::vector<std::size_t> sweep_order(std::size_t n, bool random_scan, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (random_scan) std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

ChainState initial_state(const Model& model, const McmcConfig& cfg, const std::optional<Partition>& init) {
  ChainState state;
  state.rng = make_stream(cfg.seed, Stream::kChain);
  state.partition = init ? *init : Partition::singletons(model.size());
  if (state.partition.size() != model.size()) {
    throw ValidationError("initial partition covers " + std::to_string(state.partition.size()) +
                          " locations, model has " + std::to_string(model.size()));
  }
  state.params.reserve(state.partition.num_clusters());
  for (std::size_t c = 0; c < state.partition.num_clusters(); ++c) {
    state.params.push_back(prior_params(model, cfg, state.rng));
  }
  return state;
}

void step1_update_params(ChainState& state, const Model& model, const McmcConfig& cfg, KernelCache& cache,
                         MhCounters* counters) {
  const auto& data = model.data();
  const auto& hp = model.hp();
  const bool move_phi = !cfg.fixed_alpha_ell;

  for (std::size_t c = 0; c < state.partition.num_clusters(); ++c) {
    const auto& members = state.partition.members(c);
    auto& theta = state.params[c];

    auto redraw_beta_sigma2 = [&](const ClusterSuffStats& ss) {
      auto bs = draw_beta_sigma2(ss, state.rng);
      theta.beta = std::move(bs.beta);
      theta.sigma2 = bs.sigma2;
    };
    auto record = [&](bool alpha_move, bool accepted) {
      if (!counters) return;
      if (alpha_move) {
        ++counters->alpha_proposed;
        counters->alpha_accepted += accepted ? 1 : 0;
      } else {
        ++counters->ell_proposed;
        counters->ell_accepted += accepted ? 1 : 0;
      }
    };

    if (cfg.mh_target == MhTarget::kCollapsed) {
      // Metropolis on (α, ℓ) against the (β, σ²)-integrated likelihood, then an
      // exact (β, σ²) draw at the updated (α, ℓ).
      const ClusterMoments moments(data, members);
      ClusterSuffStats current_ss = moments.suffstats(data, hp, theta.alpha, theta.ell, &cache);
      double current_ll = integrated_loglik(current_ss, hp);
      ClusterSuffStats proposed_ss;
      double proposed_ll = 0.0;
      for (std::size_t rep = 0; rep < cfg.n_rep; ++rep) {
        if (move_phi) {
          bool accepted = false;
          double target = current_ll + log_gamma_density(theta.alpha, hp.a1, hp.b1);
          theta.alpha = mh_positive_step(
              theta.alpha, target, cfg.proposal_sd,
              [&](double a) {
                proposed_ss = moments.suffstats(data, hp, a, theta.ell, &cache);
                proposed_ll = integrated_loglik(proposed_ss, hp);
                return proposed_ll + log_gamma_density(a, hp.a1, hp.b1);
              },
              state.rng, accepted);
          if (accepted) {
            current_ss = std::move(proposed_ss);
            current_ll = proposed_ll;
          }
          record(true, accepted);

          target = current_ll + log_gamma_density(theta.ell, hp.a2, hp.b2);
          theta.ell = mh_positive_step(
              theta.ell, target, cfg.proposal_sd,
              [&](double l) {
                proposed_ss = moments.suffstats(data, hp, theta.alpha, l, &cache);
                proposed_ll = integrated_loglik(proposed_ss, hp);
                return proposed_ll + log_gamma_density(l, hp.a2, hp.b2);
              },
              state.rng, accepted);
          if (accepted) {
            current_ss = std::move(proposed_ss);
            current_ll = proposed_ll;
          }
          record(false, accepted);
        }
        redraw_beta_sigma2(current_ss);
      }
    } else {
      auto conditional_sum = [&](const ClusterParams& th) {
        double total = 0.0;
        for (int i : members) total += conditional_loglik(data, static_cast<std::size_t>(i), th, &cache);
        return total;
      };
      for (std::size_t rep = 0; rep < cfg.n_rep; ++rep) {
        redraw_beta_sigma2(cluster_suffstats(data, members, hp, theta.alpha, theta.ell, &cache));
        if (!move_phi) continue;
        bool accepted = false;
        double target = conditional_sum(theta) + log_gamma_density(theta.alpha, hp.a1, hp.b1);
        theta.alpha = mh_positive_step(
            theta.alpha, target, cfg.proposal_sd,
            [&](double a) {
              ClusterParams trial = theta;
              trial.alpha = a;
              return conditional_sum(trial) + log_gamma_density(a, hp.a1, hp.b1);
            },
            state.rng, accepted);
        record(true, accepted);
        target = conditional_sum(theta) + log_gamma_density(theta.ell, hp.a2, hp.b2);
        theta.ell = mh_positive_step(
            theta.ell, target, cfg.proposal_sd,
            [&](double l) {
              ClusterParams trial = theta;
              trial.ell = l;
              return conditional_sum(trial) + log_gamma_density(l, hp.a2, hp.b2);
            },
            state.rng, accepted);
        record(false, accepted);
      }
    }
  }
}

void step2_update_partition(ChainState& state, const Model& model, const McmcConfig& cfg, KernelCache& cache) {
  const auto& data = model.data();
  const auto& hp = model.hp();
  const auto& prior = model.prior();
  const auto& graph = model.graph();
  const std::size_t n = model.size();
  const std::size_t m = cfg.m_aux;
  const double log_m = std::log(static_cast<double>(m));

  struct Slot {
    std::size_t size = 0;
    ClusterParams params;
  };
  std::vector<int> labels = state.partition.assignment();
  std::vector<Slot> slots(state.partition.num_clusters());
  for (std::size_t c = 0; c < slots.size(); ++c) {
    slots[c].size = state.partition.members(c).size();
    slots[c].params = std::move(state.params[c]);
  }

  std::vector<AlphaEll> aux(m);
  std::vector<ClusterSuffStats> aux_ss(m);
  std::vector<std::size_t> neighbor_count;
  std::vector<double> log_w;
  std::vector<std::size_t> choice_slot;

  for (const std::size_t i : sweep_order(n, cfg.random_scan, state.rng)) {
    const auto old = static_cast<std::size_t>(labels[i]);
    labels[i] = -1;
    --slots[old].size;

    // Auxiliary (α, ℓ) pairs; a vacated singleton donates its pair as the first one.
    std::size_t first_fresh = 0;
    if (slots[old].size == 0) {
      aux[0] = {slots[old].params.alpha, slots[old].params.ell};
      first_fresh = 1;
    }
    for (std::size_t k = first_fresh; k < m; ++k) {
      aux[k] = cfg.fixed_alpha_ell ? AlphaEll{cfg.fixed_alpha_ell->first, cfg.fixed_alpha_ell->second}
                                   : draw_alpha_ell(hp, state.rng);
    }

    neighbor_count.assign(slots.size(), 0);
    for (int j : graph.neighbors(static_cast<int>(i))) {
      if (labels[static_cast<std::size_t>(j)] >= 0) ++neighbor_count[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])];
    }

    log_w.clear();
    choice_slot.clear();
    std::size_t alive = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (slots[s].size == 0) continue;
      ++alive;
      log_w.push_back(prior.log_existing_weight(slots[s].size, neighbor_count[s]) +
                      conditional_loglik(data, i, slots[s].params, &cache));
      choice_slot.push_back(s);
    }
    const double log_new = prior.log_new_weight(alive) - log_m;
    const int single[] = {static_cast<int>(i)};
    for (std::size_t k = 0; k < m; ++k) {
      aux_ss[k] = cluster_suffstats(data, single, hp, aux[k].alpha, aux[k].ell);
      log_w.push_back(log_new + integrated_loglik(aux_ss[k], hp));
    }

    const std::size_t pick = sample_log_weights(log_w, state.rng);
    if (pick < choice_slot.size()) {
      const auto s = choice_slot[pick];
      labels[i] = static_cast<int>(s);
      ++slots[s].size;
      continue;
    }
    const std::size_t k = pick - choice_slot.size();
    std::size_t s = 0;
    while (s < slots.size() && slots[s].size > 0) ++s;
    if (s == slots.size()) slots.emplace_back();
    auto bs = draw_beta_sigma2(aux_ss[k], state.rng);
    slots[s].size = 1;
    slots[s].params = ClusterParams{std::move(bs.beta), bs.sigma2, aux[k].alpha, aux[k].ell};
    labels[i] = static_cast<int>(s);
  }

  // Canonical relabeling; parameters follow their clusters.
  state.partition = Partition(labels);
  state.params.assign(state.partition.num_clusters(), ClusterParams{});
  for (std::size_t c = 0; c < state.partition.num_clusters(); ++c) {
    const int any_member = state.partition.members(c).front();
    state.params[c] = std::move(slots[static_cast<std::size_t>(labels[static_cast<std::size_t>(any_member)])].params);
  }
}

double log_posterior(const ChainState& state, const Model& model, KernelCache& cache) {
  double lp = model.prior().log_score(state.partition);
  for (const auto& theta : state.params) lp += log_base_density(theta, model.hp());
  for (std::size_t i = 0; i < model.size(); ++i) {
    lp += conditional_loglik(model.data(), i, state.params[static_cast<std::size_t>(state.partition.cluster_of(static_cast<int>(i)))],
                             &cache);
  }
  return lp;
}

ChainOutput run_chain(const Model& model, const McmcConfig& cfg, const std::optional<Partition>& init) {
  cfg.validate();
  ChainState state = initial_state(model, cfg, init);
  ChainState last_good = state;
  KernelCache cache;
  MhCounters counters;
  ChainOutput out;
  out.log_post_trace.reserve(cfg.n_iter);
  out.samples.reserve((cfg.n_iter - cfg.n_burnin) / cfg.thin);

  for (std::size_t it = 1; it <= cfg.n_iter; ++it) {
    double lp = 0.0;
    try {
      cache.clear();
      step1_update_params(state, model, cfg, cache, &counters);
      step2_update_partition(state, model, cfg, cache);
      state.iteration = it;
      lp = log_posterior(state, model, cache);
    } catch (const NumericalError& e) {
      throw ChainFailure("iteration " + std::to_string(it) + ": " + e.what(), std::move(last_good));
    }
    out.log_post_trace.push_back(lp);
    if (it > cfg.n_burnin && (it - cfg.n_burnin) % cfg.thin == 0) {
      out.samples.push_back(ChainSample{it, state.partition, state.params, lp});
    }
    last_good = state;
  }
  auto rate = [](std::size_t acc, std::size_t prop) {
    return prop ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
  };
  out.alpha_acceptance = rate(counters.alpha_accepted, counters.alpha_proposed);
  out.ell_acceptance = rate(counters.ell_accepted, counters.ell_proposed);
  return out;
}

void for_each_prior_sweep(const PartitionPrior& prior, const Hyperparams& hp, const Partition& init,
                          std::size_t n_sweeps, Rng& rng, const PriorChainOptions& options,
                          const PriorSweepVisitor& visit) {
  const std::size_t n = prior.size();
  if (init.size() != n) throw ValidationError("prior chain: initial partition size mismatch");
  const auto& graph = prior.graph();

  struct Slot {
    std::size_t size = 0;
    AlphaEll phi{};
  };
  std::vector<int> labels = init.assignment();
  std::vector<Slot> slots(init.num_clusters());
  for (std::size_t c = 0; c < slots.size(); ++c) {
    slots[c].size = init.members(c).size();
    slots[c].phi = draw_alpha_ell(hp, rng);
  }

  std::vector<std::size_t> neighbor_count;
  std::vector<double> log_w;
  std::vector<std::size_t> choice_slot;
  std::vector<AlphaEll> phi;

  for (std::size_t sweep = 1; sweep <= n_sweeps; ++sweep) {
    for (const std::size_t i : sweep_order(n, options.random_scan, rng)) {
      const auto old = static_cast<std::size_t>(labels[i]);
      labels[i] = -1;
      --slots[old].size;

      neighbor_count.assign(slots.size(), 0);
      for (int j : graph.neighbors(static_cast<int>(i))) {
        const int l = labels[static_cast<std::size_t>(j)];
        if (l >= 0) ++neighbor_count[static_cast<std::size_t>(l)];
      }
      log_w.clear();
      choice_slot.clear();
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (slots[s].size == 0) continue;
        log_w.push_back(prior.log_existing_weight(slots[s].size, neighbor_count[s]));
        choice_slot.push_back(s);
      }
      log_w.push_back(prior.log_new_weight(choice_slot.size()));

      const std::size_t pick = sample_log_weights(log_w, rng);
      if (pick < choice_slot.size()) {
        labels[i] = static_cast<int>(choice_slot[pick]);
        ++slots[choice_slot[pick]].size;
        continue;
      }
      std::size_t s = 0;
      while (s < slots.size() && slots[s].size > 0) ++s;
      if (s == slots.size()) slots.emplace_back();
      slots[s].size = 1;
      slots[s].phi = draw_alpha_ell(hp, rng);
      labels[i] = static_cast<int>(s);
    }

    const Partition partition(labels);
    phi.resize(partition.num_clusters());
    std::vector<Slot> canonical(partition.num_clusters());
    for (std::size_t c = 0; c < partition.num_clusters(); ++c) {
      const auto& src = slots[static_cast<std::size_t>(labels[static_cast<std::size_t>(partition.members(c).front())])];
      canonical[c].size = src.size;
      canonical[c].phi = options.refresh_params ? draw_alpha_ell(hp, rng) : src.phi;
      phi[c] = canonical[c].phi;
    }
    slots = std::move(canonical);
    labels = partition.assignment();
    visit(sweep, partition, phi);
  }
}

std::vector<PriorDraw> run_prior_chain(const PartitionPrior& prior, const Hyperparams& hp, const Partition& init,
                                       std::size_t n_sweeps, std::uint64_t seed, const PriorChainOptions& options) {
  Rng rng = make_stream(seed, Stream::kPriorChain);
  std::vector<PriorDraw> out;
  out.reserve(n_sweeps);
  for_each_prior_sweep(prior, hp, init, n_sweeps, rng, options,
                       [&](std::size_t, const Partition& p, std::span<const AlphaEll> phi) {
                         out.push_back(PriorDraw{p, std::vector<AlphaEll>(phi.begin(), phi.end())});
                       });
  return out;
}

}  // namespace mrfppm
