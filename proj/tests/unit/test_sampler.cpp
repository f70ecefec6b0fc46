#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>

#include "../oracles.hpp"
#include "../support.hpp"
#include "mrfppm/errors.hpp"
#include "mrfppm/sampler.hpp"

using namespace mrfppm;

namespace {

struct Fixture {
  std::shared_ptr<const SpatialGraph> graph;
  PanelData data;
  Hyperparams hp;
  PartitionPrior prior;

  Fixture(std::size_t n, double lambda, std::vector<double> levels, std::uint64_t seed = 1)
      : graph(std::make_shared<const SpatialGraph>(test::path_graph(n))),
        data([&] {
          Rng rng = make_stream(seed, Stream::kInit);
          return test::small_panel(n, 6, rng, std::move(levels));
        }()),
        hp(Hyperparams::defaults(2)),
        prior(PartitionPrior::mrf_mfm(graph, std::make_shared<const MfmSpec>(n), lambda)) {}
};

McmcConfig short_config(std::size_t iters = 40, std::size_t burnin = 20) {
  McmcConfig cfg;
  cfg.n_iter = iters;
  cfg.n_burnin = burnin;
  cfg.n_rep = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("one retained sample when n_iter is burnin + 1") {
  Fixture f(4, 0.5, {0, 0, 4, 4});
  const Model model(f.data, f.hp, f.prior);
  const auto out = run_chain(model, short_config(6, 5));
  REQUIRE(out.samples.size() == 1);
  CHECK(out.samples[0].iteration == 6);
}

TEST_CASE("thinning keeps every thin-th post-burnin iteration") {
  Fixture f(4, 0.5, {0, 0, 4, 4});
  const Model model(f.data, f.hp, f.prior);
  auto cfg = short_config(30, 10);
  cfg.thin = 4;
  const auto out = run_chain(model, cfg);
  REQUIRE(out.samples.size() == 5);
  CHECK(out.samples.front().iteration == 14);
  CHECK(out.samples.back().iteration == 30);
}

TEST_CASE("same seed gives the same chain") {
  Fixture f(5, 0.3, {0, 0, 3, 3, 3});
  const Model model(f.data, f.hp, f.prior);
  const auto a = run_chain(model, short_config());
  const auto b = run_chain(model, short_config());
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t s = 0; s < a.samples.size(); ++s) {
    CHECK(a.samples[s].partition == b.samples[s].partition);
    CHECK(a.samples[s].log_post == b.samples[s].log_post);
    for (std::size_t c = 0; c < a.samples[s].params.size(); ++c) {
      CHECK(a.samples[s].params[c].beta == b.samples[s].params[c].beta);
      CHECK(a.samples[s].params[c].ell == b.samples[s].params[c].ell);
    }
  }
  auto other = short_config();
  other.seed = 2;
  const auto c = run_chain(model, other);
  bool differs = false;
  for (std::size_t s = 0; s < a.samples.size(); ++s) differs |= a.samples[s].log_post != c.samples[s].log_post;
  CHECK(differs);
}

TEST_CASE("samples are valid partitions with matching parameters") {
  Fixture f(6, 0.4, {0, 0, 0, 5, 5, 5});
  const Model model(f.data, f.hp, f.prior);
  auto cfg = short_config(30, 10);
  cfg.random_scan = true;
  for (auto target : {MhTarget::kCollapsed, MhTarget::kConditional}) {
    cfg.mh_target = target;
    const auto out = run_chain(model, cfg);
    for (const auto& s : out.samples) {
      CHECK(s.partition.size() == 6);
      CHECK(s.partition == Partition(s.partition.assignment()));
      REQUIRE(s.params.size() == s.partition.num_clusters());
      for (const auto& th : s.params) {
        CHECK(th.sigma2 > 0.0);
        CHECK(th.alpha > 0.0);
        CHECK(th.ell > 0.0);
        CHECK(th.beta.size() == 2);
      }
      CHECK(std::isfinite(s.log_post));
    }
    CHECK(out.alpha_acceptance >= 0.0);
    CHECK(out.alpha_acceptance <= 1.0);
  }
}

TEST_CASE("vanishing proposal scale freezes alpha and ell") {
  Fixture f(3, 0.0, {0, 1, 2});
  const Model model(f.data, f.hp, f.prior);
  auto cfg = short_config();
  cfg.proposal_sd = 1e-12;
  ChainState state = initial_state(model, cfg, Partition::one_block(3));
  const double alpha = state.params[0].alpha, ell = state.params[0].ell;
  KernelCache cache;
  for (int r = 0; r < 20; ++r) step1_update_params(state, model, cfg, cache);
  CHECK(std::abs(state.params[0].alpha - alpha) < 1e-9);
  CHECK(std::abs(state.params[0].ell - ell) < 1e-9);
}

TEST_CASE("fixed alpha and ell hook") {
  Fixture f(4, 0.2, {0, 0, 3, 3});
  const Model model(f.data, f.hp, f.prior);
  auto cfg = short_config();
  cfg.fixed_alpha_ell = std::pair{0.3, 0.7};
  const auto out = run_chain(model, cfg);
  for (const auto& s : out.samples) {
    for (const auto& th : s.params) {
      CHECK(th.alpha == 0.3);
      CHECK(th.ell == 0.7);
    }
  }
}

TEST_CASE("positive random-walk step recovers its target") {
  Rng rng = make_stream(3, Stream::kInit);
  const auto target = [](double x) { return log_gamma_density(x, 2.0, 1.0); };
  double x = 1.0, lt = target(x), sum = 0.0;
  std::size_t accepted = 0;
  const std::size_t steps = 400'000;
  for (std::size_t s = 0; s < steps; ++s) {
    bool acc = false;
    x = mh_positive_step(x, lt, 1.0, target, rng, acc);
    REQUIRE(x > 0.0);
    accepted += acc;
    sum += x;
  }
  CHECK(sum / static_cast<double>(steps) == doctest::Approx(2.0).epsilon(0.03));
  CHECK(accepted > 0);
  CHECK(lt == doctest::Approx(target(x)));

  // Non-positive proposals never reach the target.
  bool called_nonpositive = false;
  const auto guarded = [&](double v) {
    if (v <= 0.0) called_nonpositive = true;
    return -v;
  };
  double y = 0.01, ly = guarded(y);
  for (int s = 0; s < 1000; ++s) {
    bool acc = false;
    y = mh_positive_step(y, ly, 5.0, guarded, rng, acc);
  }
  CHECK_FALSE(called_nonpositive);
}

TEST_CASE("prior chain matches the enumerated prior") {
  Rng grng = make_stream(4, Stream::kInit);
  const auto graph = std::make_shared<const SpatialGraph>(test::random_graph(4, 0.6, grng));
  const auto prior = PartitionPrior::mrf_mfm(graph, std::make_shared<const MfmSpec>(4), 0.7);
  const auto hp = Hyperparams::defaults(1);
  std::map<std::vector<int>, double> freq;
  const std::size_t sweeps = 200'000;
  Rng rng = make_stream(5, Stream::kPriorChain);
  for_each_prior_sweep(prior, hp, Partition::singletons(4), sweeps, rng, {},
                       [&](std::size_t, const Partition& p, std::span<const AlphaEll> phi) {
                         REQUIRE(phi.size() == p.num_clusters());
                         freq[p.assignment()] += 1.0 / static_cast<double>(sweeps);
                       });
  std::map<std::vector<int>, double> exact;
  for (const auto& [p, pr] : testing::normalized_prior_small_n(prior)) exact[p.assignment()] = pr;
  CHECK(oracle::total_variation(freq, exact) < 0.01);
}

TEST_CASE("large lambda absorbs the prior chain into one block") {
  const auto graph = std::make_shared<const SpatialGraph>(test::path_graph(6));
  const auto prior = PartitionPrior::mrf_mfm(graph, std::make_shared<const MfmSpec>(6), 50.0);
  const auto draws = run_prior_chain(prior, Hyperparams::defaults(1), Partition::singletons(6), 2000, 7);
  std::size_t one = 0;
  for (std::size_t s = 100; s < draws.size(); ++s) one += draws[s].partition.num_clusters() == 1;
  CHECK(static_cast<double>(one) / static_cast<double>(draws.size() - 100) > 0.99);
}

TEST_CASE("prior chain parameter refresh draws from the gamma priors") {
  const auto graph = std::make_shared<const SpatialGraph>(test::path_graph(3));
  const auto prior = PartitionPrior::mrf_mfm(graph, std::make_shared<const MfmSpec>(3), 0.0);
  auto hp = Hyperparams::defaults(1);
  hp.a1 = 3.0;
  hp.b1 = 2.0;
  const auto draws = run_prior_chain(prior, hp, Partition::one_block(3), 50'000, 9);
  double sum = 0.0;
  for (const auto& d : draws) sum += d.phi[0].alpha;
  CHECK(sum / static_cast<double>(draws.size()) == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("configuration and model validation") {
  auto cfg = short_config(10, 10);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = short_config();
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = short_config();
  cfg.proposal_sd = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  Fixture f(4, 0.1, {});
  const auto other = std::make_shared<const SpatialGraph>(test::path_graph(5));
  const auto wrong = PartitionPrior::mrf_mfm(other, std::make_shared<const MfmSpec>(5), 0.1);
  CHECK_THROWS_AS(Model(f.data, f.hp, wrong), ValidationError);
  const auto hp3 = Hyperparams::defaults(3);
  CHECK_THROWS_AS(Model(f.data, hp3, f.prior), ValidationError);
}

TEST_CASE("well separated groups are recovered") {
  Fixture f(6, 0.5, {0, 0, 0, 30, 30, 30});
  const Model model(f.data, f.hp, f.prior);
  const auto out = run_chain(model, short_config(200, 100));
  const Partition truth(std::vector<int>{0, 0, 0, 1, 1, 1});
  std::size_t hits = 0;
  for (const auto& s : out.samples) hits += s.partition == truth;
  CHECK(static_cast<double>(hits) / static_cast<double>(out.samples.size()) > 0.8);
}

}
