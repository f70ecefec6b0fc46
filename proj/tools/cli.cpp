#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include "mrfppm/bundled_data.hpp"
#include "mrfppm/errors.hpp"
#include "mrfppm/io.hpp"
#include "mrfppm/panel.hpp"
#include "mrfppm/simulate.hpp"
#include "mrfppm/summary.hpp"

namespace mrfppm::cli {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

namespace {

// ---------------------------------------------------------------------------
// Scalar parsing and formatting

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ValidationError("config key '" + key + "': '" + value + "' is not " + expected);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad_value(key, s, "a number");
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad_value(key, s, "an integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, s, "a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    out.push_back(parse_double(key, b == std::string::npos ? std::string{} : item.substr(b, e - b + 1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Key table: one entry per config key, used for parsing, manifests and key checks.

struct Field {
  std::string key;
  bool is_path;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MRFPPM_DOUBLE(KEY, MEMBER)                                                        \
  Field {                                                                                 \
    KEY, false, [](RunConfig& c, const std::string& s) { c.MEMBER = parse_double(KEY, s); }, \
        [](const RunConfig& c) { return fmt(c.MEMBER); }                                  \
  }
#define MRFPPM_SIZE(KEY, MEMBER)                                                                  \
  Field {                                                                                         \
    KEY, false, [](RunConfig& c, const std::string& s) { c.MEMBER = parse_int<std::size_t>(KEY, s); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                               \
  }
#define MRFPPM_BOOL(KEY, MEMBER)                                                        \
  Field {                                                                               \
    KEY, false, [](RunConfig& c, const std::string& s) { c.MEMBER = parse_bool(KEY, s); }, \
        [](const RunConfig& c) { return fmt_bool(c.MEMBER); }                           \
  }
#define MRFPPM_PATH(KEY, MEMBER)                                                                     \
  Field {                                                                                            \
    KEY, true, [](RunConfig& c, const std::string& s) { c.MEMBER = s; }, [](const RunConfig& c) { return c.MEMBER; } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      MRFPPM_PATH("data.panel", panel),
      MRFPPM_PATH("data.adjacency", adjacency),
      MRFPPM_BOOL("data.rescale_time", rescale_time),

      Field{"prior.eppf", false,
            [](RunConfig& c, const std::string& s) {
              if (s != "mfm" && s != "dp") bad_value("prior.eppf", s, "one of mfm, dp");
              c.eppf = s;
            },
            [](const RunConfig& c) { return c.eppf; }},
      MRFPPM_DOUBLE("prior.gamma", gamma),
      Field{"prior.k_prior", false,
            [](RunConfig& c, const std::string& s) {
              if (s == "shifted_poisson") {
                c.k_prior.kind = KPrior::Kind::kShiftedPoisson;
              } else if (s == "truncated_poisson") {
                c.k_prior.kind = KPrior::Kind::kTruncatedPoisson;
              } else {
                bad_value("prior.k_prior", s, "one of shifted_poisson, truncated_poisson");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.k_prior.kind == KPrior::Kind::kShiftedPoisson ? "shifted_poisson"
                                                                                 : "truncated_poisson");
            }},
      MRFPPM_DOUBLE("prior.k_rate", k_prior.rate),
      MRFPPM_DOUBLE("prior.dp_concentration", dp_concentration),
      MRFPPM_DOUBLE("prior.lambda", lambda),

      Field{"hyper.mu0", false, [](RunConfig& c, const std::string& s) { c.mu0 = parse_list("hyper.mu0", s); },
            [](const RunConfig& c) { return fmt_list(c.mu0); }},
      Field{"hyper.lambda0", false,
            [](RunConfig& c, const std::string& s) { c.lambda0 = parse_list("hyper.lambda0", s); },
            [](const RunConfig& c) { return fmt_list(c.lambda0); }},
      MRFPPM_DOUBLE("hyper.a0", a0),
      MRFPPM_DOUBLE("hyper.b0", b0),
      MRFPPM_DOUBLE("hyper.a1", a1),
      MRFPPM_DOUBLE("hyper.b1", b1),
      MRFPPM_DOUBLE("hyper.a2", a2),
      MRFPPM_DOUBLE("hyper.b2", b2),

      MRFPPM_SIZE("mcmc.n_iter", mcmc.n_iter),
      MRFPPM_SIZE("mcmc.n_burnin", mcmc.n_burnin),
      MRFPPM_SIZE("mcmc.n_rep", mcmc.n_rep),
      MRFPPM_SIZE("mcmc.m_aux", mcmc.m_aux),
      MRFPPM_DOUBLE("mcmc.proposal_sd", mcmc.proposal_sd),
      MRFPPM_SIZE("mcmc.thin", mcmc.thin),
      MRFPPM_BOOL("mcmc.random_scan", mcmc.random_scan),
      Field{"mcmc.mh_target", false,
            [](RunConfig& c, const std::string& s) {
              if (s == "collapsed") {
                c.mcmc.mh_target = MhTarget::kCollapsed;
              } else if (s == "conditional") {
                c.mcmc.mh_target = MhTarget::kConditional;
              } else {
                bad_value("mcmc.mh_target", s, "one of collapsed, conditional");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.mcmc.mh_target == MhTarget::kCollapsed ? "collapsed" : "conditional");
            }},

      Field{"selection.lambda_grid", false,
            [](RunConfig& c, const std::string& s) {
              c.selection.lambda_grid = parse_list("selection.lambda_grid", s);
            },
            [](const RunConfig& c) { return fmt_list(c.selection.lambda_grid); }},
      MRFPPM_SIZE("selection.m_total", selection.m_total),
      MRFPPM_SIZE("selection.m_burnin", selection.m_burnin),
      MRFPPM_SIZE("selection.warmstart_iters", selection.warmstart_iters),
      MRFPPM_SIZE("selection.warmstart_burnin", selection.warmstart_burnin),
      MRFPPM_BOOL("selection.random_scan", selection.prior_chain.random_scan),
      MRFPPM_BOOL("selection.refresh_params", selection.prior_chain.refresh_params),
      MRFPPM_SIZE("selection.workers", workers),
      MRFPPM_BOOL("selection.fit_selected", fit_selected),

      Field{"simulate.dgp", false, [](RunConfig& c, const std::string& s) { c.dgp = parse_int<int>("simulate.dgp", s); },
            [](const RunConfig& c) { return std::to_string(c.dgp); }},
      Field{"simulate.grid", false, [](RunConfig& c, const std::string& s) { c.grid = s; },
            [](const RunConfig& c) { return c.grid; }},
      MRFPPM_SIZE("simulate.grid_blocks", grid_blocks),
      MRFPPM_DOUBLE("simulate.epsilon", epsilon),
      MRFPPM_SIZE("simulate.n_times", n_times),

      MRFPPM_PATH("eval.truth", truth),
      MRFPPM_PATH("eval.estimate", estimate),
      MRFPPM_PATH("eval.chain", chain),

      Field{"run.seed", false,
            [](RunConfig& c, const std::string& s) { c.seed = parse_int<std::uint64_t>("run.seed", s); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

#undef MRFPPM_DOUBLE
#undef MRFPPM_SIZE
#undef MRFPPM_BOOL
#undef MRFPPM_PATH

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

std::string absolute_path(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

// ---------------------------------------------------------------------------
// Model assembly

struct Inputs {
  std::shared_ptr<const SpatialGraph> graph;
  PanelData data;
};

Inputs load_inputs(const RunConfig& cfg) {
  if (cfg.adjacency.empty()) throw ValidationError("data.adjacency is not set");
  if (cfg.panel.empty()) throw ValidationError("data.panel is not set");
  Inputs in;
  in.graph = std::make_shared<const SpatialGraph>(load_adjacency(cfg.adjacency));
  in.data = load_panel_csv(cfg.panel).aligned_to(*in.graph);
  if (cfg.rescale_time) in.data = in.data.rescaled_time();
  return in;
}

Hyperparams make_hyperparams(const RunConfig& cfg, Eigen::Index p) {
  Hyperparams hp = Hyperparams::defaults(p);
  if (cfg.mu0.size() == 1) {
    hp.mu0.setConstant(cfg.mu0[0]);
  } else if (!cfg.mu0.empty()) {
    if (static_cast<Eigen::Index>(cfg.mu0.size()) != p) {
      throw ValidationError("hyper.mu0 needs 1 or " + std::to_string(p) + " values");
    }
    hp.mu0 = Eigen::Map<const Eigen::VectorXd>(cfg.mu0.data(), p);
  }
  if (cfg.lambda0.size() == 1) {
    hp.lambda0 = cfg.lambda0[0] * Eigen::MatrixXd::Identity(p, p);
  } else if (!cfg.lambda0.empty()) {
    if (static_cast<Eigen::Index>(cfg.lambda0.size()) != p * p) {
      throw ValidationError("hyper.lambda0 needs 1 or " + std::to_string(p * p) + " values (row-major)");
    }
    hp.lambda0 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cfg.lambda0.data(), p, p);
  }
  hp.a0 = cfg.a0;
  hp.b0 = cfg.b0;
  hp.a1 = cfg.a1;
  hp.b1 = cfg.b1;
  hp.a2 = cfg.a2;
  hp.b2 = cfg.b2;
  hp.validate();
  return hp;
}

std::shared_ptr<const Eppf> make_eppf(const RunConfig& cfg, std::size_t n) {
  if (cfg.eppf == "dp") return std::make_shared<const DpSpec>(n, cfg.dp_concentration);
  return std::make_shared<const MfmSpec>(n, cfg.gamma, cfg.k_prior);
}

McmcConfig mcmc_config(const RunConfig& cfg) {
  McmcConfig m = cfg.mcmc;
  m.seed = cfg.seed;
  return m;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  body(out);
  if (!out) throw ValidationError("write failed: " + path.string());
}

std::string format4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Commands

int do_fit(const RunConfig& cfg, const fs::path& outdir, std::ostream& out, std::ostream& err) {
  const auto in = load_inputs(cfg);
  const auto hp = make_hyperparams(cfg, in.data.num_covariates());
  const PartitionPrior prior(make_eppf(cfg, in.data.size()), in.graph, std::make_shared<const MrfSpec>(cfg.lambda));
  const Model model(in.data, hp, prior);
  fs::create_directories(outdir);

  ChainOutput chain;
  try {
    chain = run_chain(model, mcmc_config(cfg));
  } catch (const ChainFailure& e) {
    const auto& st = e.last_state;
    std::ostringstream rng_state;
    rng_state << st.rng;
    nlohmann::json checkpoint = {
        {"error", e.what()},
        {"state", sample_to_json(ChainSample{st.iteration, st.partition, st.params, 0.0})},
        {"rng", rng_state.str()}};
    write_file(outdir / "checkpoint.json", [&](std::ostream& o) { o << checkpoint.dump(2) << '\n'; });
    err << "error: numerical failure: " << e.what() << "; checkpoint written to "
        << (outdir / "checkpoint.json").string() << '\n';
    return 2;
  }
  if (chain.samples.empty()) throw ValidationError("mcmc: no samples retained after burn-in and thinning");

  std::vector<Partition> partitions;
  partitions.reserve(chain.samples.size());
  for (const auto& s : chain.samples) partitions.push_back(s.partition);
  const auto dahl = dahl_estimate(partitions);
  const auto report = summarize_params(dahl.partition, chain.samples[dahl.index].params);
  const double stability = stability_score(dahl.partition, partitions);

  write_file(outdir / "chain.jsonl", [&](std::ostream& o) { write_chain_jsonl(o, chain); });
  auto summary = summary_to_json(dahl, report, stability);
  summary["labels"] = in.data.labels();
  summary["lambda"] = cfg.lambda;
  summary["alpha_acceptance"] = chain.alpha_acceptance;
  summary["ell_acceptance"] = chain.ell_acceptance;
  write_file(outdir / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  write_file(outdir / "summary.csv", [&](std::ostream& o) { write_param_csv(o, report, in.data.labels()); });
  write_file(outdir / "estimate.csv",
             [&](std::ostream& o) { write_assignment_csv(o, dahl.partition, in.data.labels()); });
  out << "fit: " << chain.samples.size() << " samples, Dahl estimate has " << dahl.partition.num_clusters()
      << " clusters; outputs in " << outdir.string() << '\n';
  return 0;
}

int do_tune(RunConfig cfg, const fs::path& outdir, std::ostream& out, std::ostream& err) {
  const auto in = load_inputs(cfg);
  const auto hp = make_hyperparams(cfg, in.data.num_covariates());
  SelectionConfig sel = cfg.selection;
  sel.shared_seed = cfg.seed;
  const auto result =
      select_lambda(in.data, in.graph, hp, make_eppf(cfg, in.data.size()), sel, mcmc_config(cfg), cfg.workers);
  fs::create_directories(outdir);
  write_file(outdir / "selection.json", [&](std::ostream& o) { o << selection_to_json(result).dump(2) << '\n'; });
  out << "tune: selected lambda = " << fmt(result.selected) << '\n';
  if (!cfg.fit_selected) return 0;
  cfg.lambda = result.selected;
  return do_fit(cfg, outdir, out, err);
}

int do_simulate(const RunConfig& cfg, const fs::path& outdir, std::ostream& out) {
  SimulatedData sim = [&] {
    if (cfg.grid.empty()) return builtin_dgp(cfg.dgp, cfg.seed);
    const auto x = cfg.grid.find('x');
    if (x == std::string::npos) throw ValidationError("simulate.grid must look like COLSxROWS, got '" + cfg.grid + "'");
    const auto cols = parse_int<std::size_t>("simulate.grid", cfg.grid.substr(0, x));
    const auto rows = parse_int<std::size_t>("simulate.grid", cfg.grid.substr(x + 1));
    const std::size_t nb = cfg.grid_blocks;
    if (nb < 1 || nb > cols) throw ValidationError("simulate.grid_blocks must be between 1 and the column count");
    std::vector<GridBlock> blocks;
    std::vector<ClusterParams> params;
    for (std::size_t b = 0; b < nb; ++b) {
      blocks.push_back({0, b * cols / nb, rows, (b + 1) * cols / nb});
      const double frac = nb > 1 ? static_cast<double>(b) / static_cast<double>(nb - 1) : 0.0;
      ClusterParams theta;
      theta.beta = Eigen::Vector2d(10.0 - 20.0 * frac, 5.0 - frac);
      theta.sigma2 = 36.0;
      theta.alpha = 0.1;
      theta.ell = 10.0;
      params.push_back(theta);
    }
    return grid_dgp(rows, cols, blocks, params, cfg.epsilon, cfg.seed, cfg.n_times);
  }();
  fs::create_directories(outdir);
  write_file(outdir / "panel.csv", [&](std::ostream& o) { write_panel_csv(o, sim.data); });
  write_file(outdir / "adjacency.txt", [&](std::ostream& o) { write_adjacency(o, sim.graph); });
  write_file(outdir / "truth.csv", [&](std::ostream& o) { write_assignment_csv(o, sim.truth, sim.graph.labels()); });
  out << "simulate: " << sim.data.size() << " locations, " << sim.truth.num_clusters() << " true clusters; outputs in "
      << outdir.string() << '\n';
  return 0;
}

int do_eval(const RunConfig& cfg, const std::optional<fs::path>& outdir, std::ostream& out) {
  if (cfg.truth.empty()) throw ValidationError("eval.truth is not set");
  if (cfg.estimate.empty() == cfg.chain.empty()) throw ValidationError("eval needs exactly one of estimate, chain");
  const auto truth = load_assignment_csv(cfg.truth);
  const SpatialGraph graph = cfg.adjacency.empty()
                                 ? SpatialGraph(truth.labels.size(), std::vector<std::pair<int, int>>{}, truth.labels)
                                 : load_adjacency(cfg.adjacency);
  const Partition truth_p = assignment_for_graph(truth, graph);

  std::ostringstream report;
  if (!cfg.estimate.empty()) {
    const auto est = load_assignment_csv(cfg.estimate);
    report << "rand_index " << format4(rand_index(truth_p, assignment_for_graph(est, graph))) << '\n';
  } else {
    std::ifstream chain_in(cfg.chain);
    if (!chain_in) throw ValidationError("cannot open chain file: " + cfg.chain);
    const auto samples = read_chain_jsonl(chain_in);
    if (samples.empty()) throw ValidationError("chain file has no samples: " + cfg.chain);
    std::vector<Partition> partitions;
    std::map<std::size_t, std::size_t> counts;
    for (const auto& s : samples) {
      partitions.push_back(s.partition);
      ++counts[s.partition.num_clusters()];
    }
    const auto dahl = dahl_estimate(partitions);
    report << "rand_index " << format4(rand_index(truth_p, dahl.partition)) << '\n';
    report << "num_clusters proportion\n";
    for (const auto& [k, c] : counts) {
      report << k << ' ' << format4(static_cast<double>(c) / static_cast<double>(samples.size())) << '\n';
    }
  }
  out << report.str();
  if (outdir) {
    fs::create_directories(*outdir);
    write_file(*outdir / "eval.txt", [&](std::ostream& o) { o << report.str(); });
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig resolve_config(const ptree& tree) {
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      if (section == "meta") {
        if (name == "command") cfg.command = value.data();
        continue;
      }
      const Field* f = find_field(key);
      if (!f) throw ValidationError("unknown config key '" + key + "'");
      f->set(cfg, value.data());
    }
  }
  return cfg;
}

ptree config_tree(const RunConfig& cfg) {
  ptree tree;
  tree.put("meta.command", cfg.command);
  tree.put("meta.version", std::string(bundled::kVersion));
  for (const auto& f : fields()) tree.put(f.key, f.get(cfg));
  return tree;
}

ptree load_config_tree(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(path.string() + ": " + e.message(), e.line());
  }
  const fs::path base = fs::absolute(path).parent_path();
  for (auto& [section, body] : tree) {
    for (auto& [name, value] : body) {
      const Field* f = find_field(section + "." + name);
      if (f && f->is_path) value.data() = absolute_path(value.data(), base);
    }
  }
  return tree;
}

void write_manifest(const fs::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  boost::property_tree::write_ini(out, config_tree(cfg));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial panel clustering with a graph-tilted mixture-of-finite-mixtures prior"};
  app.name("mrfppm");
  app.set_version_flag("--version", std::string(bundled::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir = "out";
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;   // key -> raw value
  std::map<std::string, std::string> path_values;   // key -> raw path
  bool rescale = false;
  std::string manifest_path;

  auto common = [&](CLI::App* sub, bool with_outdir) {
    sub->add_option("--config", config_path, "INI config file");
    if (with_outdir) sub->add_option("--outdir", outdir, "output directory")->capture_default_str();
    sub->add_option("--seed", flag_values["run.seed"], "master seed");
    sub->add_option("--set", sets, "override any config key: section.key=value");
  };
  auto data_opts = [&](CLI::App* sub) {
    sub->add_option("--panel", path_values["data.panel"], "panel CSV");
    sub->add_option("--adjacency", path_values["data.adjacency"], "adjacency file");
    sub->add_flag("--rescale-time", rescale, "map each location's times onto [-1, 1]");
    sub->add_option("--n-iter", flag_values["mcmc.n_iter"], "MCMC iterations");
    sub->add_option("--n-burnin", flag_values["mcmc.n_burnin"], "burn-in iterations");
  };

  auto* fit = app.add_subcommand("fit", "run the sampler at a fixed lambda");
  common(fit, true);
  data_opts(fit);
  fit->add_option("--lambda", flag_values["prior.lambda"], "spatial smoothness");

  auto* tune = app.add_subcommand("tune", "select lambda by marginal likelihood, then fit");
  common(tune, true);
  data_opts(tune);
  tune->add_option("--lambda-grid", flag_values["selection.lambda_grid"], "comma-separated lambda values");
  tune->add_option("--m-total", flag_values["selection.m_total"], "prior-chain sweeps");
  tune->add_option("--m-burnin", flag_values["selection.m_burnin"], "prior-chain burn-in sweeps");
  tune->add_option("--workers", flag_values["selection.workers"], "threads over grid points");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic panel");
  common(sim, true);
  sim->add_option("--dgp", flag_values["simulate.dgp"], "built-in design 1..8");
  sim->add_option("--grid", flag_values["simulate.grid"], "grid design COLSxROWS (overrides --dgp)");
  sim->add_option("--grid-blocks", flag_values["simulate.grid_blocks"], "vertical strips in the grid design");
  sim->add_option("--epsilon", flag_values["simulate.epsilon"], "perturbation sd for the grid design");

  auto* eval = app.add_subcommand("eval", "Rand index against a ground-truth assignment");
  common(eval, false);
  std::string eval_outdir;
  eval->add_option("--outdir", eval_outdir, "also write eval.txt and a manifest here");
  eval->add_option("--truth", path_values["eval.truth"], "truth assignment CSV");
  eval->add_option("--estimate", path_values["eval.estimate"], "estimated assignment CSV");
  eval->add_option("--chain", path_values["eval.chain"], "chain JSON-lines file");
  eval->add_option("--adjacency", path_values["data.adjacency"], "adjacency file fixing the location order");

  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
  rerun->add_option("manifest", manifest_path, "manifest.ini")->required();
  rerun->add_option("--outdir", outdir, "output directory")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    ptree tree;
    std::string command;
    if (rerun->parsed()) {
      tree = load_config_tree(manifest_path);
      command = tree.get<std::string>("meta.command", "");
      if (command.empty() || command == "rerun") throw ValidationError(manifest_path + ": no command in [meta]");
    } else {
      command = app.get_subcommands().front()->get_name();
      if (!config_path.empty()) tree = load_config_tree(config_path);
      for (const auto& [key, value] : flag_values) {
        if (!value.empty()) tree.put(key, value);
      }
      for (const auto& [key, value] : path_values) {
        if (!value.empty()) tree.put(key, absolute_path(value, fs::current_path()));
      }
      if (rescale) tree.put("data.rescale_time", "true");
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects section.key=value, got '" + s + "'");
        const std::string key = s.substr(0, eq);
        const Field* f = find_field(key);
        if (!f) throw ValidationError("unknown config key '" + key + "'");
        const std::string value = s.substr(eq + 1);
        tree.put(key, f->is_path ? absolute_path(value, fs::current_path()) : value);
      }
    }
    tree.erase("meta");
    RunConfig cfg = resolve_config(tree);
    cfg.command = command;

    const fs::path out_path = command == "eval" && !rerun->parsed() ? fs::path(eval_outdir) : fs::path(outdir);
    int status = 0;
    if (command == "fit") {
      status = do_fit(cfg, out_path, out, err);
    } else if (command == "tune") {
      status = do_tune(cfg, out_path, out, err);
    } else if (command == "simulate") {
      status = do_simulate(cfg, out_path, out);
    } else if (command == "eval") {
      std::optional<fs::path> eval_dir;
      if (!out_path.empty() && (rerun->parsed() || !eval_outdir.empty())) eval_dir = out_path;
      status = do_eval(cfg, eval_dir, out);
      if (!eval_dir) return status;
    } else {
      throw ValidationError("unknown command '" + command + "'");
    }
    if (status == 0) write_manifest(out_path / "manifest.ini", cfg);
    return status;
  } catch (const NumericalError& e) {
    err << "error: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mrfppm::cli
