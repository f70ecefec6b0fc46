#include "mrfppm/simulate.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include "mrfppm/bundled_data.hpp"
#include "mrfppm/errors.hpp"

namespace mrfppm {

namespace {

constexpr double kGpJitter = 1e-10;

// Raw cluster ids (as written in the file) in graph location order.
std::vector<int> raw_scenario_ids(const char* text, const SpatialGraph& graph) {
  std::istringstream in(text);
  std::vector<int> raw(graph.size(), 0);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    const int idx = graph.index_of(line.substr(0, comma));
    if (idx < 0 || comma == std::string::npos) throw ValidationError("bundled scenario: bad row '" + line + "'");
    raw[static_cast<std::size_t>(idx)] = std::stoi(line.substr(comma + 1));
  }
  for (int r : raw) {
    if (r <= 0) throw ValidationError("bundled scenario: missing location");
  }
  return raw;
}

const char* scenario_text(int scenario) {
  switch (scenario) {
    case 1: return bundled::kScenario1Assignment;
    case 2: return bundled::kScenario2Assignment;
    default: throw DomainError("unknown scenario " + std::to_string(scenario) + " (expected 1 or 2)");
  }
}

ClusterParams make_params(double b0, double b1) {
  ClusterParams theta;
  theta.beta = Eigen::Vector2d(b0, b1);
  theta.sigma2 = 36.0;
  theta.alpha = 0.1;
  theta.ell = 10.0;
  return theta;
}

}  // namespace

Eigen::MatrixXd latent_gp_factor(const Eigen::VectorXd& t, double sigma2, double ell) {
  const Eigen::Index n = t.size();
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double d = t(a) - t(b);
      cov(a, b) = sigma2 * std::exp(-d * d / (2.0 * ell));
    }
    cov(a, a) += kGpJitter;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("dgp: latent covariance is not positive definite");
  return llt.matrixL();
}

void DgpSpec::validate() const {
  if (cluster_params.size() != truth.num_clusters()) {
    throw ValidationError("dgp: " + std::to_string(cluster_params.size()) + " parameter sets for " +
                          std::to_string(truth.num_clusters()) + " clusters");
  }
  if (n_times < 1) throw ValidationError("dgp: n_times must be >= 1");
  if (!(epsilon_sd >= 0.0)) throw ValidationError("dgp: epsilon_sd must be >= 0");
  if (perturbed_cluster >= cluster_params.size()) throw ValidationError("dgp: perturbed_cluster out of range");
  for (const auto& theta : cluster_params) {
    if (theta.beta.size() != static_cast<Eigen::Index>(n_covariates + 1)) {
      throw ValidationError("dgp: beta must have n_covariates + 1 entries");
    }
    if (!(theta.sigma2 > 0.0 && theta.alpha > 0.0 && theta.ell > 0.0)) {
      throw ValidationError("dgp: sigma2, alpha and ell must be positive");
    }
  }
}

SimulatedData generate_panel(const SpatialGraph& graph, DgpSpec spec, Rng& rng) {
  spec.validate();
  if (spec.truth.size() != graph.size()) throw ValidationError("dgp: truth and graph differ in size");

  auto& perturbed = spec.cluster_params[spec.perturbed_cluster].beta;
  for (Eigen::Index k = 0; k < perturbed.size(); ++k) perturbed(k) += spec.epsilon_sd * draw_normal(rng);

  const auto n = static_cast<Eigen::Index>(spec.n_times);
  const auto p = static_cast<Eigen::Index>(spec.n_covariates + 1);
  Eigen::VectorXd t(n);
  for (Eigen::Index j = 0; j < n; ++j) t(j) = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);

  // One latent factor per distinct (σ², ℓ).
  std::vector<std::pair<std::pair<double, double>, Eigen::MatrixXd>> factors;
  auto latent_factor = [&](double sigma2, double ell) -> const Eigen::MatrixXd& {
    for (const auto& [key, f] : factors) {
      if (key.first == sigma2 && key.second == ell) return f;
    }
    factors.emplace_back(std::make_pair(sigma2, ell), latent_gp_factor(t, sigma2, ell));
    return factors.back().second;
  };

  std::vector<LocationSeries> locations;
  std::vector<Eigen::VectorXd> latent;
  locations.reserve(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& theta = spec.cluster_params[static_cast<std::size_t>(spec.truth.cluster_of(static_cast<int>(i)))];
    LocationSeries s;
    s.t = t;
    s.x.resize(n, p);
    for (Eigen::Index j = 0; j < n; ++j) {
      s.x(j, 0) = 1.0;
      for (Eigen::Index k = 1; k < p; ++k) s.x(j, k) = -5.0 + 10.0 * draw_uniform(rng);
    }
    Eigen::VectorXd z(n);
    for (Eigen::Index j = 0; j < n; ++j) z(j) = draw_normal(rng);
    Eigen::VectorXd f = latent_factor(theta.sigma2, theta.ell) * z;
    const double noise_sd = std::sqrt(theta.sigma2 * theta.alpha);
    s.y = s.x * theta.beta + f;
    for (Eigen::Index j = 0; j < n; ++j) s.y(j) += noise_sd * draw_normal(rng);
    locations.push_back(std::move(s));
    latent.push_back(std::move(f));
  }

  std::vector<std::string> labels = graph.labels();
  if (labels.empty()) {
    for (std::size_t i = 0; i < graph.size(); ++i) labels.push_back(std::to_string(i));
  }
  SimulatedData out{PanelData(std::move(locations), std::move(labels)), graph, spec.truth, std::move(spec),
                    std::move(latent)};
  return out;
}

SpatialGraph us48_graph() {
  std::istringstream in(bundled::kUs48Adjacency);
  return parse_adjacency(in);
}

Partition us48_scenario(int scenario) {
  const char* text = scenario_text(scenario);
  return Partition(raw_scenario_ids(text, us48_graph()));
}

DgpSpec builtin_dgp_spec(int id) {
  if (id < 1 || id > 8) throw DomainError("unknown DGP id " + std::to_string(id) + " (expected 1..8)");
  // Parameter lists in the order of the file's cluster ids 1, 2, 3.
  std::vector<ClusterParams> listed;
  switch ((id + 1) / 2) {
    case 1: listed = {make_params(0, 1), make_params(28, 1), make_params(-28, 1)}; break;
    case 2: listed = {make_params(14, 1), make_params(-14, 1)}; break;
    case 3: listed = {make_params(0, 5), make_params(-20, 4), make_params(20, 6)}; break;
    default: listed = {make_params(10, 5), make_params(-10, 4)}; break;
  }
  const int scenario = (id == 1 || id == 2 || id == 5 || id == 6) ? 1 : 2;
  const auto raw = raw_scenario_ids(scenario_text(scenario), us48_graph());

  DgpSpec spec;
  spec.truth = Partition(raw);
  spec.epsilon_sd = id % 2 == 1 ? 0.1 : 0.01;
  spec.cluster_params.resize(spec.truth.num_clusters());
  for (std::size_t c = 0; c < spec.truth.num_clusters(); ++c) {
    const int file_id = raw[static_cast<std::size_t>(spec.truth.members(c).front())];
    if (file_id < 1 || static_cast<std::size_t>(file_id) > listed.size()) {
      throw ValidationError("bundled scenario: cluster id " + std::to_string(file_id) + " out of range");
    }
    spec.cluster_params[c] = listed[static_cast<std::size_t>(file_id - 1)];
    if (file_id == 1) spec.perturbed_cluster = c;
  }
  return spec;
}

SimulatedData builtin_dgp(int id, std::uint64_t seed) {
  auto spec = builtin_dgp_spec(id);
  Rng rng = make_stream(seed, Stream::kSimulation);
  return generate_panel(us48_graph(), std::move(spec), rng);
}

SpatialGraph grid_graph(std::size_t rows, std::size_t cols) {
  if (rows * cols < 1) throw ValidationError("grid: rows and cols must be positive");
  std::vector<std::pair<int, int>> edges;
  std::vector<std::string> labels;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = static_cast<int>(r * cols + c);
      labels.push_back("r" + std::to_string(r) + "c" + std::to_string(c));
      if (c + 1 < cols) edges.emplace_back(v, v + 1);
      if (r + 1 < rows) edges.emplace_back(v, v + static_cast<int>(cols));
    }
  }
  return SpatialGraph(rows * cols, edges, std::move(labels));
}

SimulatedData grid_dgp(std::size_t rows, std::size_t cols, const std::vector<GridBlock>& blocks,
                       const std::vector<ClusterParams>& block_params, double epsilon_sd, std::uint64_t seed,
                       std::size_t n_times) {
  if (rows * cols < 2) throw ValidationError("grid: need at least 2 locations");
  if (blocks.empty() || blocks.size() != block_params.size()) {
    throw ValidationError("grid: need one parameter set per block");
  }
  std::vector<int> block_of(rows * cols, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    if (blk.row0 >= blk.row1 || blk.col0 >= blk.col1 || blk.row1 > rows || blk.col1 > cols) {
      throw ValidationError("grid: block " + std::to_string(b) + " is empty or out of bounds");
    }
    for (std::size_t r = blk.row0; r < blk.row1; ++r) {
      for (std::size_t c = blk.col0; c < blk.col1; ++c) {
        auto& slot = block_of[r * cols + c];
        if (slot >= 0) throw ValidationError("grid: blocks overlap at cell r" + std::to_string(r) + "c" + std::to_string(c));
        slot = static_cast<int>(b);
      }
    }
  }
  for (std::size_t v = 0; v < block_of.size(); ++v) {
    if (block_of[v] < 0) throw ValidationError("grid: blocks do not cover cell " + std::to_string(v));
  }

  DgpSpec spec;
  spec.truth = Partition(block_of);
  spec.epsilon_sd = epsilon_sd;
  spec.n_times = n_times;
  spec.n_covariates = block_params.front().beta.size() > 0 ? static_cast<std::size_t>(block_params.front().beta.size() - 1) : 0;
  spec.cluster_params.resize(spec.truth.num_clusters());
  for (std::size_t c = 0; c < spec.truth.num_clusters(); ++c) {
    const auto b = static_cast<std::size_t>(block_of[static_cast<std::size_t>(spec.truth.members(c).front())]);
    spec.cluster_params[c] = block_params[b];
    if (b == 0) spec.perturbed_cluster = c;
  }
  Rng rng = make_stream(seed, Stream::kSimulation);
  return generate_panel(grid_graph(rows, cols), std::move(spec), rng);
}

}  // namespace mrfppm
