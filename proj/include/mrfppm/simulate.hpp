#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mrfppm/gp_likelihood.hpp"
#include "mrfppm/graph.hpp"
#include "mrfppm/panel.hpp"
#include "mrfppm/partition.hpp"
#include "mrfppm/rng.hpp"

namespace mrfppm {

/// Data-generating process: ground-truth partition with one parameter set per cluster.
struct DgpSpec {
  Partition truth;
  std::vector<ClusterParams> cluster_params;
  /// Standard deviation of the perturbation added to every coefficient of
  /// cluster `perturbed_cluster`.
  double epsilon_sd = 0.0;
  std::size_t perturbed_cluster = 0;
  std::size_t n_times = 20;
  /// Covariates beyond the intercept, each i.i.d. Uniform(-5, 5).
  std::size_t n_covariates = 1;

  void validate() const;
};

struct SimulatedData {
  PanelData data;
  SpatialGraph graph;
  Partition truth;
  DgpSpec spec;  // with the realized perturbation folded in and epsilon_sd kept
  std::vector<Eigen::VectorXd> latent;  // f_i per location
};

/// Lower Cholesky factor of σ² exp{-Δt²/(2ℓ)} + 1e-10 I.
Eigen::MatrixXd latent_gp_factor(const Eigen::VectorXd& t, double sigma2, double ell);

/// Draws a panel over `graph` from `spec`: X_i = [1, U(-5,5)...], times equally
/// spaced on [-1, 1], latent f_i ~ N(0, σ² exp{-Δt²/(2ℓ)}) and
/// Y_i ~ N(X_i β + f_i, σ² α I). Labels are copied from the graph.
SimulatedData generate_panel(const SpatialGraph& graph, DgpSpec spec, Rng& rng);

/// The 48-state contiguity graph shipped with the library.
SpatialGraph us48_graph();
/// Ground-truth scenario partition 1 (three clusters) or 2 (two clusters) over us48_graph().
Partition us48_scenario(int scenario);

/// The eight built-in designs on the 48-state graph, ids 1..8.
DgpSpec builtin_dgp_spec(int id);
SimulatedData builtin_dgp(int id, std::uint64_t seed);

/// Axis-aligned block [row0, row1) × [col0, col1) of a grid.
struct GridBlock {
  std::size_t row0, col0, row1, col1;
};

/// rows × cols lattice with 4-neighbor edges; location r*cols + c.
SpatialGraph grid_graph(std::size_t rows, std::size_t cols);

/// Grid analogue: blocks must tile the grid; block k uses block_params[k].
SimulatedData grid_dgp(std::size_t rows, std::size_t cols, const std::vector<GridBlock>& blocks,
                       const std::vector<ClusterParams>& block_params, double epsilon_sd, std::uint64_t seed,
                       std::size_t n_times = 20);

}  // namespace mrfppm
