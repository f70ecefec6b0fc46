#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mrfppm/gp_likelihood.hpp"
#include "mrfppm/partition.hpp"

namespace mrfppm {

/// Posterior co-clustering frequencies: symmetric, unit diagonal, entries in [0, 1].
struct CoClusterMatrix {
  std::size_t n = 0;
  Eigen::MatrixXd pi_hat;
};

CoClusterMatrix co_cluster_matrix(std::span<const Partition> samples);

struct DahlEstimate {
  Partition partition;
  std::size_t index = 0;
  double loss = 0.0;
};

/// Least-squares partition among the visited samples (earliest index wins ties).
DahlEstimate dahl_estimate(std::span<const Partition> samples);

double rand_index(const Partition& a, const Partition& b);

/// Mean Rand index between `reference` and each replicate.
double stability_score(const Partition& reference, std::span<const Partition> replicates);

struct ClusterRow {
  int id = 0;
  std::vector<int> members;
  ClusterParams params;
};

struct ParamReport {
  std::vector<ClusterRow> rows;
};

/// One row per canonical cluster with the parameters attached to it.
ParamReport summarize_params(const Partition& partition, std::span<const ClusterParams> params);

/// CSV mirroring the cluster-wise estimates table:
/// `cluster,size,beta_0,...,beta_{p-1},sigma2,ell,alpha,members`.
void write_param_csv(std::ostream& out, const ParamReport& report, const std::vector<std::string>& labels);

}  // namespace mrfppm
