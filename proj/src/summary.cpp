#include "mrfppm/summary.hpp"

#include <charconv>
#include <limits>
#include <ostream>
#include <string>

#include "mrfppm/errors.hpp"

namespace mrfppm {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

CoClusterMatrix co_cluster_matrix(std::span<const Partition> samples) {
  if (samples.empty()) throw DomainError("co-clustering: no samples");
  const std::size_t n = samples.front().size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& p : samples) {
    if (p.size() != n) throw ValidationError("co-clustering: samples differ in size");
    for (std::size_t c = 0; c < p.num_clusters(); ++c) {
      const auto& m = p.members(c);
      for (int a : m) {
        for (int b : m) counts(a, b) += 1.0;
      }
    }
  }
  return {n, counts / static_cast<double>(samples.size())};
}

DahlEstimate dahl_estimate(std::span<const Partition> samples) {
  const auto pi = co_cluster_matrix(samples);
  const auto n = static_cast<Eigen::Index>(pi.n);
  DahlEstimate best;
  best.loss = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& p = samples[s];
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double delta = p.same_cluster(static_cast<int>(i), static_cast<int>(j)) ? 1.0 : 0.0;
        const double d = delta - pi.pi_hat(i, j);
        loss += d * d;
      }
    }
    if (loss < best.loss) {
      best.loss = loss;
      best.index = s;
    }
  }
  best.partition = samples[best.index];
  return best;
}

double rand_index(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw ValidationError("rand index: partitions differ in size");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a.same_cluster(static_cast<int>(i), static_cast<int>(j));
      const bool sb = b.same_cluster(static_cast<int>(i), static_cast<int>(j));
      agree += sa == sb ? 1 : 0;
    }
  }
  return static_cast<double>(agree) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double stability_score(const Partition& reference, std::span<const Partition> replicates) {
  if (replicates.empty()) throw DomainError("stability: no replicates");
  double total = 0.0;
  for (const auto& r : replicates) total += rand_index(reference, r);
  return total / static_cast<double>(replicates.size());
}

ParamReport summarize_params(const Partition& partition, std::span<const ClusterParams> params) {
  if (params.size() != partition.num_clusters()) {
    throw ValidationError("summary: " + std::to_string(params.size()) + " parameter sets for " +
                          std::to_string(partition.num_clusters()) + " clusters");
  }
  ParamReport report;
  for (std::size_t c = 0; c < partition.num_clusters(); ++c) {
    report.rows.push_back(ClusterRow{static_cast<int>(c), partition.members(c), params[c]});
  }
  return report;
}

void write_param_csv(std::ostream& out, const ParamReport& report, const std::vector<std::string>& labels) {
  const Eigen::Index p = report.rows.empty() ? 0 : report.rows.front().params.beta.size();
  out << "cluster,size";
  for (Eigen::Index k = 0; k < p; ++k) out << ",beta_" << k;
  out << ",sigma2,ell,alpha,members\n";
  for (const auto& row : report.rows) {
    out << row.id << ',' << row.members.size();
    for (Eigen::Index k = 0; k < p; ++k) out << ',' << format_double(row.params.beta(k));
    out << ',' << format_double(row.params.sigma2) << ',' << format_double(row.params.ell) << ','
        << format_double(row.params.alpha) << ',';
    for (std::size_t m = 0; m < row.members.size(); ++m) {
      const auto idx = static_cast<std::size_t>(row.members[m]);
      if (m) out << ';';
      out << (idx < labels.size() ? labels[idx] : std::to_string(idx));
    }
    out << '\n';
  }
}

}  // namespace mrfppm
