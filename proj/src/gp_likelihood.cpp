#include "mrfppm/gp_likelihood.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "mrfppm/errors.hpp"

namespace mrfppm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2π)

double llt_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Hyperparams Hyperparams::defaults(Eigen::Index p) {
  Hyperparams hp;
  hp.mu0 = Eigen::VectorXd::Zero(p);
  hp.lambda0 = 1e-6 * Eigen::MatrixXd::Identity(p, p);
  return hp;
}

void Hyperparams::validate() const {
  const auto p = mu0.size();
  if (p < 1) throw ValidationError("hyperparameters: mu0 is empty");
  if (lambda0.rows() != p || lambda0.cols() != p) throw ValidationError("hyperparameters: lambda0 must be p x p");
  for (double v : {a0, b0, a1, b1, a2, b2}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("hyperparameters: gamma shapes and rates must be > 0");
  }
  if (!lambda0.isApprox(lambda0.transpose(), 1e-12)) throw ValidationError("hyperparameters: lambda0 not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(lambda0);
  if (llt.info() != Eigen::Success) throw ValidationError("hyperparameters: lambda0 not positive definite");
}

CorrelationMatrix correlation_matrix(const Eigen::VectorXd& t, double alpha, double ell) {
  if (!(alpha > 0.0) || !(ell > 0.0)) throw DomainError("correlation_matrix: alpha and ell must be positive");
  const auto n = t.size();
  CorrelationMatrix out;
  out.matrix.resize(n, n);
  const double scale = -0.5 / ell;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.matrix(k, k) = 1.0 + alpha;
    for (Eigen::Index l = 0; l < k; ++l) {
      const double d = t[k] - t[l];
      out.matrix(k, l) = out.matrix(l, k) = std::exp(scale * d * d);
    }
  }
  out.llt.compute(out.matrix);
  if (out.llt.info() != Eigen::Success) {
    throw NumericalError("correlation_matrix: Cholesky failed (alpha=" + std::to_string(alpha) +
                         ", ell=" + std::to_string(ell) + ")");
  }
  out.log_det = llt_log_det(out.llt);
  return out;
}

std::size_t KernelCache::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = std::hash<std::uint64_t>{}(k.alpha_bits);
  h ^= std::hash<std::uint64_t>{}(k.ell_bits) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::size_t>(k.grid) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

const CorrelationMatrix& KernelCache::get(const PanelData& data, std::size_t location, double alpha, double ell) {
  const Key key{data.grid_id(location), std::bit_cast<std::uint64_t>(alpha), std::bit_cast<std::uint64_t>(ell)};
  auto it = entries_.find(key);
  if (it == entries_.end()) it = entries_.emplace(key, correlation_matrix(data[location].t, alpha, ell)).first;
  return it->second;
}

namespace {

const CorrelationMatrix& factor_for(const PanelData& data, std::size_t i, double alpha, double ell,
                                    KernelCache* cache, CorrelationMatrix& scratch) {
  if (cache) return cache->get(data, i, alpha, ell);
  scratch = correlation_matrix(data[i].t, alpha, ell);
  return scratch;
}

}  // namespace

LocationGram location_gram(const PanelData& data, std::size_t location, double alpha, double ell,
                           KernelCache* cache) {
  CorrelationMatrix scratch;
  const auto& k = factor_for(data, location, alpha, ell, cache, scratch);
  const auto& s = data[location];
  const auto p = s.x.cols();
  Eigen::MatrixXd stacked(s.n(), p + 1);
  stacked.leftCols(p) = s.x;
  stacked.col(p) = s.y;
  k.llt.matrixL().solveInPlace(stacked);
  const Eigen::MatrixXd gram = stacked.transpose() * stacked;
  LocationGram g;
  g.xtkx = gram.topLeftCorner(p, p);
  g.xtky = gram.col(p).head(p);
  g.ytky = gram(p, p);
  g.log_det = k.log_det;
  g.n = s.n();
  return g;
}

GramSum& GramSum::operator+=(const LocationGram& g) {
  xtkx += g.xtkx;
  xtky += g.xtky;
  ytky += g.ytky;
  log_det += g.log_det;
  n += g.n;
  return *this;
}

ClusterSuffStats finalize_suffstats(const GramSum& sum, const Hyperparams& hp) {
  ClusterSuffStats ss;
  ss.lambda_c = sum.xtkx + hp.lambda0;
  const Eigen::VectorXd prior_shift = hp.lambda0 * hp.mu0;
  const Eigen::VectorXd rhs = sum.xtky + prior_shift;
  ss.lambda_llt.compute(ss.lambda_c);
  if (ss.lambda_llt.info() != Eigen::Success) throw NumericalError("cluster_suffstats: Lambda_c not positive definite");
  ss.mu_c = ss.lambda_llt.solve(rhs);
  ss.n_total = sum.n;
  ss.log_det_sum = sum.log_det;
  ss.a_c = 0.5 * static_cast<double>(sum.n) + hp.a0;

  const double prior_quad = hp.mu0.dot(prior_shift);
  double quad = sum.ytky + prior_quad - ss.mu_c.dot(rhs);
  const double scale = std::abs(sum.ytky) + std::abs(prior_quad);
  if (quad < 0.0) {
    if (quad < -1e-8 * std::max(scale, 1.0)) {
      throw NumericalError("cluster_suffstats: negative residual quadratic form " + std::to_string(quad));
    }
    quad = 0.0;
  }
  ss.b_c = hp.b0 + 0.5 * quad;

  const auto diag = ss.lambda_llt.matrixLLT().diagonal();
  const double ratio = diag.maxCoeff() / diag.minCoeff();
  ss.ill_conditioned = ratio * ratio > 1e12;
  return ss;
}

namespace {

// Members grouped by time grid, in order of first appearance.
std::vector<std::vector<int>> group_by_grid(const PanelData& data, std::span<const int> cluster) {
  std::vector<int> grid_order;
  std::vector<std::vector<int>> groups;
  for (int i : cluster) {
    if (i < 0 || static_cast<std::size_t>(i) >= data.size()) throw ValidationError("cluster_suffstats: bad index");
    const int g = data.grid_id(static_cast<std::size_t>(i));
    std::size_t k = 0;
    while (k < grid_order.size() && grid_order[k] != g) ++k;
    if (k == grid_order.size()) {
      grid_order.push_back(g);
      groups.emplace_back();
    }
    groups[k].push_back(i);
  }
  return groups;
}

// [X_1 .. X_r | y_1 .. y_r] arranged column-major so that column a of every
// member is contiguous: column a*r + j is column a of member j.
Eigen::MatrixXd stack_members(const PanelData& data, const std::vector<int>& members) {
  const auto& first = data[static_cast<std::size_t>(members.front())];
  const Eigen::Index n = first.n();
  const Eigen::Index p = first.x.cols();
  const auto r = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd b(n, r * (p + 1));
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto& s = data[static_cast<std::size_t>(members[static_cast<std::size_t>(j)])];
    for (Eigen::Index a = 0; a < p; ++a) b.col(a * r + j) = s.x.col(a);
    b.col(p * r + j) = s.y;
  }
  return b;
}

void add_gram(GramSum& sum, const Eigen::MatrixXd& gram, double log_det, Eigen::Index count, Eigen::Index n) {
  const auto p = sum.xtkx.rows();
  sum.xtkx += gram.topLeftCorner(p, p);
  sum.xtky += gram.col(p).head(p);
  sum.ytky += gram(p, p);
  sum.log_det += static_cast<double>(count) * log_det;
  sum.n += count * n;
}

}  // namespace

ClusterSuffStats cluster_suffstats(const PanelData& data, std::span<const int> cluster, const Hyperparams& hp,
                                   double alpha, double ell, KernelCache* cache) {
  if (cluster.empty()) throw DomainError("cluster_suffstats: empty cluster");
  const auto q = data.num_covariates() + 1;
  GramSum sum(data.num_covariates());
  for (const auto& members : group_by_grid(data, cluster)) {
    CorrelationMatrix scratch;
    const auto& k = factor_for(data, static_cast<std::size_t>(members.front()), alpha, ell, cache, scratch);
    Eigen::MatrixXd b = stack_members(data, members);
    k.llt.matrixL().solveInPlace(b);
    const Eigen::Index n = b.rows();
    const auto r = static_cast<Eigen::Index>(members.size());
    const Eigen::Map<const Eigen::MatrixXd> v(b.data(), n * r, q);
    add_gram(sum, v.transpose() * v, k.log_det, r, n);
  }
  return finalize_suffstats(sum, hp);
}

ClusterMoments::ClusterMoments(const PanelData& data, std::span<const int> cluster) : q_(data.num_covariates() + 1) {
  if (cluster.empty()) throw DomainError("ClusterMoments: empty cluster");
  for (const auto& members : group_by_grid(data, cluster)) {
    const Eigen::MatrixXd b = stack_members(data, members);
    const auto r = static_cast<Eigen::Index>(members.size());
    Block block;
    block.representative = static_cast<std::size_t>(members.front());
    block.count = r;
    block.n = b.rows();
    for (Eigen::Index a = 0; a < q_; ++a) {
      for (Eigen::Index c = a; c < q_; ++c) {
        block.moments.push_back(b.middleCols(a * r, r) * b.middleCols(c * r, r).transpose());
      }
    }
    blocks_.push_back(std::move(block));
  }
}

ClusterSuffStats ClusterMoments::suffstats(const PanelData& data, const Hyperparams& hp, double alpha, double ell,
                                           KernelCache* cache) const {
  GramSum sum(q_ - 1);
  Eigen::MatrixXd gram(q_, q_);
  for (const auto& block : blocks_) {
    CorrelationMatrix scratch;
    const auto& k = factor_for(data, block.representative, alpha, ell, cache, scratch);
    const Eigen::MatrixXd inverse = k.llt.solve(Eigen::MatrixXd::Identity(block.n, block.n));
    std::size_t m = 0;
    for (Eigen::Index a = 0; a < q_; ++a) {
      for (Eigen::Index c = a; c < q_; ++c) {
        gram(a, c) = gram(c, a) = inverse.cwiseProduct(block.moments[m++]).sum();
      }
    }
    add_gram(sum, gram, k.log_det, block.count, block.n);
  }
  return finalize_suffstats(sum, hp);
}

double integrated_loglik(const ClusterSuffStats& ss, const Hyperparams& hp) {
  const Eigen::LLT<Eigen::MatrixXd> prior_llt(hp.lambda0);
  const double n = static_cast<double>(ss.n_total);
  return -0.5 * n * kLog2Pi - 0.5 * ss.log_det_sum + 0.5 * llt_log_det(prior_llt) - 0.5 * llt_log_det(ss.lambda_llt) +
         hp.a0 * std::log(hp.b0) - ss.a_c * std::log(ss.b_c) + std::lgamma(ss.a_c) - std::lgamma(hp.a0);
}

double integrated_loglik(const PanelData& data, std::span<const int> cluster, const Hyperparams& hp, double alpha,
                         double ell, KernelCache* cache) {
  return integrated_loglik(cluster_suffstats(data, cluster, hp, alpha, ell, cache), hp);
}

double conditional_loglik(const PanelData& data, std::size_t location, const ClusterParams& theta,
                          KernelCache* cache) {
  CorrelationMatrix scratch;
  const auto& k = factor_for(data, location, theta.alpha, theta.ell, cache, scratch);
  const auto& s = data[location];
  Eigen::VectorXd r = s.y - s.x * theta.beta;
  k.llt.matrixL().solveInPlace(r);
  const double n = static_cast<double>(s.n());
  return -0.5 * n * (kLog2Pi + std::log(theta.sigma2)) - 0.5 * k.log_det - 0.5 * r.squaredNorm() / theta.sigma2;
}

namespace {

BetaSigma2 draw_nig(const Eigen::VectorXd& mu, const Eigen::LLT<Eigen::MatrixXd>& precision_llt, double a, double b,
                    Rng& rng) {
  BetaSigma2 out;
  out.sigma2 = 1.0 / draw_gamma(a, b, rng);
  Eigen::VectorXd z(mu.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = draw_normal(rng);
  // Precision = L Lᵀ, so L⁻ᵀ z has covariance precision⁻¹.
  precision_llt.matrixU().solveInPlace(z);
  out.beta = mu + std::sqrt(out.sigma2) * z;
  return out;
}

}  // namespace

BetaSigma2 draw_beta_sigma2(const ClusterSuffStats& ss, Rng& rng) {
  return draw_nig(ss.mu_c, ss.lambda_llt, ss.a_c, ss.b_c, rng);
}

BetaSigma2 draw_beta_sigma2_prior(const Hyperparams& hp, Rng& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(hp.lambda0);
  return draw_nig(hp.mu0, llt, hp.a0, hp.b0, rng);
}

double log_nig_density(const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& mu,
                       const Eigen::MatrixXd& precision, double a, double b) {
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("log_nig_density: precision not positive definite");
  const double p = static_cast<double>(beta.size());
  const Eigen::VectorXd d = beta - mu;
  const double quad = d.dot(precision * d);
  const double log_ig = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(sigma2) - b / sigma2;
  const double log_normal = -0.5 * p * (kLog2Pi + std::log(sigma2)) + 0.5 * llt_log_det(llt) - 0.5 * quad / sigma2;
  return log_ig + log_normal;
}

double log_base_density(const ClusterParams& theta, const Hyperparams& hp) {
  return log_nig_density(theta.beta, theta.sigma2, hp.mu0, hp.lambda0, hp.a0, hp.b0) +
         log_gamma_density(theta.alpha, hp.a1, hp.b1) + log_gamma_density(theta.ell, hp.a2, hp.b2);
}

}  // namespace mrfppm
