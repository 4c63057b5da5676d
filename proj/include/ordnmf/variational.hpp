#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ordnmf/ordinal_matrix.hpp"
#include "ordnmf/thresholds.hpp"

namespace ordnmf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Factorized Gamma(shape, rate) posterior over the entries of an N x K
// non-negative factor, with cached moments:
//   mean      E[x]      = shape / rate
//   log_mean  E[log x]  = digamma(shape) - log(rate)
//   geo_mean  exp(E[log x])
// and column sums of mean and geo_mean.
class GammaVariationalMatrix {
 public:
  GammaVariationalMatrix() = default;
  GammaVariationalMatrix(RowMatrix shape, RowMatrix rate);

  Eigen::Index rows() const { return shape_.rows(); }
  Eigen::Index cols() const { return shape_.cols(); }

  const RowMatrix& shape() const { return shape_; }
  const RowMatrix& rate() const { return rate_; }
  const RowMatrix& mean() const { return mean_; }
  const RowMatrix& log_mean() const { return log_mean_; }
  const RowMatrix& geo_mean() const { return geo_mean_; }
  const Eigen::RowVectorXd& mean_colsum() const { return mean_colsum_; }
  const Eigen::RowVectorXd& geo_mean_colsum() const { return geo_mean_colsum_; }

  // Replaces one row and its cached moments. Column sums go stale until
  // refresh_sums().
  void set_row(Eigen::Index r, const Eigen::Ref<const Eigen::RowVectorXd>& shape,
               const Eigen::Ref<const Eigen::RowVectorXd>& rate);
  void refresh_sums();

  // sum_{rk} E_q[log Gamma(x_rk; prior_shape, prior_rate_r)] - E_q[log q(x_rk)].
  double prior_minus_entropy_term(double prior_shape, const Eigen::VectorXd& prior_rate) const;

 private:
  void refresh_row(Eigen::Index r);

  RowMatrix shape_;
  RowMatrix rate_;
  RowMatrix mean_;
  RowMatrix log_mean_;
  RowMatrix geo_mean_;
  Eigen::RowVectorXd mean_colsum_;
  Eigen::RowVectorXd geo_mean_colsum_;
};

// Complete fitted model: both factor posteriors, per-row prior rates, prior
// shapes and thresholds.
struct VariationalState {
  GammaVariationalMatrix user_factors;  // U x K
  GammaVariationalMatrix item_factors;  // I x K
  ThresholdSequence thresholds{std::vector<double>{1.0}};
  Eigen::VectorXd user_rate;  // prior rate per user
  Eigen::VectorXd item_rate;  // prior rate per item
  double alpha_w = 0.3;
  double alpha_h = 0.3;

  Index n_users() const { return static_cast<Index>(user_factors.rows()); }
  Index n_items() const { return static_cast<Index>(item_factors.rows()); }
  Eigen::Index rank() const { return user_factors.cols(); }

  void validate() const;
};

struct FitConfig {
  Eigen::Index rank = 10;
  double alpha_w = 0.3;
  double alpha_h = 0.3;
  double tolerance = 1e-5;
  std::size_t max_iterations = 1000;
  std::uint64_t seed = 0;
  bool learn_thresholds = true;
  // q(n_ui) fixed to a point mass at 1 (Poisson factorization updates).
  bool pf_approximation = false;
  // V = 1 with theta_0 frozen at 1.
  bool bepof_mode = false;
  bool update_rates = true;
  double delta_floor = 1e-10;
  unsigned threads = 1;
  // Initial shapes are alpha * (1 + init_jitter * U(0, 1)). Too little jitter
  // leaves the K components nearly exchangeable and the ELBO flat for many
  // iterations, which the relative-increment stopping rule takes for
  // convergence.
  double init_jitter = 0.1;
  // Starting thresholds; estimated from class frequencies when absent.
  std::optional<std::vector<double>> initial_theta;
  // Relative ELBO slack tolerated per iteration before failing.
  double monotonicity_slack = 1e-8;

  void validate() const;
};

struct FitResult {
  VariationalState state;
  // elbo_trace[0] is the ELBO at initialization, elbo_trace[t] after iteration t.
  std::vector<double> elbo_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> log;
};

}  // namespace ordnmf
