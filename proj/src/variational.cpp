#include "ordnmf/variational.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>

#include "ordnmf/errors.hpp"

namespace ordnmf {

GammaVariationalMatrix::GammaVariationalMatrix(RowMatrix shape, RowMatrix rate)
    : shape_(std::move(shape)), rate_(std::move(rate)) {
  if (shape_.rows() != rate_.rows() || shape_.cols() != rate_.cols()) {
    throw DomainError("shape and rate dimensions differ");
  }
  mean_.resize(shape_.rows(), shape_.cols());
  log_mean_.resize(shape_.rows(), shape_.cols());
  geo_mean_.resize(shape_.rows(), shape_.cols());
  for (Eigen::Index r = 0; r < shape_.rows(); ++r) refresh_row(r);
  refresh_sums();
}

void GammaVariationalMatrix::set_row(Eigen::Index r, const Eigen::Ref<const Eigen::RowVectorXd>& shape,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& rate) {
  shape_.row(r) = shape;
  rate_.row(r) = rate;
  refresh_row(r);
}

void GammaVariationalMatrix::refresh_row(Eigen::Index r) {
  for (Eigen::Index k = 0; k < shape_.cols(); ++k) {
    const double a = shape_(r, k);
    const double b = rate_(r, k);
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw NumericalError("gamma parameters must be positive and finite at (" + std::to_string(r) + ", " +
                           std::to_string(k) + "): shape " + std::to_string(a) + ", rate " +
                           std::to_string(b));
    }
    mean_(r, k) = a / b;
    log_mean_(r, k) = boost::math::digamma(a) - std::log(b);
    geo_mean_(r, k) = std::exp(log_mean_(r, k));
  }
}

void GammaVariationalMatrix::refresh_sums() {
  mean_colsum_ = mean_.colwise().sum();
  geo_mean_colsum_ = geo_mean_.colwise().sum();
}

double GammaVariationalMatrix::prior_minus_entropy_term(double prior_shape,
                                                        const Eigen::VectorXd& prior_rate) const {
  const double lgamma_prior = std::lgamma(prior_shape);
  double total = 0.0;
  for (Eigen::Index r = 0; r < shape_.rows(); ++r) {
    const double log_prior_rate = std::log(prior_rate(r));
    double row = 0.0;
    for (Eigen::Index k = 0; k < shape_.cols(); ++k) {
      const double a = shape_(r, k);
      const double b = rate_(r, k);
      const double e_log = log_mean_(r, k);
      const double e = mean_(r, k);
      const double log_prior =
          prior_shape * log_prior_rate - lgamma_prior + (prior_shape - 1.0) * e_log - prior_rate(r) * e;
      const double log_q = a * std::log(b) - std::lgamma(a) + (a - 1.0) * e_log - b * e;
      row += log_prior - log_q;
    }
    total += row;
  }
  return total;
}

void VariationalState::validate() const {
  if (user_factors.cols() != item_factors.cols()) throw DomainError("factor ranks differ");
  if (user_rate.size() != user_factors.rows() || item_rate.size() != item_factors.rows()) {
    throw DomainError("rate hyperparameter lengths do not match factor rows");
  }
  if (!(alpha_w > 0.0) || !(alpha_h > 0.0)) throw DomainError("prior shapes must be positive");
  if ((user_rate.array() <= 0.0).any() || (item_rate.array() <= 0.0).any()) {
    throw DomainError("prior rates must be positive");
  }
}

void FitConfig::validate() const {
  if (rank < 1) throw ConfigError("K must be at least 1");
  if (!(alpha_w > 0.0) || !(alpha_h > 0.0)) throw ConfigError("prior shapes must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(init_jitter >= 0.0) || !std::isfinite(init_jitter)) throw ConfigError("init_jitter must be non-negative");
  if (!(delta_floor >= 0.0)) throw ConfigError("delta_floor must be non-negative");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!(monotonicity_slack >= 0.0)) throw ConfigError("monotonicity slack must be non-negative");
}

}  // namespace ordnmf
