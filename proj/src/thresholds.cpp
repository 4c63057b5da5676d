#include "ordnmf/thresholds.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ordnmf/errors.hpp"

namespace ordnmf {

ThresholdSequence::ThresholdSequence(std::vector<double> theta) : theta_(std::move(theta)) {
  if (theta_.empty()) throw DomainError("threshold sequence needs at least one class");
  for (std::size_t v = 0; v < theta_.size(); ++v) {
    if (!std::isfinite(theta_[v]) || !(theta_[v] > 0.0)) {
      throw DomainError("theta_" + std::to_string(v) + " must be finite and positive");
    }
    if (v > 0 && !(theta_[v] < theta_[v - 1])) {
      throw DomainError("theta must be strictly decreasing (theta_" + std::to_string(v) + ")");
    }
  }
}

ThresholdSequence ThresholdSequence::from_delta(std::span<const double> delta) {
  std::vector<double> theta(delta.size());
  double acc = 0.0;
  for (std::size_t l = delta.size(); l-- > 0;) {
    if (!(delta[l] > 0.0)) throw DomainError("decrements must be positive");
    acc += delta[l];
    theta[l] = acc;
  }
  return ThresholdSequence(std::move(theta));
}

ThresholdSequence ThresholdSequence::from_raw(std::span<const double> b) {
  std::vector<double> theta(b.size());
  for (std::size_t v = 0; v < b.size(); ++v) {
    if (!(b[v] > 0.0)) throw DomainError("raw thresholds must be positive");
    theta[v] = 1.0 / b[v];
  }
  return ThresholdSequence(std::move(theta));
}

std::vector<double> ThresholdSequence::deltas() const {
  std::vector<double> out(theta_.size());
  for (Class v = 1; v <= n_classes(); ++v) out[v - 1] = delta(v);
  return out;
}

std::vector<double> ThresholdSequence::raws() const {
  std::vector<double> out(theta_.size());
  for (std::size_t v = 0; v < theta_.size(); ++v) out[v] = 1.0 / theta_[v];
  return out;
}

double log1mexp(double x) {
  if (!(x > 0.0)) throw DomainError("log1mexp needs x > 0");
  return x <= std::numbers::ln2 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

namespace {

void check_args(Class v, double lambda, const ThresholdSequence& thresholds) {
  if (v > thresholds.n_classes()) {
    throw DomainError("class " + std::to_string(v) + " outside 0.." + std::to_string(thresholds.n_classes()));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and non-negative");
}

}  // namespace

Class quantize(double x, const ThresholdSequence& thresholds) {
  if (!(x >= 0.0)) throw DomainError("quantize needs x >= 0");
  Class v = 0;
  while (v < thresholds.n_classes() && x >= thresholds.raw(v)) ++v;
  return v;
}

double cdf(Class v, double lambda, const ThresholdSequence& thresholds) {
  check_args(v, lambda, thresholds);
  if (v == thresholds.n_classes()) return 1.0;
  return std::exp(-lambda * thresholds.theta(v));
}

double pmf(Class v, double lambda, const ThresholdSequence& thresholds) {
  check_args(v, lambda, thresholds);
  if (v == 0) return std::exp(-lambda * thresholds.theta(0));
  // exp(-lambda theta_v) (1 - exp(-lambda delta_v)); theta_V = 0 covers v = V.
  return std::exp(-lambda * thresholds.theta(v)) * -std::expm1(-lambda * thresholds.delta(v));
}

double log_pmf(Class v, double lambda, const ThresholdSequence& thresholds) {
  check_args(v, lambda, thresholds);
  if (v == 0) return -lambda * thresholds.theta(0);
  if (lambda == 0.0) return -std::numeric_limits<double>::infinity();
  return -lambda * thresholds.theta(v) + log1mexp(lambda * thresholds.delta(v));
}

double expected_class(double lambda, const ThresholdSequence& thresholds) {
  if (!(lambda >= 0.0)) throw DomainError("expected_class needs lambda >= 0");
  if (lambda == 0.0) return 0.0;
  double total = static_cast<double>(thresholds.n_classes());
  for (double th : thresholds.thetas()) total -= std::exp(-lambda * th);
  return total;
}

Class sample_class(double lambda, const ThresholdSequence& thresholds, std::mt19937_64& rng) {
  if (!(lambda >= 0.0)) throw DomainError("sample_class needs lambda >= 0");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  Class v = 0;
  while (v < thresholds.n_classes() && !(u < std::exp(-lambda * thresholds.theta(v)))) ++v;
  return v;
}

double gamma_noise_cdf(Class v, double lambda, double alpha, const ThresholdSequence& thresholds) {
  check_args(v, lambda, thresholds);
  if (!(alpha > 0.0)) throw DomainError("gamma noise shape must be positive");
  if (v == thresholds.n_classes()) return 1.0;
  if (lambda == 0.0) return 1.0;
  return boost::math::gamma_p(alpha, thresholds.raw(v) / lambda);
}

}  // namespace ordnmf
