#pragma once

// Observation model of ordinal NMF with multiplicative IG(1, 1) noise.
//
// A latent x = lambda * eps, eps ~ IG(1, 1), is quantized against increasing
// thresholds b_0 < ... < b_{V-1} (b_{-1} = 0, b_V = +inf). Writing
// theta_v = 1 / b_v gives P[y <= v | lambda] = exp(-lambda * theta_v).

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ordnmf/ordinal_matrix.hpp"

namespace ordnmf {

// Inverse thresholds theta_0 > ... > theta_{V-1} > 0 with theta_V = 0.
// Decrements delta_v = theta_{v-1} - theta_v (v = 1..V) and raw thresholds
// b_v = 1 / theta_v are derived on demand.
class ThresholdSequence {
 public:
  explicit ThresholdSequence(std::vector<double> theta);
  // theta_v = sum_{l > v} delta_l, with delta[l-1] holding delta_l.
  static ThresholdSequence from_delta(std::span<const double> delta);
  static ThresholdSequence from_raw(std::span<const double> b);

  Class n_classes() const { return static_cast<Class>(theta_.size()); }

  // theta_v for v in 0..V (theta_V = 0).
  double theta(Class v) const { return v == n_classes() ? 0.0 : theta_.at(v); }
  // delta_v for v in 1..V.
  double delta(Class v) const { return theta(v - 1) - theta(v); }
  // b_v for v in 0..V-1.
  double raw(Class v) const { return 1.0 / theta_.at(v); }
  // Exposure coefficient: theta_0 for class 0, theta_{v-1} otherwise.
  double exposure(Class v) const { return v == 0 ? theta_.front() : theta(v - 1); }

  std::span<const double> thetas() const { return theta_; }
  std::vector<double> deltas() const;
  std::vector<double> raws() const;

  friend bool operator==(const ThresholdSequence&, const ThresholdSequence&) = default;

 private:
  std::vector<double> theta_;
};

// log(1 - exp(-x)) for x > 0, accurate at both ends.
double log1mexp(double x);

Class quantize(double x, const ThresholdSequence& thresholds);

double cdf(Class v, double lambda, const ThresholdSequence& thresholds);
double pmf(Class v, double lambda, const ThresholdSequence& thresholds);
double log_pmf(Class v, double lambda, const ThresholdSequence& thresholds);

// E[y | lambda] = V - sum_{v<V} exp(-lambda * theta_v). Exactly 0 at lambda = 0.
double expected_class(double lambda, const ThresholdSequence& thresholds);

// Inverse-c.d.f. draw from a single uniform.
Class sample_class(double lambda, const ThresholdSequence& thresholds, std::mt19937_64& rng);

// Gamma(alpha, 1) multiplicative noise: P[y <= v] = P(alpha, b_v / lambda),
// the regularized lower incomplete gamma. Plotting utility only.
double gamma_noise_cdf(Class v, double lambda, double alpha, const ThresholdSequence& thresholds);

}  // namespace ordnmf
