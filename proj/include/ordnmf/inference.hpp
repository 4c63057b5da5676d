#pragma once

// Coordinate-ascent variational inference for IG-OrdNMF.
//
// Augmented model: for y_ui > 0, n_ui ~ ZTP(lambda_ui * delta_{y_ui}) and
// c_ui | n_ui ~ Mult(n_ui, lambda_uik / lambda_ui); for y_ui = 0 both vanish.
// Every pass below touches only the stored (non-zero) entries. Sums over the
// implicit zeros are obtained as "all cells minus stored cells" from the
// cached column sums of E[W] and E[H].

#include <random>
#include <span>
#include <vector>

#include "ordnmf/ordinal_matrix.hpp"
#include "ordnmf/variational.hpp"

namespace ordnmf {

// Shapes at the prior shape times (1 + init_jitter * u), u ~ U(0, 1); rates chosen so
// that E[lambda_ui] matches the observed non-zero density; thresholds from
// empirical class frequencies (theta_0 = 1). Deterministic given the rng state.
VariationalState init_state(const FitConfig& config, const OrdinalMatrix& data, std::mt19937_64& rng);

// Delta_l proportional to #[y = l] / #[y <= l] over all U x I cells,
// normalized so that theta_0 = 1.
ThresholdSequence initial_thresholds(const OrdinalMatrix& data, double delta_floor);

// Mean of a zero-truncated Poisson with rate x: x / (1 - exp(-x)).
double ztp_mean(double x);

// Per-entry and per-factor-row expectations from the local step.
struct LocalStatistics {
  std::vector<double> expected_count;  // E[n_ui], by CSR position
  std::vector<double> total_rate;      // Lambda_ui = sum_k G^W_uk G^H_ik, by CSR position
  RowMatrix user_counts;               // sum_i E[c_uik], U x K
  RowMatrix item_counts;               // sum_u E[c_uik], I x K
};

LocalStatistics local_update(const VariationalState& state, const OrdinalMatrix& data, bool pf_approximation,
                             unsigned threads = 1);

// shape_uk = alpha^W + sum_i E[c_uik]
// rate_uk  = beta^W_u + theta_0 * sum_i E[h_ik] + sum_{i: y_ui > 0} (T_{y_ui} - theta_0) E[h_ik]
void update_user_factors(VariationalState& state, const OrdinalMatrix& data, const LocalStatistics& stats,
                         unsigned threads = 1);
void update_item_factors(VariationalState& state, const OrdinalMatrix& data, const LocalStatistics& stats,
                         unsigned threads = 1);

struct ThresholdUpdate {
  ThresholdSequence thresholds;
  std::vector<Class> floored;  // classes whose decrement hit the floor
};

// Delta_l = sum_{y_ui = l} E[n_ui] / sum_{y_ui <= l} E[lambda_ui], with
// E[lambda] from the current factor means; theta_v = sum_{l > v} Delta_l.
ThresholdUpdate update_thresholds(const VariationalState& state, const OrdinalMatrix& data,
                                  const LocalStatistics& stats, double delta_floor);

// beta^W_u = K alpha^W / sum_k E[w_uk], and likewise for items.
void update_rate_hyperparams(VariationalState& state);

// ELBO with q(n, c) at its optimum for the current factors and thresholds.
double compute_elbo(const VariationalState& state, const OrdinalMatrix& data, bool pf_approximation,
                    unsigned threads = 1);

// E[lambda_ui] = sum_k E[w_uk] E[h_ik].
double expected_rate(const VariationalState& state, Index u, Index i);

// Runs CAVI until the relative ELBO increment falls below the tolerance or
// max_iterations is reached.
FitResult fit(const OrdinalMatrix& data, const FitConfig& config, std::mt19937_64& rng);
FitResult fit(const OrdinalMatrix& data, const FitConfig& config);

// Score rows s_ui = sum_k E[w_uk] E[h_ik] for the requested users (all items).
RowMatrix predict_scores(const VariationalState& state, std::span<const Index> users);

}  // namespace ordnmf
