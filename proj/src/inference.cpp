#include "ordnmf/inference.hpp"

#include <cmath>
#include <sstream>

#include "ordnmf/errors.hpp"
#include "parallel.hpp"

namespace ordnmf {

ThresholdSequence initial_thresholds(const OrdinalMatrix& data, double delta_floor) {
  const Class V = data.n_classes();
  const double cells = static_cast<double>(data.n_users()) * static_cast<double>(data.n_items());
  const double empty_fill = delta_floor > 0.0 ? delta_floor : 1e-10;

  // #[y <= l] = cells - #[y > l]
  std::vector<double> raw(V, 0.0);
  double above = 0.0;
  for (Class l = V; l >= 1; --l) {
    const double at_l = static_cast<double>(data.class_count(l));
    raw[l - 1] = at_l / (cells - above);
    above += at_l;
  }
  double total = 0.0;
  for (double r : raw) total += r;
  std::vector<double> delta(V);
  for (Class l = 0; l < V; ++l) delta[l] = raw[l] > 0.0 ? raw[l] / total : empty_fill;
  return ThresholdSequence::from_delta(delta);
}

VariationalState init_state(const FitConfig& config, const OrdinalMatrix& data, std::mt19937_64& rng) {
  config.validate();
  if (data.empty()) throw DataError("cannot initialize on an empty matrix");
  if (config.bepof_mode && data.n_classes() != 1) {
    throw ConfigError("BePoF mode needs binary data (V = 1); binarize first");
  }

  const Eigen::Index K = config.rank;
  const double density =
      static_cast<double>(data.nnz()) / (static_cast<double>(data.n_users()) * static_cast<double>(data.n_items()));
  // E[lambda_ui] = K * scale^2 = density
  const double scale = std::sqrt(density / static_cast<double>(K));

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto make = [&](Index rows, double alpha, Eigen::VectorXd& prior_rate) {
    prior_rate = Eigen::VectorXd::Constant(rows, alpha / scale);
    RowMatrix shape(rows, K);
    RowMatrix rate(rows, K);
    for (Index r = 0; r < rows; ++r) {
      for (Eigen::Index k = 0; k < K; ++k) {
        shape(r, k) = alpha * (1.0 + config.init_jitter * unif(rng));
        rate(r, k) = prior_rate(r);
      }
    }
    return GammaVariationalMatrix(std::move(shape), std::move(rate));
  };

  VariationalState state;
  state.alpha_w = config.alpha_w;
  state.alpha_h = config.alpha_h;
  state.user_factors = make(data.n_users(), config.alpha_w, state.user_rate);
  state.item_factors = make(data.n_items(), config.alpha_h, state.item_rate);

  if (config.bepof_mode) {
    state.thresholds = ThresholdSequence(std::vector<double>{1.0});
  } else if (config.initial_theta) {
    state.thresholds = ThresholdSequence(*config.initial_theta);
    if (state.thresholds.n_classes() != data.n_classes()) {
      throw ConfigError("initial thresholds have " + std::to_string(state.thresholds.n_classes()) +
                        " classes, data has " + std::to_string(data.n_classes()));
    }
  } else {
    state.thresholds = initial_thresholds(data, config.delta_floor);
  }
  return state;
}

double ztp_mean(double x) {
  if (!(x > 0.0)) throw DomainError("ztp_mean needs x > 0");
  return x / -std::expm1(-x);
}

namespace {

void check_dims(const VariationalState& state, const OrdinalMatrix& data) {
  if (state.n_users() != data.n_users() || state.n_items() != data.n_items()) {
    throw DataError("model is " + std::to_string(state.n_users()) + "x" + std::to_string(state.n_items()) +
                    ", data is " + std::to_string(data.n_users()) + "x" + std::to_string(data.n_items()));
  }
  if (state.thresholds.n_classes() != data.n_classes()) {
    throw DataError("model has " + std::to_string(state.thresholds.n_classes()) + " classes, data has " +
                    std::to_string(data.n_classes()));
  }
}

std::string cell(Index u, Index i) { return "(" + std::to_string(u) + ", " + std::to_string(i) + ")"; }

}  // namespace

LocalStatistics local_update(const VariationalState& state, const OrdinalMatrix& data, bool pf_approximation,
                             unsigned threads) {
  check_dims(state, data);
  const auto& gw = state.user_factors.geo_mean();
  const auto& gh = state.item_factors.geo_mean();
  const Eigen::Index K = state.rank();

  LocalStatistics stats;
  stats.expected_count.resize(data.nnz());
  stats.total_rate.resize(data.nnz());
  stats.user_counts = RowMatrix::Zero(data.n_users(), K);
  stats.item_counts = RowMatrix::Zero(data.n_items(), K);

  // Row pass: Lambda_ui, E[n_ui] and the user-side multinomial sums.
  detail::parallel_for(data.n_users(), threads, [&](std::size_t uu) {
    const auto u = static_cast<Index>(uu);
    for (std::size_t pos = data.row_begin(u); pos < data.row_end(u); ++pos) {
      const Index i = data.item(pos);
      const double total = gw.row(u).dot(gh.row(i));
      if (!std::isfinite(total) || !(total > 0.0)) {
        throw NumericalError("non-finite or zero Lambda at " + cell(u, i));
      }
      const double count =
          pf_approximation ? 1.0 : ztp_mean(total * state.thresholds.delta(data.cls(pos)));
      stats.total_rate[pos] = total;
      stats.expected_count[pos] = count;
      stats.user_counts.row(u) += (count / total) * gw.row(u).cwiseProduct(gh.row(i));
    }
  });

  // Column pass over the same entries for the item-side sums.
  detail::parallel_for(data.n_items(), threads, [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    for (std::size_t pos : data.column(i)) {
      const Index u = data.user(pos);
      stats.item_counts.row(i) +=
          (stats.expected_count[pos] / stats.total_rate[pos]) * gw.row(u).cwiseProduct(gh.row(i));
    }
  });
  return stats;
}

void update_user_factors(VariationalState& state, const OrdinalMatrix& data, const LocalStatistics& stats,
                         unsigned threads) {
  check_dims(state, data);
  const auto& eh = state.item_factors.mean();
  const ThresholdSequence& th = state.thresholds;
  const double theta0 = th.theta(0);
  const Eigen::RowVectorXd base = theta0 * state.item_factors.mean_colsum();

  detail::parallel_for(data.n_users(), threads, [&](std::size_t uu) {
    const auto u = static_cast<Index>(uu);
    Eigen::RowVectorXd rate = base.array() + state.user_rate(u);
    for (std::size_t pos = data.row_begin(u); pos < data.row_end(u); ++pos) {
      rate += (th.exposure(data.cls(pos)) - theta0) * eh.row(data.item(pos));
    }
    if (!((rate.array() > 0.0).all())) throw NumericalError("non-positive rate for user " + std::to_string(u));
    const Eigen::RowVectorXd shape = stats.user_counts.row(u).array() + state.alpha_w;
    state.user_factors.set_row(u, shape, rate);
  });
  state.user_factors.refresh_sums();
}

void update_item_factors(VariationalState& state, const OrdinalMatrix& data, const LocalStatistics& stats,
                         unsigned threads) {
  check_dims(state, data);
  const auto& ew = state.user_factors.mean();
  const ThresholdSequence& th = state.thresholds;
  const double theta0 = th.theta(0);
  const Eigen::RowVectorXd base = theta0 * state.user_factors.mean_colsum();

  detail::parallel_for(data.n_items(), threads, [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    Eigen::RowVectorXd rate = base.array() + state.item_rate(i);
    for (std::size_t pos : data.column(i)) {
      rate += (th.exposure(data.cls(pos)) - theta0) * ew.row(data.user(pos));
    }
    if (!((rate.array() > 0.0).all())) throw NumericalError("non-positive rate for item " + std::to_string(i));
    const Eigen::RowVectorXd shape = stats.item_counts.row(i).array() + state.alpha_h;
    state.item_factors.set_row(i, shape, rate);
  });
  state.item_factors.refresh_sums();
}

double expected_rate(const VariationalState& state, Index u, Index i) {
  return state.user_factors.mean().row(u).dot(state.item_factors.mean().row(i));
}

namespace {

double total_expected_rate(const VariationalState& state) {
  return state.user_factors.mean_colsum().dot(state.item_factors.mean_colsum());
}

}  // namespace

ThresholdUpdate update_thresholds(const VariationalState& state, const OrdinalMatrix& data,
                                  const LocalStatistics& stats, double delta_floor) {
  check_dims(state, data);
  const Class V = data.n_classes();
  std::vector<double> numer(V + 1, 0.0);      // sum_{y = l} E[n]
  std::vector<double> class_rate(V + 1, 0.0);  // sum_{y = l} E[lambda]
  for (std::size_t pos = 0; pos < data.nnz(); ++pos) {
    const Class y = data.cls(pos);
    numer[y] += stats.expected_count[pos];
    class_rate[y] += expected_rate(state, data.user(pos), data.item(pos));
  }

  // sum_{y <= l} E[lambda] = total - sum_{y > l} E[lambda]
  const double total = total_expected_rate(state);
  ThresholdUpdate out{state.thresholds, {}};
  std::vector<double> delta(V);
  double above = 0.0;
  for (Class l = V; l >= 1; --l) {
    const double denom = total - above;
    above += class_rate[l];
    if (numer[l] == 0.0) {
      if (!(delta_floor > 0.0)) {
        throw ThresholdError("class " + std::to_string(l) + " has no entries and no decrement floor is set");
      }
      delta[l - 1] = delta_floor;
      out.floored.push_back(l);
      continue;
    }
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      throw NumericalError("non-positive exposure for class " + std::to_string(l));
    }
    delta[l - 1] = std::max(numer[l] / denom, delta_floor);
    if (delta[l - 1] == delta_floor) out.floored.push_back(l);
  }
  out.thresholds = ThresholdSequence::from_delta(delta);
  return out;
}

void update_rate_hyperparams(VariationalState& state) {
  const double K = static_cast<double>(state.rank());
  const Eigen::VectorXd user_sums = state.user_factors.mean().rowwise().sum();
  const Eigen::VectorXd item_sums = state.item_factors.mean().rowwise().sum();
  if (!((user_sums.array() > 0.0).all()) || !((item_sums.array() > 0.0).all())) {
    throw NumericalError("zero factor row sum in rate update");
  }
  state.user_rate = (K * state.alpha_w) / user_sums.array();
  state.item_rate = (K * state.alpha_h) / item_sums.array();
}

double compute_elbo(const VariationalState& state, const OrdinalMatrix& data, bool pf_approximation,
                    unsigned threads) {
  check_dims(state, data);
  const auto& gw = state.user_factors.geo_mean();
  const auto& gh = state.item_factors.geo_mean();
  const ThresholdSequence& th = state.thresholds;
  const double theta0 = th.theta(0);

  // Per-row partial sums, reduced in row order for determinism.
  std::vector<double> row_terms(data.n_users(), 0.0);
  detail::parallel_for(data.n_users(), threads, [&](std::size_t uu) {
    const auto u = static_cast<Index>(uu);
    double acc = 0.0;
    for (std::size_t pos = data.row_begin(u); pos < data.row_end(u); ++pos) {
      const Index i = data.item(pos);
      const Class y = data.cls(pos);
      const double mean_rate = expected_rate(state, u, i);
      const double total = gw.row(u).dot(gh.row(i));
      if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("non-finite Lambda at " + cell(u, i));
      const double x = total * th.delta(y);
      // The zero-cell term -theta_0 E[lambda] is applied to all cells below.
      acc += (theta0 - th.exposure(y)) * mean_rate;
      acc += pf_approximation ? std::log(x) : x + log1mexp(x);
    }
    row_terms[u] = acc;
  });
  double elbo = -theta0 * total_expected_rate(state);
  for (double t : row_terms) elbo += t;
  elbo += state.user_factors.prior_minus_entropy_term(state.alpha_w, state.user_rate);
  elbo += state.item_factors.prior_minus_entropy_term(state.alpha_h, state.item_rate);
  if (!std::isfinite(elbo)) throw NumericalError("non-finite ELBO");
  return elbo;
}

FitResult fit(const OrdinalMatrix& data, const FitConfig& config, std::mt19937_64& rng) {
  config.validate();
  if (data.empty()) throw DataError("cannot fit an empty matrix");

  FitResult result;
  result.state = init_state(config, data, rng);
  VariationalState& state = result.state;
  const bool learn = config.learn_thresholds && !config.bepof_mode;
  for (Class l = 1; l <= data.n_classes(); ++l) {
    if (data.class_count(l) == 0) {
      result.log.push_back("class " + std::to_string(l) + " absent from training data");
    }
  }

  result.elbo_trace.push_back(compute_elbo(state, data, config.pf_approximation, config.threads));
  while (result.iterations < config.max_iterations) {
    const LocalStatistics stats = local_update(state, data, config.pf_approximation, config.threads);
    update_user_factors(state, data, stats, config.threads);
    update_item_factors(state, data, stats, config.threads);
    if (learn) {
      ThresholdUpdate update = update_thresholds(state, data, stats, config.delta_floor);
      if (!update.floored.empty() && result.iterations == 0) {
        std::ostringstream msg;
        msg << "decrement floored for classes:";
        for (Class l : update.floored) msg << ' ' << l;
        result.log.push_back(msg.str());
      }
      state.thresholds = std::move(update.thresholds);
    }
    if (config.update_rates) update_rate_hyperparams(state);

    const double previous = result.elbo_trace.back();
    const double current = compute_elbo(state, data, config.pf_approximation, config.threads);
    ++result.iterations;
    result.elbo_trace.push_back(current);
    if (current < previous - config.monotonicity_slack * std::abs(previous)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "ELBO decreased at iteration " << result.iterations << ": " << previous << " -> " << current;
      throw InternalInconsistency(msg.str());
    }
    if ((current - previous) / std::abs(previous) < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FitResult fit(const OrdinalMatrix& data, const FitConfig& config) {
  std::mt19937_64 rng(config.seed);
  return fit(data, config, rng);
}

RowMatrix predict_scores(const VariationalState& state, std::span<const Index> users) {
  RowMatrix scores(static_cast<Eigen::Index>(users.size()), state.n_items());
  const auto& eh = state.item_factors.mean();
  for (std::size_t r = 0; r < users.size(); ++r) {
    if (users[r] >= state.n_users()) throw LookupError("unknown user index " + std::to_string(users[r]));
    scores.row(static_cast<Eigen::Index>(r)) = state.user_factors.mean().row(users[r]) * eh.transpose();
  }
  return scores;
}

}  // namespace ordnmf
