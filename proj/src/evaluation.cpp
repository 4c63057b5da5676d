#include "ordnmf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ordnmf/errors.hpp"
#include "ordnmf/thresholds.hpp"
#include "parallel.hpp"

namespace ordnmf {

double ndcg_of_ranking(std::span<const char> relevance_in_rank_order, std::size_t n_relevant, std::size_t m) {
  if (n_relevant == 0) return 0.0;
  double dcg = 0.0;
  const std::size_t depth = std::min(m, relevance_in_rank_order.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (relevance_in_rank_order[r]) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(m, n_relevant); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

RankingMetricsReport ndcg_at_m(const ScoreFn& scores, const OrdinalMatrix& train, const OrdinalMatrix& test,
                               std::span<const Class> thresholds, const NdcgOptions& options) {
  if (options.list_length == 0) throw ConfigError("list length m must be positive");
  if (train.n_users() != test.n_users() || train.n_items() != test.n_items()) {
    throw DataError("train and test shapes differ");
  }
  for (Class s : thresholds) {
    if (s < 1) throw ConfigError("relevance threshold must be at least 1");
  }
  const Index U = test.n_users();
  const Index I = test.n_items();
  const std::size_t S = thresholds.size();
  const std::size_t m = options.list_length;

  // ndcg[u * S + t], counted[u * S + t]
  std::vector<double> ndcg(std::size_t{U} * S, 0.0);
  std::vector<char> counted(std::size_t{U} * S, 0);

  detail::parallel_for(U, options.threads, [&](std::size_t uu) {
    const auto u = static_cast<Index>(uu);
    if (test.row_nnz(u) == 0 && options.skip_users_without_relevant) return;
    std::vector<double> row(I);
    scores(u, row);

    std::vector<char> excluded(I, 0);
    if (options.exclude_train) {
      for (std::size_t pos = train.row_begin(u); pos < train.row_end(u); ++pos) excluded[train.item(pos)] = 1;
    }
    std::vector<Index> candidates;
    candidates.reserve(I);
    for (Index i = 0; i < I; ++i) {
      if (!excluded[i]) candidates.push_back(i);
    }
    const std::size_t depth = std::min(m, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(depth), candidates.end(),
                      [&](Index a, Index b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });

    std::vector<Class> test_class(I, 0);
    for (std::size_t pos = test.row_begin(u); pos < test.row_end(u); ++pos) test_class[test.item(pos)] = test.cls(pos);

    std::vector<char> relevance(depth);
    for (std::size_t t = 0; t < S; ++t) {
      const Class s = thresholds[t];
      std::size_t n_relevant = 0;
      for (std::size_t pos = test.row_begin(u); pos < test.row_end(u); ++pos) n_relevant += test.cls(pos) >= s;
      if (n_relevant == 0) {
        if (!options.skip_users_without_relevant) counted[uu * S + t] = 1;
        continue;
      }
      for (std::size_t r = 0; r < depth; ++r) relevance[r] = test_class[candidates[r]] >= s;
      ndcg[uu * S + t] = ndcg_of_ranking(relevance, n_relevant, m);
      counted[uu * S + t] = 1;
    }
  });

  RankingMetricsReport report;
  report.list_length = m;
  for (std::size_t t = 0; t < S; ++t) {
    NdcgResult result;
    result.threshold = thresholds[t];
    double sum = 0.0;
    for (Index u = 0; u < U; ++u) {
      if (counted[std::size_t{u} * S + t]) {
        sum += ndcg[std::size_t{u} * S + t];
        ++result.n_users;
      }
    }
    result.mean_ndcg = result.n_users > 0 ? sum / static_cast<double>(result.n_users) : 0.0;
    report.results.push_back(result);
  }
  return report;
}

RankingMetricsReport ndcg_at_m(const RowMatrix& scores, const OrdinalMatrix& train, const OrdinalMatrix& test,
                               std::span<const Class> thresholds, const NdcgOptions& options) {
  if (scores.rows() != test.n_users() || scores.cols() != test.n_items()) {
    throw DataError("score matrix does not cover all users and items");
  }
  const ScoreFn fn = [&](Index u, std::span<double> out) {
    for (Eigen::Index i = 0; i < scores.cols(); ++i) out[static_cast<std::size_t>(i)] = scores(u, i);
  };
  return ndcg_at_m(fn, train, test, thresholds, options);
}

RankingMetricsReport ndcg_at_m(const VariationalState& state, const OrdinalMatrix& train,
                               const OrdinalMatrix& test, std::span<const Class> thresholds,
                               const NdcgOptions& options) {
  if (state.n_users() != test.n_users() || state.n_items() != test.n_items()) {
    throw DataError("model and test shapes differ");
  }
  const auto& ew = state.user_factors.mean();
  const auto& eh = state.item_factors.mean();
  const ScoreFn fn = [&](Index u, std::span<double> out) {
    Eigen::Map<Eigen::VectorXd> dst(out.data(), static_cast<Eigen::Index>(out.size()));
    dst.noalias() = eh * ew.row(u).transpose();
  };
  return ndcg_at_m(fn, train, test, thresholds, options);
}

double conditional_log_pmf(Class v, double lambda, const ThresholdSequence& thresholds) {
  if (v < 1) throw DomainError("conditional p.m.f. is defined for classes >= 1");
  if (!(lambda > 0.0)) throw NumericalError("zero predicted rate");
  return log_pmf(v, lambda, thresholds) - log1mexp(lambda * thresholds.theta(0));
}

double log_lik_nonzeros(const OrdinalMatrix& test, const VariationalState& state) {
  if (test.empty()) throw DataError("empty test set");
  if (state.n_users() != test.n_users() || state.n_items() != test.n_items()) {
    throw DataError("model and test shapes differ");
  }
  if (state.thresholds.n_classes() != test.n_classes()) throw DataError("model and test class counts differ");
  const auto& ew = state.user_factors.mean();
  const auto& eh = state.item_factors.mean();
  double total = 0.0;
  for (std::size_t pos = 0; pos < test.nnz(); ++pos) {
    const Index u = test.user(pos);
    const Index i = test.item(pos);
    const double lambda = ew.row(u).dot(eh.row(i));
    if (!(lambda > 0.0)) {
      throw NumericalError("zero predicted rate at (" + std::to_string(u) + ", " + std::to_string(i) + ")");
    }
    total += conditional_log_pmf(test.cls(pos), lambda, state.thresholds);
  }
  return total;
}

PPCReport ppc_histogram(const VariationalState& state, const OrdinalMatrix& train, std::mt19937_64& rng,
                        std::size_t n_cells) {
  if (state.n_users() != train.n_users() || state.n_items() != train.n_items()) {
    throw DataError("model and train shapes differ");
  }
  const Class V = state.thresholds.n_classes();
  const Eigen::Index K = state.rank();
  auto draw = [&](const GammaVariationalMatrix& q) {
    RowMatrix sample(q.rows(), K);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      for (Eigen::Index k = 0; k < K; ++k) {
        sample(r, k) = std::gamma_distribution<double>(q.shape()(r, k), 1.0 / q.rate()(r, k))(rng);
      }
    }
    return sample;
  };
  const RowMatrix w = draw(state.user_factors);
  const RowMatrix h = draw(state.item_factors);

  const Index U = state.n_users();
  const Index I = state.n_items();
  const double all_cells = static_cast<double>(U) * static_cast<double>(I);
  std::vector<std::size_t> counts(V + 1, 0);
  std::size_t drawn = 0;
  if (static_cast<double>(n_cells) >= all_cells) {
    for (Index u = 0; u < U; ++u) {
      for (Index i = 0; i < I; ++i) ++counts[sample_class(w.row(u).dot(h.row(i)), state.thresholds, rng)];
    }
    drawn = static_cast<std::size_t>(all_cells);
  } else {
    std::uniform_int_distribution<Index> pick_user(0, U - 1);
    std::uniform_int_distribution<Index> pick_item(0, I - 1);
    for (std::size_t c = 0; c < n_cells; ++c) {
      const Index u = pick_user(rng);
      const Index i = pick_item(rng);
      ++counts[sample_class(w.row(u).dot(h.row(i)), state.thresholds, rng)];
    }
    drawn = n_cells;
  }

  PPCReport report;
  report.n_cells = drawn;
  report.simulated.resize(V + 1);
  report.observed.resize(V + 1);
  for (Class v = 0; v <= V; ++v) report.simulated[v] = static_cast<double>(counts[v]) / static_cast<double>(drawn);
  const Class train_V = train.n_classes();
  for (Class v = 1; v <= V; ++v) {
    report.observed[v] = v <= train_V ? static_cast<double>(train.class_count(v)) / all_cells : 0.0;
  }
  report.observed[0] = 1.0 - static_cast<double>(train.nnz()) / all_cells;
  report.observed_nonzero = 1.0 - report.observed[0];
  report.simulated_nonzero = 1.0 - report.simulated[0];
  return report;
}

}  // namespace ordnmf
