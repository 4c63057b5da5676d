#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "ordnmf/ordinal_matrix.hpp"
#include "ordnmf/variational.hpp"

namespace ordnmf {

struct NdcgOptions {
  std::size_t list_length = 100;
  // Drop items that are non-zero in the training matrix before ranking.
  bool exclude_train = true;
  // Users without a relevant test item are skipped; otherwise they score 0.
  bool skip_users_without_relevant = true;
  unsigned threads = 1;
};

struct NdcgResult {
  Class threshold = 1;
  double mean_ndcg = 0.0;
  std::size_t n_users = 0;  // users entering the mean
  bool empty() const { return n_users == 0; }
};

struct RankingMetricsReport {
  std::size_t list_length = 0;
  std::vector<NdcgResult> results;  // one per requested threshold, same order
};

// Fills `out` (length n_items) with the scores of user u.
using ScoreFn = std::function<void(Index u, std::span<double> out)>;

// rel(u, i) = 1[y_test_ui >= s]. Items are ranked by descending score with
// ties broken by ascending item index.
RankingMetricsReport ndcg_at_m(const ScoreFn& scores, const OrdinalMatrix& train, const OrdinalMatrix& test,
                               std::span<const Class> thresholds, const NdcgOptions& options = {});
RankingMetricsReport ndcg_at_m(const RowMatrix& scores, const OrdinalMatrix& train, const OrdinalMatrix& test,
                               std::span<const Class> thresholds, const NdcgOptions& options = {});
RankingMetricsReport ndcg_at_m(const VariationalState& state, const OrdinalMatrix& train,
                               const OrdinalMatrix& test, std::span<const Class> thresholds,
                               const NdcgOptions& options = {});

// NDCG of one ranked relevance list against n_relevant relevant items.
double ndcg_of_ranking(std::span<const char> relevance_in_rank_order, std::size_t n_relevant, std::size_t m);

// sum over test entries of log p(y | y > 0, E[W], E[H]).
double log_lik_nonzeros(const OrdinalMatrix& test, const VariationalState& state);

// log p(y = v | y > 0, lambda) for v >= 1.
double conditional_log_pmf(Class v, double lambda, const ThresholdSequence& thresholds);

struct PPCReport {
  std::vector<double> observed;   // class frequencies of the train matrix over all cells, v = 0..V
  std::vector<double> simulated;  // class frequencies of the replicated cells
  double observed_nonzero = 0.0;
  double simulated_nonzero = 0.0;
  std::size_t n_cells = 0;
};

inline constexpr std::size_t kDefaultPpcCells = 10'000'000;

// Draws W and H once from q, then classes for n_cells cells. All cells are
// used when n_cells >= U * I; otherwise cells are drawn uniformly with
// replacement.
PPCReport ppc_histogram(const VariationalState& state, const OrdinalMatrix& train, std::mt19937_64& rng,
                        std::size_t n_cells = kDefaultPpcCells);

}  // namespace ordnmf
