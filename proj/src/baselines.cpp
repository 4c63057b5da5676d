#include "ordnmf/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "ordnmf/errors.hpp"
#include "ordnmf/inference.hpp"

namespace ordnmf {

OrdinalMatrix binarize(const OrdinalMatrix& matrix, const BinarizationRule& rule) {
  if (rule.threshold < 1 || rule.threshold > matrix.n_classes()) {
    throw ConfigError("binarization threshold " + std::to_string(rule.threshold) + " outside 1.." +
                      std::to_string(matrix.n_classes()));
  }
  std::vector<Entry> kept;
  for (std::size_t pos = 0; pos < matrix.nnz(); ++pos) {
    if (matrix.cls(pos) >= rule.threshold) kept.push_back({matrix.user(pos), matrix.item(pos), 1});
  }
  return OrdinalMatrix(matrix.n_users(), matrix.n_items(), 1, std::move(kept));
}

FitConfig make_bepof_config(FitConfig base) {
  base.bepof_mode = true;
  base.learn_thresholds = false;
  base.pf_approximation = false;
  base.initial_theta.reset();
  return base;
}

FitConfig make_pf_config(FitConfig base) {
  FitConfig config = make_bepof_config(std::move(base));
  config.pf_approximation = true;
  return config;
}

double pf_approximation_gap(const VariationalState& state, const OrdinalMatrix& data) {
  const LocalStatistics stats = local_update(state, data, false);
  double gap = 0.0;
  for (double n : stats.expected_count) gap = std::max(gap, std::abs(n - 1.0));
  return gap;
}

}  // namespace ordnmf
