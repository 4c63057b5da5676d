#include "ordnmf/synthetic.hpp"

#include <random>

namespace ordnmf {

SyntheticData simulate(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  SyntheticData out;
  out.thresholds = ThresholdSequence(spec.theta);
  auto draw = [&](Index rows, double shape, double rate) {
    RowMatrix m(rows, spec.rank);
    std::gamma_distribution<double> gamma(shape, 1.0 / rate);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) m(r, k) = gamma(rng);
    }
    return m;
  };
  out.w = draw(spec.n_users, spec.shape_w, spec.rate_w);
  out.h = draw(spec.n_items, spec.shape_h, spec.rate_h);

  std::vector<Entry> entries;
  for (Index u = 0; u < spec.n_users; ++u) {
    for (Index i = 0; i < spec.n_items; ++i) {
      const Class y = sample_class(out.w.row(u).dot(out.h.row(i)), out.thresholds, rng);
      if (y > 0) entries.push_back({u, i, y});
    }
  }
  out.matrix = OrdinalMatrix(spec.n_users, spec.n_items, out.thresholds.n_classes(), std::move(entries));
  return out;
}

}  // namespace ordnmf
