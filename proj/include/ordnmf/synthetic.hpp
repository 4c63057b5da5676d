#pragma once

#include <cstdint>
#include <vector>

#include "ordnmf/ordinal_matrix.hpp"
#include "ordnmf/thresholds.hpp"
#include "ordnmf/variational.hpp"

namespace ordnmf {

// Draws W ~ Gamma(shape_w, rate_w), H ~ Gamma(shape_h, rate_h) entrywise,
// then y_ui from the IG-OrdNMF p.m.f. at lambda_ui = [W H^T]_ui.
struct SyntheticSpec {
  Index n_users = 200;
  Index n_items = 150;
  Eigen::Index rank = 5;
  double shape_w = 1.0;
  double rate_w = 1.0;
  double shape_h = 1.0;
  double rate_h = 1.0;
  std::vector<double> theta{1.0};
  std::uint64_t seed = 0;
};

struct SyntheticData {
  OrdinalMatrix matrix;
  RowMatrix w;
  RowMatrix h;
  ThresholdSequence thresholds{std::vector<double>{1.0}};
};

SyntheticData simulate(const SyntheticSpec& spec);

}  // namespace ordnmf
