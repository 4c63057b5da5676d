#pragma once

// Binary-data comparison models expressed as configurations of the ordinal
// model: BePoF is the V = 1, theta_0 = 1 case; PF additionally fixes
// q(n_ui) to a point mass at 1.

#include "ordnmf/ordinal_matrix.hpp"
#include "ordnmf/variational.hpp"

namespace ordnmf {

// y -> 1[y >= threshold]; valid for 1 <= threshold <= V.
struct BinarizationRule {
  Class threshold = 1;
};

OrdinalMatrix binarize(const OrdinalMatrix& matrix, const BinarizationRule& rule);

FitConfig make_bepof_config(FitConfig base);
FitConfig make_pf_config(FitConfig base);

// max over stored entries of |E[n_ui] - 1| under full BePoF local updates.
// Small values indicate the PF approximation is close to BePoF.
double pf_approximation_gap(const VariationalState& state, const OrdinalMatrix& data);

}  // namespace ordnmf
