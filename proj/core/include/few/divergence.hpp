#pragma once

#include "few/policy.hpp"

#include <span>

namespace few {

// KL divergence between two distributions on the same finite set, with the
// 0 ln 0 = 0 convention. Throws std::domain_error when support(a) is not
// contained in support(b).
double relative_entropy(std::span<const double> a, std::span<const double> b);

// Complexity of a product-form comparator against a shared per-context
// prior: sum over groups and contexts of the row-wise relative entropy.
// For a deterministic comparator and uniform prior this is M * N * ln K.
double phi_tabular(const Policy& comparator_weights, std::span<const double> prior_rows);

} // namespace few
