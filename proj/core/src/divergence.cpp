#include "few/divergence.hpp"

#include <cmath>
#include <stdexcept>

namespace few {

double relative_entropy(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("relative_entropy: size mismatch");
    double sum = 0.0;
    for (std::size_t e = 0; e < a.size(); ++e) {
        if (a[e] == 0.0) continue;
        if (b[e] == 0.0)
            throw std::domain_error("relative_entropy: support of a not contained in support of b");
        sum += a[e] * std::log(a[e] / b[e]);
    }
    return sum;
}

double phi_tabular(const Policy& comparator_weights, std::span<const double> prior_rows) {
    const int N = comparator_weights.num_contexts;
    const int K = comparator_weights.num_actions;
    if (prior_rows.size() != static_cast<std::size_t>(N) * K)
        throw std::invalid_argument("phi_tabular: prior shape mismatch");
    double phi = 0.0;
    for (int i = 0; i < comparator_weights.num_groups; ++i)
        for (int x = 0; x < N; ++x)
            phi += relative_entropy(comparator_weights.row(i, x),
                                    prior_rows.subspan(static_cast<std::size_t>(x) * K, K));
    return phi;
}

} // namespace few
