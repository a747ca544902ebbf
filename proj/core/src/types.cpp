#include "few/types.hpp"

#include <cmath>

namespace few {

void Dims::validate() const {
    if (num_groups <= 0 || num_contexts <= 0 || num_actions <= 0 || horizon <= 0)
        throw std::invalid_argument("Dims: all dimensions must be strictly positive");
}

bool is_action_dist(std::span<const double> p, double tol) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0 + tol)) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol * static_cast<double>(p.size() + 1);
}

bool is_loss_vector(std::span<const double> ell) {
    for (double v : ell)
        if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
}

void require_action_dist(std::span<const double> p, const std::string& what) {
    if (!is_action_dist(p, 1e-9))
        throw std::invalid_argument(what + ": not a probability distribution");
}

void require_loss_vector(std::span<const double> ell, const std::string& what) {
    if (!is_loss_vector(ell))
        throw std::invalid_argument(what + ": loss entries must lie in [0,1]");
}

void require_finite(std::span<const double> v, const std::string& what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw std::invalid_argument(what + ": non-finite entry");
}

} // namespace few
