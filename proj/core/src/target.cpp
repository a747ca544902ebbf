#include "few/target.hpp"

#include <cmath>

namespace few {

Target Target::uniform(int groups, int contexts) {
    Target t(groups, contexts, 1.0 / contexts);
    return t;
}

std::vector<int> Target::support(int group) const {
    std::vector<int> out;
    for (int x = 0; x < num_contexts; ++x)
        if (mass[idx(group, x)] != 0.0) out.push_back(x);
    return out;
}

TargetReport validate_target(const Target& t, const Dims& dims, bool allow_inactive_rows) {
    TargetReport report;
    if (t.num_groups != dims.num_groups || t.num_contexts != dims.num_contexts)
        throw std::invalid_argument("validate_target: target shape does not match dims");

    for (int i = 0; i < t.num_groups; ++i) {
        TargetViolation v;
        v.group = i;
        double sum = 0.0;
        bool all_zero = true;
        for (int x = 0; x < t.num_contexts; ++x) {
            double m = t(i, x);
            if (m != 0.0) all_zero = false;
            if (m < 0.0) v.negative_entry = true;
            if (m < 0.0 || m > 1.0) v.out_of_range = true;
            sum += m;
        }
        if (all_zero && allow_inactive_rows) continue;
        v.row_deviation = std::abs(sum - 1.0);
        if (v.negative_entry || v.out_of_range || v.row_deviation > kDistTol) {
            report.ok = false;
            report.violations.push_back(v);
        }
    }
    return report;
}

TrialTarget::TrialTarget(const Target& dense) : rows(dense.num_groups) {
    for (int i = 0; i < dense.num_groups; ++i)
        for (int x = 0; x < dense.num_contexts; ++x)
            if (dense(i, x) != 0.0) rows[i].emplace_back(x, dense(i, x));
}

double TrialTarget::mass_at(int group, int context) const {
    for (const auto& [x, m] : rows[group])
        if (x == context) return m;
    return 0.0;
}

void TrialTarget::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].empty()) continue;
        double sum = 0.0;
        for (const auto& [x, m] : rows[i]) {
            if (!(m > 0.0) || m > 1.0)
                throw std::invalid_argument("TrialTarget: support mass must lie in (0,1]");
            sum += m;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("TrialTarget: group row does not sum to 1");
    }
}

} // namespace few
