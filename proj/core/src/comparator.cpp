#include "few/comparator.hpp"

#include "few/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace few {

Comparator Comparator::single(Policy p) {
    Comparator c;
    c.starts = {1};
    c.policies = {std::move(p)};
    return c;
}

Comparator Comparator::piecewise(std::vector<long> starts, std::vector<Policy> policies) {
    if (starts.empty() || starts.size() != policies.size() || starts.front() != 1)
        throw std::invalid_argument("Comparator: starts must begin at 1, one per policy");
    if (!std::is_sorted(starts.begin(), starts.end()))
        throw std::invalid_argument("Comparator: starts must be ascending");
    Comparator c;
    c.starts = std::move(starts);
    c.policies = std::move(policies);
    return c;
}

const Policy& Comparator::at(long trial) const {
    std::size_t seg = 0;
    for (std::size_t s = 0; s < starts.size(); ++s)
        if (starts[s] <= trial) seg = s;
    return policies[seg];
}

double Comparator::worst_violation(std::span<const TrialTarget> targets) const {
    double worst = 0.0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const Policy& p = at(static_cast<long>(t) + 1);
        PolicyRowFn rows = [&p](int i, int x) {
            ActionDist r(p.num_actions);
            for (int a = 0; a < p.num_actions; ++a) r[a] = p(i, x, a);
            return r;
        };
        worst = std::max(worst, parity_violation(rows, targets[t], p.num_actions));
    }
    return worst;
}

void Comparator::check_fair(std::span<const TrialTarget> targets, double tol) const {
    double worst = worst_violation(targets);
    if (worst > tol)
        throw std::invalid_argument("Comparator: parity violation " + std::to_string(worst) +
                                    " exceeds tolerance");
}

void project_to_simplex(std::span<double> v) {
    // Held et al. sort-based projection
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0;
    double theta = 0.0;
    int rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        css += u[j];
        double t = (css - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            rho = static_cast<int>(j + 1);
            theta = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(0.0, x - theta);
}

namespace {

// Projection onto the affine set {for each action: mu-weighted group
// marginals all equal}. Decomposes per action; the shared marginal that
// minimizes the squared move has a closed form.
void project_to_parity_subspace(std::vector<double>& pi, const Target& mu, int K,
                                const std::vector<int>& active,
                                const std::vector<double>& mu_sqnorm) {
    const int N = mu.num_contexts;
    for (int a = 0; a < K; ++a) {
        double num = 0.0, den = 0.0;
        std::vector<double> omega(active.size(), 0.0);
        for (std::size_t g = 0; g < active.size(); ++g) {
            int i = active[g];
            double w = 0.0;
            for (int x = 0; x < N; ++x)
                w += mu(i, x) * pi[(static_cast<std::size_t>(i) * N + x) * K + a];
            omega[g] = w;
            num += w / mu_sqnorm[i];
            den += 1.0 / mu_sqnorm[i];
        }
        double shared = num / den;
        for (std::size_t g = 0; g < active.size(); ++g) {
            int i = active[g];
            double scale = (shared - omega[g]) / mu_sqnorm[i];
            for (int x = 0; x < N; ++x)
                pi[(static_cast<std::size_t>(i) * N + x) * K + a] += scale * mu(i, x);
        }
    }
}

double parity_of(const std::vector<double>& pi, const Target& mu, int K,
                 const std::vector<int>& active) {
    const int N = mu.num_contexts;
    double worst = 0.0;
    for (int a = 0; a < K; ++a) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (int i : active) {
            double w = 0.0;
            for (int x = 0; x < N; ++x)
                w += mu(i, x) * pi[(static_cast<std::size_t>(i) * N + x) * K + a];
            if (first) { lo = hi = w; first = false; }
            else { lo = std::min(lo, w); hi = std::max(hi, w); }
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

// Dykstra sweeps between the simplex product and the parity subspace.
void project_feasible(std::vector<double>& pi, const Target& mu, int K,
                      const std::vector<int>& active, const std::vector<double>& mu_sqnorm,
                      int sweeps) {
    const int N = mu.num_contexts;
    const int M = mu.num_groups;
    std::vector<double> correction(pi.size(), 0.0);
    for (int s = 0; s < sweeps; ++s) {
        // simplex part with Dykstra correction
        for (std::size_t j = 0; j < pi.size(); ++j) pi[j] += correction[j];
        std::vector<double> before = pi;
        for (int i = 0; i < M; ++i)
            for (int x = 0; x < N; ++x)
                project_to_simplex(std::span<double>(
                    pi.data() + (static_cast<std::size_t>(i) * N + x) * K, K));
        for (std::size_t j = 0; j < pi.size(); ++j) correction[j] = before[j] - pi[j];
        // affine part needs no correction
        project_to_parity_subspace(pi, mu, K, active, mu_sqnorm);
        if (parity_of(pi, mu, K, active) < 1e-13) {
            bool rows_ok = true;
            for (std::size_t j = 0; j < pi.size() && rows_ok; ++j)
                if (pi[j] < -1e-13) rows_ok = false;
            if (rows_ok && s >= 2) break;
        }
    }
    // final clean-up: tiny negatives clipped, rows renormalized, then one
    // exact affine step to restore parity
    for (int i = 0; i < M; ++i)
        for (int x = 0; x < N; ++x) {
            double sum = 0.0;
            for (int a = 0; a < K; ++a) {
                double& v = pi[(static_cast<std::size_t>(i) * N + x) * K + a];
                v = std::max(v, 0.0);
                sum += v;
            }
            for (int a = 0; a < K; ++a)
                pi[(static_cast<std::size_t>(i) * N + x) * K + a] /= sum;
        }
    project_to_parity_subspace(pi, mu, K, active, mu_sqnorm);
}

double objective_of(const std::vector<double>& cost, const std::vector<double>& pi) {
    double o = 0.0;
    for (std::size_t j = 0; j < pi.size(); ++j) o += cost[j] * pi[j];
    return o;
}

} // namespace

FairLpResult solve_fair_lp(const std::vector<double>& cost, const Target& mu, int num_actions,
                           const FairLpOptions& opts) {
    const int M = mu.num_groups;
    const int N = mu.num_contexts;
    const int K = num_actions;
    if (cost.size() != static_cast<std::size_t>(M) * N * K)
        throw std::invalid_argument("solve_fair_lp: cost shape mismatch");

    std::vector<int> active;
    std::vector<double> mu_sqnorm(M, 0.0);
    for (int i = 0; i < M; ++i) {
        for (int x = 0; x < N; ++x) mu_sqnorm[i] += mu(i, x) * mu(i, x);
        if (mu_sqnorm[i] > 0.0) active.push_back(i);
    }

    FairLpResult result;

    if (active.size() <= 1) {
        // no parity coupling: pointwise argmin of the cost rows
        Policy p(M, N, K, 0.0);
        for (int i = 0; i < M; ++i)
            for (int x = 0; x < N; ++x) {
                int best = 0;
                for (int a = 1; a < K; ++a)
                    if (cost[(static_cast<std::size_t>(i) * N + x) * K + a] <
                        cost[(static_cast<std::size_t>(i) * N + x) * K + best])
                        best = a;
                p(i, x, best) = 1.0;
            }
        result.policy = p;
        result.objective = objective_of(cost, p.probs);
        result.parity = 0.0;
        result.cert_best_random = result.objective;
        return result;
    }

    double cost_norm = 0.0;
    for (double c : cost) cost_norm += c * c;
    cost_norm = std::sqrt(std::max(cost_norm, 1e-12));

    std::vector<double> pi(static_cast<std::size_t>(M) * N * K, 1.0 / K);
    project_feasible(pi, mu, K, active, mu_sqnorm, opts.projection_sweeps);

    std::vector<double> best = pi;
    double best_obj = objective_of(cost, pi);

    for (long it = 1; it <= opts.iterations; ++it) {
        double step = opts.step_scale / (cost_norm * std::sqrt(static_cast<double>(it)));
        for (std::size_t j = 0; j < pi.size(); ++j) pi[j] -= step * cost[j];
        project_feasible(pi, mu, K, active, mu_sqnorm, opts.projection_sweeps);
        double obj = objective_of(cost, pi);
        if (obj < best_obj) {
            best_obj = obj;
            best = pi;
        }
    }

    result.policy = Policy(M, N, K);
    result.policy.probs = best;
    result.objective = best_obj;
    result.parity = parity_of(best, mu, K, active);
    result.iterations = opts.iterations;

    // certification: the solution must beat a large family of trivially
    // fair policies (constant rows are fair for any target; context-
    // dependent group-blind rows are fair when the target rows agree)
    bool rows_identical = true;
    for (std::size_t g = 1; g < active.size() && rows_identical; ++g)
        for (int x = 0; x < N; ++x)
            if (std::abs(mu(active[g], x) - mu(active[0], x)) > 1e-12) {
                rows_identical = false;
                break;
            }

    Rng rng(opts.cert_seed);
    double cert = std::numeric_limits<double>::infinity();
    std::vector<double> blind(static_cast<std::size_t>(N) * K);
    for (long s = 0; s < opts.cert_samples; ++s) {
        if (rows_identical) {
            for (int x = 0; x < N; ++x) {
                double sum = 0.0;
                for (int a = 0; a < K; ++a) {
                    blind[static_cast<std::size_t>(x) * K + a] =
                        -std::log(1.0 - rng.next_double());
                    sum += blind[static_cast<std::size_t>(x) * K + a];
                }
                for (int a = 0; a < K; ++a) blind[static_cast<std::size_t>(x) * K + a] /= sum;
            }
            double obj = 0.0;
            for (int i = 0; i < M; ++i)
                for (int x = 0; x < N; ++x)
                    for (int a = 0; a < K; ++a)
                        obj += cost[(static_cast<std::size_t>(i) * N + x) * K + a] *
                               blind[static_cast<std::size_t>(x) * K + a];
            cert = std::min(cert, obj);
        } else {
            // constant action row shared by all (i,x)
            double sum = 0.0;
            for (int a = 0; a < K; ++a) {
                blind[a] = -std::log(1.0 - rng.next_double());
                sum += blind[a];
            }
            double obj = 0.0;
            for (int i = 0; i < M; ++i)
                for (int x = 0; x < N; ++x)
                    for (int a = 0; a < K; ++a)
                        obj += cost[(static_cast<std::size_t>(i) * N + x) * K + a] * blind[a] / sum;
            cert = std::min(cert, obj);
        }
    }
    result.cert_best_random = cert;
    return result;
}

FairLpResult best_fair_comparator(const std::vector<TrialRecord>& script, const Dims& dims,
                                  const FairLpOptions& opts) {
    if (script.empty()) throw std::invalid_argument("best_fair_comparator: empty script");
    // constant-target requirement
    const TrialTarget& first = script.front().target;
    for (const auto& r : script)
        if (r.target.rows != first.rows)
            throw std::invalid_argument("best_fair_comparator: target varies across the script");

    Target mu(dims.num_groups, dims.num_contexts, 0.0);
    for (int i = 0; i < dims.num_groups; ++i)
        for (const auto& [x, m] : first.rows[i]) mu(i, x) = m;

    std::vector<double> cost(
        static_cast<std::size_t>(dims.num_groups) * dims.num_contexts * dims.num_actions, 0.0);
    for (const auto& r : script)
        for (int a = 0; a < dims.num_actions; ++a)
            cost[(static_cast<std::size_t>(r.instance.group) * dims.num_contexts +
                  r.instance.context) *
                     dims.num_actions +
                 a] += r.loss[a];

    return solve_fair_lp(cost, mu, dims.num_actions, opts);
}

} // namespace few
