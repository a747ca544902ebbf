#include "few/divergence.hpp"
#include "few/policy.hpp"
#include "few/rng.hpp"
#include "few/target.hpp"

#include <doctest.h>

#include <cmath>

using namespace few;

namespace {

// WE-1: two groups, two contexts, two actions, mu = 1/2 everywhere; group
// 0 plays action 0 deterministically, group 1 plays action 1.
Policy we1_raw_policy() {
    Policy p(2, 2, 2, 0.0);
    for (int x = 0; x < 2; ++x) {
        p(0, x, 0) = 1.0;
        p(1, x, 1) = 1.0;
    }
    return p;
}

} // namespace

TEST_CASE("dims validation") {
    Dims d{2, 3, 2, 10};
    CHECK_NOTHROW(d.validate());
    d.num_actions = 0;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("validate_target accepts uniform rows") {
    Dims d{2, 4, 2, 10};
    Target t = Target::uniform(2, 4);
    CHECK(validate_target(t, d).ok);
}

TEST_CASE("validate_target reports row deviation") {
    Dims d{1, 2, 2, 10};
    Target t(1, 2);
    t(0, 0) = 0.6;
    t(0, 1) = 0.5;
    TargetReport r = validate_target(t, d);
    CHECK_FALSE(r.ok);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].group == 0);
    CHECK(r.violations[0].row_deviation == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("validate_target reports negative entries") {
    Dims d{1, 3, 2, 10};
    Target t(1, 3);
    t(0, 0) = 0.7;
    t(0, 1) = -0.1;
    t(0, 2) = 0.4;
    TargetReport r = validate_target(t, d);
    CHECK_FALSE(r.ok);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].negative_entry);
}

TEST_CASE("validate_target shape mismatch throws") {
    Dims d{2, 3, 2, 10};
    Target t = Target::uniform(1, 3);
    CHECK_THROWS_AS(validate_target(t, d), std::invalid_argument);
}

TEST_CASE("group_action_marginal on WE-1") {
    Target mu = Target::uniform(2, 2);
    auto omega = group_action_marginal(we1_raw_policy(), mu);
    CHECK(omega[0 * 2 + 0] == doctest::Approx(1.0));
    CHECK(omega[1 * 2 + 0] == doctest::Approx(0.0));
    CHECK(omega[0 * 2 + 1] == doctest::Approx(0.0));
    CHECK(omega[1 * 2 + 1] == doctest::Approx(1.0));
}

TEST_CASE("marginal of the uniform policy is uniform") {
    Target mu = Target::uniform(3, 4);
    Policy p = Policy::uniform(3, 4, 5);
    auto omega = group_action_marginal(p, mu);
    for (double v : omega) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("single-context support reduces the marginal to that row") {
    Target mu(2, 3, 0.0);
    mu(0, 1) = 1.0;
    mu(1, 2) = 1.0;
    Rng rng(5);
    Policy p(2, 3, 2);
    for (int i = 0; i < 2; ++i)
        for (int x = 0; x < 3; ++x) {
            double u = 0.2 + 0.6 * rng.next_double();
            p(i, x, 0) = u;
            p(i, x, 1) = 1.0 - u;
        }
    auto omega = group_action_marginal(p, mu);
    CHECK(omega[0] == doctest::Approx(p(0, 1, 0)));
    CHECK(omega[2] == doctest::Approx(p(1, 2, 0)));
}

TEST_CASE("parity_violation of the uniform policy is zero") {
    Target mu = Target::uniform(3, 4);
    CHECK(parity_violation(Policy::uniform(3, 4, 2), mu) == doctest::Approx(0.0));
}

TEST_CASE("parity_violation of the WE-1 raw policy is 1") {
    Target mu = Target::uniform(2, 2);
    CHECK(parity_violation(we1_raw_policy(), mu) == doctest::Approx(1.0));
}

TEST_CASE("support uses exact zero comparison") {
    Target t(2, 2, 0.0);
    t(0, 0) = 1.0;
    t(1, 0) = 0.5;
    t(1, 1) = 0.5;
    CHECK(t.support(0) == std::vector<int>{0});
    CHECK(t.support(1) == std::vector<int>{0, 1});
}

TEST_CASE("uniform target has full support") {
    Target t = Target::uniform(1, 6);
    CHECK(t.support(0).size() == 6);
}

TEST_CASE("trial target from dense drops zero entries and validates") {
    Target t(2, 3, 0.0);
    t(0, 0) = 1.0;
    t(1, 1) = 0.25;
    t(1, 2) = 0.75;
    TrialTarget tt(t);
    CHECK(tt.rows[0].size() == 1);
    CHECK(tt.rows[1].size() == 2);
    CHECK(tt.mass_at(1, 1) == doctest::Approx(0.25));
    CHECK(tt.mass_at(1, 0) == 0.0);
    CHECK_NOTHROW(tt.validate());
}

TEST_CASE("relative entropy basics") {
    std::vector<double> a = {0.75, 0.25}, b = {0.5, 0.5};
    CHECK(relative_entropy(a, a) == doctest::Approx(0.0));
    CHECK(relative_entropy(a, b) == doctest::Approx(0.13081).epsilon(1e-4));
    std::vector<double> point = {1.0, 0.0, 0.0}, unif = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(relative_entropy(point, unif) == doctest::Approx(std::log(3.0)));
    std::vector<double> bad_support = {0.5, 0.5}, zero = {1.0, 0.0};
    CHECK_THROWS_AS(relative_entropy(bad_support, zero), std::domain_error);
}

TEST_CASE("phi of a deterministic comparator against the uniform prior") {
    int M = 2, N = 2, K = 2;
    Policy comp(M, N, K, 0.0);
    for (int i = 0; i < M; ++i)
        for (int x = 0; x < N; ++x) comp(i, x, (i + x) % K) = 1.0;
    std::vector<double> prior(static_cast<std::size_t>(N) * K, 1.0 / K);
    CHECK(phi_tabular(comp, prior) == doctest::Approx(M * N * std::log(2.0)));
}

TEST_CASE("phi matches the row-wise relative entropy") {
    Policy comp(1, 1, 2, 0.0);
    comp(0, 0, 0) = 0.75;
    comp(0, 0, 1) = 0.25;
    std::vector<double> prior = {0.5, 0.5};
    CHECK(phi_tabular(comp, prior) == doctest::Approx(0.13081).epsilon(1e-4));
    Policy same(1, 1, 2, 0.5);
    CHECK(phi_tabular(same, prior) == doctest::Approx(0.0));
}

TEST_CASE("rng substreams are stable and independent of call order") {
    Rng a(42), b(42);
    Rng a1 = a.split(7);
    (void)b.next_u64();
    Rng b1 = b.split(7);
    CHECK(a1.next_u64() == b1.next_u64());
}

TEST_CASE("discrete sampling respects point masses") {
    Rng rng(3);
    std::vector<double> p = {0.0, 1.0, 0.0};
    for (int s = 0; s < 20; ++s) CHECK(rng.sample_discrete(p) == 1);
}
