#include "few/tree.hpp"

#include "few/environment.hpp"
#include "few/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace few;

namespace {

MassOracle uniform_oracle() {
    return [](int, double lo, double hi) { return hi - lo; };
}

GroupSubtree known_tree(int K = 2, double gamma = 0.25, int cap = 6) {
    return GroupSubtree(0, K, TreePrior{gamma}, HedgeConfig{0.5}, cap, TreeMode::known_target, 0,
                        uniform_oracle());
}

} // namespace

TEST_CASE("required sample size formula") {
    CHECK(required_sample_size(1000, 5, 0.5) == 6081);
    CHECK(required_sample_size(1, 1, 1.0) == 6);
    // doubling eps divides the pre-ceiling value by four
    long n1 = required_sample_size(5000, 4, 0.2);
    long n2 = required_sample_size(5000, 4, 0.4);
    CHECK(std::abs(4.0 * n2 - n1) <= 4.0);
    CHECK_THROWS_AS(required_sample_size(1000, 5, 0.0), std::invalid_argument);
}

TEST_CASE("locate on the root-only subtree returns the root") {
    GroupSubtree t = known_tree();
    CHECK(t.locate_leaf(0.99) == t.root());
    CHECK(t.locate_leaf(0.0) == t.root());
}

TEST_CASE("locate after one split") {
    GroupSubtree t = known_tree();
    t.grow(t.root());
    int left = t.locate_leaf(0.2);
    int right = t.locate_leaf(0.7);
    CHECK(left != right);
    CHECK(t.interval(left).second == doctest::Approx(0.5));
    CHECK(t.interval(right).first == doctest::Approx(0.5));
}

TEST_CASE("locate in a depth-3 dyadic tree") {
    GroupSubtree t = known_tree();
    // split down to depth 3 around 0.3
    for (int d = 0; d < 3; ++d) t.grow(t.locate_leaf(0.3));
    int leaf = t.locate_leaf(0.3);
    auto [lo, hi] = t.interval(leaf);
    CHECK(lo == doctest::Approx(0.25));
    CHECK(hi == doctest::Approx(0.375));
}

TEST_CASE("leaf target on the root-only subtree") {
    GroupSubtree t = known_tree();
    auto lt = t.leaf_target();
    REQUIRE(lt.size() == 1);
    CHECK(lt[0].second == doctest::Approx(1.0));
}

TEST_CASE("uniform measure splits evenly") {
    GroupSubtree t = known_tree();
    t.grow(t.root());
    auto lt = t.leaf_target();
    REQUIRE(lt.size() == 2);
    CHECK(lt[0].second == doctest::Approx(0.5));
    CHECK(lt[1].second == doctest::Approx(0.5));
}

TEST_CASE("empirical proportions drive the leaf target") {
    GroupSubtree t(0, 2, TreePrior{0.2}, HedgeConfig{0.5}, 6, TreeMode::empirical, 10, nullptr);
    Rng rng(4);
    for (int s = 0; s < 10; ++s) t.record(s < 7 ? 0.3 * rng.next_double() : 0.6);
    auto lt = t.leaf_target();
    REQUIRE(lt.size() == 2);
    CHECK(lt[0].second == doctest::Approx(0.7));
    CHECK(lt[1].second == doctest::Approx(0.3));
}

TEST_CASE("fresh tree queries are uniform") {
    GroupSubtree t = known_tree(3);
    ActionDist q = t.bp_query(t.root());
    for (double v : q) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("gamma = 1 decouples the leaves") {
    GroupSubtree t = known_tree(2, 1.0);
    t.grow(t.root());
    auto leaves = t.leaves();
    std::vector<double> g = {1.0, -1.0};
    t.bp_update(leaves[0], g);
    // the updated leaf behaves like a standalone hedge row
    ActionDist q0 = t.bp_query(leaves[0]);
    double w0 = std::exp(-0.5);
    double w1 = std::exp(0.5);
    CHECK(q0[0] == doctest::Approx(w0 / (w0 + w1)).epsilon(1e-12));
    // the sibling is untouched
    ActionDist q1 = t.bp_query(leaves[1]);
    CHECK(q1[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gamma near 0 copies the updated posterior everywhere") {
    GroupSubtree t = known_tree(2, 1e-12);
    t.grow(t.root());
    auto leaves = t.leaves();
    std::vector<double> g = {1.0, -1.0};
    t.bp_update(leaves[0], g);
    ActionDist q0 = t.bp_query(leaves[0]);
    ActionDist q1 = t.bp_query(leaves[1]);
    for (int a = 0; a < 2; ++a) CHECK(q1[a] == doctest::Approx(q0[a]).epsilon(1e-9));
}

TEST_CASE("zero gradient does not move any query") {
    GroupSubtree t = known_tree(2, 0.3);
    t.grow(t.root());
    auto leaves = t.leaves();
    std::vector<double> g = {0.6, -0.2};
    t.bp_update(leaves[0], g);
    ActionDist before = t.bp_query(leaves[1]);
    t.bp_update(leaves[1], std::vector<double>{0.0, 0.0});
    ActionDist after = t.bp_query(leaves[1]);
    for (int a = 0; a < 2; ++a) CHECK(before[a] == doctest::Approx(after[a]).epsilon(1e-12));
}

TEST_CASE("children inherit the parent marginal through the edge prior") {
    double gamma = 0.3;
    GroupSubtree t = known_tree(2, gamma);
    t.bp_update(t.root(), std::vector<double>{0.8, -0.8});
    ActionDist parent = t.bp_query(t.root());
    t.grow(t.root());
    for (int leaf : t.leaves()) {
        ActionDist q = t.bp_query(leaf);
        for (int a = 0; a < 2; ++a)
            CHECK(q[a] == doctest::Approx((1 - gamma) * parent[a] + gamma / 2).epsilon(1e-12));
    }
}

TEST_CASE("grow refuses below the empirical threshold") {
    GroupSubtree t(0, 2, TreePrior{0.2}, HedgeConfig{0.5}, 6, TreeMode::empirical, 3, nullptr);
    t.record(0.1);
    t.record(0.9);
    CHECK(t.leaves().size() == 1); // n-1 observations: refused
    CHECK_FALSE(t.grow(t.root()));
    t.record(0.4);
    CHECK(t.leaves().size() == 2); // n-th observation grows
    CHECK(t.proportion(t.locate_leaf(0.1)) == doctest::Approx(2.0 / 3));
}

TEST_CASE("record with n=2 and one observation per side splits evenly") {
    GroupSubtree t(0, 2, TreePrior{0.2}, HedgeConfig{0.5}, 6, TreeMode::empirical, 2, nullptr);
    t.record(0.1);
    t.record(0.7);
    auto lt = t.leaf_target();
    REQUIRE(lt.size() == 2);
    CHECK(lt[0].second == doctest::Approx(0.5));
    CHECK(lt[1].second == doctest::Approx(0.5));
}

TEST_CASE("one-sided observations leave a zero-mass child off the support") {
    GroupSubtree t(0, 2, TreePrior{0.2}, HedgeConfig{0.5}, 6, TreeMode::empirical, 4, nullptr);
    for (int s = 0; s < 4; ++s) t.record(0.1 + 0.05 * s);
    CHECK(t.leaves().size() == 2);
    auto lt = t.leaf_target();
    REQUIRE(lt.size() == 1); // right child has mass zero
    CHECK(lt[0].second == doctest::Approx(1.0));
    CHECK(t.node_mass(t.locate_leaf(0.9)) == 0.0);
}

TEST_CASE("growing a non-leaf is an error, depth cap is a signal") {
    GroupSubtree t = known_tree(2, 0.25, 2);
    t.grow(t.root());
    CHECK_THROWS_AS(t.grow(t.root()), std::invalid_argument);
    t.grow(t.locate_leaf(0.1));
    CHECK_FALSE(t.grow(t.locate_leaf(0.1))); // at the cap now
}

TEST_CASE("known-mode growth keeps children masses additive") {
    PiecewiseDensity d({0.4, 0.1, 0.3, 0.2});
    MassOracle oracle = [&d](int, double lo, double hi) { return d.mass(lo, hi); };
    GroupSubtree t(0, 2, TreePrior{0.2}, HedgeConfig{0.5}, 5, TreeMode::known_target, 0, oracle);
    t.grow(t.root());
    t.grow(t.locate_leaf(0.1));
    double sum = 0.0;
    for (int leaf : t.leaves()) sum += t.node_mass(leaf);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.node_mass(t.locate_leaf(0.1)) == doctest::Approx(0.4));
}

TEST_CASE("tree snapshot carries node metadata") {
    GroupSubtree t = known_tree();
    t.grow(t.root());
    LearnerSnapshot s = t.snapshot();
    CHECK(s.kind == "tree");
    REQUIRE(s.node_meta.size() == 3);
    CHECK(s.node_meta[0].leaf == false);
    CHECK(s.node_meta[1].lo == doctest::Approx(0.0));
    CHECK(s.node_meta[1].hi == doctest::Approx(0.5));
    LearnerSnapshot round = snapshot_from_json(snapshot_to_json(s));
    CHECK(round.node_meta.size() == 3);
    CHECK(round.node_meta[2].parent == 0);
}
