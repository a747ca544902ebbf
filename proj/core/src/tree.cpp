#include "few/tree.hpp"

#include <algorithm>
#include <cmath>

namespace few {

long required_sample_size(long horizon, int height, double eps_hat) {
    if (!(eps_hat > 0.0)) throw std::invalid_argument("required_sample_size: eps must be positive");
    if (horizon <= 0 || height <= 0)
        throw std::invalid_argument("required_sample_size: horizon and height must be positive");
    double h_over_eps = static_cast<double>(height) / eps_hat;
    return static_cast<long>(std::ceil(8.0 * std::log(2.0 * static_cast<double>(horizon)) *
                                       h_over_eps * h_over_eps));
}

GroupSubtree::GroupSubtree(int group, int num_actions, TreePrior prior, HedgeConfig hedge,
                           int depth_cap, TreeMode mode, long sample_threshold, MassOracle oracle)
    : group_(group), K_(num_actions), prior_(prior), eta_(hedge.learning_rate),
      depth_cap_(depth_cap), mode_(mode), sample_threshold_(sample_threshold),
      oracle_(std::move(oracle)) {
    prior_.validate();
    hedge.validate();
    if (K_ < 2) throw std::invalid_argument("GroupSubtree: need at least 2 actions");
    if (depth_cap_ < 0) throw std::invalid_argument("GroupSubtree: negative depth cap");
    if (mode_ == TreeMode::known_target && !oracle_)
        throw std::invalid_argument("GroupSubtree: known-target mode needs a mass oracle");
    if (mode_ == TreeMode::empirical && sample_threshold_ <= 0)
        throw std::invalid_argument("GroupSubtree: empirical mode needs a positive threshold");
    Node root;
    root.lo = 0.0;
    root.hi = 1.0;
    root.mass = 1.0;
    root.log_potential.assign(K_, 0.0);
    nodes_.push_back(std::move(root));
}

std::pair<double, double> GroupSubtree::interval(int node) const {
    check_node(node);
    return {nodes_[node].lo, nodes_[node].hi};
}

void GroupSubtree::check_node(int node) const {
    if (node < 0 || node >= num_nodes()) throw std::out_of_range("GroupSubtree: bad node id");
}

int GroupSubtree::locate_leaf(double x) const {
    if (!(x >= 0.0 && x < 1.0))
        throw std::invalid_argument("locate_leaf: context outside [0,1)");
    int v = 0;
    while (nodes_[v].left >= 0) {
        int l = nodes_[v].left;
        v = (x < nodes_[l].hi) ? l : nodes_[v].right;
    }
    return v;
}

std::vector<int> GroupSubtree::leaves() const {
    std::vector<int> out;
    for (int v = 0; v < num_nodes(); ++v)
        if (nodes_[v].left < 0) out.push_back(v);
    return out;
}

std::vector<std::pair<int, double>> GroupSubtree::leaf_target() const {
    std::vector<std::pair<int, double>> out;
    for (int v : leaves())
        if (nodes_[v].mass != 0.0) out.emplace_back(v, nodes_[v].mass);
    return out;
}

ActionDist GroupSubtree::potential_probs(int node) const {
    const auto& lp = nodes_[node].log_potential;
    double mx = *std::max_element(lp.begin(), lp.end());
    ActionDist p(K_);
    double sum = 0.0;
    for (int a = 0; a < K_; ++a) {
        p[a] = std::exp(lp[a] - mx);
        sum += p[a];
    }
    for (double& v : p) v /= sum;
    return p;
}

ActionDist GroupSubtree::edge_propagate(const ActionDist& w) const {
    // out(b) = (1-gamma) w(b) + gamma/K * sum(w); preserves normalization
    double total = 0.0;
    for (double v : w) total += v;
    ActionDist out(K_);
    double mix = prior_.switch_prob * total / K_;
    for (int a = 0; a < K_; ++a) out[a] = (1.0 - prior_.switch_prob) * w[a] + mix;
    return out;
}

ActionDist GroupSubtree::node_belief(int node) const {
    ActionDist b = potential_probs(node);
    const Node& n = nodes_[node];
    for (int c : {n.left, n.right}) {
        if (c < 0) continue;
        const auto& m = up_message(c);
        for (int a = 0; a < K_; ++a) b[a] *= m[a];
    }
    double sum = 0.0;
    for (double v : b) sum += v;
    for (double& v : b) v /= sum;
    return b;
}

const std::vector<double>& GroupSubtree::up_message(int node) const {
    const Node& n = nodes_[node];
    if (!n.up_valid) {
        n.up_msg = edge_propagate(node_belief(node));
        n.up_valid = true;
    }
    return n.up_msg;
}

void GroupSubtree::invalidate_to_root(int node) {
    for (int v = node; v >= 0; v = nodes_[v].parent) nodes_[v].up_valid = false;
}

ActionDist GroupSubtree::bp_query(int node) const {
    check_node(node);
    // path from root down to the node
    std::vector<int> path;
    for (int v = node; v >= 0; v = nodes_[v].parent) path.push_back(v);
    std::reverse(path.begin(), path.end());

    ActionDist down(K_, 1.0 / K_);
    for (std::size_t step = 0; step + 1 < path.size(); ++step) {
        int u = path[step];
        int next = path[step + 1];
        ActionDist w = potential_probs(u);
        for (int a = 0; a < K_; ++a) w[a] *= down[a];
        const Node& un = nodes_[u];
        int sibling = (un.left == next) ? un.right : un.left;
        if (sibling >= 0) {
            const auto& m = up_message(sibling);
            for (int a = 0; a < K_; ++a) w[a] *= m[a];
        }
        double sum = 0.0;
        for (double v : w) sum += v;
        for (double& v : w) v /= sum;
        down = edge_propagate(w);
    }

    ActionDist belief = node_belief(node);
    double sum = 0.0;
    for (int a = 0; a < K_; ++a) {
        belief[a] *= down[a];
        sum += belief[a];
    }
    for (double& v : belief) v /= sum;
    return belief;
}

void GroupSubtree::bp_update(int leaf, std::span<const double> gradient) {
    check_node(leaf);
    if (!is_leaf(leaf)) throw std::invalid_argument("bp_update: node is not a current leaf");
    if (static_cast<int>(gradient.size()) != K_)
        throw std::invalid_argument("bp_update: gradient length mismatch");
    require_finite(gradient, "bp_update");
    auto& lp = nodes_[leaf].log_potential;
    for (int a = 0; a < K_; ++a) lp[a] -= eta_ * gradient[a];
    double mx = *std::max_element(lp.begin(), lp.end());
    for (double& v : lp) v -= mx;
    invalidate_to_root(leaf);
}

bool GroupSubtree::grow(int leaf) {
    check_node(leaf);
    if (!is_leaf(leaf)) throw std::invalid_argument("grow: node already has children");
    Node& n = nodes_[leaf];
    if (n.depth >= depth_cap_) return false;
    if (mode_ == TreeMode::empirical && n.count < sample_threshold_) return false;

    double mid = 0.5 * (n.lo + n.hi);
    double p_left;
    double mass_left, mass_right;
    if (mode_ == TreeMode::known_target) {
        mass_left = oracle_(group_, n.lo, mid);
        mass_right = oracle_(group_, mid, n.hi);
        if (std::abs(mass_left + mass_right - n.mass) > 1e-9)
            throw std::runtime_error("grow: mass oracle is not additive over children");
        p_left = (n.mass > 0.0) ? mass_left / n.mass : 0.5;
    } else {
        p_left = static_cast<double>(n.left_tally) / static_cast<double>(n.count);
        mass_left = p_left * n.mass;
        mass_right = (1.0 - p_left) * n.mass;
    }

    Node left, right;
    left.lo = n.lo;
    left.hi = mid;
    right.lo = mid;
    right.hi = n.hi;
    left.depth = right.depth = n.depth + 1;
    left.parent = right.parent = leaf;
    left.mass = mass_left;
    right.mass = mass_right;
    left.proportion = p_left;
    right.proportion = 1.0 - p_left;
    left.log_potential.assign(K_, 0.0);
    right.log_potential.assign(K_, 0.0);

    int li = num_nodes();
    nodes_.push_back(std::move(left));
    int ri = num_nodes();
    nodes_.push_back(std::move(right));
    nodes_[leaf].left = li;
    nodes_[leaf].right = ri;
    invalidate_to_root(leaf);
    return true;
}

int GroupSubtree::record(double x) {
    if (mode_ != TreeMode::empirical)
        throw std::logic_error("record: only meaningful in empirical mode");
    int leaf = locate_leaf(x);
    Node& n = nodes_[leaf];
    ++n.count;
    double mid = 0.5 * (n.lo + n.hi);
    if (x < mid) ++n.left_tally;
    if (n.count >= sample_threshold_) grow(leaf);
    return leaf;
}

LearnerSnapshot GroupSubtree::snapshot() const {
    LearnerSnapshot s;
    s.kind = "tree";
    s.dims = {num_nodes(), K_, depth_cap_};
    s.weights.reserve(static_cast<std::size_t>(num_nodes()) * K_);
    s.node_meta.reserve(nodes_.size());
    for (int v = 0; v < num_nodes(); ++v) {
        ActionDist p = potential_probs(v);
        s.weights.insert(s.weights.end(), p.begin(), p.end());
        NodeMeta m;
        m.lo = nodes_[v].lo;
        m.hi = nodes_[v].hi;
        m.count = nodes_[v].count;
        m.proportion = nodes_[v].proportion;
        m.mass = nodes_[v].mass;
        m.parent = nodes_[v].parent;
        m.left = nodes_[v].left;
        m.right = nodes_[v].right;
        m.leaf = nodes_[v].left < 0;
        s.node_meta.push_back(m);
    }
    return s;
}

int TreeLearner::num_actions() const { return subtree_->num_actions(); }

std::unique_ptr<BaseLearner> TreeLearner::clone() const {
    return std::make_unique<TreeLearner>(std::make_shared<GroupSubtree>(*subtree_));
}

TreeReduction::TreeReduction(int num_groups, int num_actions, TreeConfig cfg, HedgeConfig hedge,
                             MassOracle oracle) {
    if (num_groups <= 0) throw std::invalid_argument("TreeReduction: need at least one group");
    for (int i = 0; i < num_groups; ++i)
        trees_.push_back(std::make_shared<GroupSubtree>(i, num_actions, cfg.prior, hedge,
                                                        cfg.depth_cap, cfg.mode,
                                                        cfg.sample_threshold, oracle));
}

std::vector<std::unique_ptr<BaseLearner>> TreeReduction::make_learners() {
    std::vector<std::unique_ptr<BaseLearner>> out;
    out.reserve(trees_.size());
    for (auto& t : trees_) out.push_back(std::make_unique<TreeLearner>(t));
    return out;
}

TrialTarget TreeReduction::trial_target() const {
    TrialTarget t(num_groups());
    for (int i = 0; i < num_groups(); ++i) t.rows[i] = trees_[i]->leaf_target();
    return t;
}

void TreeReduction::end_trial(int group, double x) {
    if (trees_[group]->mode() == TreeMode::empirical) {
        trees_[group]->record(x);
    } else {
        int leaf = trees_[group]->locate_leaf(x);
        trees_[group]->grow(leaf);
    }
}

} // namespace few
