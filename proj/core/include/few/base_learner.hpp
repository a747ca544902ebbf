#pragma once

#include "few/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace few {

struct HedgeConfig {
    double learning_rate = 0.0; // eta-hat

    void validate() const {
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("HedgeConfig: learning rate must be positive");
    }
};

// Snapshot of a learner's state for harness replay. `weights` is the
// row-major probability matrix; `node_meta` is populated only by the
// decomposition-tree learner.
struct NodeMeta {
    double lo = 0.0, hi = 0.0; // interval covered by the node
    long count = 0;            // empirical-mode visit count
    double proportion = 0.0;   // share of the parent's mass
    double mass = 0.0;
    int parent = -1;
    int left = -1, right = -1;
    bool leaf = true;
};

struct LearnerSnapshot {
    int version = 1;
    std::string kind;
    std::vector<long> dims;
    std::vector<double> weights;
    std::vector<NodeMeta> node_meta;
};

std::string snapshot_to_json(const LearnerSnapshot& s);
LearnerSnapshot snapshot_from_json(const std::string& text);

// The Query/Update contract every base algorithm implements. Query returns
// the per-context marginal of the implicitly maintained expert
// distribution; Update applies w(e) <- w(e) * exp(-eta * g(e(context)))
// followed by normalization. Gradients may be negative: the parity terms
// of the meta-algorithm's pseudo-gradient are.
class BaseLearner {
public:
    virtual ~BaseLearner() = default;

    virtual ActionDist query(int context) const = 0;
    virtual void update(int context, std::span<const double> gradient) = 0;

    virtual int num_actions() const = 0;
    virtual std::unique_ptr<BaseLearner> clone() const = 0;
    virtual LearnerSnapshot snapshot() const = 0;
};

} // namespace few
