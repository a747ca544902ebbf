#include "few/base_learner.hpp"

#include <json.hpp>

namespace few {

std::string snapshot_to_json(const LearnerSnapshot& s) {
    nlohmann::json j;
    j["version"] = s.version;
    j["kind"] = s.kind;
    j["dims"] = s.dims;
    j["weights"] = s.weights;
    if (!s.node_meta.empty()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& m : s.node_meta) {
            nodes.push_back({{"lo", m.lo},
                             {"hi", m.hi},
                             {"count", m.count},
                             {"proportion", m.proportion},
                             {"mass", m.mass},
                             {"parent", m.parent},
                             {"left", m.left},
                             {"right", m.right},
                             {"leaf", m.leaf}});
        }
        j["nodes"] = std::move(nodes);
    }
    return j.dump();
}

LearnerSnapshot snapshot_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    LearnerSnapshot s;
    s.version = j.at("version").get<int>();
    if (s.version != 1)
        throw std::invalid_argument("snapshot_from_json: unsupported version");
    s.kind = j.at("kind").get<std::string>();
    s.dims = j.at("dims").get<std::vector<long>>();
    s.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("nodes")) {
        for (const auto& n : j.at("nodes")) {
            NodeMeta m;
            m.lo = n.at("lo").get<double>();
            m.hi = n.at("hi").get<double>();
            m.count = n.at("count").get<long>();
            m.proportion = n.at("proportion").get<double>();
            m.mass = n.at("mass").get<double>();
            m.parent = n.at("parent").get<int>();
            m.left = n.at("left").get<int>();
            m.right = n.at("right").get<int>();
            m.leaf = n.at("leaf").get<bool>();
            s.node_meta.push_back(m);
        }
    }
    return s;
}

} // namespace few
