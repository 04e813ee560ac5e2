#pragma once

#include "flocksim/control.hpp"
#include "flocksim/dynamics.hpp"
#include "flocksim/graph.hpp"
#include "flocksim/potential.hpp"
#include "flocksim/rng.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flocksim {

inline constexpr int kScenarioSchemaVersion = 1;

/// A fully specified, reproducible experiment: initial agent states, topology,
/// control law, potential coefficients, and integration settings, all derived
/// deterministically from the seed.
struct Scenario {
    std::uint64_t seed = 0;
    std::string prng = SplitMix64::kAlgorithmName;
    int n_dims = 2;
    std::vector<AgentState> agents;
    NeighborGraph graph;
    ControlLaw law;
    PotentialModel potential;
    SimulationConfig sim;

    int agent_count() const { return static_cast<int>(agents.size()); }
};

struct Violation {
    std::string field;
    std::string message;
};

/// Ten planar agents: positions uniform in the disk of radius 15 m with at
/// least 0.1 m between every pair, speeds uniform in (0, 10) m/s with uniform
/// heading, masses uniform in (0, 1) kg floored at 0.05 kg, damping gains
/// uniform in (0.1, 1) kg/s, and a connected random graph (spanning tree plus
/// each remaining pair with probability 0.2) with edge weights uniform in
/// (0, 1). Momentum law toward v0 = (5, 0) m/s, 250 s horizon at dt = 1 ms.
///
/// Draw order is fixed (positions, velocities, masses, damping, tree, extra
/// pairs, weights) so the same seed always yields the same scenario.
inline Scenario generate_paper_scenario(std::uint64_t seed) {
    constexpr int kAgents = 10;
    constexpr double kRadius = 15.0;
    constexpr double kMinSeparation = 0.1;
    constexpr int kMaxAttempts = 10000;

    Scenario scenario;
    scenario.seed = seed;
    scenario.n_dims = 2;

    SplitMix64 rng(seed);

    auto draw_disk_point = [&]() {
        const double r = kRadius * std::sqrt(rng.uniform01());
        const double theta = 2.0 * std::numbers::pi * rng.uniform01();
        Eigen::VectorXd p(2);
        p << r * std::cos(theta), r * std::sin(theta);
        return p;
    };

    std::vector<Eigen::VectorXd> positions;
    int attempts = 0;
    while (static_cast<int>(positions.size()) < kAgents) {
        if (++attempts > kMaxAttempts) {
            throw std::runtime_error("scenario generation: exceeded placement attempts");
        }
        Eigen::VectorXd candidate = draw_disk_point();
        bool clear = true;
        for (const auto& p : positions) {
            if ((candidate - p).norm() < kMinSeparation) {
                clear = false;
                break;
            }
        }
        if (clear) positions.push_back(std::move(candidate));
    }

    scenario.agents.resize(kAgents);
    for (int i = 0; i < kAgents; ++i) {
        scenario.agents[i].position = positions[i];
    }
    for (int i = 0; i < kAgents; ++i) {
        const double speed = 10.0 * rng.uniform01_positive();
        const double theta = 2.0 * std::numbers::pi * rng.uniform01();
        Eigen::VectorXd v(2);
        v << speed * std::cos(theta), speed * std::sin(theta);
        scenario.agents[i].velocity = std::move(v);
    }
    for (int i = 0; i < kAgents; ++i) {
        scenario.agents[i].mass = std::max(rng.uniform01(), 0.05);
    }
    for (int i = 0; i < kAgents; ++i) {
        scenario.agents[i].damping = 0.1 + 0.9 * rng.uniform01_positive();
    }

    // Spanning tree: random vertex order, each new vertex attached to a
    // uniformly chosen earlier one. Guarantees connectivity without rejection.
    std::vector<int> order(kAgents);
    for (int i = 0; i < kAgents; ++i) order[i] = i;
    for (int i = kAgents - 1; i >= 1; --i) {
        std::swap(order[i], order[rng.uniform_index(i + 1)]);
    }
    std::set<std::pair<int, int>> edge_set;
    for (int k = 1; k < kAgents; ++k) {
        const int parent = order[rng.uniform_index(k)];
        edge_set.insert(detail::normalize_edge(order[k], parent));
    }
    for (int i = 0; i < kAgents; ++i) {
        for (int j = i + 1; j < kAgents; ++j) {
            if (edge_set.count({i, j})) continue;
            if (rng.uniform01() < 0.2) edge_set.insert({i, j});
        }
    }

    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(kAgents, kAgents);
    for (const auto& [i, j] : edge_set) {
        const double w = rng.uniform01_positive();
        weights(i, j) = w;
        weights(j, i) = w;
    }
    scenario.graph = build_graph(
        kAgents, std::vector<std::pair<int, int>>(edge_set.begin(), edge_set.end()), &weights);

    scenario.law.variant = LawVariant::Momentum;
    scenario.law.desired_velocity = Eigen::VectorXd(2);
    scenario.law.desired_velocity << 5.0, 0.0;

    scenario.sim = SimulationConfig{};
    return scenario;
}

/// Every invariant violation found in the scenario, as data. Empty means the
/// scenario is runnable.
inline std::vector<Violation> validate(const Scenario& s) {
    std::vector<Violation> out;
    const int n = s.agent_count();

    if (s.n_dims < 1) out.push_back({"n_dims", "spatial dimension must be at least 1"});
    if (n == 0) out.push_back({"agents", "at least one agent required"});

    for (int i = 0; i < n; ++i) {
        const auto& a = s.agents[i];
        const std::string tag = "agents[" + std::to_string(i) + "]";
        if (a.position.size() != s.n_dims || a.velocity.size() != s.n_dims) {
            out.push_back({tag, "position/velocity dimension mismatch with n_dims"});
        }
        if (!(a.mass > 0.0) || !std::isfinite(a.mass)) {
            out.push_back({tag + ".mass", "mass must be positive and finite"});
        }
        if (a.damping < 0.0 || !std::isfinite(a.damping)) {
            out.push_back({tag + ".damping", "damping gain must be nonnegative and finite"});
        }
        if (!a.position.allFinite() || !a.velocity.allFinite()) {
            out.push_back({tag, "non-finite position or velocity"});
        }
    }

    if (s.graph.n_agents != n) {
        out.push_back({"graph", "vertex count " + std::to_string(s.graph.n_agents) +
                                    " does not match agent count " + std::to_string(n)});
    }

    if (s.law.desired_velocity.size() != s.n_dims) {
        out.push_back({"law.v0", "desired velocity dimension mismatch with n_dims"});
    } else if (!s.law.desired_velocity.allFinite()) {
        out.push_back({"law.v0", "desired velocity must be finite"});
    }

    if (s.law.variant == LawVariant::PartialInfo && !s.law.no_external_signal) {
        if (s.law.informed.size() != static_cast<size_t>(n)) {
            out.push_back({"law.h_mask", "informed mask must cover every agent"});
        } else {
            bool any = false;
            for (const auto h : s.law.informed) any = any || h != 0;
            if (!any) {
                out.push_back({"law.h_mask",
                               "Subgroup One empty: at least one agent must be informed"});
            }
        }
    }

    if (s.graph.n_agents == n) {
        for (const auto& [i, j] : s.graph.edges) {
            if (i < n && j < n && s.agents[i].position.size() == s.agents[j].position.size()) {
                const double r = (s.agents[i].position - s.agents[j].position).norm();
                if (!(r > kMinDistanceGuard)) {
                    out.push_back({"agents",
                                   "agents " + std::to_string(i) + " and " + std::to_string(j) +
                                       " start at distance " + std::to_string(r) +
                                       ", at or below the guard"});
                }
            }
        }
    }

    try {
        s.sim.validate();
    } catch (const std::exception& e) {
        out.push_back({"sim", e.what()});
    }

    return out;
}

namespace detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v(k));
    return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr, const std::string& field) {
    if (!arr.is_array()) throw std::runtime_error("scenario: " + field + " must be an array");
    Eigen::VectorXd v(arr.size());
    for (size_t k = 0; k < arr.size(); ++k) v(static_cast<Eigen::Index>(k)) = arr[k].get<double>();
    return v;
}

} // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["version"] = kScenarioSchemaVersion;
    j["seed"] = s.seed;
    j["prng"] = s.prng;
    j["n_dims"] = s.n_dims;

    j["agents"] = nlohmann::json::array();
    for (const auto& a : s.agents) {
        j["agents"].push_back({{"position", detail::vector_to_json(a.position)},
                               {"velocity", detail::vector_to_json(a.velocity)},
                               {"mass", a.mass},
                               {"damping", a.damping}});
    }

    nlohmann::json edges = nlohmann::json::array();
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& [i, jdx] : s.graph.edges) {
        edges.push_back({i, jdx});
        weights.push_back(s.graph.weights(i, jdx));
    }
    j["graph"] = {{"edges", edges}, {"weights", weights}};

    nlohmann::json informed = nlohmann::json::array();
    for (size_t i = 0; i < s.law.informed.size(); ++i) {
        if (s.law.informed[i]) informed.push_back(static_cast<int>(i));
    }
    j["law"] = {{"variant", law_variant_name(s.law.variant)},
                {"v0", detail::vector_to_json(s.law.desired_velocity)},
                {"h_mask", informed},
                {"baseline", s.law.no_external_signal}};

    j["potential"] = {{"a", s.potential.attraction()}, {"b", s.potential.repulsion()}};

    j["sim"] = {{"dt", s.sim.dt},
                {"t_end", s.sim.t_end},
                {"record_every", s.sim.record_every},
                {"mode", dynamics_mode_name(s.sim.mode)}};
    return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.contains("version")) throw std::runtime_error("scenario: missing version field");
    if (j["version"].get<int>() != kScenarioSchemaVersion) {
        throw std::runtime_error("scenario: schema version " + j["version"].dump() +
                                 " not supported (expected " +
                                 std::to_string(kScenarioSchemaVersion) + ")");
    }
    for (const char* key : {"seed", "n_dims", "agents", "graph", "law", "potential", "sim"}) {
        if (!j.contains(key)) {
            throw std::runtime_error("scenario: missing required section '" + std::string(key) +
                                     "'");
        }
    }

    Scenario s;
    s.seed = j["seed"].get<std::uint64_t>();
    s.prng = j.value("prng", std::string(SplitMix64::kAlgorithmName));
    s.n_dims = j["n_dims"].get<int>();

    const auto& agents = j["agents"];
    if (!agents.is_array()) throw std::runtime_error("scenario: agents must be an array");
    for (size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i];
        AgentState state;
        state.position = detail::vector_from_json(a.at("position"), "agent position");
        state.velocity = detail::vector_from_json(a.at("velocity"), "agent velocity");
        state.mass = a.at("mass").get<double>();
        state.damping = a.value("damping", 0.0);
        s.agents.push_back(std::move(state));
    }

    const auto& graph = j["graph"];
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : graph.at("edges")) {
        edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    const auto& weight_list = graph.at("weights");
    if (weight_list.size() != edges.size()) {
        throw std::runtime_error("scenario: graph weights must align with edges");
    }
    const int n = static_cast<int>(s.agents.size());
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto [a, b] = edges[e];
        if (a < 0 || b < 0 || a >= n || b >= n) {
            throw std::runtime_error("scenario: edge endpoint out of range");
        }
        const double w = weight_list[e].get<double>();
        weights(a, b) = w;
        weights(b, a) = w;
    }
    s.graph = build_graph(n, edges, &weights);

    const auto& law = j["law"];
    s.law.variant = law_variant_from_name(law.at("variant").get<std::string>());
    s.law.desired_velocity = detail::vector_from_json(law.at("v0"), "law v0");
    s.law.no_external_signal = law.value("baseline", false);
    s.law.informed.clear();
    if (law.contains("h_mask") && !law["h_mask"].empty()) {
        s.law.informed.assign(s.agents.size(), 0);
        for (const auto& idx : law["h_mask"]) {
            const int i = idx.get<int>();
            if (i < 0 || i >= n) {
                throw std::runtime_error("scenario: h_mask index " + std::to_string(i) +
                                         " out of range");
            }
            s.law.informed[i] = 1;
        }
    }

    const auto& pot = j["potential"];
    s.potential = PotentialModel(pot.at("a").get<double>(), pot.at("b").get<double>());

    const auto& sim = j["sim"];
    s.sim.dt = sim.at("dt").get<double>();
    s.sim.t_end = sim.at("t_end").get<double>();
    s.sim.record_every = sim.at("record_every").get<int>();
    s.sim.mode = dynamics_mode_from_name(sim.at("mode").get<std::string>());

    const auto violations = validate(s);
    if (!violations.empty()) {
        std::string msg = "scenario: invariant violations on load:";
        for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
        throw std::runtime_error(msg);
    }
    return s;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("scenario: cannot open " + path + " for writing");
    out << scenario_to_json(s).dump(2) << "\n";
    if (!out) throw std::runtime_error("scenario: write to " + path + " failed");
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("scenario: malformed file " + path + ": " + e.what());
    }
    return scenario_from_json(j);
}

} // namespace flocksim
