// Shared builders for test states and graphs.
#pragma once

#include "flocksim/control.hpp"
#include "flocksim/graph.hpp"

#include <Eigen/Dense>

#include <random>
#include <utility>
#include <vector>

namespace helpers {

inline flocksim::ControlLaw make_law(flocksim::LawVariant variant, double v0x = 0.0,
                                     double v0y = 0.0) {
    flocksim::ControlLaw law;
    law.variant = variant;
    law.desired_velocity = Eigen::VectorXd(2);
    law.desired_velocity << v0x, v0y;
    return law;
}

inline flocksim::AgentState make_agent(double x, double y, double vx, double vy,
                                       double mass = 1.0, double damping = 0.0) {
    flocksim::AgentState a;
    a.position = Eigen::VectorXd(2);
    a.position << x, y;
    a.velocity = Eigen::VectorXd(2);
    a.velocity << vx, vy;
    a.mass = mass;
    a.damping = damping;
    return a;
}

/// Connected random graph with positive random weights.
inline flocksim::NeighborGraph random_connected_graph(std::mt19937& rng, int n,
                                                      double extra_edge_prob = 0.3) {
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> parent(0, v - 1);
        edges.emplace_back(parent(rng), v);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            bool present = false;
            for (const auto& [a, b] : edges) present = present || (a == i && b == j);
            if (!present && unit(rng) < extra_edge_prob) edges.emplace_back(i, j);
        }
    }
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : edges) {
        const double x = weight(rng);
        w(i, j) = x;
        w(j, i) = x;
    }
    return flocksim::build_graph(n, edges, &w);
}

/// Random agents spread out enough that no pair is near the guard.
inline std::vector<flocksim::AgentState> random_flock(std::mt19937& rng, int n,
                                                      double spread = 4.0,
                                                      double speed = 2.0) {
    std::uniform_real_distribution<double> pos(-spread, spread);
    std::uniform_real_distribution<double> vel(-speed, speed);
    std::uniform_real_distribution<double> mass(0.2, 1.0);
    std::uniform_real_distribution<double> damp(0.1, 1.0);
    std::vector<flocksim::AgentState> agents;
    while (static_cast<int>(agents.size()) < n) {
        flocksim::AgentState a = make_agent(pos(rng), pos(rng), vel(rng), vel(rng), mass(rng),
                                            damp(rng));
        bool clear = true;
        for (const auto& other : agents) {
            if ((a.position - other.position).norm() < 0.3) clear = false;
        }
        if (clear) agents.push_back(std::move(a));
    }
    return agents;
}

} // namespace helpers
