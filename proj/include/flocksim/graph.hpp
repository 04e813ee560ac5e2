#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flocksim {

/// Fixed undirected interaction topology over agents 0..n_agents-1.
///
/// Edges are unordered pairs stored normalized (i < j) and sorted. The weight
/// matrix is symmetric with zero diagonal, and weights[i][j] > 0 exactly when
/// (i, j) is an edge.
struct NeighborGraph {
    int n_agents = 0;
    std::vector<std::pair<int, int>> edges;
    Eigen::MatrixXd weights;

    /// Adjacency lists (neighbor index, edge weight), derived at build time.
    std::vector<std::vector<std::pair<int, double>>> neighbors;

    int edge_count() const { return static_cast<int>(edges.size()); }
};

namespace detail {

inline std::pair<int, int> normalize_edge(int a, int b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

} // namespace detail

/// Validates and assembles a graph. When `weights` is absent every edge gets
/// weight 1 (the unweighted interaction case). Throws std::invalid_argument on
/// self-loops, out-of-range vertices, duplicate edges, or a weight matrix that
/// is asymmetric, negative, or inconsistent with the edge set.
inline NeighborGraph build_graph(int n_agents,
                                 const std::vector<std::pair<int, int>>& edges,
                                 const Eigen::MatrixXd* weights = nullptr) {
    if (n_agents <= 0) {
        throw std::invalid_argument("graph: n_agents must be positive, got " +
                                    std::to_string(n_agents));
    }

    NeighborGraph g;
    g.n_agents = n_agents;

    std::set<std::pair<int, int>> seen;
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= n_agents || b < 0 || b >= n_agents) {
            throw std::invalid_argument("graph: edge (" + std::to_string(a) + ", " +
                                        std::to_string(b) + ") references a vertex outside [0, " +
                                        std::to_string(n_agents) + ")");
        }
        if (a == b) {
            throw std::invalid_argument("graph: self-loop at vertex " + std::to_string(a));
        }
        const auto e = detail::normalize_edge(a, b);
        if (!seen.insert(e).second) {
            throw std::invalid_argument("graph: duplicate edge (" + std::to_string(e.first) +
                                        ", " + std::to_string(e.second) + ")");
        }
    }
    g.edges.assign(seen.begin(), seen.end());

    if (weights != nullptr) {
        if (weights->rows() != n_agents || weights->cols() != n_agents) {
            throw std::invalid_argument("graph: weight matrix must be " +
                                        std::to_string(n_agents) + "x" +
                                        std::to_string(n_agents));
        }
        for (int i = 0; i < n_agents; ++i) {
            if ((*weights)(i, i) != 0.0) {
                throw std::invalid_argument("graph: nonzero diagonal weight at vertex " +
                                            std::to_string(i));
            }
            for (int j = i + 1; j < n_agents; ++j) {
                const double w = (*weights)(i, j);
                if (w != (*weights)(j, i)) {
                    throw std::invalid_argument("graph: asymmetric weights at (" +
                                                std::to_string(i) + ", " + std::to_string(j) + ")");
                }
                if (w < 0.0 || !std::isfinite(w)) {
                    throw std::invalid_argument("graph: negative or non-finite weight at (" +
                                                std::to_string(i) + ", " + std::to_string(j) + ")");
                }
                const bool is_edge = seen.count({i, j}) > 0;
                if (is_edge && w <= 0.0) {
                    throw std::invalid_argument("graph: edge (" + std::to_string(i) + ", " +
                                                std::to_string(j) + ") has zero weight");
                }
                if (!is_edge && w != 0.0) {
                    throw std::invalid_argument("graph: positive weight on non-edge (" +
                                                std::to_string(i) + ", " + std::to_string(j) + ")");
                }
            }
        }
        g.weights = *weights;
    } else {
        g.weights = Eigen::MatrixXd::Zero(n_agents, n_agents);
        for (const auto& [i, j] : g.edges) {
            g.weights(i, j) = 1.0;
            g.weights(j, i) = 1.0;
        }
    }

    g.neighbors.resize(n_agents);
    for (const auto& [i, j] : g.edges) {
        g.neighbors[i].emplace_back(j, g.weights(i, j));
        g.neighbors[j].emplace_back(i, g.weights(j, i));
    }
    return g;
}

/// True iff a path exists between every vertex pair. Breadth-first search.
inline bool is_connected(const NeighborGraph& g) {
    if (g.n_agents <= 1) return true;
    std::vector<char> visited(g.n_agents, 0);
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (const auto& [u, w] : g.neighbors[v]) {
            (void)w;
            if (!visited[u]) {
                visited[u] = 1;
                ++reached;
                frontier.push(u);
            }
        }
    }
    return reached == g.n_agents;
}

/// Weighted Laplacian: off-diagonal -w_ij, diagonal sum of incident weights.
/// Symmetric, positive semi-definite, every row sums to zero.
inline Eigen::MatrixXd weighted_laplacian(const NeighborGraph& g) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.n_agents, g.n_agents);
    for (const auto& [i, j] : g.edges) {
        const double w = g.weights(i, j);
        lap(i, j) -= w;
        lap(j, i) -= w;
        lap(i, i) += w;
        lap(j, j) += w;
    }
    return lap;
}

/// Combinatorial Laplacian: valence matrix minus unit adjacency. Coincides
/// with the weighted Laplacian when every edge weight is 1.
inline Eigen::MatrixXd combinatorial_laplacian(const NeighborGraph& g) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.n_agents, g.n_agents);
    for (const auto& [i, j] : g.edges) {
        lap(i, j) -= 1.0;
        lap(j, i) -= 1.0;
        lap(i, i) += 1.0;
        lap(j, j) += 1.0;
    }
    return lap;
}

/// Oriented incidence matrix, n x |E|, entries in {0, +1, -1}: each column has
/// -1 at the edge tail and +1 at its head. Default orientation points every
/// edge from its lower-indexed vertex to its higher-indexed one; `flip[e]`
/// reverses edge e. B * B^T equals the combinatorial Laplacian for any
/// orientation.
inline Eigen::MatrixXd incidence_matrix(const NeighborGraph& g,
                                        const std::vector<bool>& flip = {}) {
    if (!flip.empty() && flip.size() != g.edges.size()) {
        throw std::invalid_argument("incidence_matrix: orientation list must have one entry per edge");
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(g.n_agents, g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        auto [tail, head] = g.edges[e];
        if (!flip.empty() && flip[e]) std::swap(tail, head);
        b(tail, e) = -1.0;
        b(head, e) = 1.0;
    }
    return b;
}

/// Eigenvalues of a symmetric matrix, ascending with multiplicity.
/// Throws std::invalid_argument when the input is not symmetric.
inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("symmetric_eigenvalues: matrix must be square");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("symmetric_eigenvalues: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("symmetric_eigenvalues: eigensolver failed to converge");
    }
    return solver.eigenvalues();
}

/// Second smallest eigenvalue (ascending order, counting multiplicity) of a
/// symmetric matrix. For a Laplacian this is the algebraic connectivity:
/// positive iff the graph is connected.
inline double second_smallest_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.rows() < 2) {
        throw std::invalid_argument("second_smallest_eigenvalue: need at least a 2x2 matrix");
    }
    return symmetric_eigenvalues(m)(1);
}

/// Difference between the weighted and combinatorial Laplacians: off-diagonal
/// entries -w_ij + 1 on edges, diagonal sum of incident weights minus valence.
/// Zero when all weights are 1; annihilates the all-ones vector.
inline Eigen::MatrixXd laplacian_difference(const NeighborGraph& g) {
    return weighted_laplacian(g) - combinatorial_laplacian(g);
}

} // namespace flocksim
