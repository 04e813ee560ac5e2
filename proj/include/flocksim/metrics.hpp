#pragma once

#include "flocksim/control.hpp"
#include "flocksim/dynamics.hpp"
#include "flocksim/graph.hpp"
#include "flocksim/potential.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flocksim {

/// Error-system energy decomposition at one instant. `analytic_derivative` is
/// the closed-form time derivative along solutions of the selected law; it is
/// nonpositive wherever the law's stability argument applies.
struct EnergyReport {
    double total = 0.0;
    double potential_part = 0.0;
    double kinetic_part = 0.0;
    double analytic_derivative = 0.0;
};

/// Mass-weighted and unweighted centers of the group.
struct ComReport {
    Eigen::VectorXd com_position;       // mass-weighted mean position
    Eigen::VectorXd com_velocity;       // mass-weighted mean velocity
    Eigen::VectorXd center_position;    // plain mean position
    Eigen::VectorXd average_velocity;   // plain mean velocity
};

/// Weight of agent i's squared velocity error in the law's energy function:
/// the mass for the momentum-form laws, 1 for the mass-scaled ones.
inline double energy_kinetic_weight(const ControlLaw& law, double mass) {
    return detail::uses_mass_scaled_interactions(law.variant) ? 1.0 : mass;
}

/// Diagonal coefficient of the tracking contribution to the energy derivative:
/// dJ/dt = -(alignment quadratic form) - sum_i coeff_i |e_v_i|^2.
inline double energy_decay_mass_coefficient(const ControlLaw& law, int i, double mass) {
    if (law.no_external_signal) return 0.0;
    switch (law.variant) {
        case LawVariant::Momentum:
        case LawVariant::Unweighted:
        case LawVariant::DampedMomentum:
            return mass;
        case LawVariant::VelocityReg:
        case LawVariant::MassScaled:
            return 1.0;
        case LawVariant::MassScaledVelocityReg:
            return 1.0 / mass;
        case LawVariant::PartialInfo:
            return (static_cast<size_t>(i) < law.informed.size() && law.informed[i]) ? mass
                                                                                     : 0.0;
    }
    throw std::logic_error("energy_decay_mass_coefficient: unknown variant");
}

/// Laplacian appearing in the law's energy derivative: combinatorial for the
/// unit-weight law, weighted otherwise.
inline Eigen::MatrixXd energy_decay_laplacian(const ControlLaw& law, const NeighborGraph& g) {
    return law.variant == LawVariant::Unweighted ? combinatorial_laplacian(g)
                                                 : weighted_laplacian(g);
}

/// Velocity errors stacked agent-major into one N*n vector.
inline Eigen::VectorXd stack_velocity_errors(const std::vector<AgentState>& states,
                                             const Eigen::VectorXd& desired_velocity) {
    const int dims = static_cast<int>(desired_velocity.size());
    Eigen::VectorXd stacked(static_cast<Eigen::Index>(states.size()) * dims);
    for (size_t i = 0; i < states.size(); ++i) {
        stacked.segment(static_cast<Eigen::Index>(i) * dims, dims) =
            states[i].velocity - desired_velocity;
    }
    return stacked;
}

/// Quadratic form e^T (M (x) I_dims) e for an N x N coupling matrix over the
/// agent-major stacked vector.
inline double laplacian_quadratic_form(const Eigen::MatrixXd& coupling,
                                       const Eigen::VectorXd& stacked, int dims) {
    const int n_agents = static_cast<int>(coupling.rows());
    double sum = 0.0;
    for (int i = 0; i < n_agents; ++i) {
        for (int j = 0; j < n_agents; ++j) {
            if (coupling(i, j) == 0.0) continue;
            sum += coupling(i, j) * stacked.segment(static_cast<Eigen::Index>(i) * dims, dims)
                                        .dot(stacked.segment(static_cast<Eigen::Index>(j) * dims,
                                                             dims));
        }
    }
    return sum;
}

/// Energy of the error system under `law`: half the agent potentials plus the
/// weighted squared velocity errors, with the analytic decay rate assembled
/// from the same snapshot. The alignment part of the rate is computed in its
/// edgewise form, sum of align_weight * |e_v_i - e_v_j|^2, which equals the
/// Laplacian quadratic form.
inline EnergyReport energy(const std::vector<AgentState>& states,
                           const Eigen::VectorXd& desired_velocity, const NeighborGraph& graph,
                           const PotentialModel& model,
                           const ControlLaw& law = ControlLaw{}) {
    EnergyReport report;

    for (const auto& [i, j] : graph.edges) {
        const double r = (states[i].position - states[j].position).norm();
        report.potential_part += potential_value(model, r, i, j);
    }

    const bool unit_weights = detail::uses_unit_alignment_weights(law.variant);
    double alignment_rate = 0.0;
    for (const auto& [i, j] : graph.edges) {
        const double w = unit_weights ? 1.0 : graph.weights(i, j);
        alignment_rate += w * (states[i].velocity - states[j].velocity).squaredNorm();
    }

    double tracking_rate = 0.0;
    for (size_t i = 0; i < states.size(); ++i) {
        const double ev2 = (states[i].velocity - desired_velocity).squaredNorm();
        report.kinetic_part += 0.5 * energy_kinetic_weight(law, states[i].mass) * ev2;
        tracking_rate +=
            energy_decay_mass_coefficient(law, static_cast<int>(i), states[i].mass) * ev2;
    }

    report.total = report.potential_part + report.kinetic_part;
    report.analytic_derivative = -alignment_rate - tracking_rate;
    return report;
}

/// Removes the per-coordinate mean across agents: the projection of the
/// stacked vector onto the orthogonal complement of the Laplacian kernel.
inline Eigen::VectorXd remove_coordinate_means(const Eigen::VectorXd& stacked, int dims) {
    const int n_agents = dims > 0 ? static_cast<int>(stacked.size()) / dims : 0;
    Eigen::VectorXd projected = stacked;
    for (int k = 0; k < dims; ++k) {
        double mean = 0.0;
        for (int i = 0; i < n_agents; ++i) mean += stacked(static_cast<Eigen::Index>(i) * dims + k);
        mean /= n_agents;
        for (int i = 0; i < n_agents; ++i) projected(static_cast<Eigen::Index>(i) * dims + k) -= mean;
    }
    return projected;
}

/// Spectral upper bound on the energy decay rate,
/// -lambda_2 |P e_v|^2 - sum_i coeff_i |e_v_i|^2, where P removes each
/// coordinate's mean. The alignment quadratic form always dominates the first
/// term on the mean-free subspace.
inline double energy_decay_bound(const std::vector<AgentState>& states,
                                 const Eigen::VectorXd& desired_velocity,
                                 const NeighborGraph& graph,
                                 const ControlLaw& law = ControlLaw{}) {
    const int dims = static_cast<int>(desired_velocity.size());
    const Eigen::VectorXd stacked = stack_velocity_errors(states, desired_velocity);
    const double lambda2 = second_smallest_eigenvalue(energy_decay_laplacian(law, graph));
    const double mean_free = remove_coordinate_means(stacked, dims).squaredNorm();
    double tracking_rate = 0.0;
    for (size_t i = 0; i < states.size(); ++i) {
        tracking_rate +=
            energy_decay_mass_coefficient(law, static_cast<int>(i), states[i].mass) *
            (states[i].velocity - desired_velocity).squaredNorm();
    }
    return -lambda2 * mean_free - tracking_rate;
}

inline ComReport com(const std::vector<AgentState>& states) {
    if (states.empty()) throw std::invalid_argument("com: no agents");
    const int dims = static_cast<int>(states[0].position.size());
    ComReport report;
    report.com_position = Eigen::VectorXd::Zero(dims);
    report.com_velocity = Eigen::VectorXd::Zero(dims);
    report.center_position = Eigen::VectorXd::Zero(dims);
    report.average_velocity = Eigen::VectorXd::Zero(dims);
    double total_mass = 0.0;
    for (const auto& s : states) {
        report.com_position += s.mass * s.position;
        report.com_velocity += s.mass * s.velocity;
        report.center_position += s.position;
        report.average_velocity += s.velocity;
        total_mass += s.mass;
    }
    report.com_position /= total_mass;
    report.com_velocity /= total_mass;
    report.center_position /= static_cast<double>(states.size());
    report.average_velocity /= static_cast<double>(states.size());
    return report;
}

/// Closed-form center-of-mass velocity under momentum tracking:
/// v0 + (v*_0 - v0) e^{-t}. Constant at v0 when the initial value matches.
inline Eigen::VectorXd com_closed_form(const Eigen::VectorXd& com_velocity_initial,
                                       const Eigen::VectorXd& desired_velocity, double t) {
    return desired_velocity + (com_velocity_initial - desired_velocity) * std::exp(-t);
}

/// Largest deviation of any agent velocity from the desired one.
inline double consensus_error(const std::vector<AgentState>& states,
                              const Eigen::VectorXd& desired_velocity) {
    double worst = 0.0;
    for (const auto& s : states) {
        worst = std::max(worst, (s.velocity - desired_velocity).norm());
    }
    return worst;
}

/// Smallest pairwise distance over graph edges; +infinity for an edgeless
/// graph.
inline double min_neighbor_distance(const std::vector<AgentState>& states,
                                    const NeighborGraph& graph) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : graph.edges) {
        best = std::min(best, (states[i].position - states[j].position).norm());
    }
    return best;
}

/// Largest per-agent norm of the summed neighbor potential gradients. Zero
/// exactly at configurations minimizing every agent potential.
inline double gradient_residual(const std::vector<AgentState>& states,
                                const NeighborGraph& graph, const PotentialModel& model) {
    const int dims = states.empty() ? 0 : static_cast<int>(states[0].position.size());
    double worst = 0.0;
    Eigen::VectorXd grad_sum(dims);
    for (int i = 0; i < static_cast<int>(states.size()); ++i) {
        grad_sum.setZero();
        for (const auto& [j, w] : graph.neighbors[i]) {
            (void)w;
            const Eigen::VectorXd displacement = states[i].position - states[j].position;
            const double r = displacement.norm();
            grad_sum.noalias() +=
                potential_gradient_coefficient(model, r, i, j) * displacement;
        }
        worst = std::max(worst, grad_sum.norm());
    }
    return worst;
}

/// Least-squares slope of ln(deviation) against time over the window where the
/// deviation lies in [1e-8, initial / 2]. Throws when the initial deviation is
/// at or below 1e-6 or the window holds fewer than two samples.
inline double fit_decay_exponent(const std::vector<double>& times,
                                 const std::vector<double>& deviations) {
    if (times.size() != deviations.size() || times.empty()) {
        throw std::invalid_argument("fit_decay_exponent: mismatched or empty series");
    }
    const double initial = deviations.front();
    if (!(initial > 1e-6)) {
        throw std::invalid_argument("fit_decay_exponent: initial deviation too small to fit");
    }
    std::vector<double> ts, logs;
    for (size_t k = 0; k < times.size(); ++k) {
        if (deviations[k] >= 1e-8 && deviations[k] <= initial / 2.0) {
            ts.push_back(times[k]);
            logs.push_back(std::log(deviations[k]));
        }
    }
    if (ts.size() < 2) {
        throw std::invalid_argument("fit_decay_exponent: insufficient window to fit");
    }
    double t_mean = 0.0, y_mean = 0.0;
    for (size_t k = 0; k < ts.size(); ++k) {
        t_mean += ts[k];
        y_mean += logs[k];
    }
    t_mean /= static_cast<double>(ts.size());
    y_mean /= static_cast<double>(ts.size());
    double cov = 0.0, var = 0.0;
    for (size_t k = 0; k < ts.size(); ++k) {
        cov += (ts[k] - t_mean) * (logs[k] - y_mean);
        var += (ts[k] - t_mean) * (ts[k] - t_mean);
    }
    if (var == 0.0) {
        throw std::invalid_argument("fit_decay_exponent: degenerate time window");
    }
    return cov / var;
}

/// Deviation series |v_center(t) - v0| per recorded frame; `mass_weighted`
/// selects the center of mass (momentum-form laws) versus the plain average
/// (mass-scaled laws, whose average velocity obeys the same closed form).
inline std::vector<double> center_velocity_deviation_series(
    const SimulationTrace& trace, const Eigen::VectorXd& desired_velocity,
    bool mass_weighted = true) {
    std::vector<double> deviations;
    deviations.reserve(trace.frames.size());
    for (const auto& frame : trace.frames) {
        const ComReport report = com(frame);
        const Eigen::VectorXd& center =
            mass_weighted ? report.com_velocity : report.average_velocity;
        deviations.push_back((center - desired_velocity).norm());
    }
    return deviations;
}

/// Fitted exponent of the center-of-mass velocity decay along a trace; about
/// -1 for the momentum-form laws.
inline double fit_decay_exponent(const SimulationTrace& trace,
                                 const Eigen::VectorXd& desired_velocity,
                                 bool mass_weighted = true) {
    return fit_decay_exponent(trace.times,
                              center_velocity_deviation_series(trace, desired_velocity,
                                                               mass_weighted));
}

/// Smallest distance any neighbor pair can reach while the energy stays at or
/// below `energy_initial`: the root of V(d) = 2 * energy_initial on the
/// repulsive branch (guard, r*]. Returns the guard when even it satisfies the
/// level, and r* when no distance does (vacuous: no pair can then exist).
inline double collision_distance_lower_bound(const PotentialModel& model,
                                             double energy_initial) {
    const double level = 2.0 * energy_initial;
    const double r_star = equilibrium_distance(model);
    double lo = kMinDistanceGuard * (1.0 + 1e-9);
    if (potential_value(model, lo) <= level) return kMinDistanceGuard;
    if (potential_value(model, r_star) >= level) return r_star;
    double hi = r_star;
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-14 * r_star; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (potential_value(model, mid) > level) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

/// Upper bound on any pairwise distance while the energy stays at or below
/// `energy_initial`: (N-1) times the root of V(d) = 2 * energy_initial on the
/// attractive branch [r*, inf). Follows from connectivity: any two agents are
/// joined by a path of at most N-1 edges.
inline double dispersion_upper_bound(const PotentialModel& model, double energy_initial,
                                     int n_agents) {
    const double level = 2.0 * energy_initial;
    const double r_star = equilibrium_distance(model);
    if (potential_value(model, r_star) >= level) {
        return static_cast<double>(n_agents - 1) * r_star;
    }
    double lo = r_star;
    double hi = 2.0 * r_star;
    while (potential_value(model, hi) < level) {
        hi *= 2.0;
        if (hi > 1e300) break;
    }
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (potential_value(model, mid) < level) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return static_cast<double>(n_agents - 1) * hi;
}

} // namespace flocksim
