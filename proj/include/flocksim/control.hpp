#pragma once

#include "flocksim/graph.hpp"
#include "flocksim/potential.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flocksim {

/// One point-mass agent. `damping` is the velocity damping gain of the
/// nonideal dynamics and is ignored under ideal dynamics.
struct AgentState {
    Eigen::VectorXd position;
    Eigen::VectorXd velocity;
    double mass = 1.0;
    double damping = 0.0;
};

/// The control-law family. All variants share the structure
///
///     u_i = -(alignment) - (potential gradients) - (velocity tracking)
///
/// and differ only in three per-agent scalars: the alignment weight
/// (w_ij, 1, or m_i * w_ij), the potential scale (1 or m_i), and the tracking
/// gain (m_i, 1, or h_i * m_i).
enum class LawVariant {
    Momentum,               // weighted alignment, momentum tracking -m_i (v_i - v0)
    Unweighted,             // unit alignment weights, momentum tracking
    DampedMomentum,         // Momentum plus +k_i v_i to cancel velocity damping
    VelocityReg,            // weighted alignment, direct tracking -(v_i - v0)
    MassScaled,             // mass-scaled alignment and potential, momentum tracking
    MassScaledVelocityReg,  // mass-scaled alignment and potential, direct tracking
    PartialInfo,            // momentum tracking gated by the informed mask h
};

struct ControlLaw {
    LawVariant variant = LawVariant::Momentum;

    /// Desired common velocity v0 (constant).
    Eigen::VectorXd desired_velocity;

    /// Informed mask h: agent i receives the external signal iff informed[i] != 0.
    /// Consulted only by PartialInfo, where at least one agent must be informed.
    std::vector<std::uint8_t> informed;

    /// Drops the tracking term for every agent: the group runs on neighbor
    /// interactions alone and settles on the initial center-of-mass velocity.
    bool no_external_signal = false;
};

inline const char* law_variant_name(LawVariant v) {
    switch (v) {
        case LawVariant::Momentum: return "momentum";
        case LawVariant::Unweighted: return "unweighted";
        case LawVariant::DampedMomentum: return "damped-momentum";
        case LawVariant::VelocityReg: return "velocity-reg";
        case LawVariant::MassScaled: return "mass-scaled";
        case LawVariant::MassScaledVelocityReg: return "mass-scaled-velocity-reg";
        case LawVariant::PartialInfo: return "partial-info";
    }
    throw std::logic_error("law_variant_name: unknown variant");
}

inline LawVariant law_variant_from_name(const std::string& name) {
    if (name == "momentum") return LawVariant::Momentum;
    if (name == "unweighted") return LawVariant::Unweighted;
    if (name == "damped-momentum") return LawVariant::DampedMomentum;
    if (name == "velocity-reg") return LawVariant::VelocityReg;
    if (name == "mass-scaled") return LawVariant::MassScaled;
    if (name == "mass-scaled-velocity-reg") return LawVariant::MassScaledVelocityReg;
    if (name == "partial-info") return LawVariant::PartialInfo;
    throw std::invalid_argument("unknown control-law variant: " + name);
}

namespace detail {

inline bool uses_mass_scaled_interactions(LawVariant v) {
    return v == LawVariant::MassScaled || v == LawVariant::MassScaledVelocityReg;
}

inline bool uses_unit_alignment_weights(LawVariant v) {
    return v == LawVariant::Unweighted;
}

/// Tracking-term gain for agent i (the coefficient of -(v_i - v0)).
inline double tracking_gain(const ControlLaw& law, int i, double mass) {
    if (law.no_external_signal) return 0.0;
    switch (law.variant) {
        case LawVariant::Momentum:
        case LawVariant::Unweighted:
        case LawVariant::DampedMomentum:
        case LawVariant::MassScaled:
            return mass;
        case LawVariant::VelocityReg:
        case LawVariant::MassScaledVelocityReg:
            return 1.0;
        case LawVariant::PartialInfo:
            return law.informed.empty() || !law.informed[i] ? 0.0 : mass;
    }
    throw std::logic_error("tracking_gain: unknown variant");
}

/// Shared evaluation core. `View` exposes position(i), velocity(i), mass(i)
/// and damping(i); the simulator's flat state and the AgentState array map
/// onto it with identical arithmetic, so per-agent calls reproduce simulated
/// forces bitwise. `include_damping_compensation` selects whether a
/// DampedMomentum law contributes its +k_i v_i term; the damped dynamics
/// cancel that term exactly, so the integrator asks for the force without it
/// rather than adding and re-subtracting.
template <class View>
void accumulate_control_force(const ControlLaw& law, int i, const View& state,
                              const NeighborGraph& graph, const PotentialModel& model,
                              bool include_damping_compensation,
                              Eigen::Ref<Eigen::VectorXd> out) {
    const double mass_i = state.mass(i);
    const double interaction_scale =
        uses_mass_scaled_interactions(law.variant) ? mass_i : 1.0;
    const bool unit_weights = uses_unit_alignment_weights(law.variant);

    for (const auto& [j, w] : graph.neighbors[i]) {
        const double align = interaction_scale * (unit_weights ? 1.0 : w);
        out.noalias() -= align * (state.velocity(i) - state.velocity(j));

        const auto displacement = state.position(i) - state.position(j);
        const double r = displacement.norm();
        const double coeff = potential_gradient_coefficient(model, r, i, j);
        out.noalias() -= (interaction_scale * coeff) * displacement;
    }

    const double gain = tracking_gain(law, i, mass_i);
    if (gain != 0.0) {
        out.noalias() -= gain * (state.velocity(i) - law.desired_velocity);
    }

    if (include_damping_compensation && law.variant == LawVariant::DampedMomentum) {
        out.noalias() += state.damping(i) * state.velocity(i);
    }
}

struct AgentArrayView {
    const std::vector<AgentState>* agents;
    const Eigen::VectorXd& position(int i) const { return (*agents)[i].position; }
    const Eigen::VectorXd& velocity(int i) const { return (*agents)[i].velocity; }
    double mass(int i) const { return (*agents)[i].mass; }
    double damping(int i) const { return (*agents)[i].damping; }
};

} // namespace detail

/// Control force u_i for the selected law variant, evaluated on a full state
/// snapshot.
inline Eigen::VectorXd control_force(const ControlLaw& law, int i,
                                     const std::vector<AgentState>& states,
                                     const NeighborGraph& graph,
                                     const PotentialModel& model) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(states[i].position.size());
    detail::accumulate_control_force(law, i, detail::AgentArrayView{&states}, graph, model,
                                     /*include_damping_compensation=*/true, u);
    return u;
}

/// Net force the dynamics apply to agent i: the control force, minus k_i v_i
/// when the damped dynamics subtract the damping term. For DampedMomentum the
/// compensation term and the damping term cancel algebraically, so the result
/// equals the Momentum law's force exactly.
inline Eigen::VectorXd total_applied_force(const ControlLaw& law, int i,
                                           const std::vector<AgentState>& states,
                                           const NeighborGraph& graph,
                                           const PotentialModel& model, bool damped) {
    if (!damped) return control_force(law, i, states, graph, model);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(states[i].position.size());
    detail::accumulate_control_force(law, i, detail::AgentArrayView{&states}, graph, model,
                                     /*include_damping_compensation=*/false, u);
    if (law.variant != LawVariant::DampedMomentum) {
        u.noalias() -= states[i].damping * states[i].velocity;
    }
    return u;
}

/// Control forces of all agents concatenated in agent order (N * n entries).
inline Eigen::VectorXd stack_control(const ControlLaw& law,
                                     const std::vector<AgentState>& states,
                                     const NeighborGraph& graph,
                                     const PotentialModel& model) {
    const int n = states.empty() ? 0 : static_cast<int>(states[0].position.size());
    Eigen::VectorXd stacked(static_cast<Eigen::Index>(states.size()) * n);
    for (int i = 0; i < static_cast<int>(states.size()); ++i) {
        stacked.segment(static_cast<Eigen::Index>(i) * n, n) =
            control_force(law, i, states, graph, model);
    }
    return stacked;
}

} // namespace flocksim
