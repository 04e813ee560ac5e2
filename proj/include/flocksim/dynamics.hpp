#pragma once

#include "flocksim/control.hpp"
#include "flocksim/graph.hpp"
#include "flocksim/potential.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flocksim {

enum class DynamicsMode {
    Ideal,   // m_i dv_i/dt = u_i
    Damped,  // m_i dv_i/dt = u_i - k_i v_i
};

inline const char* dynamics_mode_name(DynamicsMode m) {
    return m == DynamicsMode::Ideal ? "ideal" : "damped";
}

inline DynamicsMode dynamics_mode_from_name(const std::string& name) {
    if (name == "ideal") return DynamicsMode::Ideal;
    if (name == "damped") return DynamicsMode::Damped;
    throw std::invalid_argument("unknown dynamics mode: " + name);
}

struct SimulationConfig {
    double dt = 1e-3;
    double t_end = 250.0;
    int record_every = 100;
    DynamicsMode mode = DynamicsMode::Ideal;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("sim: dt must be positive");
        if (!(t_end >= dt)) throw std::invalid_argument("sim: t_end must be at least dt");
        if (record_every < 1) throw std::invalid_argument("sim: record_every must be >= 1");
    }
};

/// Time-indexed snapshots of all agents plus the ingredients needed to
/// recompute any derived quantity after the fact.
struct SimulationTrace {
    std::vector<double> times;
    std::vector<std::vector<AgentState>> frames;
    ControlLaw law;
    NeighborGraph graph;
    PotentialModel potential;
    DynamicsMode mode = DynamicsMode::Ideal;
};

struct SimulationFailure {
    long step = 0;
    double time = 0.0;
    std::string message;
};

/// Trace plus an optional abort record; on failure the trace holds every frame
/// recorded before the aborting step.
struct SimulationResult {
    SimulationTrace trace;
    std::optional<SimulationFailure> failure;

    bool ok() const { return !failure.has_value(); }
};

/// Coordinates in which the desired motion is the origin: position errors
/// x_i - v0 t and velocity errors v_i - v0. Pairwise position-error
/// differences coincide with raw position differences for any t.
struct ErrorState {
    std::vector<Eigen::VectorXd> position_error;
    std::vector<Eigen::VectorXd> velocity_error;
};

inline ErrorState to_error_state(const std::vector<AgentState>& states,
                                 const Eigen::VectorXd& desired_velocity, double t) {
    ErrorState e;
    e.position_error.reserve(states.size());
    e.velocity_error.reserve(states.size());
    for (const auto& s : states) {
        e.position_error.push_back(s.position - desired_velocity * t);
        e.velocity_error.push_back(s.velocity - desired_velocity);
    }
    return e;
}

namespace detail {

/// Agent-major flat layout: agent i occupies entries [i*2n, i*2n + 2n) as
/// position block then velocity block.
struct FlatStateView {
    const Eigen::VectorXd* y;
    const std::vector<double>* masses;
    const std::vector<double>* dampings;
    int dims;

    auto position(int i) const { return y->segment(static_cast<Eigen::Index>(i) * 2 * dims, dims); }
    auto velocity(int i) const {
        return y->segment(static_cast<Eigen::Index>(i) * 2 * dims + dims, dims);
    }
    double mass(int i) const { return (*masses)[i]; }
    double damping(int i) const { return (*dampings)[i]; }
};

/// Right-hand side of the selected dynamics over the flat layout. Writes into
/// `dydt` without allocating.
inline void flat_derivative(const Eigen::VectorXd& y, const ControlLaw& law,
                            const NeighborGraph& graph, const PotentialModel& model,
                            const std::vector<double>& masses,
                            const std::vector<double>& dampings, DynamicsMode mode,
                            Eigen::VectorXd& dydt) {
    const int n_agents = static_cast<int>(masses.size());
    const int dims = n_agents > 0 ? static_cast<int>(y.size()) / (2 * n_agents) : 0;
    const FlatStateView view{&y, &masses, &dampings, dims};

    for (int i = 0; i < n_agents; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>(i) * 2 * dims;
        dydt.segment(base, dims) = view.velocity(i);

        auto accel = dydt.segment(base + dims, dims);
        accel.setZero();
        // Under damped dynamics the DampedMomentum compensation term +k_i v_i
        // cancels against the -k_i v_i damping; both are omitted so the
        // cancellation is exact rather than rounded.
        accumulate_control_force(law, i, view, graph, model,
                                 /*include_damping_compensation=*/mode == DynamicsMode::Ideal,
                                 accel);
        if (mode == DynamicsMode::Damped && law.variant != LawVariant::DampedMomentum) {
            accel.noalias() -= view.damping(i) * view.velocity(i);
        }
        accel /= masses[i];
    }
}

inline void pack_flat(const std::vector<AgentState>& states, Eigen::VectorXd& y,
                      std::vector<double>& masses, std::vector<double>& dampings) {
    const int n_agents = static_cast<int>(states.size());
    const int dims = n_agents > 0 ? static_cast<int>(states[0].position.size()) : 0;
    y.resize(static_cast<Eigen::Index>(n_agents) * 2 * dims);
    masses.resize(n_agents);
    dampings.resize(n_agents);
    for (int i = 0; i < n_agents; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>(i) * 2 * dims;
        y.segment(base, dims) = states[i].position;
        y.segment(base + dims, dims) = states[i].velocity;
        masses[i] = states[i].mass;
        dampings[i] = states[i].damping;
    }
}

inline std::vector<AgentState> unpack_flat(const Eigen::VectorXd& y,
                                           const std::vector<double>& masses,
                                           const std::vector<double>& dampings) {
    const int n_agents = static_cast<int>(masses.size());
    const int dims = n_agents > 0 ? static_cast<int>(y.size()) / (2 * n_agents) : 0;
    std::vector<AgentState> states(n_agents);
    for (int i = 0; i < n_agents; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>(i) * 2 * dims;
        states[i].position = y.segment(base, dims);
        states[i].velocity = y.segment(base + dims, dims);
        states[i].mass = masses[i];
        states[i].damping = dampings[i];
    }
    return states;
}

/// Classical RK4 step over the flat layout. Stage buffers are caller-owned so
/// the stepping loop does not allocate. A singularity in any stage is
/// rethrown tagged with that stage.
struct Rk4Workspace {
    Eigen::VectorXd k1, k2, k3, k4, scratch;

    void resize(Eigen::Index size) {
        k1.resize(size);
        k2.resize(size);
        k3.resize(size);
        k4.resize(size);
        scratch.resize(size);
    }
};

inline void rk4_step_flat(Eigen::VectorXd& y, const ControlLaw& law,
                          const NeighborGraph& graph, const PotentialModel& model,
                          const std::vector<double>& masses,
                          const std::vector<double>& dampings, DynamicsMode mode, double dt,
                          Rk4Workspace& ws) {
    const auto stage = [&](const Eigen::VectorXd& state, Eigen::VectorXd& slope,
                           const char* tag) {
        try {
            flat_derivative(state, law, graph, model, masses, dampings, mode, slope);
        } catch (const SingularityError& e) {
            throw SingularityError(e.distance(), e.agent_i(), e.agent_j(), tag);
        }
    };

    stage(y, ws.k1, "rk4 stage 1");
    ws.scratch = y + (0.5 * dt) * ws.k1;
    stage(ws.scratch, ws.k2, "rk4 stage 2");
    ws.scratch = y + (0.5 * dt) * ws.k2;
    stage(ws.scratch, ws.k3, "rk4 stage 3");
    ws.scratch = y + dt * ws.k3;
    stage(ws.scratch, ws.k4, "rk4 stage 4");
    y += dt * ((ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4) / 6.0);
}

} // namespace detail

/// Stacked derivative [dx_i; dv_i] per agent for the selected dynamics mode.
inline Eigen::VectorXd derivative(const std::vector<AgentState>& states, const ControlLaw& law,
                                  const NeighborGraph& graph, const PotentialModel& model,
                                  DynamicsMode mode) {
    Eigen::VectorXd y;
    std::vector<double> masses, dampings;
    detail::pack_flat(states, y, masses, dampings);
    Eigen::VectorXd dydt(y.size());
    detail::flat_derivative(y, law, graph, model, masses, dampings, mode, dydt);
    return dydt;
}

/// One classical 4th-order Runge-Kutta step. Deterministic: identical inputs
/// produce bitwise-identical outputs.
inline std::vector<AgentState> step_rk4(const std::vector<AgentState>& states,
                                        const ControlLaw& law, const NeighborGraph& graph,
                                        const PotentialModel& model, DynamicsMode mode,
                                        double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
    Eigen::VectorXd y;
    std::vector<double> masses, dampings;
    detail::pack_flat(states, y, masses, dampings);
    detail::Rk4Workspace ws;
    ws.resize(y.size());
    detail::rk4_step_flat(y, law, graph, model, masses, dampings, mode, dt, ws);
    return detail::unpack_flat(y, masses, dampings);
}

/// Fixed-step integration over ceil(t_end / dt) steps. Snapshots are recorded
/// at step 0, every `record_every` steps, and at the final step. A singularity
/// or a non-finite state aborts the run, returning the frames recorded so far
/// plus a failure record with the step index.
inline SimulationResult simulate(const std::vector<AgentState>& initial, const ControlLaw& law,
                                 const NeighborGraph& graph, const PotentialModel& model,
                                 const SimulationConfig& config) {
    config.validate();

    SimulationResult result;
    result.trace.law = law;
    result.trace.graph = graph;
    result.trace.potential = model;
    result.trace.mode = config.mode;

    Eigen::VectorXd y;
    std::vector<double> masses, dampings;
    detail::pack_flat(initial, y, masses, dampings);
    detail::Rk4Workspace ws;
    ws.resize(y.size());

    const long total_steps =
        static_cast<long>(std::ceil(config.t_end / config.dt - 1e-9));
    const auto record = [&](long step) {
        result.trace.times.push_back(static_cast<double>(step) * config.dt);
        result.trace.frames.push_back(detail::unpack_flat(y, masses, dampings));
    };

    record(0);
    for (long step = 1; step <= total_steps; ++step) {
        try {
            detail::rk4_step_flat(y, law, graph, model, masses, dampings, config.mode,
                                  config.dt, ws);
        } catch (const SingularityError& e) {
            result.failure = SimulationFailure{step, static_cast<double>(step) * config.dt,
                                               e.what()};
            return result;
        }
        if (!y.allFinite()) {
            result.failure = SimulationFailure{step, static_cast<double>(step) * config.dt,
                                               "non-finite state detected"};
            return result;
        }
        if (step % config.record_every == 0 || step == total_steps) {
            record(step);
        }
    }
    return result;
}

} // namespace flocksim
