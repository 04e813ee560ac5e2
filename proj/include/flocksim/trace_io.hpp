#pragma once

#include "flocksim/analysis.hpp"
#include "flocksim/dynamics.hpp"
#include "flocksim/scenario.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flocksim {

namespace detail {

/// Shortest decimal form (15 to 17 significant digits) that round-trips the
/// double exactly.
inline std::string format_double(double x) {
    char buf[40];
    for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
        double parsed = 0.0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == x) break;
    }
    return buf;
}

} // namespace detail

/// Writes the trace as CSV: t, then per agent the position and velocity
/// components (columns x{i}_{k}, v{i}_{k}). Values round-trip exactly.
inline void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("trace: cannot open " + path + " for writing");

    const int n_agents = trace.frames.empty() ? 0 : static_cast<int>(trace.frames[0].size());
    const int dims =
        n_agents > 0 ? static_cast<int>(trace.frames[0][0].position.size()) : 0;

    out << "t";
    for (int i = 0; i < n_agents; ++i) {
        for (int k = 0; k < dims; ++k) out << ",x" << i << "_" << k;
        for (int k = 0; k < dims; ++k) out << ",v" << i << "_" << k;
    }
    out << "\n";

    for (size_t f = 0; f < trace.frames.size(); ++f) {
        out << detail::format_double(trace.times[f]);
        for (int i = 0; i < n_agents; ++i) {
            const auto& agent = trace.frames[f][i];
            for (int k = 0; k < dims; ++k)
                out << "," << detail::format_double(agent.position(k));
            for (int k = 0; k < dims; ++k)
                out << "," << detail::format_double(agent.velocity(k));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("trace: write to " + path + " failed");
}

/// Frames read back from a trace CSV; masses and gains live in the scenario.
struct TraceFrames {
    std::vector<double> times;
    std::vector<std::vector<Eigen::VectorXd>> positions;
    std::vector<std::vector<Eigen::VectorXd>> velocities;
    int n_agents = 0;
    int dims = 0;
};

inline TraceFrames read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("trace: cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("trace: empty file " + path);

    // Header layout is t then 2*dims columns per agent; recover the shape from
    // the last column name v{N-1}_{dims-1}.
    int columns = 1;
    std::string last;
    {
        std::stringstream ss(header);
        std::string cell;
        columns = 0;
        while (std::getline(ss, cell, ',')) {
            last = cell;
            ++columns;
        }
    }
    if (columns < 3 || last.size() < 4 || last[0] != 'v') {
        throw std::runtime_error("trace: unrecognized header in " + path);
    }
    const auto underscore = last.find('_');
    if (underscore == std::string::npos) {
        throw std::runtime_error("trace: unrecognized header in " + path);
    }
    TraceFrames frames;
    frames.n_agents = std::stoi(last.substr(1, underscore - 1)) + 1;
    frames.dims = std::stoi(last.substr(underscore + 1)) + 1;
    if (columns != 1 + frames.n_agents * 2 * frames.dims) {
        throw std::runtime_error("trace: column count does not match header shape in " + path);
    }

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        row.reserve(columns);
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != columns) {
            throw std::runtime_error("trace: malformed row in " + path);
        }
        frames.times.push_back(row[0]);
        std::vector<Eigen::VectorXd> pos(frames.n_agents), vel(frames.n_agents);
        int cursor = 1;
        for (int i = 0; i < frames.n_agents; ++i) {
            pos[i].resize(frames.dims);
            for (int k = 0; k < frames.dims; ++k) pos[i](k) = row[cursor++];
            vel[i].resize(frames.dims);
            for (int k = 0; k < frames.dims; ++k) vel[i](k) = row[cursor++];
        }
        frames.positions.push_back(std::move(pos));
        frames.velocities.push_back(std::move(vel));
    }
    if (frames.times.empty()) throw std::runtime_error("trace: no data rows in " + path);
    return frames;
}

/// Writes the per-frame metrics table: t, J, J_dot, consensus_error,
/// min_neighbor_dist, the center-of-mass velocity components, com_residual,
/// gradient_residual.
inline void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("metrics: cannot open " + path + " for writing");

    const int dims = rows.empty() ? 0 : static_cast<int>(rows[0].com_velocity.size());
    out << "t,J,J_dot,consensus_error,min_neighbor_dist";
    for (int k = 0; k < dims; ++k) out << "," << detail::com_component_column(k);
    out << ",com_residual,gradient_residual\n";

    for (const auto& row : rows) {
        out << detail::format_double(row.t) << "," << detail::format_double(row.energy) << ","
            << detail::format_double(row.energy_rate) << ","
            << detail::format_double(row.consensus) << ","
            << detail::format_double(row.min_neighbor_dist);
        for (int k = 0; k < dims; ++k) {
            out << "," << detail::format_double(row.com_velocity(k));
        }
        out << "," << detail::format_double(row.com_residual) << ","
            << detail::format_double(row.gradient_res) << "\n";
    }
    if (!out) throw std::runtime_error("metrics: write to " + path + " failed");
}

/// Reattaches scenario context (masses, gains, law, graph, potential) to bare
/// frames read from CSV.
inline SimulationTrace attach_scenario(const TraceFrames& frames, const Scenario& scenario) {
    if (frames.n_agents != scenario.agent_count()) {
        throw std::runtime_error("trace: agent count does not match scenario");
    }
    if (frames.dims != scenario.n_dims) {
        throw std::runtime_error("trace: spatial dimension does not match scenario");
    }
    SimulationTrace trace;
    trace.times = frames.times;
    trace.law = scenario.law;
    trace.graph = scenario.graph;
    trace.potential = scenario.potential;
    trace.mode = scenario.sim.mode;
    trace.frames.reserve(frames.times.size());
    for (size_t f = 0; f < frames.times.size(); ++f) {
        std::vector<AgentState> frame(frames.n_agents);
        for (int i = 0; i < frames.n_agents; ++i) {
            frame[i].position = frames.positions[f][i];
            frame[i].velocity = frames.velocities[f][i];
            frame[i].mass = scenario.agents[i].mass;
            frame[i].damping = scenario.agents[i].damping;
        }
        trace.frames.push_back(std::move(frame));
    }
    return trace;
}

} // namespace flocksim
