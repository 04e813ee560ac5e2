#pragma once

#include "flocksim/control.hpp"
#include "flocksim/dynamics.hpp"
#include "flocksim/metrics.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace flocksim {

/// Velocity against which convergence is judged: v0 when an external signal is
/// present, the initial center-of-mass velocity when it is not.
inline Eigen::VectorXd reference_velocity(const SimulationTrace& trace) {
    if (trace.law.no_external_signal) {
        return com(trace.frames.front()).com_velocity;
    }
    return trace.law.desired_velocity;
}

/// One metrics row per recorded frame.
struct MetricsRow {
    double t = 0.0;
    double energy = 0.0;
    double energy_rate = 0.0;
    double consensus = 0.0;
    double min_neighbor_dist = 0.0;
    Eigen::VectorXd com_velocity;
    double com_residual = 0.0;
    double gradient_res = 0.0;
};

inline std::vector<MetricsRow> compute_metrics_series(const SimulationTrace& trace) {
    if (trace.frames.empty()) throw std::invalid_argument("metrics: trace has no frames");
    const Eigen::VectorXd v_ref = reference_velocity(trace);
    const Eigen::VectorXd com_velocity_initial = com(trace.frames.front()).com_velocity;

    std::vector<MetricsRow> rows;
    rows.reserve(trace.frames.size());
    for (size_t f = 0; f < trace.frames.size(); ++f) {
        const auto& frame = trace.frames[f];
        MetricsRow row;
        row.t = trace.times[f];
        const EnergyReport e = energy(frame, v_ref, trace.graph, trace.potential, trace.law);
        row.energy = e.total;
        row.energy_rate = e.analytic_derivative;
        row.consensus = consensus_error(frame, v_ref);
        row.min_neighbor_dist = min_neighbor_distance(frame, trace.graph);
        row.com_velocity = com(frame).com_velocity;
        row.com_residual =
            (row.com_velocity - com_closed_form(com_velocity_initial, v_ref, row.t)).norm();
        row.gradient_res = gradient_residual(frame, trace.graph, trace.potential);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

inline std::string com_component_column(int k) {
    switch (k) {
        case 0: return "com_vx";
        case 1: return "com_vy";
        case 2: return "com_vz";
        default: return "com_v" + std::to_string(k);
    }
}

} // namespace detail

/// Pass/fail verdict for one check. `applicable` is false when the law has no
/// such guarantee or the trace cannot support the check (e.g. a decay fit with
/// no usable window); inapplicable checks never fail a report.
struct CheckResult {
    std::string name;
    bool applicable = true;
    bool passed = true;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct AnalysisReport {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        for (const auto& c : checks) {
            if (c.applicable && !c.passed) return false;
        }
        return true;
    }
};

/// Whether the law pins the mass-weighted center velocity to the exponential
/// closed form (unit-rate momentum tracking on every agent).
inline bool has_com_closed_form(const ControlLaw& law) {
    if (law.no_external_signal) return false;
    return law.variant == LawVariant::Momentum || law.variant == LawVariant::Unweighted ||
           law.variant == LawVariant::DampedMomentum;
}

/// Whether the plain average velocity follows the same closed form instead
/// (mass-scaled interactions with momentum tracking).
inline bool has_average_velocity_closed_form(const ControlLaw& law) {
    return !law.no_external_signal && law.variant == LawVariant::MassScaled;
}

/// Evaluates the stability, convergence, and collision guarantees the selected
/// law carries, at the thresholds used throughout the test suite.
inline AnalysisReport run_standard_checks(const SimulationTrace& trace) {
    if (trace.frames.size() < 2) {
        throw std::invalid_argument("analysis: trace needs at least two frames");
    }
    AnalysisReport report;
    const Eigen::VectorXd v_ref = reference_velocity(trace);
    const std::vector<MetricsRow> rows = compute_metrics_series(trace);

    {
        CheckResult c;
        c.name = "energy-monotone";
        c.threshold = 1e-9;
        c.value = -std::numeric_limits<double>::infinity();
        for (size_t f = 1; f < rows.size(); ++f) {
            c.value = std::max(c.value, rows[f].energy - rows[f - 1].energy);
        }
        c.passed = c.value <= c.threshold;
        c.detail = "max per-frame energy increase";
        report.checks.push_back(c);
    }

    {
        CheckResult c;
        c.name = "com-closed-form";
        if (trace.law.no_external_signal) {
            // No signal: the center velocity stays at its initial value.
            c.threshold = 1e-9;
            c.value = 0.0;
            for (const auto& row : rows) c.value = std::max(c.value, row.com_residual);
            c.passed = c.value <= c.threshold;
            c.detail = "max deviation of the center-of-mass velocity from its initial value";
        } else if (has_com_closed_form(trace.law)) {
            c.threshold = 1e-6;
            c.value = 0.0;
            for (const auto& row : rows) c.value = std::max(c.value, row.com_residual);
            c.passed = c.value <= c.threshold;
            c.detail = "max residual against v0 + (v*_0 - v0) exp(-t)";
        } else if (has_average_velocity_closed_form(trace.law)) {
            const Eigen::VectorXd avg0 = com(trace.frames.front()).average_velocity;
            c.threshold = 1e-6;
            c.value = 0.0;
            for (size_t f = 0; f < trace.frames.size(); ++f) {
                const Eigen::VectorXd avg = com(trace.frames[f]).average_velocity;
                c.value = std::max(
                    c.value, (avg - com_closed_form(avg0, v_ref, trace.times[f])).norm());
            }
            c.passed = c.value <= c.threshold;
            c.detail = "max residual of the average velocity against the closed form";
        } else {
            c.applicable = false;
            c.detail = "no closed-form center trajectory for this law";
        }
        report.checks.push_back(c);
    }

    {
        CheckResult c;
        c.name = "decay-exponent";
        c.threshold = 0.01;
        const bool weighted_center = has_com_closed_form(trace.law);
        if (!weighted_center && !has_average_velocity_closed_form(trace.law)) {
            c.applicable = false;
            c.detail = "no exponent prediction for this law";
        } else {
            try {
                const double slope = fit_decay_exponent(trace, v_ref, weighted_center);
                c.value = slope;
                c.passed = std::abs(slope + 1.0) <= c.threshold;
                c.detail = "fitted exponent, expected -1 +/- 0.01";
            } catch (const std::invalid_argument& e) {
                c.applicable = false;
                c.detail = e.what();
            }
        }
        report.checks.push_back(c);
    }

    {
        CheckResult c;
        c.name = "collision-floor";
        const double bound =
            collision_distance_lower_bound(trace.potential, rows.front().energy);
        c.threshold = std::max(0.05, bound);
        c.value = std::numeric_limits<double>::infinity();
        for (const auto& row : rows) c.value = std::min(c.value, row.min_neighbor_dist);
        if (trace.graph.edge_count() == 0) {
            c.applicable = false;
            c.detail = "no edges to bound";
        } else {
            c.passed = c.value > 0.05 && c.value >= bound;
            c.detail = "min neighbor distance over the trace; sublevel bound " +
                       std::to_string(bound);
        }
        report.checks.push_back(c);
    }

    {
        CheckResult c;
        c.name = "gradient-residual";
        c.threshold = 1e-3;
        c.value = rows.back().gradient_res;
        c.passed = c.value < c.threshold;
        c.detail = "final-frame max per-agent potential gradient norm";
        report.checks.push_back(c);
    }

    {
        CheckResult c;
        c.name = "consensus";
        c.threshold = trace.law.variant == LawVariant::PartialInfo ? 1e-2 : 1e-3;
        c.value = rows.back().consensus;
        c.passed = c.value < c.threshold;
        c.detail = trace.law.no_external_signal
                       ? "final max deviation from the initial center-of-mass velocity"
                       : "final max deviation from the desired velocity";
        report.checks.push_back(c);
    }

    return report;
}

inline nlohmann::json analysis_report_to_json(const AnalysisReport& report) {
    nlohmann::json j;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
        j["checks"].push_back({{"name", c.name},
                               {"applicable", c.applicable},
                               {"passed", c.passed},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"detail", c.detail}});
    }
    j["all_passed"] = report.all_passed();
    return j;
}

} // namespace flocksim
