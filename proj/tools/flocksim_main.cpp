#include "flocksim/flocksim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

Eigen::VectorXd parse_vector(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            values.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected comma-separated numbers, got '" + text + "'");
        }
    }
    if (values.empty()) throw CLI::ValidationError(flag, "expected at least one number");
    Eigen::VectorXd v(values.size());
    for (size_t k = 0; k < values.size(); ++k) v(static_cast<Eigen::Index>(k)) = values[k];
    return v;
}

std::vector<int> parse_indices(const std::string& text, const std::string& flag) {
    std::vector<int> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            values.push_back(std::stoi(cell));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected comma-separated indices, got '" + text + "'");
        }
    }
    return values;
}

void print_scenario_summary(const flocksim::Scenario& s, const std::string& path) {
    std::ostringstream v0;
    v0 << "(";
    for (Eigen::Index k = 0; k < s.law.desired_velocity.size(); ++k) {
        if (k > 0) v0 << ", ";
        v0 << s.law.desired_velocity(k);
    }
    v0 << ")";
    std::printf("wrote %s\n", path.c_str());
    std::printf("  agents: %d   edges: %d   law: %s%s   v0: %s   mode: %s\n", s.agent_count(),
                s.graph.edge_count(), flocksim::law_variant_name(s.law.variant),
                s.law.no_external_signal ? " (baseline, no external signal)" : "",
                v0.str().c_str(), flocksim::dynamics_mode_name(s.sim.mode));
}

int report_violations(const std::vector<flocksim::Violation>& violations) {
    for (const auto& v : violations) {
        std::fprintf(stderr, "invalid scenario: %s: %s\n", v.field.c_str(), v.message.c_str());
    }
    return 1;
}

struct RunOutputs {
    flocksim::SimulationResult result;
    std::vector<flocksim::MetricsRow> rows;
};

RunOutputs run_and_write(const flocksim::Scenario& scenario, const fs::path& dir) {
    fs::create_directories(dir);
    flocksim::save_scenario(scenario, (dir / "scenario.json").string());

    RunOutputs out;
    out.result = flocksim::simulate(scenario.agents, scenario.law, scenario.graph,
                                    scenario.potential, scenario.sim);
    flocksim::write_trace_csv(out.result.trace, (dir / "trace.csv").string());
    if (!out.result.trace.frames.empty()) {
        out.rows = flocksim::compute_metrics_series(out.result.trace);
        flocksim::write_metrics_csv(out.rows, (dir / "metrics.csv").string());
    }
    if (out.result.failure) {
        nlohmann::json err = {{"step", out.result.failure->step},
                              {"time", out.result.failure->time},
                              {"message", out.result.failure->message}};
        std::ofstream f(dir / "error.json");
        f << err.dump(2) << "\n";
    }
    return out;
}

void print_run_summary(const flocksim::Scenario& scenario, const RunOutputs& out) {
    if (out.result.failure) {
        std::fprintf(stderr, "run aborted at step %ld (t=%.6f): %s\n", out.result.failure->step,
                     out.result.failure->time, out.result.failure->message.c_str());
        return;
    }
    const auto& rows = out.rows;
    std::printf("final consensus error:  %.6e\n", rows.back().consensus);
    std::printf("final CoM residual:     %.6e\n", rows.back().com_residual);
    double min_dist = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) min_dist = std::min(min_dist, r.min_neighbor_dist);
    std::printf("min neighbor distance:  %.6f\n", min_dist);
    try {
        const double slope = flocksim::fit_decay_exponent(
            out.result.trace, flocksim::reference_velocity(out.result.trace),
            !flocksim::has_average_velocity_closed_form(scenario.law));
        std::printf("fitted decay exponent:  %.6f\n", slope);
    } catch (const std::invalid_argument& e) {
        std::printf("fitted decay exponent:  n/a (%s)\n", e.what());
    }
}

void print_report(const flocksim::AnalysisReport& report) {
    std::printf("%-18s %-8s %14s %14s  %s\n", "check", "status", "value", "threshold", "detail");
    for (const auto& c : report.checks) {
        const char* status = !c.applicable ? "skip" : (c.passed ? "pass" : "FAIL");
        if (c.applicable) {
            std::printf("%-18s %-8s %14.6e %14.6e  %s\n", c.name.c_str(), status, c.value,
                        c.threshold, c.detail.c_str());
        } else {
            std::printf("%-18s %-8s %14s %14s  %s\n", c.name.c_str(), status, "-", "-",
                        c.detail.c_str());
        }
    }
    std::printf("overall: %s\n", report.all_passed() ? "pass" : "FAIL");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flocksim: deterministic multi-agent flocking simulation and analysis"};
    app.require_subcommand(1);

    const std::vector<std::string> law_names = {
        "momentum",    "unweighted",  "damped-momentum",         "velocity-reg",
        "mass-scaled", "partial-info", "mass-scaled-velocity-reg"};

    // generate
    auto* gen = app.add_subcommand("generate", "generate a seeded scenario file");
    std::uint64_t seed = 0;
    std::string law_name, mode_name = "ideal", v0_text, informed_text, out_path;
    double dt = 1e-3, t_end = 250.0;
    int record_every = 100;
    bool baseline = false;
    gen->add_option("--seed", seed, "scenario seed")->required();
    gen->add_option("--law", law_name, "control-law variant")
        ->check(CLI::IsMember(law_names));
    gen->add_option("--informed", informed_text,
                    "comma-separated indices of informed agents (partial-info law)");
    gen->add_option("--mode", mode_name, "dynamics mode")->check(CLI::IsMember({"ideal", "damped"}));
    gen->add_option("--v0", v0_text, "desired velocity components, comma-separated");
    gen->add_option("--dt", dt, "integration step [s]");
    gen->add_option("--t-end", t_end, "simulation horizon [s]");
    gen->add_option("--record-every", record_every, "snapshot decimation");
    gen->add_flag("--baseline", baseline, "drop the tracking term for every agent");
    gen->add_option("--out", out_path, "output scenario path (default scenario_<seed>.json)");

    // run
    auto* run = app.add_subcommand("run", "simulate a scenario and write trace + metrics CSVs");
    std::string scenario_path, run_out = "out", compare_law;
    bool run_baseline = false;
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", run_out, "output directory");
    run->add_option("--compare-law", compare_law,
                    "also run the same scenario under another law variant")
        ->check(CLI::IsMember(law_names));
    run->add_flag("--baseline", run_baseline, "drop the tracking term for every agent");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "check a recorded trace against the law's guarantees");
    std::string analyze_input, analyze_scenario, report_path;
    analyze->add_option("input", analyze_input, "run directory or trace CSV")->required();
    analyze->add_option("--scenario", analyze_scenario,
                        "scenario file (defaults to scenario.json next to the trace)");
    analyze->add_option("--out", report_path, "report JSON path (default <dir>/report.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            flocksim::Scenario scenario = flocksim::generate_paper_scenario(seed);
            if (mode_name == "damped") {
                scenario.sim.mode = flocksim::DynamicsMode::Damped;
                if (law_name.empty()) law_name = "damped-momentum";
            }
            if (!law_name.empty()) {
                scenario.law.variant = flocksim::law_variant_from_name(law_name);
            }
            if (!informed_text.empty()) {
                if (scenario.law.variant != flocksim::LawVariant::PartialInfo) {
                    std::fprintf(stderr, "invalid override: informed: requires --law partial-info\n");
                    return 1;
                }
                scenario.law.informed.assign(scenario.agents.size(), 0);
                for (int idx : parse_indices(informed_text, "--informed")) {
                    if (idx < 0 || idx >= scenario.agent_count()) {
                        std::fprintf(stderr, "invalid override: informed: index %d out of range\n",
                                     idx);
                        return 1;
                    }
                    scenario.law.informed[idx] = 1;
                }
            } else if (scenario.law.variant == flocksim::LawVariant::PartialInfo && !baseline) {
                std::fprintf(stderr,
                             "invalid override: law: partial-info requires --informed or --baseline\n");
                return 1;
            }
            if (!v0_text.empty()) {
                scenario.law.desired_velocity = parse_vector(v0_text, "--v0");
            }
            scenario.law.no_external_signal = baseline;
            scenario.sim.dt = dt;
            scenario.sim.t_end = t_end;
            scenario.sim.record_every = record_every;

            const auto violations = flocksim::validate(scenario);
            if (!violations.empty()) return report_violations(violations);

            const std::string path =
                out_path.empty() ? "scenario_" + std::to_string(seed) + ".json" : out_path;
            flocksim::save_scenario(scenario, path);
            print_scenario_summary(scenario, path);
            return 0;
        }

        if (run->parsed()) {
            flocksim::Scenario scenario = flocksim::load_scenario(scenario_path);
            if (run_baseline) scenario.law.no_external_signal = true;
            if (!flocksim::is_connected(scenario.graph)) {
                std::fprintf(stderr,
                             "warning: neighbor graph is not connected; velocity consensus is "
                             "only guaranteed within components\n");
            }

            const fs::path out_dir(run_out);
            const RunOutputs primary = run_and_write(scenario, out_dir);
            print_run_summary(scenario, primary);

            if (!compare_law.empty() && primary.result.ok()) {
                flocksim::Scenario alt = scenario;
                alt.law.variant = flocksim::law_variant_from_name(compare_law);
                const RunOutputs secondary = run_and_write(alt, out_dir / "compare");

                // Side-by-side energy curves plus the quadratic form of the
                // Laplacian difference: the per-frame gap between the two
                // laws' energy decay rates.
                const Eigen::MatrixXd gap = flocksim::laplacian_difference(scenario.graph);
                std::ofstream cmp(out_dir / "compare.csv");
                cmp << "t,J_" << flocksim::law_variant_name(scenario.law.variant) << ",J_"
                    << flocksim::law_variant_name(alt.law.variant) << ",ltilde_quadform\n";
                const size_t frames =
                    std::min(primary.rows.size(), secondary.rows.size());
                for (size_t f = 0; f < frames; ++f) {
                    const Eigen::VectorXd ev = flocksim::stack_velocity_errors(
                        primary.result.trace.frames[f], scenario.law.desired_velocity);
                    cmp << flocksim::detail::format_double(primary.rows[f].t) << ","
                        << flocksim::detail::format_double(primary.rows[f].energy) << ","
                        << flocksim::detail::format_double(secondary.rows[f].energy) << ","
                        << flocksim::detail::format_double(flocksim::laplacian_quadratic_form(
                               gap, ev, scenario.n_dims))
                        << "\n";
                }
            }
            return primary.result.ok() ? 0 : 2;
        }

        if (analyze->parsed()) {
            fs::path input(analyze_input);
            fs::path trace_path, scenario_file, report_file;
            if (fs::is_directory(input)) {
                trace_path = input / "trace.csv";
                scenario_file = analyze_scenario.empty() ? input / "scenario.json"
                                                         : fs::path(analyze_scenario);
                report_file = report_path.empty() ? input / "report.json" : fs::path(report_path);
            } else {
                trace_path = input;
                scenario_file = analyze_scenario.empty() ? input.parent_path() / "scenario.json"
                                                         : fs::path(analyze_scenario);
                report_file = report_path.empty() ? input.parent_path() / "report.json"
                                                  : fs::path(report_path);
            }

            const flocksim::Scenario scenario = flocksim::load_scenario(scenario_file.string());
            const flocksim::TraceFrames frames = flocksim::read_trace_csv(trace_path.string());
            const flocksim::SimulationTrace trace = flocksim::attach_scenario(frames, scenario);

            const flocksim::AnalysisReport report = flocksim::run_standard_checks(trace);
            print_report(report);
            std::ofstream out(report_file);
            out << flocksim::analysis_report_to_json(report).dump(2) << "\n";
            return report.all_passed() ? 0 : 3;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
