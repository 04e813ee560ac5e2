#include "flocksim/metrics.hpp"

#include "flocksim/scenario.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using Catch::Approx;
using namespace flocksim;
using helpers::make_agent;
using helpers::make_law;

TEST_CASE("energy report") {
    const PotentialModel model;

    SECTION("two resting agents at unit distance") {
        const auto g = build_graph(2, {{0, 1}});
        Eigen::VectorXd v0(2);
        v0 << 1.0, 0.0;
        std::vector<AgentState> states{make_agent(0, 0, 1, 0), make_agent(1, 0, 1, 0)};
        const EnergyReport report = energy(states, v0, g, model);
        CHECK(report.total == Approx(5.0));
        CHECK(report.potential_part == Approx(5.0));
        CHECK(report.kinetic_part == 0.0);
        CHECK(report.analytic_derivative == 0.0);
    }

    SECTION("zero velocity errors null the kinetic part and the rate") {
        std::mt19937 rng(4);
        const auto g = helpers::random_connected_graph(rng, 4);
        auto states = helpers::random_flock(rng, 4);
        Eigen::VectorXd v0(2);
        v0 << -1.0, 2.0;
        for (auto& s : states) s.velocity = v0;
        const EnergyReport report = energy(states, v0, g, model);
        CHECK(report.kinetic_part == 0.0);
        CHECK(report.analytic_derivative == 0.0);
        CHECK(report.total == report.potential_part);
    }

    SECTION("analytic rate matches a finite difference along the flow") {
        // Centered stencil around the state one step ahead, so every sample
        // lies forward along the (dissipative, non-reversible) flow.
        std::mt19937 rng(9);
        const auto g = helpers::random_connected_graph(rng, 5);
        const auto s0 = helpers::random_flock(rng, 5);
        const ControlLaw law = make_law(LawVariant::Momentum, 1.0, 0.5);

        const double h = 1e-4;
        const auto step = [&](const std::vector<AgentState>& frame, double dt) {
            return step_rk4(frame, law, g, model, DynamicsMode::Ideal, dt);
        };
        const auto energy_at = [&](const std::vector<AgentState>& frame) {
            return energy(frame, law.desired_velocity, g, model, law).total;
        };
        const auto s_half = step(s0, h / 2);
        const auto s_center = step(s_half, h / 2);
        const auto s_3half = step(s_center, h / 2);
        const auto s_full = step(s_3half, h / 2);

        const double fd = oracles::richardson_derivative(
            energy_at(s0), energy_at(s_full), energy_at(s_half), energy_at(s_3half), h);
        const double analytic =
            energy(s_center, law.desired_velocity, g, model, law).analytic_derivative;
        CHECK(analytic == Approx(fd).epsilon(1e-6).margin(1e-10));
    }

    SECTION("mass-scaled laws weight the kinetic term by one") {
        std::mt19937 rng(10);
        const auto g = helpers::random_connected_graph(rng, 4);
        const auto states = helpers::random_flock(rng, 4);
        Eigen::VectorXd v0 = Eigen::VectorXd::Zero(2);
        const EnergyReport plain = energy(states, v0, g, model, make_law(LawVariant::Momentum));
        const EnergyReport scaled = energy(states, v0, g, model, make_law(LawVariant::MassScaled));
        CHECK(plain.potential_part == scaled.potential_part);
        double expected = 0.0;
        for (const auto& s : states) expected += 0.5 * s.velocity.squaredNorm();
        CHECK(scaled.kinetic_part == Approx(expected));
    }
}

TEST_CASE("energy derivative identity against an independent Kronecker assembly") {
    std::mt19937 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 5;
        const auto g = helpers::random_connected_graph(rng, n);
        const auto states = helpers::random_flock(rng, n);
        const ControlLaw law = make_law(LawVariant::Momentum, 0.5, -1.0);

        const EnergyReport report =
            energy(states, law.desired_velocity, g, PotentialModel{}, law);

        // Literal (L + M) (x) I_2 assembly.
        Eigen::MatrixXd coupling = weighted_laplacian(g);
        for (int i = 0; i < n; ++i) coupling(i, i) += states[i].mass;
        Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                kron(2 * i, 2 * j) = coupling(i, j);
                kron(2 * i + 1, 2 * j + 1) = coupling(i, j);
            }
        }
        const Eigen::VectorXd ev = stack_velocity_errors(states, law.desired_velocity);
        const double reference = -(ev.transpose() * kron * ev)(0);
        CHECK(std::abs(report.analytic_derivative - reference) <=
              1e-12 * (1.0 + std::abs(reference)));
    }
}

TEST_CASE("energy decay bound") {
    std::mt19937 rng(77);
    const PotentialModel model;

    SECTION("a common velocity error lies in the Laplacian kernel") {
        const auto g = helpers::random_connected_graph(rng, 5);
        auto states = helpers::random_flock(rng, 5);
        Eigen::VectorXd v0(2), offset(2);
        v0 << 1.0, 0.0;
        offset << 0.7, -0.3;
        for (auto& s : states) s.velocity = v0 + offset;
        const ControlLaw law = make_law(LawVariant::Momentum, v0(0), v0(1));

        double tracking = 0.0;
        for (const auto& s : states) tracking += s.mass * offset.squaredNorm();
        CHECK(energy_decay_bound(states, v0, g, law) == Approx(-tracking));

        const EnergyReport report = energy(states, v0, g, model, law);
        // Alignment part vanishes: the rate is purely the tracking sum.
        CHECK(report.analytic_derivative == Approx(-tracking));
    }

    SECTION("the Laplacian quadratic form dominates lambda_2 on mean-free vectors") {
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = 3 + trial % 6;
            const auto g = helpers::random_connected_graph(rng, n);
            const Eigen::MatrixXd lap = weighted_laplacian(g);
            const double lambda2 = second_smallest_eigenvalue(lap);
            Eigen::VectorXd stacked(2 * n);
            for (int k = 0; k < 2 * n; ++k) stacked(k) = unit(rng);
            const Eigen::VectorXd mean_free = remove_coordinate_means(stacked, 2);
            const double quad = laplacian_quadratic_form(lap, stacked, 2);
            REQUIRE(-quad <= -lambda2 * mean_free.squaredNorm() + 1e-9);
        }
    }

    SECTION("the analytic rate never exceeds the bound") {
        for (int trial = 0; trial < 200; ++trial) {
            const int n = 3 + trial % 5;
            const auto g = helpers::random_connected_graph(rng, n);
            const auto states = helpers::random_flock(rng, n);
            const ControlLaw law = make_law(LawVariant::Momentum, 0.3, 0.1);
            const EnergyReport report =
                energy(states, law.desired_velocity, g, model, law);
            const double bound = energy_decay_bound(states, law.desired_velocity, g, law);
            REQUIRE(report.analytic_derivative <= bound + 1e-9);
        }
    }
}

TEST_CASE("center of mass") {
    SECTION("single agent") {
        std::vector<AgentState> states{make_agent(1, 2, 3, 4, 0.7)};
        const ComReport report = com(states);
        CHECK((report.com_position - states[0].position).norm() == 0.0);
        CHECK((report.com_velocity - states[0].velocity).norm() == 0.0);
    }

    SECTION("mass-weighted mean") {
        std::vector<AgentState> states{make_agent(0, 0, 4, 0, 1.0), make_agent(1, 0, 0, 0, 3.0)};
        const ComReport report = com(states);
        CHECK(report.com_velocity(0) == Approx(1.0));
        CHECK(report.com_velocity(1) == 0.0);
    }

    SECTION("equal masses collapse the two centers") {
        std::mt19937 rng(6);
        auto states = helpers::random_flock(rng, 6);
        for (auto& s : states) s.mass = 0.4;
        const ComReport report = com(states);
        CHECK((report.com_velocity - report.average_velocity).norm() <= 1e-14);
        CHECK((report.com_position - report.center_position).norm() <= 1e-13);
    }
}

TEST_CASE("com_closed_form") {
    Eigen::VectorXd v0(2), vc0(2);
    v0 << 2.0, 1.0;

    SECTION("matching initial value stays constant") {
        vc0 = v0;
        for (const double t : {0.0, 1.0, 100.0}) {
            CHECK((com_closed_form(vc0, v0, t) - v0).norm() == 0.0);
        }
    }

    SECTION("deviation halves at t = ln 2") {
        vc0 = v0;
        vc0(0) += 1.0;
        const Eigen::VectorXd v = com_closed_form(vc0, v0, std::log(2.0));
        CHECK(v(0) - v0(0) == Approx(0.5).epsilon(1e-14));
        CHECK(v(1) == v0(1));
    }

    SECTION("long horizons land on v0") {
        vc0 = v0;
        vc0(0) += 1.0;
        CHECK((com_closed_form(vc0, v0, 30.0) - v0).norm() <= 1e-13);
    }
}

TEST_CASE("consensus_error") {
    Eigen::VectorXd v0(2);
    v0 << 1.0, 1.0;
    std::vector<AgentState> states{make_agent(0, 0, 1, 1), make_agent(1, 0, 1, 1)};
    CHECK(consensus_error(states, v0) == 0.0);

    states[1].velocity(0) += 3.0;
    states[1].velocity(1) += 4.0;
    CHECK(consensus_error(states, v0) == Approx(5.0));
}

TEST_CASE("min_neighbor_distance") {
    const auto pair = build_graph(2, {{0, 1}});
    std::vector<AgentState> two{make_agent(0, 0, 0, 0), make_agent(1, 0, 0, 0)};
    CHECK(min_neighbor_distance(two, pair) == 1.0);

    const auto path = build_graph(3, {{0, 1}, {1, 2}});
    std::vector<AgentState> three{make_agent(0, 0, 0, 0), make_agent(1, 0, 0, 0),
                                  make_agent(1.4, 0, 0, 0)};
    CHECK(min_neighbor_distance(three, path) == Approx(0.4));

    // Non-neighbors do not count.
    const auto sparse = build_graph(3, {{0, 1}});
    CHECK(min_neighbor_distance(three, sparse) == 1.0);
}

TEST_CASE("gradient_residual") {
    const PotentialModel model;
    const auto pair = build_graph(2, {{0, 1}});

    std::vector<AgentState> at_rest{make_agent(0, 0, 0, 0), make_agent(1, 0, 0, 0)};
    CHECK(gradient_residual(at_rest, pair, model) <= 1e-12);

    std::vector<AgentState> stretched{make_agent(0, 0, 0, 0), make_agent(2, 0, 0, 0)};
    CHECK(gradient_residual(stretched, pair, model) == Approx(3.75).epsilon(1e-13));
}

TEST_CASE("fit_decay_exponent") {
    SECTION("exact exponential input") {
        std::vector<double> times, deviations;
        for (int k = 0; k <= 200; ++k) {
            const double t = 0.1 * k;
            times.push_back(t);
            deviations.push_back(2.5 * std::exp(-t));
        }
        CHECK(fit_decay_exponent(times, deviations) == Approx(-1.0).margin(1e-9));
    }

    SECTION("initial deviation too small") {
        std::vector<double> times{0.0, 1.0, 2.0};
        std::vector<double> deviations{1e-9, 1e-10, 1e-11};
        REQUIRE_THROWS_AS(fit_decay_exponent(times, deviations), std::invalid_argument);
    }

    SECTION("window never opens on a truncated series") {
        std::vector<double> times{0.0, 0.1, 0.2};
        std::vector<double> deviations{1.0, 0.95, 0.9}; // never halves
        REQUIRE_THROWS_AS(fit_decay_exponent(times, deviations), std::invalid_argument);
    }
}

TEST_CASE("sublevel distance bounds") {
    const PotentialModel model;
    const double r_star = equilibrium_distance(model);

    SECTION("collision bound inverts the potential on the repulsive branch") {
        const double j0 = 80.0;
        const double bound = collision_distance_lower_bound(model, j0);
        CHECK(bound < r_star);
        CHECK(potential_value(model, bound) == Approx(2.0 * j0).epsilon(1e-6));
    }

    SECTION("dispersion bound inverts it on the attractive branch") {
        const double j0 = 80.0;
        const double per_edge = dispersion_upper_bound(model, j0, 2);
        CHECK(per_edge > r_star);
        CHECK(potential_value(model, per_edge) == Approx(2.0 * j0).epsilon(1e-6));
        CHECK(dispersion_upper_bound(model, j0, 10) == Approx(9.0 * per_edge).epsilon(1e-12));
    }

    SECTION("tiny energies leave no room below the equilibrium distance") {
        CHECK(collision_distance_lower_bound(model, 2.0) == r_star);
    }
}

TEST_CASE("energy is non-increasing along short runs of every law") {
    const Scenario s = generate_paper_scenario(33);
    SimulationConfig config = s.sim;
    config.t_end = 3.0;

    const LawVariant variants[] = {
        LawVariant::Momentum,    LawVariant::Unweighted, LawVariant::VelocityReg,
        LawVariant::MassScaled,  LawVariant::MassScaledVelocityReg,
        LawVariant::PartialInfo,
    };
    for (const auto variant : variants) {
        ControlLaw law = s.law;
        law.variant = variant;
        if (variant == LawVariant::PartialInfo) {
            law.informed.assign(s.agents.size(), 0);
            law.informed[4] = 1;
        }
        const auto result = simulate(s.agents, law, s.graph, s.potential, config);
        REQUIRE(result.ok());
        double previous = std::numeric_limits<double>::infinity();
        for (const auto& frame : result.trace.frames) {
            const double j =
                energy(frame, law.desired_velocity, s.graph, s.potential, law).total;
            REQUIRE(j <= previous + 1e-9);
            previous = j;
        }
    }
}
