#pragma once

#include "flocksim/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace flocksim {

/// Distances at or below this guard are treated as an integrator failure, not
/// a value to evaluate: the pairwise potential is singular at zero separation
/// and the control laws keep neighbors away from it, so reaching the guard
/// means the simulation has already gone wrong.
inline constexpr double kMinDistanceGuard = 1e-6;

/// Thrown when a pairwise distance falls at or below kMinDistanceGuard.
/// Carries the offending agent pair when the caller knows it (-1 otherwise)
/// and an optional context tag (e.g. the integrator substage).
class SingularityError : public std::runtime_error {
  public:
    SingularityError(double distance, int agent_i = -1, int agent_j = -1,
                     const std::string& context = {})
        : std::runtime_error(format(distance, agent_i, agent_j, context)),
          distance_(distance), agent_i_(agent_i), agent_j_(agent_j), context_(context) {}

    double distance() const { return distance_; }
    int agent_i() const { return agent_i_; }
    int agent_j() const { return agent_j_; }
    const std::string& context() const { return context_; }

  private:
    static std::string format(double distance, int i, int j, const std::string& context) {
        std::string msg = "pairwise distance " + std::to_string(distance) +
                          " at or below guard " + std::to_string(kMinDistanceGuard);
        if (i >= 0 && j >= 0) {
            msg += " between agents " + std::to_string(i) + " and " + std::to_string(j);
        }
        if (!context.empty()) {
            msg += " (" + context + ")";
        }
        return msg;
    }

    double distance_;
    int agent_i_;
    int agent_j_;
    std::string context_;
};

/// Pairwise interaction potential
///
///     V(r) = attraction * ln(r^2) + repulsion / r^2,
///
/// singular at r = 0, radially unbounded, with a unique minimum at
/// r* = sqrt(repulsion / attraction). The default coefficients (5, 5) place
/// the preferred spacing at r* = 1. Construction verifies positivity of V on
/// a logarithmic sample grid over [1e-3, 1e3] and at r*, which rules out
/// coefficient choices whose minimum dips to zero or below.
class PotentialModel {
  public:
    PotentialModel() : PotentialModel(5.0, 5.0) {}

    PotentialModel(double attraction, double repulsion)
        : attraction_(attraction), repulsion_(repulsion) {
        if (!(attraction > 0.0) || !(repulsion > 0.0)) {
            throw std::invalid_argument("potential: coefficients must be positive");
        }
        check_positive_on_grid();
    }

    double attraction() const { return attraction_; }
    double repulsion() const { return repulsion_; }

  private:
    void check_positive_on_grid() const {
        // 20 samples per decade across [1e-3, 1e3], plus the minimum itself.
        const double r_star = std::sqrt(repulsion_ / attraction_);
        if (value_unchecked(r_star) <= 0.0) {
            throw std::invalid_argument(
                "potential: not positive at its minimum r=" + std::to_string(r_star));
        }
        for (int k = 0; k <= 120; ++k) {
            const double r = std::pow(10.0, -3.0 + k * 0.05);
            if (value_unchecked(r) <= 0.0) {
                throw std::invalid_argument(
                    "potential: not positive at sampled r=" + std::to_string(r));
            }
        }
    }

    double value_unchecked(double r) const {
        return attraction_ * std::log(r * r) + repulsion_ / (r * r);
    }

    friend double potential_value(const PotentialModel&, double, int, int);

    double attraction_;
    double repulsion_;
};

/// V(r) for a pairwise distance r. The optional agent pair is only used to
/// label a singularity error.
inline double potential_value(const PotentialModel& model, double r,
                              int agent_i = -1, int agent_j = -1) {
    if (!(r > kMinDistanceGuard)) {
        throw SingularityError(r, agent_i, agent_j);
    }
    return model.value_unchecked(r);
}

/// Radial derivative V'(r).
inline double potential_derivative(const PotentialModel& model, double r,
                                   int agent_i = -1, int agent_j = -1) {
    if (!(r > kMinDistanceGuard)) {
        throw SingularityError(r, agent_i, agent_j);
    }
    return 2.0 * model.attraction() / r - 2.0 * model.repulsion() / (r * r * r);
}

/// Scalar coefficient c(r) such that the gradient of V(|x|) with respect to
/// the first agent's position is c(r) * x, where x is the displacement toward
/// that agent. For this family c(r) = 2a/r^2 - 2b/r^4.
inline double potential_gradient_coefficient(const PotentialModel& model, double r,
                                             int agent_i = -1, int agent_j = -1) {
    if (!(r > kMinDistanceGuard)) {
        throw SingularityError(r, agent_i, agent_j);
    }
    const double r2 = r * r;
    return 2.0 * model.attraction() / r2 - 2.0 * model.repulsion() / (r2 * r2);
}

/// Gradient of V(|displacement|) with respect to the first agent's position.
/// Antisymmetric in the displacement: grad(-x) = -grad(x).
inline Eigen::VectorXd potential_gradient(const PotentialModel& model,
                                          const Eigen::VectorXd& displacement,
                                          int agent_i = -1, int agent_j = -1) {
    const double r = displacement.norm();
    return potential_gradient_coefficient(model, r, agent_i, agent_j) * displacement;
}

/// Distance of the unique potential minimum, located by bisection on V' over
/// an expanding bracket. Tolerance 1e-10. For this family the result is
/// sqrt(repulsion / attraction); the bisection is the generic path so that the
/// same code serves rescaled coefficient choices.
inline double equilibrium_distance(const PotentialModel& model) {
    double lo = kMinDistanceGuard;
    double hi = 1.0;
    // V' < 0 near the singularity; expand until the derivative turns positive.
    while (potential_derivative(model, hi) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e12) {
            throw std::invalid_argument("potential: derivative never changes sign; "
                                        "no interior minimum found");
        }
    }
    if (potential_derivative(model, lo) >= 0.0) {
        throw std::invalid_argument("potential: derivative not negative at the guard; "
                                    "no interior minimum found");
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (potential_derivative(model, mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Sum of pairwise potentials between agent `i` and its neighbors. Zero for an
/// isolated agent. A singularity error names the offending pair.
inline double total_potential(int i, const std::vector<Eigen::VectorXd>& positions,
                              const NeighborGraph& graph, const PotentialModel& model) {
    double sum = 0.0;
    for (const auto& [j, w] : graph.neighbors[i]) {
        (void)w;
        const double r = (positions[i] - positions[j]).norm();
        sum += potential_value(model, r, i, j);
    }
    return sum;
}

} // namespace flocksim
