// Test-only reference implementations, kept independent of the library code
// they check: characteristic-polynomial spectra, polynomial root isolation,
// and finite-difference derivatives.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

/// Characteristic polynomial det(xI - A) of a square matrix via the
/// Faddeev-LeVerrier recurrence. Coefficients ascending: c[0] + c[1] x + ...,
/// with c[n] = 1.
inline std::vector<double> characteristic_polynomial(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<double> coeffs(n + 1, 0.0);
    coeffs[n] = 1.0;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    double c = 1.0;
    for (int k = 1; k <= n; ++k) {
        m = a * m + c * Eigen::MatrixXd::Identity(n, n);
        c = -(a * m).trace() / k;
        coeffs[n - k] = c;
    }
    return coeffs;
}

inline double poly_eval(const std::vector<double>& coeffs, double x) {
    double v = 0.0;
    for (size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
    return v;
}

/// Magnitude envelope sum |c_k| |x|^k, used for scale-aware zero tests.
inline double poly_envelope(const std::vector<double>& coeffs, double x) {
    double v = 0.0;
    const double ax = std::abs(x);
    for (size_t k = coeffs.size(); k-- > 0;) v = v * ax + std::abs(coeffs[k]);
    return v;
}

inline std::vector<double> poly_derivative(const std::vector<double>& coeffs) {
    std::vector<double> d;
    for (size_t k = 1; k < coeffs.size(); ++k) d.push_back(coeffs[k] * static_cast<double>(k));
    return d;
}

/// All real roots of a polynomial whose roots are known to be real (e.g. the
/// characteristic polynomial of a symmetric matrix), with multiplicity,
/// ascending. Classic interleaving construction: critical points from the
/// derivative partition the line into monotone pieces, each holding at most
/// one simple root; a near-zero value at a critical point is a multiple root.
inline std::vector<double> real_roots_all_real(const std::vector<double>& coeffs) {
    std::vector<double> c = coeffs;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    const int deg = static_cast<int>(c.size()) - 1;
    if (deg <= 0) return {};
    if (deg == 1) return {-c[0] / c[1]};

    const std::vector<double> crit_raw = real_roots_all_real(poly_derivative(c));

    double bound = 0.0;
    for (int k = 0; k < deg; ++k) bound = std::max(bound, std::abs(c[k] / c[deg]));
    bound += 1.0;

    // Cluster duplicate critical points and count their multiplicities in p'.
    std::vector<std::pair<double, int>> crits;
    for (const double x : crit_raw) {
        if (!crits.empty() && std::abs(x - crits.back().first) <= 1e-9 * (1.0 + std::abs(x))) {
            crits.back().second += 1;
        } else {
            crits.emplace_back(x, 1);
        }
    }

    const auto near_zero = [&](double x) {
        return std::abs(poly_eval(c, x)) <= 1e-9 * (1.0 + poly_envelope(c, x));
    };

    std::vector<double> roots;
    std::vector<double> boundaries{-bound};
    for (const auto& [x, mult] : crits) {
        if (near_zero(x)) {
            // Multiplicity m in p' means multiplicity m + 1 in p.
            for (int k = 0; k <= mult; ++k) roots.push_back(x);
        }
        boundaries.push_back(x);
    }
    boundaries.push_back(bound);

    const auto bisect = [&](double lo, double hi) {
        double flo = poly_eval(c, lo);
        for (int iter = 0; iter < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++iter) {
            const double mid = 0.5 * (lo + hi);
            const double fmid = poly_eval(c, mid);
            if ((flo < 0.0) == (fmid < 0.0)) {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    for (size_t k = 0; k + 1 < boundaries.size(); ++k) {
        double lo = boundaries[k];
        double hi = boundaries[k + 1];
        // Nudge off boundary roots so they are not double-counted.
        const double width = hi - lo;
        if (near_zero(lo)) lo += std::max(1e-12, 1e-6 * width);
        if (near_zero(hi)) hi -= std::max(1e-12, 1e-6 * width);
        if (lo >= hi) continue;
        const double flo = poly_eval(c, lo);
        const double fhi = poly_eval(c, hi);
        if ((flo < 0.0) != (fhi < 0.0)) {
            roots.push_back(bisect(lo, hi));
        }
    }

    std::sort(roots.begin(), roots.end());
    if (static_cast<int>(roots.size()) != deg) {
        throw std::runtime_error("root isolation lost roots: expected " + std::to_string(deg) +
                                 ", found " + std::to_string(roots.size()));
    }
    return roots;
}

/// Eigenvalues of a symmetric matrix via the characteristic polynomial and
/// real-root isolation, ascending with multiplicity. Brute force on purpose:
/// shares nothing with a QR-style eigensolver.
inline std::vector<double> brute_force_symmetric_spectrum(const Eigen::MatrixXd& a) {
    return real_roots_all_real(characteristic_polynomial(a));
}

/// Componentwise central difference of a scalar field.
inline Eigen::VectorXd central_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double step) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd hi = x, lo = x;
        hi(k) += step;
        lo(k) -= step;
        g(k) = (f(hi) - f(lo)) / (2.0 * step);
    }
    return g;
}

/// Centered difference with one Richardson extrapolation step: O(h^4) estimate
/// of df/dt from values at t +/- h and t +/- h/2.
inline double richardson_derivative(double f_minus_h, double f_plus_h, double f_minus_half,
                                    double f_plus_half, double h) {
    const double coarse = (f_plus_h - f_minus_h) / (2.0 * h);
    const double fine = (f_plus_half - f_minus_half) / h;
    return (4.0 * fine - coarse) / 3.0;
}

} // namespace oracles
