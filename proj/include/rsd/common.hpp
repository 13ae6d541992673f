#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Outcome of a certification attempt. Stability verdicts concern the
/// equilibrium x = 0; recurrence verdicts concern the joint process.
enum class Verdict {
    AsymptoticallyStableInProbability,
    UnstableInProbability,
    PositiveRecurrent,
    Recurrent,
    Transient,
    Inconclusive,
};

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::AsymptoticallyStableInProbability: return "AsymptoticallyStableInProbability";
    case Verdict::UnstableInProbability: return "UnstableInProbability";
    case Verdict::PositiveRecurrent: return "PositiveRecurrent";
    case Verdict::Recurrent: return "Recurrent";
    case Verdict::Transient: return "Transient";
    case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

/// Numeric tolerances used across the toolkit. All defaults are the
/// documented contract values; the CLI exposes them as --tol-* flags.
struct Tolerances {
    double row_sum = 1e-12;
    double fredholm_residual = 1e-9;
    double stationary_residual = 1e-10;
    double detailed_balance = 1e-10;
    double eigen_residual = 1e-8;
    double lp_accept = 1e-9;
    double positivity_floor = 1e-6;  // liminf g proxy on truncations
};

namespace detail {

/// Strong connectivity of the directed graph {(i,j): adj(i,j) > 0, i != j}.
inline bool strongly_connected(const Matrix& adj) {
    const int n = static_cast<int>(adj.rows());
    if (n <= 1) return true;
    auto reach_all = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < n; ++j) {
                if (j == i || seen[j]) continue;
                const double r = transpose ? adj(j, i) : adj(i, j);
                if (r > 0.0) {
                    seen[j] = 1;
                    ++count;
                    stack.push_back(j);
                }
            }
        }
        return count == n;
    };
    return reach_all(false) && reach_all(true);
}

}  // namespace detail

/// Deterministic grid on the unit sphere S^{d-1}. d = 1 is exactly
/// {-1, +1}; d = 2 uses 720 uniform angles; d >= 3 a Fibonacci lattice
/// (generalized spiral for d = 3, rejection onto the sphere is avoided by
/// the standard golden-angle construction; higher d falls back to a
/// normalized Halton-free deterministic lattice via golden-ratio rotation).
inline std::vector<Vector> unit_sphere_grid(int d, int points_hint = 0) {
    if (d < 1) throw std::invalid_argument("unit_sphere_grid: d must be >= 1");
    std::vector<Vector> grid;
    if (d == 1) {
        Vector minus(1), plus(1);
        minus << -1.0;
        plus << 1.0;
        grid.push_back(minus);
        grid.push_back(plus);
        return grid;
    }
    if (d == 2) {
        const int n = points_hint > 0 ? points_hint : 720;
        grid.reserve(n);
        for (int k = 0; k < n; ++k) {
            const double th = 2.0 * std::numbers::pi * k / n;
            Vector v(2);
            v << std::cos(th), std::sin(th);
            grid.push_back(v);
        }
        return grid;
    }
    const int n = points_hint > 0 ? points_hint : 10000;
    grid.reserve(n);
    if (d == 3) {
        const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < n; ++k) {
            const double z = 1.0 - 2.0 * (k + 0.5) / n;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = ga * k;
            Vector v(3);
            v << r * std::cos(th), r * std::sin(th), z;
            grid.push_back(v);
        }
        return grid;
    }
    // d > 3: deterministic low-discrepancy directions from the Kronecker
    // sequence mapped through the inverse normal CDF, then normalized.
    auto inv_norm = [](double u) {
        // Acklam's rational approximation; adequate for grid generation.
        static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
        static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
        static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
        static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
        const double plow = 0.02425, phigh = 1 - plow;
        double q, r;
        if (u < plow) {
            q = std::sqrt(-2 * std::log(u));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
        }
        if (u > phigh) {
            q = std::sqrt(-2 * std::log(1 - u));
            return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
        }
        q = u - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    };
    // Generalized golden ratios as irrational step sizes per coordinate.
    std::vector<double> alpha(d);
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
    for (int k = 0; k < d; ++k) alpha[k] = std::fmod(std::pow(1.0 / phi, k + 1), 1.0);
    for (int k = 0; k < n; ++k) {
        Vector v(d);
        for (int c = 0; c < d; ++c) {
            double u = std::fmod(0.5 + alpha[c] * (k + 1), 1.0);
            u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
            v(c) = inv_norm(u);
        }
        const double nrm = v.norm();
        if (nrm < 1e-12) continue;
        grid.push_back(v / nrm);
    }
    return grid;
}

}  // namespace rsd
