#pragma once

#include "rsd/common.hpp"
#include "rsd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace rsd {

/// mu with mu Q = 0, sum mu = 1, for a constant irreducible conservative
/// generator. Solved as the least-squares system [Q^T; 1^T] mu = [0; 1].
inline Vector stationary_distribution(const Matrix& Q, const Tolerances& tol = {}) {
    const int n = static_cast<int>(Q.rows());
    if (n < 2) throw std::invalid_argument("stationary_distribution: need N >= 2");
    if (Q.cols() != n) throw std::invalid_argument("stationary_distribution: Q must be square");
    if (!detail::strongly_connected(Q))
        throw std::invalid_argument("stationary_distribution: Q is reducible");

    Matrix A(n + 1, n);
    A.topRows(n) = Q.transpose();
    A.bottomRows(1).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    Vector mu = A.colPivHouseholderQr().solve(rhs);
    mu = mu.cwiseMax(0.0);
    mu /= mu.sum();

    const double residual = (mu.transpose() * Q).lpNorm<Eigen::Infinity>();
    if (residual > tol.stationary_residual)
        throw std::runtime_error("stationary_distribution: residual " + std::to_string(residual) +
                                 " exceeds tolerance");
    return mu;
}

/// Reversing measure pi with pi_i q_{ij} = pi_j q_{ji}, or nullopt when Q
/// is not reversible. Tridiagonal generators use the detailed-balance
/// recursion pi_{i+1} = pi_i q_{i,i+1}/q_{i+1,i}; general generators are
/// checked against the stationary distribution.
inline std::optional<Vector> reversing_measure(const Matrix& Q, const Tolerances& tol = {}) {
    const int n = static_cast<int>(Q.rows());
    if (n < 2 || Q.cols() != n) throw std::invalid_argument("reversing_measure: bad Q");

    bool tridiagonal = true;
    for (int i = 0; i < n && tridiagonal; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(i - j) > 1 && Q(i, j) != 0.0) {
                tridiagonal = false;
                break;
            }

    Vector pi(n);
    if (tridiagonal) {
        // Log-space recursion: fast-decaying rate sequences drive pi below
        // the double range long before the truncation ends, and that tail
        // mass is genuinely negligible rather than a reversibility defect.
        std::vector<double> log_pi(n, 0.0);
        for (int i = 0; i + 1 < n; ++i) {
            const double birth = Q(i, i + 1), death = Q(i + 1, i);
            if (birth <= 0.0 || death <= 0.0) return std::nullopt;  // one-way or missing edge
            log_pi[i + 1] = log_pi[i] + std::log(birth) - std::log(death);
        }
        const double lmax = *std::max_element(log_pi.begin(), log_pi.end());
        for (int i = 0; i < n; ++i) pi(i) = std::exp(log_pi[i] - lmax);
        pi /= pi.sum();
    } else {
        pi = stationary_distribution(Q, tol);
    }

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(pi(i) * Q(i, j) - pi(j) * Q(j, i)) > tol.detailed_balance)
                return std::nullopt;
    return pi;
}

/// The half-open intervals Delta_{ij}(x) of the Poisson-driven switching
/// construction, laid out consecutively from 0 in lexicographic target
/// order. Interval lengths equal the off-diagonal rates; targets with
/// zero rate are omitted.
struct IntervalTable {
    struct Entry {
        int target;
        double left, right;
    };
    std::vector<Entry> entries;
    double total = 0.0;  // q_i(x)

    /// h(x,i,z) target lookup: the entry whose interval contains z.
    std::optional<int> target_for(double z) const {
        for (const auto& e : entries)
            if (z >= e.left && z < e.right) return e.target;
        return std::nullopt;
    }
};

inline IntervalTable poisson_intervals(const SwitchingGenerator& gen, const Vector& x, int i) {
    IntervalTable table;
    double acc = 0.0;
    for (int j = 0; j < gen.num_regimes; ++j) {
        if (j == i) continue;
        const double q = gen.entries(x, i, j);
        if (q < 0.0)
            throw std::runtime_error("poisson_intervals: negative rate q(" + std::to_string(i) +
                                     "," + std::to_string(j) + ")");
        if (q > 0.0) {
            table.entries.push_back({j, acc, acc + q});
            acc += q;
        }
    }
    table.total = acc;
    return table;
}

/// Maps a uniform(0, q_i(x)) variate to the regime whose interval
/// contains it; the induced law over targets is q_{ij}(x)/q_i(x).
inline int sample_next_regime(const SwitchingGenerator& gen, const Vector& x, int i, double u) {
    const IntervalTable table = poisson_intervals(gen, x, i);
    if (table.total <= 0.0)
        throw std::invalid_argument("sample_next_regime: zero total rate from regime " +
                                    std::to_string(i));
    if (u < 0.0 || u >= table.total)
        throw std::invalid_argument("sample_next_regime: variate outside [0, q_i(x))");
    const auto j = table.target_for(u);
    if (!j) throw std::logic_error("sample_next_regime: interval table gap");
    return *j;
}

/// Dense generator of a countable chain on the truncation {0..n-1} with
/// reflecting boundary: the exit mass q_{n-1,n} is dropped and the
/// diagonal rebalanced, keeping rows conservative.
inline Matrix truncated_generator(const SwitchingGenerator& gen, int n,
                                  const Vector& x = Vector::Zero(1)) {
    Matrix Q = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double q = gen.entries(x, i, j);
            Q(i, j) = q;
            s += q;
        }
        Q(i, i) = -s;
    }
    return Q;
}

}  // namespace rsd
