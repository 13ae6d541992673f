#pragma once

#include "rsd/common.hpp"

#include <optional>

namespace rsd::detail {

/// Dense two-phase tableau simplex:
///   maximize c^T z   subject to   G z <= h,  z >= 0.
/// Returns (optimum, argmax) when bounded and feasible, nullopt when
/// infeasible; throws on an unbounded objective. Bland's rule throughout,
/// so termination is guaranteed. Intended for the small systems this
/// toolkit produces (tens of rows).
inline std::optional<std::pair<double, Vector>> simplex_maximize(const Matrix& G, const Vector& h,
                                                                 const Vector& c) {
    const int m = static_cast<int>(G.rows());
    const int n = static_cast<int>(G.cols());
    if (h.size() != m || c.size() != n)
        throw std::invalid_argument("simplex_maximize: dimension mismatch");

    // Column layout: n structural, m slack/surplus, then artificials.
    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (h(i) < 0.0) ++n_art;
    const int cols = n + m + n_art;

    Matrix T = Matrix::Zero(m, cols);
    Vector rhs(m);
    std::vector<int> basis(m);
    int art = n + m;
    for (int i = 0; i < m; ++i) {
        if (h(i) >= 0.0) {
            T.row(i).head(n) = G.row(i);
            T(i, n + i) = 1.0;  // slack
            rhs(i) = h(i);
            basis[i] = n + i;
        } else {
            T.row(i).head(n) = -G.row(i);
            T(i, n + i) = -1.0;  // surplus
            T(i, art) = 1.0;
            rhs(i) = -h(i);
            basis[i] = art++;
        }
    }

    const double eps = 1e-11;
    auto pivot = [&](int pr, int pc) {
        const double pv = T(pr, pc);
        T.row(pr) /= pv;
        rhs(pr) /= pv;
        for (int i = 0; i < m; ++i) {
            if (i == pr) continue;
            const double f = T(i, pc);
            if (f == 0.0) continue;
            T.row(i) -= f * T.row(pr);
            rhs(i) -= f * rhs(pr);
        }
        basis[pr] = pc;
    };

    // Runs the simplex loop for a given objective row (maximization).
    auto optimize = [&](Vector obj, int active_cols) -> double {
        double shift = 0.0;
        // Price out the basic variables.
        for (int i = 0; i < m; ++i) {
            const double cb = basis[i] < obj.size() ? obj(basis[i]) : 0.0;
            if (cb != 0.0) {
                obj.head(active_cols) -= cb * T.row(i).head(active_cols).transpose();
                shift += cb * rhs(i);
            }
        }
        while (true) {
            int pc = -1;
            for (int j = 0; j < active_cols; ++j)
                if (obj(j) > eps) {
                    pc = j;  // Bland: first improving column
                    break;
                }
            if (pc < 0) break;
            int pr = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                if (T(i, pc) > eps) {
                    const double ratio = rhs(i) / T(i, pc);
                    if (pr < 0 || ratio < best - eps ||
                        (ratio < best + eps && basis[i] < basis[pr])) {
                        pr = i;
                        best = ratio;
                    }
                }
            }
            if (pr < 0) throw std::runtime_error("simplex_maximize: unbounded objective");
            const double reduced = obj(pc);
            pivot(pr, pc);
            obj.head(active_cols) -= reduced * T.row(pr).head(active_cols).transpose();
            shift += reduced * rhs(pr);
        }
        return shift;
    };

    if (n_art > 0) {
        Vector phase1 = Vector::Zero(cols);
        for (int j = n + m; j < cols; ++j) phase1(j) = -1.0;
        const double p1 = optimize(phase1, cols);
        if (p1 < -1e-8) return std::nullopt;  // infeasible
        // Drive any residual artificial out of the basis.
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n + m) continue;
            int pc = -1;
            for (int j = 0; j < n + m; ++j)
                if (std::abs(T(i, j)) > eps) {
                    pc = j;
                    break;
                }
            if (pc >= 0) pivot(i, pc);
        }
    }

    Vector phase2 = Vector::Zero(cols);
    phase2.head(n) = c;
    const double opt = optimize(phase2, n + m);

    Vector z = Vector::Zero(n);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) z(basis[i]) = rhs(i);
    return std::make_pair(opt, z);
}

}  // namespace rsd::detail
