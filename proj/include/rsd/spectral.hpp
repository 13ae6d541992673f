#pragma once

#include "rsd/chain.hpp"
#include "rsd/common.hpp"
#include "rsd/scenario.hpp"
#include "rsd/verdict.hpp"

#include <optional>

namespace rsd {

/// Omega f(i) = sum_{j != i} q_{ij}(f_j - f_i) + gamma_i f_i, as a dense
/// matrix Q + diag(gamma). Self-adjoint in L^2(pi) when Q is
/// pi-reversible.
struct OmegaOperator {
    Matrix Q;
    Vector gamma;

    Matrix matrix() const { return Q + Matrix(gamma.asDiagonal()); }
    Vector apply(const Vector& f) const { return Q * f + gamma.cwiseProduct(f); }
};

/// E(f) = 1/2 sum_{i,j} pi_i q_{ij}(f_j - f_i)^2 - sum_i pi_i gamma_i f_i^2.
/// May be negative: gamma can act as creation rather than killing.
inline double bilinear_form(const Vector& f, const Vector& pi, const Matrix& Q,
                            const Vector& gamma) {
    const int n = static_cast<int>(Q.rows());
    if (f.size() != n || pi.size() != n || gamma.size() != n)
        throw std::invalid_argument("bilinear_form: length mismatch");
    double dirichlet = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double df = f(j) - f(i);
            dirichlet += pi(i) * Q(i, j) * df * df;
        }
    double killing = 0.0;
    for (int i = 0; i < n; ++i) killing += pi(i) * gamma(i) * f(i) * f(i);
    return 0.5 * dirichlet - killing;
}

namespace detail {

/// sqrt(pi)-similarity transform of -Omega; symmetric iff Q is
/// pi-reversible.
inline Matrix symmetrized_negative_omega(const Vector& pi, const Matrix& Q, const Vector& gamma) {
    const int n = static_cast<int>(Q.rows());
    Matrix S(n, n);
    const Matrix neg = -(Q + Matrix(gamma.asDiagonal()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            S(i, j) = std::sqrt(pi(i) / pi(j)) * neg(i, j);
    return 0.5 * (S + S.transpose());  // kill roundoff asymmetry
}

}  // namespace detail

/// Minimal eigenvalue of -Omega in L^2(pi) with its eigenfunction,
/// normalized to ||g||_pi = 1, sign-flipped so the pi-weighted sum is
/// positive, and asserted strictly positive (guaranteed by
/// irreducibility).
inline EigenCertificate principal_eigenvalue_finite(const Vector& pi, const Matrix& Q,
                                                    const Vector& gamma,
                                                    const Tolerances& tol = {}) {
    const int n = static_cast<int>(Q.rows());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(pi(i) * Q(i, j) - pi(j) * Q(j, i)) > 1e-8)
                throw std::invalid_argument(
                    "principal_eigenvalue_finite: Q is not reversible w.r.t. pi");

    const Matrix S = detail::symmetrized_negative_omega(pi, Q, gamma);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("principal_eigenvalue_finite: eigensolver failed");

    EigenCertificate cert;
    cert.kind = EigenKind::ExactFinite;
    cert.lambda0 = solver.eigenvalues()(0);
    Vector v = solver.eigenvectors().col(0);
    Vector g = v.array() / pi.array().sqrt();
    if (pi.dot(g) < 0.0) g = -g;
    g /= std::sqrt(g.cwiseProduct(g).dot(pi));  // ||g||_pi = 1
    if (g.minCoeff() <= 1e-12)
        throw std::runtime_error(
            "principal_eigenvalue_finite: eigenfunction not strictly positive (contract "
            "violation)");
    cert.g = g;
    const OmegaOperator omega{Q, gamma};
    cert.residual = (omega.apply(cert.g) + cert.lambda0 * cert.g).lpNorm<Eigen::Infinity>();
    if (cert.residual > tol.eigen_residual)
        throw std::runtime_error("principal_eigenvalue_finite: residual exceeds tolerance");
    return cert;
}

/// Lower bound lambda = min_i (-Omega g)_i / g_i from a strictly positive
/// test function g on a truncation whose boundary row is already
/// reflected. The last-index ratio is kept separately as a tail
/// diagnostic.
inline EigenCertificate test_function_bound(const Vector& g, const Matrix& Q, const Vector& gamma,
                                            int truncation) {
    const int n = static_cast<int>(Q.rows());
    if (g.size() != n || gamma.size() != n)
        throw std::invalid_argument("test_function_bound: length mismatch");
    if (g.minCoeff() <= 0.0)
        throw std::invalid_argument("test_function_bound: g must be strictly positive");

    const OmegaOperator omega{Q, gamma};
    const Vector ratios = (-omega.apply(g)).cwiseQuotient(g);
    EigenCertificate cert;
    cert.kind = EigenKind::TestFunctionBound;
    cert.lambda0 = ratios.minCoeff();
    cert.g = g;
    cert.tail_ratio = ratios(n - 1);
    cert.truncation = truncation;
    return cert;
}

/// Localized eigenvalue lambda_{nm}: minimal eigenvalue of the local form
/// on G_{nm} = { i : g_i >= 1/m, |gamma_i| v q_i <= n }, with the exit
/// mass q_i - q(i, G_{nm}) acting as killing. Decreases toward lambda0 as
/// the set grows; equals lambda0 on the full space.
inline double localized_eigenvalue(const Matrix& Q, const Vector& gamma, const Vector& g_reference,
                                   double n_cap, double m_cap, const Tolerances& tol = {}) {
    const int n = static_cast<int>(Q.rows());
    const auto pi_opt = reversing_measure(Q, tol);
    if (!pi_opt)
        throw std::invalid_argument("localized_eigenvalue: Q is not reversible");
    const Vector& pi = *pi_opt;

    std::vector<int> G;
    for (int i = 0; i < n; ++i) {
        const double qi = -Q(i, i);
        if (g_reference(i) >= 1.0 / m_cap && std::max(std::abs(gamma(i)), qi) <= n_cap)
            G.push_back(i);
    }
    if (G.empty()) throw std::invalid_argument("localized_eigenvalue: empty localization set");

    const int k = static_cast<int>(G.size());
    Matrix M = Matrix::Zero(k, k);  // local -Omega with exit killing
    for (int a = 0; a < k; ++a) {
        const int i = G[a];
        double q_in_G = 0.0;
        for (int b = 0; b < k; ++b) {
            const int j = G[b];
            if (j == i) continue;
            M(a, b) = -Q(i, j);
            q_in_G += Q(i, j);
        }
        const double qi = -Q(i, i);
        // diagonal: Dirichlet part q(i,G) plus killing (q_i - q(i,G))
        // minus gamma, i.e. q_i - gamma_i.
        M(a, a) = qi - gamma(i);
        (void)q_in_G;
    }
    Matrix S(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) S(a, b) = std::sqrt(pi(G[a]) / pi(G[b])) * M(a, b);
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("localized_eigenvalue: eigensolver failed");
    return solver.eigenvalues()(0);
}

/// Both sides of the variational inequality: (E(f), <f^2/g, -Omega g>_pi).
/// The first dominates the second for f >= 0, g strictly positive, with
/// equality at g = f >> 0.
inline std::pair<double, double> variational_check(const Vector& f, const Vector& g,
                                                   const Vector& pi, const Matrix& Q,
                                                   const Vector& gamma) {
    if (g.minCoeff() <= 0.0)
        throw std::invalid_argument("variational_check: g must be strictly positive");
    const OmegaOperator omega{Q, gamma};
    const Vector neg = -omega.apply(g);
    const Vector ratio = f.cwiseProduct(f).cwiseQuotient(g);
    return {bilinear_form(f, pi, Q, gamma), pi.cwiseProduct(ratio).dot(neg)};
}

/// Spectral stability verdict: lambda0 > 0 turns the behavior of rho at 0
/// into the verdict; the countable case carries the attained-infimum and
/// liminf-g hypotheses as recorded assumptions.
inline VerdictResult verdict_spectral_stability(const EigenCertificate& cert,
                                                const TestFunctionSpec& rho,
                                                const RegimeSpace& regimes,
                                                const Tolerances& tol = {}) {
    VerdictResult out;
    out.theorem = regimes.truncated() ? "thm_3_2" : "thm_3_1";
    out.weighted_beta = cert.lambda0;
    out.certificate = cert;
    if (!(cert.lambda0 > 0.0)) {
        out.notes.push_back("lambda0 <= 0: spectral criterion not applicable");
        return out;
    }
    if (rho.at_zero == TestFunctionSpec::AtZero::BlowsUpAtZero) {
        out.verdict = Verdict::UnstableInProbability;
    } else {
        if (regimes.truncated()) {
            if (cert.g.minCoeff() < tol.positivity_floor) {
                out.notes.push_back(
                    "min g on the truncation is below the configured floor; liminf g != 0 "
                    "cannot be asserted");
                return out;
            }
            out.notes.push_back(
                "countable case: liminf_i g_i != 0 checked on the truncation only "
                "(user assertion); lambda0 attainability assumed");
        }
        out.verdict = Verdict::AsymptoticallyStableInProbability;
    }
    if (regimes.truncated())
        out.notes.push_back("result holds on the truncated model (N_trunc = " +
                            std::to_string(regimes.count) + ")");
    return out;
}

/// Spectral recurrence verdict from A4-mode rates: lambda > 0 with rho
/// blowing up at infinity gives positive recurrence (finite regimes) or
/// recurrence (countable); with rho vanishing at infinity, transience.
inline VerdictResult verdict_spectral_recurrence(const EigenCertificate& cert,
                                                 const TestFunctionSpec& rho,
                                                 const RegimeSpace& regimes,
                                                 const Tolerances& tol = {}) {
    VerdictResult out;
    out.theorem = regimes.truncated() ? "thm_4_2" : "thm_4_1";
    out.weighted_beta = cert.lambda0;
    out.certificate = cert;
    if (!(cert.lambda0 > 0.0)) {
        out.notes.push_back("lambda <= 0: spectral criterion not applicable");
        return out;
    }
    if (rho.at_infinity == TestFunctionSpec::AtInfinity::BlowsUpAtInfinity) {
        if (regimes.truncated()) {
            if (cert.g.minCoeff() < tol.positivity_floor) {
                out.notes.push_back("min g below floor; liminf g != 0 cannot be asserted");
                return out;
            }
            out.verdict = Verdict::Recurrent;
            out.notes.push_back(
                "countable case: liminf_i g_i != 0 checked on the truncation only "
                "(user assertion)");
        } else {
            out.verdict = Verdict::PositiveRecurrent;
        }
    } else if (rho.at_infinity == TestFunctionSpec::AtInfinity::VanishesAtInfinity) {
        out.verdict = Verdict::Transient;
    } else {
        out.notes.push_back("rho has unspecified behavior at infinity");
    }
    if (cert.kind == EigenKind::TestFunctionBound)
        out.notes.push_back("lambda is a test-function lower bound on the truncation; "
                            "tail ratio " + std::to_string(cert.tail_ratio));
    return out;
}

}  // namespace rsd
