#pragma once

#include "rsd/common.hpp"

#include <variant>

namespace rsd {

/// Witness of the averaged criterion: c = -sum mu_i beta_i > 0 and xi
/// solving Q xi = -c 1 - beta (solvable since the right side has zero
/// mu-mean), pinned by xi_{N-1} = 0.
struct FredholmCertificate {
    double c = 0.0;
    Vector xi;
    double residual = 0.0;  // ||Q xi + c 1 + beta||_inf
};

enum class MMatrixMode { ZMatrixLeadingMinors, Semipositivity, LeadingMinorsOnly };

inline std::string to_string(MMatrixMode m) {
    switch (m) {
    case MMatrixMode::ZMatrixLeadingMinors: return "z_matrix_leading_minors";
    case MMatrixMode::Semipositivity: return "semipositivity";
    case MMatrixMode::LeadingMinorsOnly: return "leading_minors_only";
    }
    return "semipositivity";
}

struct MMatrixCertificate {
    Matrix A;
    MMatrixMode mode = MMatrixMode::Semipositivity;
    bool accepted = false;
    Vector witness;                      // eta >> 0 with A eta >> 0 (semipositivity)
    std::vector<double> leading_minors;  // minor modes
    double lp_optimum = 0.0;             // attained t (semipositivity)
};

enum class EigenKind { ExactFinite, TestFunctionBound, LocalizedSequence };

inline std::string to_string(EigenKind k) {
    switch (k) {
    case EigenKind::ExactFinite: return "exact_finite";
    case EigenKind::TestFunctionBound: return "test_function_bound";
    case EigenKind::LocalizedSequence: return "localized_sequence";
    }
    return "exact_finite";
}

/// lambda0 together with its witness: the exact eigenfunction on a finite
/// space, or a strictly positive test function whose ratio bounds lambda0
/// from below on the truncation.
struct EigenCertificate {
    double lambda0 = 0.0;
    Vector g;
    EigenKind kind = EigenKind::ExactFinite;
    double residual = 0.0;    // ||Omega g + lambda0 g||_inf (exact case)
    double tail_ratio = 0.0;  // last-index ratio (bound case, truncation diagnostic)
    int truncation = 0;       // 0 = genuinely finite space
};

/// A verdict together with the concrete witness behind it.
struct VerdictResult {
    Verdict verdict = Verdict::Inconclusive;
    std::string theorem;
    std::variant<std::monostate, FredholmCertificate, MMatrixCertificate, EigenCertificate>
        certificate;
    std::vector<std::string> notes;
    double weighted_beta = 0.0;  // sum mu_i beta_i, or lambda, where meaningful
};

}  // namespace rsd
