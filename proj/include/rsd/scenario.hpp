#pragma once

#include "rsd/common.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

namespace rsd {

/// Regime index set of the switching chain. Indices are 0-based
/// internally. A countable space is handled on the truncation
/// {0, ..., count-1}; every result produced on such a space is an
/// approximation "on the truncation" and is labeled accordingly by the
/// reporting layer.
struct RegimeSpace {
    enum class Kind { Finite, CountableTruncated };
    Kind kind = Kind::Finite;
    int count = 2;  // N, or N_trunc for a truncated countable space

    static RegimeSpace finite(int n) {
        if (n < 2) throw std::invalid_argument("RegimeSpace: need at least 2 regimes");
        return {Kind::Finite, n};
    }
    static RegimeSpace countable_truncated(int n_trunc) {
        if (n_trunc < 2) throw std::invalid_argument("RegimeSpace: need at least 2 regimes");
        return {Kind::CountableTruncated, n_trunc};
    }
    bool truncated() const { return kind == Kind::CountableTruncated; }
};

/// q_{ij}(x) evaluator. Off-diagonal entries come from `entries`; the
/// diagonal is derived so each row sums to zero (conservative chain).
struct SwitchingGenerator {
    std::function<double(const Vector&, int, int)> entries;  // i != j
    bool state_dependent = false;
    int num_regimes = 0;

    double rate(const Vector& x, int i, int j) const {
        if (i == j) return -total_rate(x, i);
        return entries(x, i, j);
    }

    /// Total exit rate q_i(x).
    double total_rate(const Vector& x, int i) const {
        double s = 0.0;
        for (int j = 0; j < num_regimes; ++j)
            if (j != i) s += entries(x, i, j);
        return s;
    }

    Matrix matrix_at(const Vector& x) const {
        Matrix Q = Matrix::Zero(num_regimes, num_regimes);
        for (int i = 0; i < num_regimes; ++i) {
            double s = 0.0;
            for (int j = 0; j < num_regimes; ++j) {
                if (j == i) continue;
                const double q = entries(x, i, j);
                Q(i, j) = q;
                s += q;
            }
            Q(i, i) = -s;
        }
        return Q;
    }

    static SwitchingGenerator constant(Matrix Q) {
        const int n = static_cast<int>(Q.rows());
        if (Q.cols() != n) throw std::invalid_argument("SwitchingGenerator: Q must be square");
        SwitchingGenerator g;
        g.num_regimes = n;
        g.state_dependent = false;
        g.entries = [Q = std::move(Q)](const Vector&, int i, int j) { return Q(i, j); };
        return g;
    }

    /// Birth-death generator from rate sequences; entries outside the
    /// sub/super-diagonal are zero.
    static SwitchingGenerator birth_death(std::function<double(int)> birth,
                                          std::function<double(int)> death, int n) {
        SwitchingGenerator g;
        g.num_regimes = n;
        g.state_dependent = false;
        g.entries = [birth = std::move(birth), death = std::move(death), n](const Vector&, int i,
                                                                            int j) {
            if (j == i + 1 && j < n) return birth(i);
            if (j == i - 1 && j >= 0) return death(i);
            return 0.0;
        };
        return g;
    }
};

/// Full model of (X_t, Lambda_t): dimension, per-regime drift b(x,i) and
/// diffusion coefficient sigma(x,i), and the switching generator.
struct ScenarioModel {
    int dimension = 1;
    RegimeSpace regimes;
    std::function<Vector(const Vector&, int)> drift;
    std::function<Matrix(const Vector&, int)> diffusion;
    SwitchingGenerator generator;

    /// a(x,i) = sigma sigma^*.
    Matrix diffusion_matrix(const Vector& x, int i) const {
        const Matrix s = diffusion(x, i);
        return s * s.transpose();
    }

    /// Checks the equilibrium conditions b(0,i) = 0, sigma(0,i) = 0 for
    /// every regime. Returns the first offending regime, if any.
    std::optional<int> equilibrium_violation(double tol = 1e-12) const {
        const Vector zero = Vector::Zero(dimension);
        for (int i = 0; i < regimes.count; ++i) {
            if (drift(zero, i).norm() > tol) return i;
            if (diffusion(zero, i).norm() > tol) return i;
        }
        return std::nullopt;
    }
};

/// Lyapunov test function rho with declared boundary behavior. The
/// PowerNorm family rho(x) = |x|^p covers every example in the toolkit;
/// custom functions supply value/gradient/Hessian evaluators.
struct TestFunctionSpec {
    enum class AtZero { VanishesOnlyAtZero, BlowsUpAtZero };
    enum class AtInfinity { BlowsUpAtInfinity, VanishesAtInfinity, Unspecified };

    bool is_power = true;
    double power = 1.0;
    std::function<double(const Vector&)> value_fn;
    std::function<Vector(const Vector&)> gradient_fn;
    std::function<Matrix(const Vector&)> hessian_fn;
    AtZero at_zero = AtZero::VanishesOnlyAtZero;
    AtInfinity at_infinity = AtInfinity::BlowsUpAtInfinity;

    static TestFunctionSpec power_norm(double p) {
        if (p == 0.0) throw std::invalid_argument("TestFunctionSpec: power must be nonzero");
        TestFunctionSpec t;
        t.is_power = true;
        t.power = p;
        t.at_zero = p > 0 ? AtZero::VanishesOnlyAtZero : AtZero::BlowsUpAtZero;
        t.at_infinity = p > 0 ? AtInfinity::BlowsUpAtInfinity : AtInfinity::VanishesAtInfinity;
        return t;
    }

    static TestFunctionSpec custom(std::function<double(const Vector&)> value,
                                   std::function<Vector(const Vector&)> gradient,
                                   std::function<Matrix(const Vector&)> hessian, AtZero z,
                                   AtInfinity inf) {
        TestFunctionSpec t;
        t.is_power = false;
        t.value_fn = std::move(value);
        t.gradient_fn = std::move(gradient);
        t.hessian_fn = std::move(hessian);
        t.at_zero = z;
        t.at_infinity = inf;
        return t;
    }

    double value(const Vector& x) const {
        if (is_power) return std::pow(x.norm(), power);
        return value_fn(x);
    }
};

enum class RateMode { A1, A2, A3, A4 };
enum class RateProvenance { Declared, NumericallyEstimated };

inline std::string to_string(RateMode m) {
    switch (m) {
    case RateMode::A1: return "A1";
    case RateMode::A2: return "A2";
    case RateMode::A3: return "A3";
    case RateMode::A4: return "A4";
    }
    return "A2";
}

/// Per-regime Lyapunov rates attached to a test function: beta_i (A1,
/// against a companion function h), beta_bar_i (A2), gamma_i (A3 near 0,
/// A4 near infinity).
struct RateVector {
    RateMode mode = RateMode::A2;
    Vector rates;
    std::pair<double, double> annulus{0.0, 0.0};  // (r_inner, r_outer)
    RateProvenance provenance = RateProvenance::Declared;
    /// Companion h of condition (A1); unset for other modes.
    std::optional<TestFunctionSpec> companion_h;

    static RateVector declared(RateMode mode, Vector rates,
                               std::pair<double, double> annulus = {0.0, 0.0}) {
        if ((mode == RateMode::A3 || mode == RateMode::A4) && rates.lpNorm<Eigen::Infinity>() == 0.0)
            throw std::invalid_argument("RateVector: gamma must not be identically zero in A3/A4");
        RateVector r;
        r.mode = mode;
        r.rates = std::move(rates);
        r.annulus = annulus;
        r.provenance = RateProvenance::Declared;
        return r;
    }
};

/// Per-point generator diagnostics plus the overall pass flag.
struct ValidationReport {
    struct PointReport {
        Vector x;
        double row_sum_defect = 0.0;  // max_i |sum_j q_{ij}(x)|
        std::vector<std::pair<int, int>> negative_entries;
        bool strongly_connected = true;
    };
    std::vector<PointReport> points;
    bool pass = true;
    std::string message;
};

/// Checks conservativeness (rows sum to zero), nonnegative off-diagonal
/// rates, and irreducibility of the rate graph at each sample point.
inline ValidationReport validate_generator(const SwitchingGenerator& gen,
                                           const std::vector<Vector>& sample_points,
                                           const Tolerances& tol = {}) {
    if (sample_points.empty())
        throw std::invalid_argument("validate_generator: sample_points must be nonempty");
    ValidationReport report;
    for (const Vector& x : sample_points) {
        ValidationReport::PointReport pr;
        pr.x = x;
        Matrix Q(gen.num_regimes, gen.num_regimes);
        for (int i = 0; i < gen.num_regimes; ++i) {
            for (int j = 0; j < gen.num_regimes; ++j) {
                if (i == j) continue;
                double q;
                try {
                    q = gen.entries(x, i, j);
                } catch (const std::exception& e) {
                    std::ostringstream os;
                    os << "generator evaluator failed at x=[" << x.transpose() << "], i=" << i
                       << ", j=" << j << ": " << e.what();
                    throw std::runtime_error(os.str());
                }
                Q(i, j) = q;
                if (q < 0.0) pr.negative_entries.emplace_back(i, j);
            }
        }
        for (int i = 0; i < gen.num_regimes; ++i) {
            double s = 0.0;
            for (int j = 0; j < gen.num_regimes; ++j)
                if (j != i) s += Q(i, j);
            Q(i, i) = -s;
            // Diagonal is derived, so the row-sum defect measures evaluator
            // self-consistency under recomputation.
            pr.row_sum_defect =
                std::max(pr.row_sum_defect, std::abs(Q.row(i).sum()));
        }
        pr.strongly_connected = detail::strongly_connected(Q);
        if (!pr.negative_entries.empty() || !pr.strongly_connected ||
            pr.row_sum_defect > tol.row_sum)
            report.pass = false;
        report.points.push_back(std::move(pr));
    }
    if (!report.pass) {
        std::ostringstream os;
        os << "generator validation failed at " << std::count_if(
                  report.points.begin(), report.points.end(),
                  [&](const auto& p) {
                      return !p.negative_entries.empty() || !p.strongly_connected ||
                             p.row_sum_defect > tol.row_sum;
                  })
           << " of " << report.points.size() << " sample points";
        report.message = os.str();
    }
    return report;
}

/// L^{(i)} rho(x) = 1/2 sum_{k,l} a_{kl} d^2 rho + sum_k b_k d_k rho.
/// For rho = |x|^p the closed form
///   p |x|^{p-2} [ b.x + tr(a)/2 + (p-2)/2 * (x^T a x)/|x|^2 ]
/// is used.
inline double apply_generator_L(const ScenarioModel& model, const TestFunctionSpec& rho,
                                const Vector& x, int i) {
    if (rho.is_power) {
        const double p = rho.power;
        const double r = x.norm();
        if (r == 0.0) {
            if (p < 2.0)
                throw std::domain_error("apply_generator_L: |x|^p singular at 0 for p < 2");
            return 0.0;  // gradient and Hessian of |x|^p vanish at 0 for p > 2
        }
        const Matrix a = model.diffusion_matrix(x, i);
        const Vector b = model.drift(x, i);
        const double quad = x.dot(a * x) / (r * r);
        return p * std::pow(r, p - 2.0) * (b.dot(x) + 0.5 * a.trace() + 0.5 * (p - 2.0) * quad);
    }
    const Matrix a = model.diffusion_matrix(x, i);
    const Vector b = model.drift(x, i);
    const Matrix H = rho.hessian_fn(x);
    const Vector g = rho.gradient_fn(x);
    return 0.5 * (a * H).trace() + b.dot(g);
}

/// Grid used by extract_rates: log-spaced radii across the annulus times
/// a deterministic sphere grid.
struct GridSpec {
    int radial = 20;
    int sphere_hint = 0;  // 0 = per-dimension default of unit_sphere_grid
};

/// Numerically estimates per-regime rates as the sup over the grid of
/// L^{(i)} rho / rho (A2-A4) or L^{(i)} rho / h (A1). The result bounds
/// the quotient on the grid only; refining the grid can only raise it.
inline RateVector extract_rates(const ScenarioModel& model, const TestFunctionSpec& rho,
                                RateMode mode, std::pair<double, double> annulus,
                                const GridSpec& grid = {},
                                std::optional<TestFunctionSpec> companion_h = std::nullopt) {
    const auto [r_in, r_out] = annulus;
    if (!(r_in > 0.0) || !(r_out > r_in))
        throw std::invalid_argument("extract_rates: need 0 < r_inner < r_outer");
    if (grid.radial < 1) throw std::invalid_argument("extract_rates: empty grid");
    if (mode == RateMode::A1 && !companion_h)
        throw std::invalid_argument("extract_rates: mode A1 requires a companion h");

    const auto dirs = unit_sphere_grid(model.dimension, grid.sphere_hint);
    std::vector<double> radii(grid.radial);
    for (int k = 0; k < grid.radial; ++k) {
        const double t = grid.radial == 1 ? 0.0 : double(k) / (grid.radial - 1);
        radii[k] = r_in * std::pow(r_out / r_in, t);
    }

    const int n = model.regimes.count;
    Vector rates = Vector::Constant(n, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) {
        for (const double r : radii) {
            for (const Vector& d : dirs) {
                const Vector x = r * d;
                const double denom =
                    mode == RateMode::A1 ? companion_h->value(x) : rho.value(x);
                if (denom == 0.0)
                    throw std::domain_error("extract_rates: test function vanishes on the grid");
                rates(i) = std::max(rates(i), apply_generator_L(model, rho, x, i) / denom);
            }
        }
    }
    if ((mode == RateMode::A3 || mode == RateMode::A4) && rates.lpNorm<Eigen::Infinity>() == 0.0)
        throw std::invalid_argument("extract_rates: gamma identically zero violates A3/A4");

    RateVector out;
    out.mode = mode;
    out.rates = std::move(rates);
    out.annulus = annulus;
    out.provenance = RateProvenance::NumericallyEstimated;
    out.companion_h = std::move(companion_h);
    return out;
}

}  // namespace rsd
