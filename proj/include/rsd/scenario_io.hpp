#pragma once

#include "rsd/chain.hpp"
#include "rsd/common.hpp"
#include "rsd/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>

namespace rsd {

/// A fully ingested scenario: the model plus the metadata the analysis
/// layer needs to decide which criteria apply.
struct Scenario {
    std::string name;
    ScenarioModel model;
    TestFunctionSpec rho = TestFunctionSpec::power_norm(1.0);
    std::optional<RateVector> declared_rates;

    /// Set when drift/diffusion follow the scaled-coefficient family
    /// b_i (|x|^gamma ^ |x|), sigma_i (|x|^zeta ^ |x|).
    struct PowerClippedInfo {
        double gamma = 2.0, zeta = 2.0;
        Vector b, sigma;
    };
    std::optional<PowerClippedInfo> power_clipped;

    /// Set when the drift is mu_i x (then L^{(i)}|x| = mu_i |x| in 1-d).
    std::optional<Vector> linear_mu;

    nlohmann::json raw;  // echo for reports
};

struct ScenarioParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Coefficient spec: scalar, array, or {"head": [...], "rest": w} with
/// optional {"law": "index"} meaning coeff_i = i beyond the head.
inline Vector parse_coefficients(const nlohmann::json& j, int n, const std::string& what) {
    Vector v(n);
    if (j.is_number()) {
        v.setConstant(j.get<double>());
        return v;
    }
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != n)
            throw ScenarioParseError(what + ": coefficient array length " +
                                     std::to_string(j.size()) + " does not match regime count " +
                                     std::to_string(n));
        for (int i = 0; i < n; ++i) v(i) = j[i].get<double>();
        return v;
    }
    if (j.is_object()) {
        const bool index_law = j.value("law", "") == std::string("index");
        const double rest = j.value("rest", 0.0);
        std::vector<double> head;
        if (j.contains("head")) head = j.at("head").get<std::vector<double>>();
        for (int i = 0; i < n; ++i) {
            if (i < static_cast<int>(head.size()))
                v(i) = head[i];
            else
                v(i) = index_law ? static_cast<double>(i) : rest;
        }
        return v;
    }
    throw ScenarioParseError(what + ": expected number, array, or object");
}

inline std::function<Vector(const Vector&, int)> make_drift(const std::string& family,
                                                            const Vector& coeff, double exponent) {
    if (family == "linear")
        return [coeff](const Vector& x, int i) -> Vector { return coeff(i) * x; };
    if (family == "power_clipped")
        return [coeff, exponent](const Vector& x, int i) -> Vector {
            const double r = x.norm();
            if (r == 0.0) return Vector::Zero(x.size());
            const double mag = std::min(std::pow(r, exponent), r);
            return (coeff(i) * mag / r) * x;
        };
    if (family == "constant")
        return [coeff](const Vector& x, int i) -> Vector {
            return Vector::Constant(x.size(), coeff(i));
        };
    throw ScenarioParseError("unknown drift family '" + family + "'");
}

inline std::function<Matrix(const Vector&, int)> make_diffusion(const std::string& family,
                                                                const Vector& coeff,
                                                                double exponent) {
    if (family == "linear")
        return [coeff](const Vector& x, int i) -> Matrix {
            return coeff(i) * x.norm() * Matrix::Identity(x.size(), x.size());
        };
    if (family == "power_clipped")
        return [coeff, exponent](const Vector& x, int i) -> Matrix {
            const double r = x.norm();
            const double mag = std::min(std::pow(r, exponent), r);
            return coeff(i) * mag * Matrix::Identity(x.size(), x.size());
        };
    if (family == "constant")
        return [coeff](const Vector& x, int i) -> Matrix {
            return coeff(i) * Matrix::Identity(x.size(), x.size());
        };
    throw ScenarioParseError("unknown diffusion family '" + family + "'");
}

inline SwitchingGenerator parse_generator(const nlohmann::json& j, int n) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") {
        const auto& rows = j.at("matrix");
        if (static_cast<int>(rows.size()) != n)
            throw ScenarioParseError("generator: dense matrix size mismatch");
        Matrix Q(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) Q(i, k) = rows[i][k].get<double>();
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k)
                if (k != i && Q(i, k) < 0.0)
                    throw ScenarioParseError("generator: negative off-diagonal entry at (" +
                                             std::to_string(i) + "," + std::to_string(k) + ")");
            if (std::abs(Q.row(i).sum()) > 1e-9)
                throw ScenarioParseError("generator: row " + std::to_string(i) +
                                         " does not sum to zero");
        }
        return SwitchingGenerator::constant(Q);
    }
    if (kind == "birth_death") {
        const double a = j.at("a").get<double>();
        const double b = j.at("b").get<double>();
        const std::string law = j.value("law", "linear");
        std::function<double(int)> birth, death;
        if (law == "linear") {
            // b_i = b(i+1), a_i = a(i+1)
            birth = [b](int i) { return b * (i + 1); };
            death = [a](int i) { return a * (i + 1); };
        } else if (law == "constant") {
            birth = [b](int) { return b; };
            death = [a](int i) { return i > 0 ? a : 0.0; };
        } else if (law == "quadratic_death") {
            // b_i = b, a_i = i^2 + 2i + 2
            birth = [b](int) { return b; };
            death = [](int i) { return i > 0 ? double(i) * i + 2.0 * i + 2.0 : 0.0; };
        } else {
            throw ScenarioParseError("generator: unknown birth_death law '" + law + "'");
        }
        return SwitchingGenerator::birth_death(birth, death, n);
    }
    if (kind == "example_2_1") {
        // One-based-indexed birth-death with sin-x modulation; base rates a, c
        // are padded with the modulation amplitude so rates stay positive.
        const double a = j.at("a").get<double>();
        const double c = j.at("c").get<double>();
        SwitchingGenerator g;
        g.num_regimes = n;
        g.state_dependent = true;
        g.entries = [a, c](const Vector& x, int i, int j) {
            const double s = std::sin(x.size() > 0 ? x(0) : 0.0);
            const int pi = i + 1;  // one-based regime index
            if (j == i + 1) return c + std::max(0, pi - 1) + (pi - 1) * s;
            if (j == i - 1 && i >= 1) return a + std::max(0, pi - 2) + (pi - 2) * s;
            return 0.0;
        };
        return g;
    }
    throw ScenarioParseError("unknown generator kind '" + kind + "'");
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j, int truncation_override = 0) {
    Scenario sc;
    sc.raw = j;
    sc.name = j.value("name", "scenario");
    try {
        sc.model.dimension = j.at("dimension").get<int>();
        if (sc.model.dimension < 1) throw ScenarioParseError("dimension must be positive");

        const auto& reg = j.at("regimes");
        if (reg.contains("finite")) {
            sc.model.regimes = RegimeSpace::finite(reg.at("finite").get<int>());
        } else if (reg.contains("countable_truncated")) {
            int n = reg.at("countable_truncated").get<int>();
            if (truncation_override > 0) n = truncation_override;
            sc.model.regimes = RegimeSpace::countable_truncated(n);
        } else {
            throw ScenarioParseError("regimes: need 'finite' or 'countable_truncated'");
        }
        const int n = sc.model.regimes.count;

        const auto& dj = j.at("drift");
        const std::string dfam = dj.at("family").get<std::string>();
        if (dfam == "custom")
            throw ScenarioParseError("drift: 'custom' is not allowed in scenario files");
        const Vector dcoeff = detail::parse_coefficients(dj.at("coefficients"), n, "drift");
        const double dexp = dj.value("exponent", 2.0);
        sc.model.drift = detail::make_drift(dfam, dcoeff, dexp);

        const auto& sj = j.at("diffusion");
        const std::string sfam = sj.at("family").get<std::string>();
        if (sfam == "custom")
            throw ScenarioParseError("diffusion: 'custom' is not allowed in scenario files");
        const Vector scoeff = detail::parse_coefficients(sj.at("coefficients"), n, "diffusion");
        const double sexp = sj.value("exponent", 2.0);
        sc.model.diffusion = detail::make_diffusion(sfam, scoeff, sexp);

        sc.model.generator = detail::parse_generator(j.at("generator"), n);

        sc.rho = TestFunctionSpec::power_norm(j.at("test_function").at("power").get<double>());

        if (dfam == "linear") sc.linear_mu = dcoeff;
        if (dfam == "power_clipped" && sfam == "power_clipped") {
            Scenario::PowerClippedInfo info;
            info.gamma = dexp;
            info.zeta = sexp;
            info.b = dcoeff;
            info.sigma = scoeff;
            sc.power_clipped = info;
        }

        if (j.contains("rates")) {
            const auto& rj = j.at("rates");
            const std::string mode = rj.at("mode").get<std::string>();
            RateMode m;
            if (mode == "A1") m = RateMode::A1;
            else if (mode == "A2") m = RateMode::A2;
            else if (mode == "A3") m = RateMode::A3;
            else if (mode == "A4") m = RateMode::A4;
            else throw ScenarioParseError("rates: unknown mode '" + mode + "'");
            sc.declared_rates = RateVector::declared(
                m, detail::parse_coefficients(rj.at("values"), n, "rates"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioParseError(std::string("scenario schema violation: ") + e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path, int truncation_override = 0) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioParseError(std::string("scenario JSON parse error: ") + e.what());
    }
    return parse_scenario(j, truncation_override);
}

}  // namespace rsd
