#pragma once

#include "rsd/scenario_io.hpp"

#include <json.hpp>

namespace rsd::builtin {

/// Two-regime model with scaled-coefficient drift/diffusion and symmetric
/// switching; the averaged-rate criteria apply directly.
inline nlohmann::json two_regime_scaled_json(double b0, double b1, double s0, double s1,
                                             double gamma, double zeta) {
    return {
        {"name", "cor1"},
        {"dimension", 1},
        {"regimes", {{"finite", 2}}},
        {"drift",
         {{"family", "power_clipped"}, {"exponent", gamma}, {"coefficients", {b0, b1}}}},
        {"diffusion",
         {{"family", "power_clipped"}, {"exponent", zeta}, {"coefficients", {s0, s1}}}},
        {"generator", {{"kind", "dense"}, {"matrix", {{-1.0, 1.0}, {1.0, -1.0}}}}},
        {"test_function", {{"power", 1.0}}},
    };
}

/// Countable birth-death switching with sin-modulated state-dependent
/// rates; drift mu_0 = -1, mu_i = kappa - 1/(i+1). Stability hinges on
/// the two-class partition matrix, accepted iff kappa < a2/(1+c1) under
/// the minor test.
inline nlohmann::json partition_example_json(double kappa, double a2, double c1,
                                             int truncation) {
    nlohmann::json mu = nlohmann::json::array();
    mu.push_back(-1.0);
    for (int i = 1; i < truncation; ++i) mu.push_back(kappa - 1.0 / (i + 1));
    return {
        {"name", "ex2.1"},
        {"dimension", 1},
        {"regimes", {{"countable_truncated", truncation}}},
        {"drift", {{"family", "linear"}, {"coefficients", mu}}},
        {"diffusion", {{"family", "power_clipped"}, {"exponent", 2.0}, {"coefficients", 1.0}}},
        {"generator", {{"kind", "example_2_1"}, {"a", a2}, {"c", c1}}},
        {"test_function", {{"power", 1.0}}},
    };
}

/// Countable linear-birth-death switching, drift mu_0 = -c, mu_i = gamma,
/// diffusion |x|^2 ^ |x|; spectral stability example. Stable when
/// a - b - gamma > 0 and c - b > 0.
inline nlohmann::json spectral_stability_json(double a, double b, double gamma, double c,
                                              int truncation) {
    return {
        {"name", "ex3.1"},
        {"dimension", 1},
        {"regimes", {{"countable_truncated", truncation}}},
        {"drift",
         {{"family", "linear"},
          {"coefficients", {{"head", {-c}}, {"rest", gamma}}}}},
        {"diffusion", {{"family", "power_clipped"}, {"exponent", 2.0}, {"coefficients", 1.0}}},
        {"generator", {{"kind", "birth_death"}, {"a", a}, {"b", b}, {"law", "linear"}}},
        {"test_function", {{"power", 1.0}}},
    };
}

/// Same switching chain with additive noise (no equilibrium at 0);
/// spectral recurrence example. Recurrent when c - b > 0 and
/// a - b - gamma > 0, with test function g_i = i + 1 giving lambda = 1 at
/// the reference parameters.
inline nlohmann::json spectral_recurrence_json(double a, double b, double gamma, double c,
                                               int truncation) {
    return {
        {"name", "ex4.1"},
        {"dimension", 1},
        {"regimes", {{"countable_truncated", truncation}}},
        {"drift",
         {{"family", "linear"},
          {"coefficients", {{"head", {-c}}, {"rest", gamma}}}}},
        {"diffusion", {{"family", "constant"}, {"coefficients", 1.0}}},
        {"generator", {{"kind", "birth_death"}, {"a", a}, {"b", b}, {"law", "linear"}}},
        {"test_function", {{"power", 1.0}}},
    };
}

/// Unbounded drift rates mu_i = i with quadratic death rates
/// a_i = i^2 + 2i + 2. This is a strengthened variant: the weaker bound
/// a_i > i^2 + i + 1 admits rate sequences whose test-function ratio with
/// g_i = i + 1 tends to 0, so no uniform lambda > 0 follows from it.
inline nlohmann::json unbounded_rate_recurrence_json(double mu0, int truncation) {
    return {
        {"name", "ex4.2"},
        {"dimension", 1},
        {"regimes", {{"countable_truncated", truncation}}},
        {"drift",
         {{"family", "linear"},
          {"coefficients", {{"head", {mu0}}, {"law", "index"}}}}},
        {"diffusion", {{"family", "constant"}, {"coefficients", 1.0}}},
        {"generator", {{"kind", "birth_death"}, {"a", 0.0}, {"b", 1.0}, {"law", "quadratic_death"}}},
        {"test_function", {{"power", 1.0}}},
    };
}

}  // namespace rsd::builtin
