#pragma once

#include "rsd/scenario.hpp"

#include <random>

namespace testutil {

using rsd::Matrix;
using rsd::Vector;

inline std::mt19937_64 rng(std::uint64_t seed = 12345) { return std::mt19937_64(seed); }

/// Fully connected random generator: irreducible by construction.
inline Matrix random_generator(int n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.1, 2.0);
    Matrix Q = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (j != i) Q(i, j) = u(gen);
        Q(i, i) = -Q.row(i).sum();
    }
    return Q;
}

/// Random birth-death generator: reversible by construction.
inline Matrix random_birth_death(int n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.2, 3.0);
    Matrix Q = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        Q(i, i + 1) = u(gen);
        Q(i + 1, i) = u(gen);
    }
    for (int i = 0; i < n; ++i) Q(i, i) = -Q.row(i).sum();
    return Q;
}

inline rsd::ScenarioModel model_1d(int n_regimes,
                                   std::function<Vector(const Vector&, int)> drift,
                                   std::function<Matrix(const Vector&, int)> diffusion,
                                   rsd::SwitchingGenerator gen) {
    rsd::ScenarioModel m;
    m.dimension = 1;
    m.regimes = rsd::RegimeSpace::finite(n_regimes);
    m.drift = std::move(drift);
    m.diffusion = std::move(diffusion);
    m.generator = std::move(gen);
    return m;
}

inline std::function<Vector(const Vector&, int)> zero_drift() {
    return [](const Vector& x, int) { return Vector::Zero(x.size()).eval(); };
}

inline std::function<Matrix(const Vector&, int)> zero_diffusion() {
    return [](const Vector& x, int) { return Matrix::Zero(x.size(), x.size()).eval(); };
}

inline std::function<Matrix(const Vector&, int)> constant_diffusion(double s) {
    return [s](const Vector& x, int) {
        return (s * Matrix::Identity(x.size(), x.size())).eval();
    };
}

inline std::function<Vector(const Vector&, int)> linear_drift(std::vector<double> mu) {
    return [mu = std::move(mu)](const Vector& x, int i) { return (mu[i] * x).eval(); };
}

}  // namespace testutil
