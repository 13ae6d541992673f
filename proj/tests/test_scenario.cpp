#include "rsd/scenario.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace rsd;
using namespace testutil;

TEST_CASE("power test functions classify their boundary behavior") {
    const auto p1 = TestFunctionSpec::power_norm(1.0);
    CHECK(p1.at_zero == TestFunctionSpec::AtZero::VanishesOnlyAtZero);
    CHECK(p1.at_infinity == TestFunctionSpec::AtInfinity::BlowsUpAtInfinity);

    const auto pm = TestFunctionSpec::power_norm(-0.5);
    CHECK(pm.at_zero == TestFunctionSpec::AtZero::BlowsUpAtZero);
    CHECK(pm.at_infinity == TestFunctionSpec::AtInfinity::VanishesAtInfinity);

    CHECK_THROWS_AS(TestFunctionSpec::power_norm(0.0), std::invalid_argument);
}

TEST_CASE("declared gamma rates must not vanish identically") {
    CHECK_THROWS_AS(RateVector::declared(RateMode::A3, Vector::Zero(3)), std::invalid_argument);
    CHECK_THROWS_AS(RateVector::declared(RateMode::A4, Vector::Zero(3)), std::invalid_argument);
    CHECK_NOTHROW(RateVector::declared(RateMode::A2, Vector::Zero(3)));
}

TEST_CASE("L rho closed form on the linear-drift additive-noise model") {
    auto m = model_1d(2, linear_drift({3.0, -1.0}), constant_diffusion(1.0),
                      SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    const auto rho = TestFunctionSpec::power_norm(1.0);
    Vector x(1);
    x << 2.0;
    CHECK(apply_generator_L(m, rho, x, 0) == Catch::Approx(6.0).margin(1e-12));
    CHECK(apply_generator_L(m, rho, x, 1) == Catch::Approx(-2.0).margin(1e-12));
    x << -5.0;
    CHECK(apply_generator_L(m, rho, x, 0) == Catch::Approx(15.0).margin(1e-12));
}

TEST_CASE("L rho vanishes for the zero model") {
    auto m = model_1d(2, zero_drift(), zero_diffusion(),
                      SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    Vector x(1);
    x << 0.7;
    for (double p : {1.0, 2.0, 3.0, -1.0})
        CHECK(apply_generator_L(m, TestFunctionSpec::power_norm(p), x, 0) == 0.0);
}

TEST_CASE("L of |x|^2 with identity diffusion is the trace") {
    ScenarioModel m;
    m.dimension = 2;
    m.regimes = RegimeSpace::finite(2);
    m.drift = zero_drift();
    m.diffusion = constant_diffusion(1.0);
    m.generator = SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished());
    Vector x(2);
    x << 0.3, -1.2;
    CHECK(apply_generator_L(m, TestFunctionSpec::power_norm(2.0), x, 0) ==
          Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("power-norm closed form matches finite differences") {
    auto gen = rng(77);
    std::uniform_real_distribution<double> radius(0.1, 10.0), unit(-1.0, 1.0);
    for (int d : {1, 2, 3}) {
        ScenarioModel m;
        m.dimension = d;
        m.regimes = RegimeSpace::finite(2);
        m.drift = [](const Vector& x, int i) {
            return ((i + 1.0) * x + x.cwiseProduct(x)).eval();
        };
        m.diffusion = [](const Vector& x, int i) {
            return (Matrix::Identity(x.size(), x.size()) * (0.5 + 0.1 * i) +
                    0.2 * x * x.transpose())
                .eval();
        };
        m.generator = SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished());

        for (double p : {1.0, 2.0, 3.0, -1.0}) {
            const auto rho = TestFunctionSpec::power_norm(p);
            for (int trial = 0; trial < 20; ++trial) {
                Vector dir(d);
                for (int k = 0; k < d; ++k) dir(k) = unit(gen);
                if (dir.norm() < 0.1) continue;
                const Vector x = radius(gen) * dir / dir.norm();

                const double h = 1e-5 * std::max(1.0, x.norm());
                auto val = [&](const Vector& y) { return std::pow(y.norm(), p); };
                Vector grad(d);
                Matrix hess(d, d);
                for (int k = 0; k < d; ++k) {
                    Vector e = Vector::Zero(d);
                    e(k) = h;
                    grad(k) = (val(x + e) - val(x - e)) / (2 * h);
                    for (int l = 0; l < d; ++l) {
                        Vector f = Vector::Zero(d);
                        f(l) = h;
                        hess(k, l) = (val(x + e + f) - val(x + e - f) - val(x - e + f) +
                                      val(x - e - f)) /
                                     (4 * h * h);
                    }
                }
                const Matrix a = m.diffusion_matrix(x, 0);
                const double fd = 0.5 * (a * hess).trace() + m.drift(x, 0).dot(grad);
                const double closed = apply_generator_L(m, rho, x, 0);
                const double scale = std::max(1.0, std::abs(closed));
                CHECK(std::abs(closed - fd) / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("L rho at the origin") {
    auto m = model_1d(2, linear_drift({1.0, 1.0}), constant_diffusion(1.0),
                      SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    const Vector zero = Vector::Zero(1);
    CHECK_THROWS_AS(apply_generator_L(m, TestFunctionSpec::power_norm(1.0), zero, 0),
                    std::domain_error);
    CHECK(apply_generator_L(m, TestFunctionSpec::power_norm(3.0), zero, 0) == 0.0);
}

TEST_CASE("rate extraction recovers linear drift rates exactly") {
    auto m = model_1d(2, linear_drift({-2.0, 1.0}), constant_diffusion(1.0),
                      SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    const auto r = extract_rates(m, TestFunctionSpec::power_norm(1.0), RateMode::A4,
                                 {1.0, 100.0});
    CHECK(r.provenance == RateProvenance::NumericallyEstimated);
    CHECK(r.rates(0) == Catch::Approx(-2.0).margin(1e-10));
    CHECK(r.rates(1) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("rate extraction on the clipped-power drift tends to b_i r") {
    auto m = model_1d(
        2,
        [](const Vector& x, int i) {
            const double b[] = {-2.0, 1.0};
            const double r = x.norm();
            if (r == 0.0) return Vector::Zero(1).eval();
            return (b[i] * std::min(r * r, r) / r * x).eval();
        },
        zero_diffusion(),
        SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    const double r_in = 1e-4, r_out = 1e-2;
    const auto r = extract_rates(m, TestFunctionSpec::power_norm(1.0), RateMode::A2,
                                 {r_in, r_out});
    CHECK(r.rates(0) == Catch::Approx(-2.0 * r_in).epsilon(1e-10));
    CHECK(r.rates(1) == Catch::Approx(1.0 * r_out).epsilon(1e-10));
}

TEST_CASE("rate extraction rejects identically zero gamma in A3/A4") {
    auto m = model_1d(2, zero_drift(), zero_diffusion(),
                      SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    CHECK_THROWS_AS(
        extract_rates(m, TestFunctionSpec::power_norm(1.0), RateMode::A3, {1e-4, 1e-1}),
        std::invalid_argument);
    const auto r = extract_rates(m, TestFunctionSpec::power_norm(1.0), RateMode::A2,
                                 {1e-4, 1e-1});
    CHECK(r.rates.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("extracted rates bound the quotient and are grid-monotone") {
    auto m = model_1d(
        2,
        [](const Vector& x, int i) { return ((i == 0 ? -1.5 : 0.5) * x).eval(); },
        [](const Vector& x, int) { return (0.3 * x.norm() * Matrix::Identity(1, 1)).eval(); },
        SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 1, -1).finished()));
    const auto rho = TestFunctionSpec::power_norm(2.0);
    GridSpec coarse{5, 0}, fine{41, 0};  // nested log-spaced radii
    const auto rc = extract_rates(m, rho, RateMode::A2, {1e-3, 1e-1}, coarse);
    const auto rf = extract_rates(m, rho, RateMode::A2, {1e-3, 1e-1}, fine);
    for (int i = 0; i < 2; ++i) CHECK(rf.rates(i) >= rc.rates(i) - 1e-13);

    for (double r : {1e-3, 1e-2, 1e-1}) {
        Vector x(1);
        x << r;
        for (int i = 0; i < 2; ++i)
            CHECK(apply_generator_L(m, rho, x, i) <= rf.rates(i) * rho.value(x) + 1e-12);
    }
}

TEST_CASE("generator validation accepts a conservative irreducible chain") {
    const auto gen = SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 2, -2).finished());
    const auto rep = validate_generator(gen, {Vector::Zero(1), Vector::Ones(1)});
    CHECK(rep.pass);
    CHECK(rep.message.empty());
}

TEST_CASE("generator validation flags negative rates") {
    SwitchingGenerator gen;
    gen.num_regimes = 2;
    gen.entries = [](const Vector&, int i, int j) { return i == 0 && j == 1 ? -0.5 : 1.0; };
    const auto rep = validate_generator(gen, {Vector::Zero(1)});
    CHECK_FALSE(rep.pass);
    REQUIRE(rep.points.size() == 1);
    REQUIRE(rep.points[0].negative_entries.size() == 1);
    CHECK(rep.points[0].negative_entries[0] == std::pair<int, int>{0, 1});
}

TEST_CASE("generator validation flags a non-irreducible chain") {
    SwitchingGenerator gen;
    gen.num_regimes = 2;
    gen.entries = [](const Vector&, int i, int j) { return i == 0 && j == 1 ? 1.0 : 0.0; };
    const auto rep = validate_generator(gen, {Vector::Zero(1)});
    CHECK_FALSE(rep.pass);
    CHECK_FALSE(rep.points[0].strongly_connected);
}

TEST_CASE("sin-modulated birth-death generator validates on a truncation") {
    const double a = 3.0, c = 1.0;
    SwitchingGenerator gen;
    gen.num_regimes = 30;
    gen.state_dependent = true;
    gen.entries = [a, c](const Vector& x, int i, int j) {
        const double s = std::sin(x(0));
        const int pi = i + 1;
        if (j == i + 1) return c + std::max(0, pi - 1) + (pi - 1) * s;
        if (j == i - 1 && i >= 1) return a + std::max(0, pi - 2) + (pi - 2) * s;
        return 0.0;
    };
    std::vector<Vector> pts;
    for (double t : {0.0, 1.0, -1.0, 1.5707963267948966, 4.0}) {
        Vector x(1);
        x << t;
        pts.push_back(x);
    }
    CHECK(validate_generator(gen, pts).pass);
}

TEST_CASE("validation is deterministic") {
    const auto gen = SwitchingGenerator::constant((Matrix(2, 2) << -1, 1, 2, -2).finished());
    const auto a = validate_generator(gen, {Vector::Zero(1)});
    const auto b = validate_generator(gen, {Vector::Zero(1)});
    CHECK(a.pass == b.pass);
    CHECK(a.points[0].row_sum_defect == b.points[0].row_sum_defect);
}
