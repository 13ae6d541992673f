#include "rsd/chain.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace rsd;
using namespace testutil;

TEST_CASE("stationary distribution of small chains") {
    Matrix Q(2, 2);
    Q << -1, 1, 1, -1;
    Vector mu = stationary_distribution(Q);
    CHECK(mu(0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(mu(1) == Catch::Approx(0.5).margin(1e-12));

    Q << -1, 1, 2, -2;
    mu = stationary_distribution(Q);
    CHECK(mu(0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(mu(1) == Catch::Approx(1.0 / 3.0).margin(1e-12));

    Matrix C = Matrix::Zero(3, 3);
    C(0, 1) = C(1, 2) = C(2, 0) = 1.0;
    C.diagonal().setConstant(-1.0);
    mu = stationary_distribution(C);
    for (int i = 0; i < 3; ++i) CHECK(mu(i) == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("stationary distribution rejects bad input") {
    Matrix one_way = Matrix::Zero(2, 2);
    one_way(0, 1) = 1.0;
    one_way(0, 0) = -1.0;
    CHECK_THROWS(stationary_distribution(one_way));
    CHECK_THROWS(stationary_distribution(Matrix::Zero(1, 1)));
}

TEST_CASE("stationary residual meets tolerance on random chains") {
    auto gen = rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + int(trial % 7);
        const Matrix Q = random_generator(n, gen);
        const Vector mu = stationary_distribution(Q);
        CHECK((mu.transpose() * Q).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK(std::abs(mu.sum() - 1.0) <= 1e-12);
        CHECK(mu.minCoeff() >= 0.0);
    }
}

TEST_CASE("reversing measure: symmetric chain is uniform") {
    Matrix Q(2, 2);
    Q << -1, 1, 1, -1;
    const auto pi = reversing_measure(Q);
    REQUIRE(pi);
    CHECK((*pi)(0) == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("reversing measure: birth-death closed form") {
    const double a = 3.0, b = 1.0;
    const int n = 100;
    Matrix Q = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        Q(i, i + 1) = b * (i + 1);
        Q(i + 1, i) = a * (i + 2);
    }
    for (int i = 0; i < n; ++i) Q(i, i) = -Q.row(i).sum();

    const auto pi = reversing_measure(Q);
    REQUIRE(pi);
    // pi_i proportional to (b/a)^i / (i+1)
    Vector ref(n);
    for (int i = 0; i < n; ++i) ref(i) = std::pow(b / a, i) / (i + 1.0);
    ref /= ref.sum();
    CHECK(((*pi) - ref).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("reversing measure agrees with the null-space solve up to N = 500") {
    const double a = 3.0, b = 1.0;
    for (int n : {50, 500}) {
        Matrix Q = Matrix::Zero(n, n);
        for (int i = 0; i + 1 < n; ++i) {
            Q(i, i + 1) = b * (i + 1);
            Q(i + 1, i) = a * (i + 2);
        }
        for (int i = 0; i < n; ++i) Q(i, i) = -Q.row(i).sum();
        const auto pi = reversing_measure(Q);
        REQUIRE(pi);
        const Vector mu = stationary_distribution(Q);
        CHECK(((*pi) - mu).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("reversing measure matches the stationary solve whenever it exists") {
    auto gen = rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix Q = random_birth_death(3 + int(trial % 5), gen);
        const auto pi = reversing_measure(Q);
        REQUIRE(pi);
        CHECK(((*pi) - stationary_distribution(Q)).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("asymmetric 3-cycle is not reversible") {
    Matrix Q = Matrix::Zero(3, 3);
    Q(0, 1) = 2.0;
    Q(1, 2) = Q(2, 0) = 1.0;
    Q(1, 0) = Q(2, 1) = Q(0, 2) = 1.0;
    for (int i = 0; i < 3; ++i) Q(i, i) = -Q.row(i).sum();
    CHECK_FALSE(reversing_measure(Q).has_value());
}

TEST_CASE("one-way edge yields no reversing measure") {
    Matrix Q = Matrix::Zero(3, 3);
    Q(0, 1) = 1.0;
    Q(1, 2) = 1.0;
    Q(2, 1) = 1.0;
    Q(1, 0) = 0.0;
    Q(2, 0) = 1.0;  // keep it irreducible but not a two-way chain
    for (int i = 0; i < 3; ++i) Q(i, i) = -Q.row(i).sum();
    CHECK_FALSE(reversing_measure(Q).has_value());
}

TEST_CASE("interval table lays rates out consecutively") {
    SwitchingGenerator gen;
    gen.num_regimes = 3;
    gen.entries = [](const Vector&, int i, int j) {
        if (i == 0 && j == 1) return 0.3;
        if (i == 0 && j == 2) return 0.7;
        return 0.0;
    };
    const auto table = poisson_intervals(gen, Vector::Zero(1), 0);
    REQUIRE(table.entries.size() == 2);
    CHECK(table.entries[0].target == 1);
    CHECK(table.entries[0].left == 0.0);
    CHECK(table.entries[0].right == 0.3);
    CHECK(table.entries[1].target == 2);
    CHECK(table.entries[1].left == 0.3);
    CHECK(table.entries[1].right == Catch::Approx(1.0).margin(1e-15));
    CHECK(table.total == Catch::Approx(1.0).margin(1e-15));

    CHECK(table.target_for(0.5) == 2);
    CHECK(table.target_for(0.0) == 1);
}

TEST_CASE("zero rates produce an empty table") {
    SwitchingGenerator gen;
    gen.num_regimes = 2;
    gen.entries = [](const Vector&, int, int) { return 0.0; };
    CHECK(poisson_intervals(gen, Vector::Zero(1), 0).entries.empty());
}

TEST_CASE("interval lengths reproduce the generator row for random chains") {
    auto mt = rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + int(trial % 4);
        const Matrix Q = random_generator(n, mt);
        const auto gen = SwitchingGenerator::constant(Q);
        for (int i = 0; i < n; ++i) {
            const auto table = poisson_intervals(gen, Vector::Zero(1), i);
            double prev = 0.0;
            double total = 0.0;
            for (const auto& e : table.entries) {
                CHECK(e.left == prev);  // contiguous, disjoint by construction
                CHECK(e.right - e.left == Catch::Approx(Q(i, e.target)).margin(1e-12));
                prev = e.right;
                total += e.right - e.left;
            }
            CHECK(total == Catch::Approx(-Q(i, i)).margin(1e-12));
        }
    }
}

TEST_CASE("sample_next_regime maps variates to targets") {
    SwitchingGenerator gen;
    gen.num_regimes = 3;
    gen.entries = [](const Vector&, int i, int j) {
        if (i == 0 && j == 1) return 0.3;
        if (i == 0 && j == 2) return 0.7;
        return 0.0;
    };
    CHECK(sample_next_regime(gen, Vector::Zero(1), 0, 0.5) == 2);
    CHECK(sample_next_regime(gen, Vector::Zero(1), 0, 0.0) == 1);
    CHECK_THROWS_AS(sample_next_regime(gen, Vector::Zero(1), 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(sample_next_regime(gen, Vector::Zero(1), 0, -0.1), std::invalid_argument);
}

TEST_CASE("sampled target frequencies match the rate ratios") {
    SwitchingGenerator gen;
    gen.num_regimes = 3;
    gen.entries = [](const Vector&, int i, int j) {
        if (i == 0 && j == 1) return 0.3;
        if (i == 0 && j == 2) return 0.7;
        return 0.0;
    };
    auto mt = rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int draws = 1000000;
    int hits = 0;
    for (int k = 0; k < draws; ++k)
        if (sample_next_regime(gen, Vector::Zero(1), 0, u(mt)) == 1) ++hits;
    const double p = double(hits) / draws;
    const double se = std::sqrt(0.3 * 0.7 / draws);
    CHECK(std::abs(p - 0.3) <= 3.0 * se);
}

TEST_CASE("reflecting truncation keeps rows conservative") {
    const auto gen = SwitchingGenerator::birth_death([](int i) { return 1.0 + i; },
                                                     [](int i) { return 2.0 * i; }, 50);
    const Matrix Q = truncated_generator(gen, 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(std::abs(Q.row(i).sum()) <= 1e-12);
        for (int j = 0; j < 10; ++j)
            if (i != j) CHECK(Q(i, j) >= 0.0);
    }
    CHECK(Q(9, 9) == Catch::Approx(-Q(9, 8)).margin(1e-12));  // birth mass dropped
}
