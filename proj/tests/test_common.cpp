#include "rsd/common.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace rsd;

TEST_CASE("verdict names are stable") {
    CHECK(to_string(Verdict::AsymptoticallyStableInProbability) ==
          "AsymptoticallyStableInProbability");
    CHECK(to_string(Verdict::UnstableInProbability) == "UnstableInProbability");
    CHECK(to_string(Verdict::PositiveRecurrent) == "PositiveRecurrent");
    CHECK(to_string(Verdict::Recurrent) == "Recurrent");
    CHECK(to_string(Verdict::Transient) == "Transient");
    CHECK(to_string(Verdict::Inconclusive) == "Inconclusive");
}

TEST_CASE("unit sphere grid in dimension 1 is exactly {-1, +1}") {
    const auto grid = unit_sphere_grid(1);
    REQUIRE(grid.size() == 2);
    CHECK(grid[0](0) == -1.0);
    CHECK(grid[1](0) == 1.0);
}

TEST_CASE("unit sphere grid in dimension 2 has 720 unit vectors") {
    const auto grid = unit_sphere_grid(2);
    REQUIRE(grid.size() == 720);
    for (const auto& v : grid) CHECK(std::abs(v.norm() - 1.0) < 1e-14);
}

TEST_CASE("unit sphere grid in dimension >= 3 has 1e4 unit vectors") {
    for (int d : {3, 4}) {
        const auto grid = unit_sphere_grid(d);
        REQUIRE(grid.size() == 10000);
        for (size_t k = 0; k < grid.size(); k += 997)
            CHECK(std::abs(grid[k].norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("sphere grids are deterministic") {
    const auto a = unit_sphere_grid(3);
    const auto b = unit_sphere_grid(3);
    for (size_t k = 0; k < a.size(); k += 503) CHECK(a[k] == b[k]);
}

TEST_CASE("strong connectivity of the rate graph") {
    Matrix Q(2, 2);
    Q << -1, 1, 2, -2;
    CHECK(detail::strongly_connected(Q));

    Matrix one_way = Matrix::Zero(2, 2);
    one_way(0, 1) = 1.0;
    one_way(0, 0) = -1.0;
    CHECK_FALSE(detail::strongly_connected(one_way));

    Matrix cycle = Matrix::Zero(3, 3);
    cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = 1.0;
    cycle.diagonal().setConstant(-1.0);
    CHECK(detail::strongly_connected(cycle));
}
