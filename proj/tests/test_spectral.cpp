#include <catch2/catch_amalgamated.hpp>
#include <random>
#include "hartree/propagator.hpp"
using namespace hartree;

TEST_CASE("round trip") {
    auto g = make_grid(2, 16, 8.0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    ComplexField f(g, 0.0, Space::physical);
    for (auto& z : f.values) z = cplx(nd(rng), nd(rng));
    auto back = inverse_transform(forward_transform(f));
    REQUIRE(max_abs_diff(back, f) < 1e-12 * max_abs(f));
}
