#include "poslab/errors.hpp"
#include "poslab/mollify.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace poslab;

namespace {

FieldTrajectory random_trajectory(const Grid& g, int m, int stamps, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    FieldTrajectory f(g, m);
    for (int s = 0; s < stamps; ++s) {
        std::vector<double> v(g.size() * m);
        for (double& x : v) x = u(rng);
        f.append(0.1 * s, v);
    }
    return f;
}

}  // namespace

TEST_CASE("bump weights have unit mass and are symmetric") {
    for (int r = 0; r <= 12; ++r) {
        const auto w = bump_weights(r);
        CHECK(w.size() == static_cast<std::size_t>(2 * r + 1));
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        for (int j = 0; j < r; ++j) CHECK(w[j] == w[2 * r - j]);
        for (double x : w) CHECK(x > 0.0);
    }
    CHECK(bump_weights(0)[0] == 1.0);
    // r = 1: s = -1/2, 0, 1/2 -> 9/16, 1, 9/16
    const auto w1 = bump_weights(1);
    CHECK(w1[1] == doctest::Approx(16.0 / 34.0));
    CHECK_THROWS_AS(bump_weights(-1), LabError);
}

TEST_CASE("constants are preserved") {
    const Grid g = discretize(Domain::unit_pi_square(), 17);
    FieldTrajectory f(g, 2);
    for (int s = 0; s < 9; ++s) {
        std::vector<double> v(g.size() * 2);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 ? -3.5 : 2.0;
        f.append(0.125 * s, v);
    }
    for (int n : {1, 2, 4}) {
        const FieldTrajectory m = mollify(f, n);
        for (std::size_t i = 0; i < m.raw().size(); ++i)
            CHECK(m.raw()[i] == doctest::Approx(i % 2 ? -3.5 : 2.0).epsilon(1e-14));
    }
}

TEST_CASE("property: nonnegative data stays nonnegative and bounds are kept") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g = discretize(Domain::interval(0.0, 1.0), 33);
        const FieldTrajectory f = random_trajectory(g, 2, 12, rng, 0.0, 1.0);
        const FieldTrajectory m = mollify(f, 1 + trial % 4);
        const auto [lo, hi] = std::minmax_element(m.raw().begin(), m.raw().end());
        const auto [flo, fhi] = std::minmax_element(f.raw().begin(), f.raw().end());
        CHECK(*lo >= *flo - 1e-15);
        CHECK(*hi <= *fhi + 1e-15);
        CHECK(m.stamps() == f.stamps());
    }
}

TEST_CASE("smoothing shrinks the roughness") {
    std::mt19937_64 rng(42);
    const Grid g = discretize(Domain::interval(0.0, 1.0), 65);
    const FieldTrajectory f = random_trajectory(g, 1, 5, rng, -1.0, 1.0);
    auto roughness = [&](const FieldTrajectory& t) {
        double acc = 0.0;
        for (std::size_t n = 1; n < g.size(); ++n) acc += std::abs(t.value(2, n, 0) - t.value(2, n - 1, 0));
        return acc;
    };
    const double r8 = roughness(mollify(f, 8)), r2 = roughness(mollify(f, 2));
    CHECK(r2 < 0.5 * roughness(f));
    // a wider kernel (smaller n) smooths more
    CHECK(r2 < r8);
}

TEST_CASE("kernel wider than the domain is rejected") {
    const Grid g = discretize(Domain::interval(0.0, 1.0), 17);
    FieldTrajectory f(g, 1);
    f.append(0.0, std::vector<double>(g.size(), 1.0));
    f.append(1.0, std::vector<double>(g.size(), 1.0));
    MollifierOptions opt;
    opt.space_width = 0.8;
    try {
        mollify(f, 1, opt);
        FAIL("expected kernel-too-wide");
    } catch (const LabError& e) {
        CHECK(e.kind() == ErrorKind::kernel_too_wide);
    }
    CHECK_NOTHROW(mollify(f, 2, opt));
    CHECK_THROWS_AS(mollify(f, 0), LabError);
}
