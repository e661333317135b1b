#include "poslab/errors.hpp"
#include "poslab/system_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace poslab;

namespace {

SystemSpec constant_spec(const Matrix& a) {
    SystemSpec s;
    s.m = static_cast<int>(a.rows());
    s.domain = Domain::unit_pi_square();
    s.a = CoefficientField::constant(a);
    s.g = CoefficientField::zero(s.m);
    s.initial = [m = s.m](const Point&) { return Vector::Zero(m).eval(); };
    return s;
}

}  // namespace

TEST_CASE("standard sigma is 4/N + 2") {
    CHECK(sigma_exponent(1, SigmaVariant::standard).value == 6.0);
    CHECK(sigma_exponent(2, SigmaVariant::standard).value == 4.0);
    CHECK(sigma_exponent(3, SigmaVariant::standard).value == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
    CHECK_FALSE(sigma_exponent(2, SigmaVariant::standard).is_interval);
}

TEST_CASE("improved sigma table") {
    const SigmaValue two = sigma_exponent(2, SigmaVariant::improved);
    CHECK(two.is_interval);
    CHECK(two.lo == 1.0);
    CHECK(std::isinf(two.hi));
    CHECK(two.representative(4.0) == 4.0);

    const SigmaValue three = sigma_exponent(3, SigmaVariant::improved);
    CHECK(three.is_interval);
    CHECK(three.lo == 1.0);
    CHECK(three.hi == doctest::Approx(6.0 + 10.0 / 3.0).epsilon(1e-15));
    CHECK(three.contains(5.0));
    CHECK_FALSE(three.contains(10.0));

    CHECK(sigma_exponent(4, SigmaVariant::improved).value == 15.0);
    // 2(4 + 10)/3 + 4/5 + 2
    CHECK(sigma_exponent(5, SigmaVariant::improved).value == doctest::Approx(28.0 / 3.0 + 2.8).epsilon(1e-14));
}

TEST_CASE("dual exponents at the boundary cases") {
    SUBCASE("p* = 2 gives q1 = infinity") {
        const ExponentReport r = dual_exponents(2.0, 3.0, 2.0);
        CHECK(std::isinf(r.q1));
        CHECK(std::isinf(r.q2));  // p* = sigma' = 2
    }
    SUBCASE("p* = 4, sigma = 2") {
        const ExponentReport r = dual_exponents(4.0, 4.0, 2.0);
        CHECK(r.q1 == 4.0);
        CHECK(r.q2 == 4.0);
        CHECK(r.sigma_conjugate == 2.0);
    }
    SUBCASE("q* = sigma' gives q3 = infinity") {
        const ExponentReport r = dual_exponents(6.0, 1.5, 3.0);
        CHECK(std::isinf(r.q3));
        CHECK(r.q1 == 3.0);
        CHECK(r.q2 == doctest::Approx(2.0).epsilon(1e-15));  // 1.5*6/4.5
    }
}

TEST_CASE("dual exponents reject unmet preconditions") {
    CHECK_THROWS_AS(dual_exponents(1.5, 4.0, 4.0), LabError);
    try {
        dual_exponents(1.5, 4.0, 4.0);
    } catch (const LabError& e) {
        CHECK(e.kind() == ErrorKind::exponent_undefined);
        CHECK(e.detail().find("p*") != std::string::npos);
    }
    // sigma' = 4/3 > q* = 1.2
    CHECK_THROWS_AS(dual_exponents(4.0, 1.2, 4.0), LabError);
    // p* = 2 < sigma' = 3 for sigma = 1.5
    CHECK_THROWS_AS(dual_exponents(2.0, 4.0, 1.5), LabError);
}

TEST_CASE("property: 1/sigma + 1/sigma' = 1") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> s(1.0001, 50.0);
    for (int i = 0; i < 500; ++i) {
        const double sigma = s(rng);
        const double c = conjugate_exponent(sigma);
        CHECK(std::abs(1.0 / sigma + 1.0 / c - 1.0) <= 4e-16);
    }
    for (int N = 1; N <= 8; ++N) {
        const double sigma = sigma_exponent(N, SigmaVariant::standard).value;
        CHECK(std::abs(1.0 / sigma + 1.0 / conjugate_exponent(sigma) - 1.0) <= 4e-16);
    }
}

TEST_CASE("property: q1 strictly decreases in p*") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> p(2.01, 40.0);
    for (int i = 0; i < 300; ++i) {
        double p1 = p(rng), p2 = p(rng);
        if (p1 > p2) std::swap(p1, p2);
        if (p2 - p1 < 1e-6) continue;
        const double q_lo = dual_exponents(p1, 4.0, 4.0).q1;
        const double q_hi = dual_exponents(p2, 4.0, 4.0).q1;
        CHECK(q_hi < q_lo);
    }
}

TEST_CASE("mean coefficient examples") {
    StateMap identity{[](const Vector& u) { return u; }, {}};
    Vector u(2);
    u << 0.3, -2.0;
    CHECK((mean_coefficient(identity, u) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);

    StateMap square{[](const Vector& u) { return u.cwiseProduct(u).eval(); }, {}};
    Vector v(2);
    v << 1.0, 2.0;
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 1.0;
    expect(1, 1) = 2.0;
    CHECK((mean_coefficient(square, v) - expect).cwiseAbs().maxCoeff() < 1e-8);

    Matrix M(2, 2);
    M << 2.0, -1.0, 0.5, 3.0;
    StateMap linear{[M](const Vector& u) { return (M * u).eval(); }, [M](const Vector&) { return M; }};
    CHECK((mean_coefficient(linear, v) - M).cwiseAbs().maxCoeff() <= 1e-15 * max_abs(M));
}

TEST_CASE("mean coefficient converges with the quadrature order") {
    // P(u) = u^3 componentwise with exact Jacobian: abar = diag(u^2); one node gives 3/4 u^2.
    StateMap cube{[](const Vector& u) { return u.array().cube().matrix().eval(); },
                  [](const Vector& u) { return Matrix((3.0 * u.array().square()).matrix().asDiagonal()); }};
    Vector u(2);
    u << 1.5, -0.5;
    const Matrix one = mean_coefficient(cube, u, 1);
    CHECK(one(0, 0) == doctest::Approx(0.75 * 2.25));
    const Matrix two = mean_coefficient(cube, u, 2);
    CHECK(two(0, 0) == doctest::Approx(2.25).epsilon(1e-14));
    CHECK(two(1, 1) == doctest::Approx(0.25).epsilon(1e-14));

    // P = exp: abar = (e^u - 1)/u; error falls fast with the order.
    StateMap ex{[](const Vector& u) { return u.array().exp().matrix().eval(); },
                [](const Vector& u) { return Matrix(u.array().exp().matrix().asDiagonal()); }};
    Vector w(1);
    w << 2.0;
    const double exact = (std::exp(2.0) - 1.0) / 2.0;
    double prev = kInfinity;
    for (int n = 1; n <= 5; ++n) {
        const double err = std::abs(mean_coefficient(ex, w, n)(0, 0) - exact);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-8);
}

TEST_CASE("Gauss-Legendre rule integrates polynomials of degree 2n-1") {
    for (int n = 1; n <= 8; ++n) {
        std::vector<double> x, w;
        gauss_legendre_unit(n, x, w);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += w[i] * std::pow(x[i], 2 * n - 1);
        CHECK(acc == doctest::Approx(1.0 / (2 * n)).epsilon(1e-13));
    }
}

TEST_CASE("validate_system ellipticity constants") {
    const auto samples = sample_points(Domain::unit_pi_square(), 5);
    const EllipticityReport id = validate_system(constant_spec(Matrix::Identity(2, 2)), samples);
    CHECK(id.lambda_spectral == doctest::Approx(1.0));
    CHECK(id.lambda_symmetric == doctest::Approx(1.0));

    Matrix d = Matrix::Identity(2, 2);
    d(1, 1) = 0.5;
    CHECK(validate_system(constant_spec(d), samples).lambda_spectral == doctest::Approx(0.5));

    Matrix nn(2, 2);
    nn << 5, -2, 4, -1;
    const EllipticityReport r = validate_system(constant_spec(nn), samples);
    CHECK(r.lambda_spectral == doctest::Approx(1.0));
    CHECK(r.lambda_symmetric < 0.0);
}

TEST_CASE("validate_system rejects a non-elliptic field with the sample point") {
    SystemSpec s = constant_spec(Matrix::Identity(2, 2));
    s.a = CoefficientField::of_space_time(
        [](const Point& x, double) {
            Matrix a = Matrix::Identity(2, 2);
            a(1, 1) = x[0] - 1.0;
            return a;
        },
        2, 2);
    try {
        validate_system(s, sample_points(s.domain, 5));
        FAIL("expected not-elliptic");
    } catch (const LabError& e) {
        CHECK(e.kind() == ErrorKind::not_elliptic);
        CHECK(e.detail().find("x = ") != std::string::npos);
    }
}

TEST_CASE("check_shapes catches inconsistent specs") {
    SystemSpec s = constant_spec(Matrix::Identity(2, 2));
    CHECK_NOTHROW(check_shapes(s));
    s.b = {CoefficientField::zero(2)};  // two axes needed
    CHECK_THROWS_AS(check_shapes(s), LabError);
    s.b.clear();
    s.boundary = BoundaryCondition{BoundaryKind::dirichlet, {}};
    CHECK_THROWS_AS(check_shapes(s), LabError);
}

TEST_CASE("domain and coefficient views") {
    const Domain d = Domain::unit_pi_square();
    CHECK(d.dimension() == 2);
    CHECK(d.measure() == doctest::Approx(M_PI * M_PI));
    CHECK_THROWS_AS(Domain::interval(1.0, 1.0), LabError);

    auto f = CoefficientField::of_time([](double t) { return Matrix::Constant(2, 2, t).eval(); }, 2, 2);
    Matrix asym(2, 2);
    asym << 1, 2, 3, 4;
    const auto c = CoefficientField::constant(asym);
    CHECK(c.transposed()(Point{0, 0}, 0.0)(0, 1) == 3.0);
    CHECK(f.time_reversed(2.0)(Point{0, 0}, 0.5)(0, 0) == 1.5);
    // reversing twice restores the original samples
    const auto twice = f.time_reversed(2.0).time_reversed(2.0);
    for (double t : {0.0, 0.3, 1.7, 2.0}) CHECK(twice(Point{0, 0}, t)(1, 1) == doctest::Approx(f(Point{0, 0}, t)(1, 1)).epsilon(1e-15));
}
