#include "poslab/errors.hpp"
#include "poslab/transform.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace poslab;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

SystemSpec constant_system(const Matrix& a, const Matrix& g, double horizon = 1.0) {
    SystemSpec s;
    s.m = static_cast<int>(a.rows());
    s.domain = Domain::unit_pi_square();
    s.a = CoefficientField::constant(a);
    s.g = CoefficientField::constant(g);
    s.initial = [m = s.m](const Point&) { return Vector::Ones(m).eval(); };
    s.horizon = horizon;
    return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = lo + (hi - lo) * i / (n - 1);
    return t;
}

// J J^{-1} = I, and the stored logarithmic derivatives match central differences of J.
void check_consistency(const TransformCertificate& c, const Point& x, double t) {
    const CertificateValue v = c.evaluate(x, t);
    const Eigen::Index m = v.J.rows();
    CHECK(max_abs(v.J * v.J_inv - Matrix::Identity(m, m)) <= 1e-10);
    const double h = 1e-5;
    if (t > h && t + h < c.t_valid()) {
        const Matrix dt = (c.J(x, t + h) - c.J(x, t - h)) / (2 * h);
        CHECK(max_abs(dt * v.J_inv - v.Jt_Jinv) <= 1e-6 * (1.0 + max_abs(v.Jt_Jinv)));
    }
    for (int k = 0; k < 2; ++k) {
        Point xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Matrix dk = (c.J(xp, t) - c.J(xm, t)) / (2 * h);
        CHECK(max_abs(dk * v.J_inv - v.DJ_Jinv[k]) <= 1e-6 * (1.0 + max_abs(v.DJ_Jinv[k])));
    }
}

}  // namespace

TEST_CASE("diagonalize_constant") {
    const Matrix a = mat2(1.0, 0.5, 0.0, 2.0);
    const Diagonalization d = diagonalize_constant(a);
    const Matrix D = d.J * a * d.J_inv;
    CHECK(max_offdiag_abs(D) <= 1e-14);
    CHECK(D(0, 0) == doctest::Approx(d.eigenvalues(0)));
    CHECK(D(1, 1) == doctest::Approx(d.eigenvalues(1)));

    try {
        diagonalize_constant(mat2(0.0, -1.0, 1.0, 0.0));
        FAIL("expected not-real-diagonalizable");
    } catch (const LabError& e) {
        CHECK(e.kind() == ErrorKind::not_real_diagonalizable);
    }
    CHECK_THROWS_AS(diagonalize_constant(Matrix::Identity(2, 2)), LabError);
    CHECK_THROWS_AS(diagonalize_constant(Matrix::Identity(3, 3)), LabError);
}

TEST_CASE("property: diagonalization of random matrices with real spectrum") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int tested = 0;
    while (tested < 300) {
        const Matrix a = mat2(u(rng), u(rng), u(rng), u(rng));
        const double disc = a.trace() * a.trace() - 4 * a.determinant();
        if (disc < 0.1) continue;
        ++tested;
        const Diagonalization d = diagonalize_constant(a);
        CHECK(max_offdiag_abs(d.J * a * d.J_inv) <= 1e-10 * (1.0 + max_abs(a)) * d.J.norm() * d.J_inv.norm());
        CHECK(max_abs(d.J * d.J_inv - Matrix::Identity(2, 2)) <= 1e-12);
    }
}

TEST_CASE("offdiag_ghat_constant worked examples") {
    const Matrix Jinv = mat2(1.0, 1.0, 1.0, 2.0);
    const auto [up, lo] = offdiag_ghat_constant(Jinv, mat2(0.0, 1.0, 1.0, 0.0));
    CHECK(up == doctest::Approx(3.0));
    CHECK(lo == doctest::Approx(0.0));

    // diagonal g with g11 - g22 = delta: (2 delta, -delta)
    for (double delta : {-2.0, 0.5, 3.0}) {
        const auto [u2, l2] = offdiag_ghat_constant(Jinv, mat2(1.0 + delta, 0.0, 0.0, 1.0));
        CHECK(u2 == doctest::Approx(2 * delta));
        CHECK(l2 == doctest::Approx(-delta));
    }
    CHECK_THROWS_AS(offdiag_ghat_constant(mat2(1.0, 2.0, 2.0, 4.0), Matrix::Identity(2, 2)), LabError);
}

TEST_CASE("property: offdiag_ghat_constant agrees with the matrix product") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int tested = 0;
    while (tested < 1000) {
        const Matrix Jinv = mat2(u(rng), u(rng), u(rng), u(rng));
        if (std::abs(Jinv.determinant()) < 0.1) continue;
        ++tested;
        const Matrix g = mat2(u(rng), u(rng), u(rng), u(rng));
        const Matrix ghat = Jinv.inverse() * g * Jinv;
        const auto [up, lo] = offdiag_ghat_constant(Jinv, g);
        const double scale = 1.0 + max_abs(ghat);
        CHECK(std::abs(up - ghat(0, 1)) <= 1e-12 * scale);
        CHECK(std::abs(lo - ghat(1, 0)) <= 1e-12 * scale);
    }
}

TEST_CASE("nilpotent and idempotent detectors") {
    Matrix N3 = Matrix::Zero(3, 3);
    N3(0, 1) = 2.0;
    N3(1, 2) = -1.0;
    N3(0, 2) = 0.5;
    CHECK(is_nilpotent(N3, 3));
    CHECK_FALSE(is_nilpotent(N3, 2));
    CHECK(is_idempotent(mat2(0.5, 0.25, 1.0, 0.5)));
    CHECK(is_idempotent(mat2(1.0, 0.0, -3.0, 0.0)));
    CHECK_FALSE(is_idempotent(mat2(1.0, 1.0, 1.0, 1.0)));

    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        // strictly upper triangular: nilpotent of index 3
        Matrix n = Matrix::Zero(3, 3);
        n(0, 1) = u(rng);
        n(0, 2) = u(rng);
        n(1, 2) = u(rng);
        CHECK(is_nilpotent(n, 3));
        // rank-one projector v w^T with w.v = 1
        Vector v(2), w(2);
        v << u(rng), u(rng);
        w << u(rng), u(rng);
        if (std::abs(w.dot(v)) < 0.2) continue;
        w /= w.dot(v);
        CHECK(is_idempotent(v * w.transpose(), 1e-11));
    }
}

TEST_CASE("matrix exponentials of nilpotent and idempotent generators") {
    Matrix N = Matrix::Zero(3, 3);
    N(0, 1) = 1.0;
    N(1, 2) = 2.0;
    const auto [e, einv] = exp_nilpotent(N, 3);
    const Matrix expect = Matrix::Identity(3, 3) + N + 0.5 * N * N;
    CHECK(max_abs(e - expect) == 0.0);
    CHECK(e(0, 2) == 1.0);
    CHECK(max_abs(e * einv - Matrix::Identity(3, 3)) <= 1e-14);

    const Matrix P = mat2(0.5, 0.25, 1.0, 0.5);
    const auto [f, finv] = exp_idempotent(P);
    CHECK(f(0, 0) == doctest::Approx(1.0 + 0.5 * (std::numbers::e - 1.0)));
    CHECK(max_abs(f * finv - Matrix::Identity(2, 2)) <= 1e-14);

    try {
        exp_nilpotent(mat2(1.0, 0.0, 0.0, 0.0), 2);
        FAIL("expected not-nilpotent");
    } catch (const LabError& err) {
        CHECK(err.kind() == ErrorKind::not_nilpotent);
    }
    try {
        exp_idempotent(mat2(2.0, 0.0, 0.0, 0.0));
        FAIL("expected not-idempotent");
    } catch (const LabError& err) {
        CHECK(err.kind() == ErrorKind::not_idempotent);
    }
}

TEST_CASE("every certificate kind is self-consistent") {
    const RiccatiSolution tanpath = riccati_solve([](double) { return mat2(0.0, -1.0, 1.0, 0.0); }, -1.0, 1.5);
    DiagExpParams p;
    p.gamma_slope = mat2(0.5, -0.2, 0.0, 0.3);
    p.gamma_rate = Vector(2);
    p.gamma_rate << 0.1, -0.4;
    p.generator = mat2(0.0, 1.0, 1.0, 0.0);
    p.rate = 0.7;

    std::vector<TransformCertificate> certs{
        constant_certificate(mat2(2.0, 1.0, 1.0, 1.0)),
        identity_certificate(3),
        diag_exp_certificate(p),
        nilpotent_certificate(ScalarPath::from_riccati(tanpath), 0.6),
        nilpotent_certificate(ScalarPath::constant(-1.0)),
        idempotent_certificate(ScalarPath::constant(-0.5)),
        compose_certificates(nilpotent_certificate(ScalarPath::from_riccati(tanpath)), diag_exp_certificate(p)),
        block_diagonal_certificate({nilpotent_certificate(ScalarPath::from_riccati(tanpath)),
                                    constant_certificate(Matrix::Constant(1, 1, 2.0))}),
    };
    for (const auto& c : certs) {
        INFO(c.description());
        for (double t : {0.0, 0.2, 0.7, 1.2})
            for (const Point& x : {Point{0.3, 1.1}, Point{2.0, 0.5}}) check_consistency(c, x, t);
    }
    CHECK_THROWS_AS(certs[3].evaluate(Point{0, 0}, 2.0), LabError);
}

TEST_CASE("check_certificate verdicts") {
    const auto samples = sample_points(Domain::unit_pi_square(), 9);
    const auto times = linspace(0.0, 1.0, 33);

    SUBCASE("identity on the growing counterexample: sign failure at -3/2") {
        const SystemSpec s = constant_system(Matrix::Identity(2, 2), mat2(1.5, -1.5, -1.5, 1.5));
        const CertificateReport r = check_certificate(identity_certificate(2), s, samples, times);
        CHECK(r.verdict == CertificateVerdict::sign_failed);
        CHECK(r.min_offdiag_ghat == doctest::Approx(-1.5));
        CHECK(r.max_offdiag_a == 0.0);
    }
    SUBCASE("identity with a rotational a: diagonality failure") {
        const SystemSpec s = constant_system(mat2(0.5, -1.5, 1.5, 0.5), Matrix::Zero(2, 2));
        const CertificateReport r = check_certificate(identity_certificate(2), s, samples, times);
        CHECK(r.verdict == CertificateVerdict::diagonality_failed);
        CHECK(r.max_offdiag_a == doctest::Approx(1.5));
    }
    SUBCASE("Riccati nilpotent certificate cancels the upper entry") {
        const Matrix g = mat2(2.0, -0.75, 1.0, 0.0);
        const SystemSpec s = constant_system(Matrix::Identity(2, 2), g);
        const RiccatiSolution b = riccati_solve([g](double) { return g; }, -1.0, 1.0);
        const TransformCertificate c = nilpotent_certificate(ScalarPath::from_riccati(b));
        const CertificateReport r = check_certificate(c, s, samples, times);
        CHECK(r.verdict == CertificateVerdict::certified);
        // remaining lower entry is g21 = 1
        CHECK(r.min_offdiag_ghat == doctest::Approx(0.0).epsilon(1e-8));
        CHECK(r.t_pos == r.t_valid);
    }
    SUBCASE("a diagonal shift e^{alpha t} leaves the off-diagonal entries alone") {
        const Matrix g = mat2(-1.0, -0.5, 0.3, 0.0);
        const SystemSpec s = constant_system(Matrix::Identity(2, 2), g);
        const RiccatiSolution b = riccati_solve([g](double) { return g; }, -1.0, 1.0);
        for (double rate : {-2.0, 0.5, 3.0}) {
            const CertificateReport r0 =
                check_certificate(nilpotent_certificate(ScalarPath::from_riccati(b)), s, samples, times);
            const CertificateReport r1 =
                check_certificate(nilpotent_certificate(ScalarPath::from_riccati(b), rate), s, samples, times);
            CHECK(r1.min_offdiag_ghat == doctest::Approx(r0.min_offdiag_ghat).epsilon(1e-12));
            CHECK(r1.verdict == r0.verdict);
        }
    }
    SUBCASE("size mismatch and empty samples are rejected") {
        const SystemSpec s = constant_system(Matrix::Identity(2, 2), Matrix::Zero(2, 2));
        CHECK_THROWS_AS(check_certificate(identity_certificate(3), s, samples, times), LabError);
        CHECK_THROWS_AS(check_certificate(identity_certificate(2), s, {}, times), LabError);
    }
}

TEST_CASE("inverse-positivity windows") {
    // b = tan(t - pi/4) turns positive at pi/4, where J^{-1}(1,2) = -b turns negative.
    const RiccatiSolution tanpath = riccati_solve([](double) { return mat2(0.0, -1.0, 1.0, 0.0); }, -1.0, 1.5);
    const TransformCertificate nil = nilpotent_certificate(ScalarPath::from_riccati(tanpath));
    CHECK(nil.t_pos() == doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));

    const std::array<Point, 1> pts{Point{0.5, 0.5}};
    const TransformCertificate comp = compose_certificates(nil, identity_certificate(2), pts);
    CHECK(std::abs(comp.t_pos() - std::numbers::pi / 4) <= 1e-6);
    CHECK(comp.t_valid() == doctest::Approx(nil.t_valid()));

    // c = 1 - 2e^{-t}: J^{-1}(2,1) = (1/e - 1) c is negative once c > 0, at t = ln 2
    const RiccatiSolution cpath = riccati_idempotent_solve(
        [](double) { return mat2(1.0, 0.0, -(std::numbers::e - 1.0), 0.0); }, -1.0, 3.0);
    const TransformCertificate idem = idempotent_certificate(ScalarPath::from_riccati(cpath));
    CHECK(idem.t_pos() == doctest::Approx(std::log(2.0)).epsilon(1e-8));

    // constant J with a negative inverse entry: window closed from the start
    const TransformCertificate k = constant_certificate(mat2(1.0, 1.0, 0.0, 1.0));
    CHECK(k.t_pos() == 0.0);
    CHECK(std::isinf(identity_certificate(2).t_pos()));
}

TEST_CASE("certificate kind names round-trip") {
    for (auto k : {CertificateKind::constant, CertificateKind::block_diagonal, CertificateKind::diag_exp,
                   CertificateKind::nilpotent_exp, CertificateKind::idempotent_exp, CertificateKind::composed})
        CHECK(certificate_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(certificate_kind_from_string("spiral"), LabError);
}
