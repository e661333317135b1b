#include "poslab/certificate_spec.hpp"
#include "poslab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace poslab;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

CertificateSpec reparse(const CertificateSpec& s) {
    YAML::Emitter out;
    out << to_yaml(s);
    return certificate_spec_from_yaml(YAML::Load(out.c_str()));
}

}  // namespace

TEST_CASE("YAML round trip keeps every field") {
    CertificateSpec nil;
    nil.kind = "nilpotent-exp";
    nil.initial = -1.0;
    nil.shift_rate = 0.75;
    CertificateSpec idem;
    idem.kind = "idempotent-exp";
    idem.fixed = -0.23;
    CertificateSpec comp;
    comp.kind = "composed";
    comp.stages = {nil, idem};
    comp.horizon = 1.5;

    const CertificateSpec back = reparse(comp);
    REQUIRE(back.stages.size() == 2);
    CHECK(back.kind == "composed");
    CHECK(back.horizon == 1.5);
    CHECK(back.stages[0].kind == "nilpotent-exp");
    CHECK(back.stages[0].initial == -1.0);
    CHECK(back.stages[0].shift_rate == 0.75);
    CHECK_FALSE(back.stages[0].fixed);
    REQUIRE(back.stages[1].fixed);
    CHECK(*back.stages[1].fixed == -0.23);

    CertificateSpec diag;
    diag.kind = "diag-exp";
    diag.gamma_slope = mat2(0.5, 0.0, -0.3, 0.0);
    diag.gamma_rate = Vector::Constant(2, 0.1);
    diag.generator = mat2(0.0, 1.0, 1.0, 0.0);
    diag.rate = 2.0;
    const CertificateSpec d2 = reparse(diag);
    CHECK(max_abs(d2.gamma_slope - diag.gamma_slope) == 0.0);
    CHECK(max_abs(d2.generator - diag.generator) == 0.0);
    CHECK(d2.gamma_rate(1) == 0.1);
    CHECK(d2.rate == 2.0);

    CertificateSpec blocks;
    blocks.kind = "block-diagonal";
    CertificateSpec one;
    one.kind = "constant";
    one.matrix = Matrix::Constant(1, 1, 2.0);
    blocks.blocks = {nil, one};
    const CertificateSpec b2 = reparse(blocks);
    CHECK(b2.size() == 3);
    CHECK(b2.blocks[1].matrix(0, 0) == 2.0);
}

TEST_CASE("malformed certificate YAML") {
    auto kind_of = [](const char* text) {
        try {
            certificate_spec_from_yaml(YAML::Load(text));
        } catch (const LabError& e) {
            return e.kind();
        }
        return ErrorKind::invalid_argument;
    };
    CHECK(kind_of("kind: constant\nmatrx: [[1]]") == ErrorKind::config);
    CHECK(kind_of("kind: spiral") == ErrorKind::unknown_kind);
    CHECK(kind_of("initial: 1") == ErrorKind::config);
    CHECK(kind_of("kind: constant\nmatrix: [[1, 2], [3]]") == ErrorKind::config);
    CHECK(kind_of("kind: nilpotent-exp\ninitial: abc") == ErrorKind::config);
    CHECK(kind_of("[1, 2]") == ErrorKind::config);
}

TEST_CASE("building each kind") {
    const CoefficientField g = CoefficientField::constant(mat2(2.0, -0.75, 1.0, 0.0));

    CertificateSpec id;
    CHECK(build_certificate(id, g, 2, 1.0).J(Point{0, 0}, 0.5).isIdentity());

    CertificateSpec nil;
    nil.kind = "nilpotent-exp";
    nil.initial = -1.0;
    const TransformCertificate c = build_certificate(nil, g, 2, 20.0);
    REQUIRE(c.riccati().size() == 1);
    CHECK(c.riccati()[0].classification == RiccatiClass::converges_to_root);
    const double t = 2.0;
    const double exact = -(0.5 + 1.5 * std::exp(t)) / (1.0 + std::exp(t));
    CHECK(c.J(Point{0, 0}, t)(0, 1) == doctest::Approx(exact).epsilon(1e-8));

    CertificateSpec bad = nil;
    bad.kind = "constant";
    bad.matrix = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(build_certificate(bad, g, 2, 1.0), LabError);

    CertificateSpec empty;
    empty.kind = "composed";
    CHECK_THROWS_AS(build_certificate(empty, g, 2, 1.0), LabError);

    CertificateSpec three = nil;
    CHECK_THROWS_AS(build_certificate(three, CoefficientField::zero(3), 3, 1.0), LabError);
}

TEST_CASE("composed stages see the running reaction matrix") {
    // Stage one: nilpotent with b = -1 fixed; stage two solves its Riccati
    // equation against J g J^{-1} of stage one.
    const Matrix g = mat2(-1.0, -0.5, -0.5, 0.0);
    CertificateSpec s1;
    s1.kind = "nilpotent-exp";
    s1.fixed = -1.0;
    CertificateSpec s2;
    s2.kind = "idempotent-exp";
    s2.initial = -1.0;
    CertificateSpec comp;
    comp.kind = "composed";
    comp.stages = {s1, s2};
    const TransformCertificate c = build_certificate(comp, CoefficientField::constant(g), 2, 1.0);
    REQUIRE(c.riccati().size() == 1);

    const Matrix J1 = mat2(1.0, -1.0, 0.0, 1.0);
    const Matrix g1 = J1 * g * J1.inverse();
    // c' = (e-1) g12 c^2 - (g11 - g22) c - g21/(e-1) with g -> g1
    const double em1 = std::numbers::e - 1.0;
    const double c0 = -1.0;
    const double slope = em1 * g1(0, 1) * c0 * c0 - (g1(0, 0) - g1(1, 1)) * c0 - g1(1, 0) / em1;
    CHECK(c.riccati()[0].derivative(0.0) == doctest::Approx(slope).epsilon(1e-12));
}

TEST_CASE("size of a certificate description") {
    CertificateSpec s;
    CHECK(s.size() == -1);
    s.kind = "diag-exp";
    s.gamma_rate = Vector::Zero(3);
    CHECK(s.size() == 3);
    s.kind = "idempotent-exp";
    CHECK(s.size() == 2);
}
