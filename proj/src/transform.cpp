#include "poslab/transform.hpp"

#include "poslab/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace poslab {

// ---------------------------------------------------------------------------
// Matrix helpers

namespace {

void require_2x2(const Matrix& m, const char* what) {
    if (m.rows() != 2 || m.cols() != 2)
        throw LabError(ErrorKind::invalid_argument, std::string(what) + " must be 2x2");
}

// Unit max-entry eigenvector, flipped to be nonnegative when all entries share a sign.
Vector normalize_eigenvector(Vector v) {
    const double big = v.cwiseAbs().maxCoeff();
    v /= big;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    if ((v.array() <= 0.0).all()) v = -v;
    return v;
}

}  // namespace

Diagonalization diagonalize_constant(const Matrix& a) {
    require_2x2(a, "diagonalize_constant input");
    const double tr = a.trace();
    const double det = a.determinant();
    const double disc = tr * tr - 4.0 * det;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (disc <= 1e-12 * scale * scale) {
        std::ostringstream os;
        os << "eigenvalues are " << (disc < 0.0 ? "complex" : "repeated") << " (discriminant " << disc << ")";
        throw LabError(ErrorKind::not_real_diagonalizable, os.str());
    }
    const double sq = std::sqrt(disc);
    std::array<double, 2> lambda{0.5 * (tr + sq), 0.5 * (tr - sq)};
    std::array<Vector, 2> vec;
    for (int i = 0; i < 2; ++i) {
        Vector v1(2), v2(2);
        v1 << a(0, 1), lambda[i] - a(0, 0);
        v2 << lambda[i] - a(1, 1), a(1, 0);
        vec[i] = normalize_eigenvector(v1.norm() >= v2.norm() ? v1 : v2);
    }
    // Keep J close to the identity when the eigenvectors are nearly axis aligned.
    if (std::abs(vec[0](0)) < std::abs(vec[0](1)) && std::abs(vec[1](1)) < std::abs(vec[1](0))) {
        std::swap(lambda[0], lambda[1]);
        std::swap(vec[0], vec[1]);
    }
    Diagonalization d;
    d.J_inv = Matrix(2, 2);
    d.J_inv.col(0) = vec[0];
    d.J_inv.col(1) = vec[1];
    d.J = d.J_inv.inverse();
    d.eigenvalues = Vector(2);
    d.eigenvalues << lambda[0], lambda[1];
    return d;
}

std::pair<double, double> offdiag_ghat_constant(const Matrix& J_inv, const Matrix& g) {
    require_2x2(J_inv, "J^{-1}");
    require_2x2(g, "g");
    const double a = J_inv(0, 0), b = J_inv(0, 1), c = J_inv(1, 0), d = J_inv(1, 1);
    const double det = a * d - b * c;
    const double scale = std::max({std::abs(a * d), std::abs(b * c), 1e-300});
    if (std::abs(det) <= 1e-14 * scale) throw LabError(ErrorKind::singular_transform, "ad - bc = 0");
    const double dg = g(0, 0) - g(1, 1);
    const double upper = (d * d * g(0, 1) - b * b * g(1, 0) + b * d * dg) / det;
    const double lower = (a * a * g(1, 0) - c * c * g(0, 1) - a * c * dg) / det;
    return {upper, lower};
}

bool is_nilpotent(const Matrix& N, int index, double tol) {
    if (N.rows() != N.cols() || index < 1) return false;
    Matrix p = Matrix::Identity(N.rows(), N.cols());
    for (int i = 0; i < index; ++i) p = p * N;
    const double scale = 1.0 + std::pow(max_abs(N), index);
    return max_abs(p) <= tol * scale;
}

bool is_idempotent(const Matrix& N, double tol) {
    if (N.rows() != N.cols()) return false;
    return max_abs(N * N - N) <= tol * (1.0 + max_abs(N));
}

std::pair<Matrix, Matrix> exp_nilpotent(const Matrix& N, int index) {
    if (!is_nilpotent(N, index)) {
        std::ostringstream os;
        os << "N^" << index << " != 0";
        throw LabError(ErrorKind::not_nilpotent, os.str());
    }
    const Eigen::Index m = N.rows();
    Matrix e = Matrix::Identity(m, m), e_inv = Matrix::Identity(m, m);
    Matrix power = Matrix::Identity(m, m);
    double factorial = 1.0;
    for (int i = 1; i < index; ++i) {
        power = power * N;
        factorial *= i;
        e += power / factorial;
        e_inv += ((i % 2) ? -1.0 : 1.0) * power / factorial;
    }
    return {e, e_inv};
}

std::pair<Matrix, Matrix> exp_idempotent(const Matrix& N) {
    if (!is_idempotent(N)) throw LabError(ErrorKind::not_idempotent, "N^2 != N");
    const Matrix I = Matrix::Identity(N.rows(), N.cols());
    return {I + (std::numbers::e - 1.0) * N, I + (1.0 / std::numbers::e - 1.0) * N};
}

// ---------------------------------------------------------------------------
// Certificates

std::string to_string(CertificateKind k) {
    switch (k) {
        case CertificateKind::constant: return "constant";
        case CertificateKind::block_diagonal: return "block-diagonal";
        case CertificateKind::diag_exp: return "diag-exp";
        case CertificateKind::nilpotent_exp: return "nilpotent-exp";
        case CertificateKind::idempotent_exp: return "idempotent-exp";
        case CertificateKind::composed: return "composed";
    }
    return "constant";
}

CertificateKind certificate_kind_from_string(const std::string& s) {
    for (auto k : {CertificateKind::constant, CertificateKind::block_diagonal, CertificateKind::diag_exp,
                   CertificateKind::nilpotent_exp, CertificateKind::idempotent_exp, CertificateKind::composed})
        if (to_string(k) == s) return k;
    throw LabError(ErrorKind::unknown_kind, "unknown certificate kind '" + s + "'");
}

ScalarPath ScalarPath::constant(double v) {
    ScalarPath p;
    p.value = [v](double) { return v; };
    p.derivative = [](double) { return 0.0; };
    p.sign_exit = v > 0.0 ? 0.0 : kInfinity;
    p.time_dependent = false;
    return p;
}

ScalarPath ScalarPath::from_riccati(const RiccatiSolution& sol) {
    auto shared = std::make_shared<const RiccatiSolution>(sol);
    ScalarPath p;
    p.value = [shared](double t) { return shared->value(t); };
    p.derivative = [shared](double t) { return shared->derivative(t); };
    p.valid_until = sol.classification == RiccatiClass::blow_up ? sol.valid_until() : sol.horizon;
    p.sign_exit = sol.sign_exit_time;
    return p;
}

TransformCertificate::TransformCertificate(CertificateKind kind, int m, Evaluator eval, double t_valid,
                                           double t_pos, bool x_dependent, bool time_dependent,
                                           std::string description)
    : kind_(kind),
      m_(m),
      eval_(std::move(eval)),
      t_valid_(t_valid),
      t_pos_(std::min(t_pos, t_valid)),
      x_dependent_(x_dependent),
      time_dependent_(time_dependent),
      description_(std::move(description)) {
    if (!(t_valid_ > 0.0)) throw LabError(ErrorKind::empty_window, "certificate validity window is empty");
}

CertificateValue TransformCertificate::evaluate(const Point& x, double t) const {
    if (!eval_) throw LabError(ErrorKind::certificate_evaluation, "empty certificate");
    const double slack = 1e-12 * std::max(1.0, std::isfinite(t_valid_) ? t_valid_ : 1.0);
    if (t < -slack || t > t_valid_ + slack) {
        std::ostringstream os;
        os << "t = " << t << " outside the validity window [0, " << t_valid_ << ")";
        throw LabError(ErrorKind::window_exceeded, os.str());
    }
    return eval_(x, t);
}

namespace {

CertificateValue static_value(const Matrix& J, const Matrix& J_inv) {
    const Eigen::Index m = J.rows();
    CertificateValue v;
    v.J = J;
    v.J_inv = J_inv;
    v.Jt_Jinv = Matrix::Zero(m, m);
    v.DJ_Jinv = {Matrix::Zero(m, m), Matrix::Zero(m, m)};
    return v;
}

double min_entry(const Matrix& m) { return m.minCoeff(); }

}  // namespace

TransformCertificate constant_certificate(const Matrix& J) {
    if (J.rows() != J.cols() || J.rows() == 0) throw LabError(ErrorKind::invalid_argument, "J must be square");
    const Eigen::FullPivLU<Matrix> lu(J);
    if (!lu.isInvertible()) throw LabError(ErrorKind::singular_transform, "constant J is singular");
    const Matrix J_inv = lu.inverse();
    const CertificateValue v = static_value(J, J_inv);
    const double t_pos = min_entry(J_inv) >= -1e-14 ? kInfinity : 0.0;
    return TransformCertificate(
        CertificateKind::constant, static_cast<int>(J.rows()), [v](const Point&, double) { return v; }, kInfinity,
        t_pos, false, false, J.isIdentity(0.0) ? "identity" : "constant J");
}

TransformCertificate identity_certificate(int m) { return constant_certificate(Matrix::Identity(m, m)); }

TransformCertificate block_diagonal_certificate(const std::vector<TransformCertificate>& blocks) {
    if (blocks.empty()) throw LabError(ErrorKind::invalid_argument, "block-diagonal certificate needs blocks");
    int m = 0;
    double t_valid = kInfinity, t_pos = kInfinity;
    bool xdep = false, tdep = false;
    std::vector<RiccatiSolution> sols;
    std::string desc = "blockdiag(";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        m += b.size();
        t_valid = std::min(t_valid, b.t_valid());
        t_pos = std::min(t_pos, b.t_pos());
        xdep = xdep || b.x_dependent();
        tdep = tdep || b.time_dependent();
        sols.insert(sols.end(), b.riccati().begin(), b.riccati().end());
        desc += (i ? ", " : "") + b.description();
    }
    desc += ")";
    auto eval = [blocks, m](const Point& x, double t) {
        CertificateValue out;
        out.J = Matrix::Zero(m, m);
        out.J_inv = Matrix::Zero(m, m);
        out.Jt_Jinv = Matrix::Zero(m, m);
        out.DJ_Jinv = {Matrix::Zero(m, m), Matrix::Zero(m, m)};
        int off = 0;
        for (const auto& b : blocks) {
            const int n = b.size();
            const CertificateValue v = b.evaluate(x, t);
            out.J.block(off, off, n, n) = v.J;
            out.J_inv.block(off, off, n, n) = v.J_inv;
            out.Jt_Jinv.block(off, off, n, n) = v.Jt_Jinv;
            for (int k = 0; k < 2; ++k) out.DJ_Jinv[k].block(off, off, n, n) = v.DJ_Jinv[k];
            off += n;
        }
        return out;
    };
    TransformCertificate cert(CertificateKind::block_diagonal, m, eval, t_valid, t_pos, xdep, tdep, desc);
    cert.attach_riccati(std::move(sols));
    return cert;
}

TransformCertificate diag_exp_certificate(const DiagExpParams& p) {
    const Eigen::Index m = p.gamma_rate.size();
    if (m == 0 || p.gamma_slope.rows() != m || p.gamma_slope.cols() != 2)
        throw LabError(ErrorKind::invalid_argument, "diag-exp needs an m x 2 slope matrix and m rates");
    const Matrix K = p.generator.size() == 0 ? Matrix::Zero(m, m) : p.generator;
    const Matrix C0 = p.base.size() == 0 ? Matrix::Identity(m, m) : p.base;
    if (K.rows() != m || K.cols() != m || C0.rows() != m || C0.cols() != m)
        throw LabError(ErrorKind::invalid_argument, "diag-exp generator/base shape mismatch");
    const Eigen::FullPivLU<Matrix> lu(C0);
    if (!lu.isInvertible()) throw LabError(ErrorKind::singular_transform, "diag-exp base matrix is singular");
    const Matrix C0_inv = lu.inverse();
    const Matrix kK = p.rate * K;
    const bool xdep = !p.gamma_slope.isZero(0.0);
    const bool tdep = !p.gamma_rate.isZero(0.0) || !kK.isZero(0.0);

    auto eval = [p, kK, C0, C0_inv, m](const Point& x, double t) {
        Vector gamma = p.gamma_slope.col(0) * x[0] + p.gamma_slope.col(1) * x[1] + p.gamma_rate * t;
        const Vector e = gamma.array().exp();
        const Vector e_inv = (-gamma.array()).exp();
        const Matrix C = kK.isZero(0.0) ? C0 : Matrix((kK * t).exp() * C0);
        const Matrix C_inv = kK.isZero(0.0) ? C0_inv : Matrix(C0_inv * (-kK * t).exp());
        CertificateValue v;
        v.J = e.asDiagonal() * C;
        v.J_inv = C_inv * e_inv.asDiagonal();
        v.Jt_Jinv = Matrix(p.gamma_rate.asDiagonal()) + e.asDiagonal() * kK * e_inv.asDiagonal();
        for (int k = 0; k < 2; ++k) v.DJ_Jinv[k] = Matrix(p.gamma_slope.col(k).asDiagonal());
        (void)m;
        return v;
    };
    const std::array<Point, 1> origin{Point{0.0, 0.0}};
    const double t_pos = inverse_positivity_window(eval, tdep, origin, tdep ? 10.0 : kInfinity);
    return TransformCertificate(CertificateKind::diag_exp, static_cast<int>(m), eval, kInfinity,
                                tdep && std::isfinite(t_pos) && t_pos >= 10.0 ? kInfinity : t_pos, xdep, tdep,
                                "diag(exp gamma) exp(k t K) C0");
}

TransformCertificate nilpotent_certificate(const ScalarPath& b, double shift_rate) {
    auto eval = [b, shift_rate](const Point&, double t) {
        const double bv = b.value(t), db = b.derivative(t);
        const double s = std::exp(shift_rate * t);
        CertificateValue v;
        v.J = Matrix(2, 2);
        v.J << s, s * bv, 0.0, s;
        v.J_inv = Matrix(2, 2);
        v.J_inv << 1.0 / s, -bv / s, 0.0, 1.0 / s;
        v.Jt_Jinv = Matrix(2, 2);
        v.Jt_Jinv << shift_rate, db, 0.0, shift_rate;
        v.DJ_Jinv = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
        return v;
    };
    std::ostringstream desc;
    desc << "exp(N), N = [[0,b(t)],[0,0]]";
    if (shift_rate != 0.0) desc << ", shift " << shift_rate << " t";
    return TransformCertificate(CertificateKind::nilpotent_exp, 2, eval, b.valid_until, b.sign_exit, false,
                                b.time_dependent || shift_rate != 0.0, desc.str());
}

TransformCertificate idempotent_certificate(const ScalarPath& c) {
    constexpr double em1 = std::numbers::e - 1.0;
    constexpr double eim1 = 1.0 / std::numbers::e - 1.0;
    auto eval = [c](const Point&, double t) {
        const double cv = c.value(t), dc = c.derivative(t);
        CertificateValue v;
        v.J = Matrix(2, 2);
        v.J << std::numbers::e, 0.0, em1 * cv, 1.0;
        v.J_inv = Matrix(2, 2);
        v.J_inv << 1.0 / std::numbers::e, 0.0, eim1 * cv, 1.0;
        // (e-1) N' (I + (e^{-1}-1) N) with N' = [[0,0],[c',0]]
        v.Jt_Jinv = Matrix::Zero(2, 2);
        v.Jt_Jinv(1, 0) = em1 * dc / std::numbers::e;
        v.DJ_Jinv = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
        return v;
    };
    return TransformCertificate(CertificateKind::idempotent_exp, 2, eval, c.valid_until, c.sign_exit, false,
                                c.time_dependent, "I + (e-1)N, N = [[1,0],[c(t),0]]");
}

double inverse_positivity_window(const TransformCertificate::Evaluator& eval, bool time_dependent,
                                 std::span<const Point> points, double limit, double tol) {
    const std::array<Point, 1> origin{Point{0.0, 0.0}};
    if (points.empty()) points = origin;
    auto negative_at = [&](double t) {
        for (const Point& x : points)
            if (eval(x, t).J_inv.minCoeff() < -tol) return true;
        return false;
    };
    if (negative_at(0.0)) return 0.0;
    if (!time_dependent) return kInfinity;
    if (!std::isfinite(limit)) limit = 10.0;
    constexpr int scan = 2000;
    double prev = 0.0;
    for (int i = 1; i <= scan; ++i) {
        const double t = limit * i / scan;
        if (negative_at(t)) {
            double lo = prev, hi = t;
            for (int it = 0; it < 60 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                if (negative_at(mid))
                    hi = mid;
                else
                    lo = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = t;
    }
    return limit;
}

TransformCertificate compose_certificates(const TransformCertificate& first, const TransformCertificate& second,
                                          std::span<const Point> scan_points, double scan_horizon) {
    if (first.size() != second.size()) throw LabError(ErrorKind::invalid_argument, "composed sizes differ");
    const double t_valid = std::min(first.t_valid(), second.t_valid());
    if (!(t_valid > 0.0)) throw LabError(ErrorKind::empty_window, "composed windows do not overlap");
    auto eval = [first, second](const Point& x, double t) {
        const CertificateValue a = first.evaluate(x, t);
        const CertificateValue b = second.evaluate(x, t);
        CertificateValue v;
        v.J = b.J * a.J;
        v.J_inv = a.J_inv * b.J_inv;
        v.Jt_Jinv = b.Jt_Jinv + b.J * a.Jt_Jinv * b.J_inv;
        for (int k = 0; k < 2; ++k) v.DJ_Jinv[k] = b.DJ_Jinv[k] + b.J * a.DJ_Jinv[k] * b.J_inv;
        return v;
    };
    const bool tdep = first.time_dependent() || second.time_dependent();
    const double limit = std::isfinite(t_valid) ? t_valid : scan_horizon;
    double t_pos = inverse_positivity_window(eval, tdep, scan_points, limit);
    if (tdep && !std::isfinite(t_valid) && t_pos >= scan_horizon) t_pos = kInfinity;
    TransformCertificate cert(CertificateKind::composed, first.size(), eval, t_valid, t_pos,
                              first.x_dependent() || second.x_dependent(), tdep,
                              "(" + second.description() + ") * (" + first.description() + ")");
    std::vector<RiccatiSolution> sols = first.riccati();
    sols.insert(sols.end(), second.riccati().begin(), second.riccati().end());
    cert.attach_riccati(std::move(sols));
    return cert;
}

// ---------------------------------------------------------------------------
// Checking

std::string to_string(CertificateVerdict v) {
    switch (v) {
        case CertificateVerdict::certified: return "certified";
        case CertificateVerdict::diagonality_failed: return "diagonality-failed";
        case CertificateVerdict::sign_failed: return "sign-failed";
    }
    return "certified";
}

Matrix sample_coefficient(const CoefficientField& f, const SystemSpec& spec, const Point& x, double t) {
    if (f.empty()) return Matrix::Zero(spec.m, spec.m);
    if (f.dependence() == CoefficientField::Dependence::state) return f.at_state(spec.initial(x));
    return f(x, t);
}

CertificateReport check_certificate(const TransformCertificate& cert, const SystemSpec& spec,
                                    std::span<const Point> samples, std::span<const double> times,
                                    const CertificateTolerances& tol, bool transpose_g) {
    check_shapes(spec);
    if (cert.size() != spec.m) throw LabError(ErrorKind::invalid_argument, "certificate size differs from m");
    if (samples.empty() || times.empty())
        throw LabError(ErrorKind::invalid_argument, "certificate check needs sample points and times");

    CertificateReport rep;
    rep.t_valid = cert.t_valid();
    rep.t_pos = cert.t_pos();
    rep.transposed_g = transpose_g;
    double coeff_scale = 0.0;
    const int dim = spec.domain.dimension();

    for (double t : times) {
        for (const Point& x : samples) {
            CertificateValue v;
            Matrix a, g;
            std::vector<Matrix> b;
            try {
                v = cert.evaluate(x, t);
                a = spec.potential ? spec.potential->jacobian_at(spec.initial(x))
                                   : sample_coefficient(spec.a, spec, x, t);
                g = sample_coefficient(spec.g, spec, x, t);
                for (const auto& bk : spec.b) b.push_back(sample_coefficient(bk, spec, x, t));
            } catch (const LabError& e) {
                std::ostringstream os;
                os << "at x = (" << x[0] << ", " << x[1] << "), t = " << t << ": " << e.what();
                throw LabError(ErrorKind::certificate_evaluation, os.str());
            }
            coeff_scale = std::max({coeff_scale, max_abs(a), max_abs(g)});
            rep.max_offdiag_a = std::max(rep.max_offdiag_a, max_offdiag_abs(v.J * a * v.J_inv));
            for (const Matrix& bk : b) {
                coeff_scale = std::max(coeff_scale, max_abs(bk));
                rep.max_offdiag_b = std::max(rep.max_offdiag_b, max_offdiag_abs(v.J * bk * v.J_inv));
            }
            for (int k = 0; k < dim; ++k)
                rep.max_offdiag_dj = std::max(rep.max_offdiag_dj, max_offdiag_abs(v.DJ_Jinv[k]));
            const Matrix ghat = v.J * (transpose_g ? Matrix(g.transpose()) : g) * v.J_inv + v.Jt_Jinv;
            const double lowest = min_offdiag(ghat);
            if (lowest < rep.min_offdiag_ghat) {
                rep.min_offdiag_ghat = lowest;
                rep.worst_point = x;
                rep.worst_time = t;
            }
        }
    }

    rep.tol_diag = tol.tol_diag >= 0.0 ? tol.tol_diag : 1e-9 * (1.0 + coeff_scale);
    rep.tol_sign = tol.tol_sign >= 0.0 ? tol.tol_sign : 1e-9 * (1.0 + coeff_scale);
    const double diag = std::max({rep.max_offdiag_a, rep.max_offdiag_b, rep.max_offdiag_dj});
    if (diag > rep.tol_diag)
        rep.verdict = CertificateVerdict::diagonality_failed;
    else if (rep.min_offdiag_ghat < -rep.tol_sign)
        rep.verdict = CertificateVerdict::sign_failed;
    else
        rep.verdict = CertificateVerdict::certified;
    return rep;
}

}  // namespace poslab
