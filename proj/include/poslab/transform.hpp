#pragma once

#include "poslab/linalg.hpp"
#include "poslab/riccati.hpp"
#include "poslab/system_model.hpp"

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace poslab {

// ---------------------------------------------------------------------------
// Matrix helpers

struct Diagonalization {
    Matrix J;
    Matrix J_inv;  ///< columns are eigenvectors
    Vector eigenvalues;
};

/// Real diagonalization of a 2x2 matrix with distinct real eigenvalues.
Diagonalization diagonalize_constant(const Matrix& a);

/// Off-diagonal entries (upper = (1,2), lower = (2,1)) of J g J^{-1} for
/// J^{-1} = [[a,b],[c,d]], from the closed-form expressions.
std::pair<double, double> offdiag_ghat_constant(const Matrix& J_inv, const Matrix& g);

bool is_nilpotent(const Matrix& N, int index, double tol = 1e-12);
bool is_idempotent(const Matrix& N, double tol = 1e-12);

/// (e^N, e^{-N}) as finite sums; N^index must vanish.
std::pair<Matrix, Matrix> exp_nilpotent(const Matrix& N, int index);
/// (I + (e-1)N, I + (e^{-1}-1)N); N must satisfy N^2 = N.
std::pair<Matrix, Matrix> exp_idempotent(const Matrix& N);

// ---------------------------------------------------------------------------
// Certificates

struct CertificateValue {
    Matrix J;
    Matrix J_inv;
    Matrix Jt_Jinv;                 ///< J_t J^{-1}
    std::array<Matrix, 2> DJ_Jinv;  ///< (d_k J) J^{-1} per axis; zero for unused axes
};

enum class CertificateKind { constant, block_diagonal, diag_exp, nilpotent_exp, idempotent_exp, composed };

std::string to_string(CertificateKind k);
CertificateKind certificate_kind_from_string(const std::string& s);

/// Scalar entry driving a nilpotent or idempotent generator.
struct ScalarPath {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    double valid_until = kInfinity;
    double sign_exit = kInfinity;  ///< first time the value is > 0
    bool time_dependent = true;

    static ScalarPath constant(double v);
    static ScalarPath from_riccati(const RiccatiSolution& sol);
};

/// Invertible family J(x, t) with its logarithmic derivatives and windows.
class TransformCertificate {
public:
    using Evaluator = std::function<CertificateValue(const Point&, double)>;

    TransformCertificate() = default;
    TransformCertificate(CertificateKind kind, int m, Evaluator eval, double t_valid, double t_pos,
                         bool x_dependent, bool time_dependent, std::string description);

    CertificateKind kind() const { return kind_; }
    int size() const { return m_; }
    double t_valid() const { return t_valid_; }
    double t_pos() const { return t_pos_; }
    bool x_dependent() const { return x_dependent_; }
    bool time_dependent() const { return time_dependent_; }
    const std::string& description() const { return description_; }
    bool empty() const { return !eval_; }

    /// All evaluators at once. Throws window-exceeded outside [0, t_valid].
    CertificateValue evaluate(const Point& x, double t) const;
    Matrix J(const Point& x, double t) const { return evaluate(x, t).J; }
    Matrix inverse(const Point& x, double t) const { return evaluate(x, t).J_inv; }

    /// Riccati trajectories that drive this certificate, in construction order.
    const std::vector<RiccatiSolution>& riccati() const { return riccati_; }
    void attach_riccati(std::vector<RiccatiSolution> sols) { riccati_ = std::move(sols); }

private:
    CertificateKind kind_ = CertificateKind::constant;
    int m_ = 0;
    Evaluator eval_;
    double t_valid_ = kInfinity;
    double t_pos_ = kInfinity;
    bool x_dependent_ = false;
    bool time_dependent_ = false;
    std::string description_;
    std::vector<RiccatiSolution> riccati_;
};

TransformCertificate constant_certificate(const Matrix& J);
TransformCertificate identity_certificate(int m);
TransformCertificate block_diagonal_certificate(const std::vector<TransformCertificate>& blocks);

/// J = diag(e^{gamma_i(x,t)}) * exp(rate t K) * C0 with affine
/// gamma_i(x, t) = slope(i, 0) x + slope(i, 1) y + gamma_rate(i) t.
struct DiagExpParams {
    Matrix gamma_slope;  ///< m x 2 (unused axes zero)
    Vector gamma_rate;   ///< m
    Matrix generator;    ///< K, m x m (zero for none)
    double rate = 0.0;   ///< k
    Matrix base;         ///< C0, m x m (identity when empty)
};
TransformCertificate diag_exp_certificate(const DiagExpParams& p);

/// J = e^{alpha(t)} (I + N), N = [[0, b(t)], [0, 0]], alpha(t) = shift_rate t.
TransformCertificate nilpotent_certificate(const ScalarPath& b, double shift_rate = 0.0);
/// J = I + (e-1) N, N = [[1, 0], [c(t), 0]].
TransformCertificate idempotent_certificate(const ScalarPath& c);

/// J = second * first. The positivity window of J^{-1} is recomputed on the
/// product by scanning `scan_points` over [0, min(t_valid, scan_horizon)].
TransformCertificate compose_certificates(const TransformCertificate& first, const TransformCertificate& second,
                                          std::span<const Point> scan_points = {}, double scan_horizon = 10.0);

/// First time in [0, limit] at which some entry of J^{-1} drops below -tol;
/// `limit` when none does (infinity for time-independent certificates with J^{-1} >= 0).
double inverse_positivity_window(const TransformCertificate::Evaluator& eval, bool time_dependent,
                                 std::span<const Point> points, double limit, double tol = 1e-12);

// ---------------------------------------------------------------------------
// Checking

enum class CertificateVerdict { certified, diagonality_failed, sign_failed };

std::string to_string(CertificateVerdict v);

struct CertificateTolerances {
    double tol_diag = -1.0;  ///< negative means 1e-9 (1 + max coefficient magnitude)
    double tol_sign = -1.0;
};

struct CertificateReport {
    double max_offdiag_a = 0.0;   ///< J a J^{-1}
    double max_offdiag_b = 0.0;   ///< J b_k J^{-1}, all axes
    double max_offdiag_dj = 0.0;  ///< (DJ) J^{-1}, all axes
    double min_offdiag_ghat = kInfinity;
    Point worst_point{};
    double worst_time = 0.0;
    CertificateVerdict verdict = CertificateVerdict::certified;
    double tol_diag = 0.0;
    double tol_sign = 0.0;
    double t_valid = kInfinity;
    double t_pos = kInfinity;
    bool transposed_g = false;
};

/// Evaluate the diagonality and sign conditions over samples x times.
/// `transpose_g` uses J g^T J^{-1} + J_t J^{-1} in place of J g J^{-1} + J_t J^{-1}.
CertificateReport check_certificate(const TransformCertificate& cert, const SystemSpec& spec,
                                    std::span<const Point> samples, std::span<const double> times,
                                    const CertificateTolerances& tol = {}, bool transpose_g = false);

/// Coefficient value used for checks: (x, t) fields directly, state fields at u = psi0(x).
Matrix sample_coefficient(const CoefficientField& f, const SystemSpec& spec, const Point& x, double t);

}  // namespace poslab
