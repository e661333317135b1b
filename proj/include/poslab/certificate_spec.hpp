#pragma once

#include "poslab/riccati.hpp"
#include "poslab/transform.hpp"

#include <yaml-cpp/yaml.h>

#include <optional>
#include <string>
#include <vector>

namespace poslab {

/// Serializable description of a certificate. Riccati-driven stages are
/// solved against the running G-hat of the stages before them, so a composed
/// certificate's later factor sees JgJ^{-1} + J_t J^{-1} of the earlier ones.
struct CertificateSpec {
    std::string kind = "identity";  ///< identity | constant | block-diagonal | diag-exp | nilpotent-exp | idempotent-exp | composed
    Matrix matrix;                   ///< constant
    double initial = 0.0;            ///< b(0) or c(0) for the Riccati kinds
    std::optional<double> fixed;     ///< constant b or c instead of a Riccati solve
    double shift_rate = 0.0;         ///< nilpotent-exp: alpha(t) = shift_rate * t
    Matrix gamma_slope;              ///< diag-exp
    Vector gamma_rate;               ///< diag-exp
    Matrix generator;                ///< diag-exp K
    double rate = 0.0;               ///< diag-exp k
    std::vector<CertificateSpec> stages;  ///< composed, applied first to last
    std::vector<CertificateSpec> blocks;  ///< block-diagonal
    double horizon = 0.0;                 ///< Riccati horizon; 0 means the system horizon

    /// Number of components the certificate acts on (-1 when it adapts to m).
    int size() const;
};

/// Build the certificate for a system with reaction matrix g (constant or
/// time-dependent for the Riccati kinds) on [0, horizon].
TransformCertificate build_certificate(const CertificateSpec& spec, const CoefficientField& g, int m,
                                       double horizon, const RiccatiOptions& options = {});

YAML::Node to_yaml(const CertificateSpec& spec);
CertificateSpec certificate_spec_from_yaml(const YAML::Node& node);

YAML::Node matrix_to_yaml(const Matrix& m);
Matrix matrix_from_yaml(const YAML::Node& node, const std::string& where);

}  // namespace poslab
