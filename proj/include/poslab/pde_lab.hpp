#pragma once

#include "poslab/grid.hpp"
#include "poslab/system_model.hpp"
#include "poslab/transform.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace poslab {

struct SolveOptions {
    double dt = 0.0;        ///< requested step; 0 picks safety * stable limit
    double safety = 0.9;
    int max_stamps = 65;    ///< stored stamps including t = 0 and t = T
    int time_slices = 16;   ///< coefficient samples in time for the stability limit
};

/// General linear operator form shared by transformed and dual solves:
/// v_t = Div(A Dv) - Div(B1 v) + B2 . Dv + G v + f, or A Lap v in place of
/// Div(A Dv) when `non_divergence` is set.
struct OperatorSystem {
    int m = 0;
    Domain domain = Domain::interval(0.0, 1.0);
    bool non_divergence = false;
    CoefficientField A;
    std::vector<CoefficientField> B1;  ///< per axis; empty means zero
    std::vector<CoefficientField> B2;  ///< per axis; empty means zero
    CoefficientField G;
    VectorField forcing;
    BoundaryCondition boundary;
    InitialData initial;
    double horizon = 0.0;
};

/// Explicit-Euler limit: min over sampled a of
/// min(h^2 / (2 N |a|_inf), 2 Re(mu) / |mu|^2 / sum_k 4/h_k^2) over eigenvalues mu.
double stable_timestep(const SystemSpec& spec, const Grid& grid, int time_slices = 16);
double stable_timestep(const OperatorSystem& sys, const Grid& grid, int time_slices = 16);

/// Linear system in divergence or non-divergence form.
FieldTrajectory solve_linear(const SystemSpec& spec, const Grid& grid, const SolveOptions& options = {});

/// Quasilinear system with coefficients frozen at the current state per step.
FieldTrajectory solve_quasilinear(const SystemSpec& spec, const Grid& grid, const SolveOptions& options = {});

/// Dispatch on spec.form.
FieldTrajectory simulate(const SystemSpec& spec, const Grid& grid, const SolveOptions& options = {});

FieldTrajectory solve_operator(const OperatorSystem& sys, const Grid& grid, const SolveOptions& options = {});

/// Coefficients of v = J W.
struct TransformedSystem {
    OperatorSystem system;
    std::shared_ptr<const SystemSpec> source;
    TransformCertificate certificate;

    const CoefficientField& A() const { return system.A; }
    const std::vector<CoefficientField>& B1() const { return system.B1; }
    const std::vector<CoefficientField>& B2() const { return system.B2; }
    const CoefficientField& G() const { return system.G; }
};

TransformedSystem transform_system(const SystemSpec& spec, const TransformCertificate& cert);

FieldTrajectory solve_transformed(const TransformedSystem& ts, const Grid& grid, const SolveOptions& options = {});

/// Pointwise J(x, t) W(x, t) at every stored stamp.
FieldTrajectory apply_certificate(const FieldTrajectory& W, const TransformCertificate& cert);

/// max over nodes and stamps of |J(x,t) W - v|; both trajectories must share grid and stamps.
double transform_gap(const FieldTrajectory& W, const FieldTrajectory& v, const TransformCertificate& cert);

}  // namespace poslab
