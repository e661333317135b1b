#pragma once

#include "poslab/grid.hpp"
#include "poslab/mollify.hpp"
#include "poslab/pde_lab.hpp"
#include "poslab/system_model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace poslab {

/// Backward system whose solutions pair with the forward solution:
///   forward Div(a Du) - Div(b u) + g u   ->  Div(a^T DW) + b^T . DW + g^T W
///   forward Div(a Du) + b . Du + g u     ->  Div(a^T DW) - Div(b^T W) + g^T W
///   forward Lap P(u) + b . Du + g u      ->  abar(u)^T Lap W - Div(b^T W) + g^T W
/// with all coefficients taken at time T - t. State-dependent coefficients
/// are frozen along `frozen` (nodal, linear in time). Dirichlet data becomes
/// homogeneous.
OperatorSystem dual_system(const SystemSpec& spec, const FieldTrajectory* frozen, const std::vector<double>& psi,
                           const Grid& grid);

/// Dual solve from nodal terminal weight psi (grid.size() * m values).
FieldTrajectory solve_dual(const SystemSpec& spec, const FieldTrajectory* frozen, const std::vector<double>& psi,
                           const Grid& grid, const SolveOptions& options = {});

/// Nodal samples of a vector field on the grid.
std::vector<double> sample_nodal(const Grid& grid, int m, const std::function<Vector(const Point&)>& f);

/// Trapezoid integral of <a, b> over the grid.
double pairing(const Grid& grid, int m, const double* a, const double* b);

/// |int <u(T), psi> - int <u(0), Psi(T)>|.
double pairing_gap(const FieldTrajectory& u, const std::vector<double>& psi, const FieldTrajectory& dual);

struct EnergyNorms {
    double sup_l2 = 0.0;    ///< sup_t ||Psi(t)||_{L2(Omega)}
    double grad_l2 = 0.0;   ///< ||D Psi||_{L2(Q)}
    double l_sigma = 0.0;   ///< ||Psi||_{L^sigma(Q)}
};

EnergyNorms energy_norms(const FieldTrajectory& dual, double sigma);

/// ||f||_{L^q(Q)} of a trajectory (Euclidean norm over components).
double space_time_norm(const FieldTrajectory& f, double q);

struct WeightFunction {
    std::string id;
    std::function<Vector(const Point&)> psi;
};

struct TransferOptions {
    std::vector<int> levels{2, 4, 8, 16};
    SolveOptions forward;
    SolveOptions dual;
    MollifierOptions mollifier;
    double sigma = 0.0;   ///< 0 means the standard exponent for the dimension
    double tol = -1.0;    ///< negative means the discretization default
};

struct TransferCell {
    std::string psi_id;
    int level = 0;
    double forward_pairing = 0.0;  ///< int <u(T), psi>
    double dual_pairing = 0.0;     ///< int <u0, Psi_n(T)>
    double gap = 0.0;
    EnergyNorms norms;
    double min_pairing = 0.0;
    double dual_min = 0.0;         ///< min of Psi_n over space-time
    bool dual_certified = false;   ///< frozen dual passes the J = I certificate check
    bool dual_nonnegative = false; ///< Psi_n >= -tol
    double coefficient_norm = 0.0; ///< ||g(u_n)||_{L^{q0}(Q)}, q0 = N/2 + 1
};

struct TransferReport {
    double sigma = 0.0;
    double q0 = 0.0;
    double tol = 0.0;
    double forward_min = 0.0;
    std::vector<TransferCell> cells;  ///< psi-major, then level
};

TransferReport positivity_transfer_experiment(const SystemSpec& spec, const Grid& grid,
                                              const std::vector<WeightFunction>& weights,
                                              const TransferOptions& options = {});

/// psi_id,n,gap,sup_l2,grad_l2,l_sigma,min_pairing
void write_transfer_csv(std::ostream& os, const TransferReport& report);

}  // namespace poslab
