#pragma once

#include "poslab/grid.hpp"
#include "poslab/system_model.hpp"

#include <optional>
#include <vector>

namespace poslab::detail {

/// Nodal samples of an m x m coefficient at one time level, row-major.
/// Uniform slots hold a single matrix shared by all nodes.
struct Slot {
    bool active = false;
    bool uniform = true;
    int mm = 0;
    std::vector<double> data;

    const double* at(std::size_t node) const { return uniform ? data.data() : data.data() + node * mm; }
};

/// Refills a Slot from a CoefficientField, skipping work the dependence allows.
class SlotSource {
public:
    SlotSource() = default;
    SlotSource(CoefficientField field, const Grid& grid, int m);

    bool active() const { return !field_.empty() && !field_.is_zero(); }
    bool state_dependent() const { return field_.dependence() == CoefficientField::Dependence::state; }
    const CoefficientField& field() const { return field_; }

    /// Sample at time t (and state for state fields).
    void fill(double t, const std::vector<double>& state, Slot& out);

private:
    CoefficientField field_;
    const Grid* grid_ = nullptr;
    std::vector<Point> points_;
    int m_ = 0;
    bool filled_ = false;
};

enum class DiffusionForm { flux, non_divergence, potential };

/// v_t = D(v) - Div(B1 v) + B2 . Dv + G v + f, with
/// D(v) = Div(A Dv) | A Lap v | Lap P(v) according to `form`.
struct OperatorDef {
    int m = 0;
    DiffusionForm form = DiffusionForm::flux;
    CoefficientField A;
    std::optional<StateMap> potential;
    std::vector<CoefficientField> B1;
    std::vector<CoefficientField> B2;
    CoefficientField G;
    VectorField forcing;
    BoundaryCondition boundary;
    InitialData initial;
    double horizon = 0.0;
};

struct StepPlan {
    double dt = 0.0;
    long steps = 0;
    long stride = 1;
};

/// dt_eff = T / ceil(T / dt) and the storage stride for `max_stamps`.
StepPlan plan_steps(double horizon, double dt, int max_stamps);

/// Stability limit from sampled diffusion matrices (see stable_timestep).
double diffusion_limit(const OperatorDef& op, const Grid& grid, int time_slices);

/// Explicit Euler from the nodal initial data.
FieldTrajectory integrate(const OperatorDef& op, const Grid& grid, const StepPlan& plan);

}  // namespace poslab::detail
