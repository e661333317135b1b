#pragma once

#include "poslab/grid.hpp"

#include <vector>

namespace poslab {

struct MollifierOptions {
    double space_width = 0.0;  ///< level-1 support radius in space; 0 means a quarter of the shortest extent
    double time_width = 0.0;   ///< level-1 support radius in time; 0 means a quarter of the horizon
};

/// Discrete (1 - s^2)^2 bump with radius r nodes, s = j / (r + 1), unit mass.
std::vector<double> bump_weights(int radius);

/// Separable space-time convolution with support radius width / n along
/// each axis. Values outside the grid are the nearest boundary value. Axes
/// whose radius is below one node are left untouched.
FieldTrajectory mollify(const FieldTrajectory& traj, int n, const MollifierOptions& options = {});

}  // namespace poslab
