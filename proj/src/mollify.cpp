#include "poslab/mollify.hpp"

#include "poslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace poslab {

std::vector<double> bump_weights(int radius) {
    if (radius < 0) throw LabError(ErrorKind::invalid_argument, "negative kernel radius");
    std::vector<double> w(2 * radius + 1);
    double mass = 0.0;
    for (int j = -radius; j <= radius; ++j) {
        const double s = static_cast<double>(j) / (radius + 1);
        const double v = (1.0 - s * s) * (1.0 - s * s);
        w[j + radius] = v;
        mass += v;
    }
    for (double& v : w) v /= mass;
    return w;
}

namespace {

int radius_in_nodes(double width, int n, double spacing, double extent, const char* axis) {
    const double physical = width / n;
    if (2.0 * physical > extent * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "kernel support " << 2.0 * physical << " along " << axis << " exceeds the extent " << extent;
        throw LabError(ErrorKind::kernel_too_wide, os.str());
    }
    if (!(spacing > 0.0)) return 0;
    return static_cast<int>(std::floor(physical / spacing * (1.0 + 1e-12)));
}

// Convolve along one axis of a (stamps x ny x nx x m) array with clamped indices.
void convolve_axis(std::vector<double>& data, const std::array<std::size_t, 4>& shape, int axis,
                   const std::vector<double>& w) {
    const int r = static_cast<int>(w.size() / 2);
    if (r == 0) return;
    std::array<std::size_t, 4> stride{};
    stride[3] = 1;
    for (int d = 2; d >= 0; --d) stride[d] = stride[d + 1] * shape[d + 1];
    const long len = static_cast<long>(shape[axis]);
    std::vector<double> line(len), out(len);
    std::array<std::size_t, 4> idx{};
    for (idx[0] = 0; idx[0] < (axis == 0 ? 1 : shape[0]); ++idx[0])
        for (idx[1] = 0; idx[1] < (axis == 1 ? 1 : shape[1]); ++idx[1])
            for (idx[2] = 0; idx[2] < (axis == 2 ? 1 : shape[2]); ++idx[2])
                for (idx[3] = 0; idx[3] < shape[3]; ++idx[3]) {
                    std::size_t base = 0;
                    for (int d = 0; d < 4; ++d) base += idx[d] * stride[d];
                    for (long i = 0; i < len; ++i) line[i] = data[base + i * stride[axis]];
                    for (long i = 0; i < len; ++i) {
                        double acc = 0.0;
                        for (int j = -r; j <= r; ++j) {
                            const long k = std::clamp(i + j, 0L, len - 1);
                            acc += w[j + r] * line[k];
                        }
                        out[i] = acc;
                    }
                    for (long i = 0; i < len; ++i) data[base + i * stride[axis]] = out[i];
                }
}

}  // namespace

FieldTrajectory mollify(const FieldTrajectory& traj, int n, const MollifierOptions& options) {
    if (n < 1) throw LabError(ErrorKind::invalid_argument, "mollification level must be >= 1");
    const Grid& grid = traj.grid();
    const Domain& dom = grid.domain();
    double min_extent = dom.extent(0);
    if (dom.dimension() == 2) min_extent = std::min(min_extent, dom.extent(1));
    const double sw = options.space_width > 0.0 ? options.space_width : 0.25 * min_extent;

    const std::size_t K = traj.stamps();
    const double horizon = traj.times().back() - traj.times().front();
    const double tw = options.time_width > 0.0 ? options.time_width : 0.25 * horizon;

    const int rx = radius_in_nodes(sw, n, grid.spacing(0), dom.extent(0), "x");
    const int ry = dom.dimension() == 2 ? radius_in_nodes(sw, n, grid.spacing(1), dom.extent(1), "y") : 0;
    int rt = 0;
    if (K > 1 && horizon > 0.0) rt = radius_in_nodes(tw, n, horizon / static_cast<double>(K - 1), horizon, "t");

    std::vector<double> data = traj.raw();
    const std::array<std::size_t, 4> shape{K, static_cast<std::size_t>(grid.nodes(1)),
                                           static_cast<std::size_t>(grid.nodes(0)),
                                           static_cast<std::size_t>(traj.components())};
    convolve_axis(data, shape, 2, bump_weights(rx));
    convolve_axis(data, shape, 1, bump_weights(ry));
    convolve_axis(data, shape, 0, bump_weights(rt));

    FieldTrajectory out(grid, traj.components());
    const std::size_t per = grid.size() * traj.components();
    for (std::size_t s = 0; s < K; ++s)
        out.append(traj.time(s), std::vector<double>(data.begin() + s * per, data.begin() + (s + 1) * per));
    return out;
}

}  // namespace poslab
