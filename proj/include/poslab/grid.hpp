#pragma once

#include "poslab/linalg.hpp"
#include "poslab/system_model.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace poslab {

/// Uniform node-centred tensor grid. 1-D grids have a single row (ny = 1).
class Grid {
public:
    Grid(const Domain& domain, int nx, int ny);

    const Domain& domain() const { return domain_; }
    int dimension() const { return domain_.dimension(); }
    int nodes(int axis) const { return n_[axis]; }
    double spacing(int axis) const { return h_[axis]; }
    std::size_t size() const { return static_cast<std::size_t>(n_[0]) * n_[1]; }

    std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(j) * n_[0] + i; }
    int ix(std::size_t node) const { return static_cast<int>(node % n_[0]); }
    int iy(std::size_t node) const { return static_cast<int>(node / n_[0]); }
    Point point(std::size_t node) const;
    bool on_boundary(std::size_t node) const;

    std::vector<std::size_t> interior() const;
    std::vector<std::size_t> boundary() const;
    std::vector<Point> points() const;

    /// Trapezoid weight of a node (product of 1-D weights, h/2 at the ends).
    double weight(std::size_t node) const;

    bool same_as(const Grid& other) const;

private:
    Domain domain_;
    int n_[2] = {1, 1};
    double h_[2] = {0.0, 0.0};
};

/// Uniform grid with `resolution` nodes per spatial axis.
Grid discretize(const Domain& domain, int resolution);

/// Time-stamped nodal values, stored stamp-major, then node, then component.
class FieldTrajectory {
public:
    FieldTrajectory(Grid grid, int components);

    const Grid& grid() const { return grid_; }
    int components() const { return m_; }
    std::size_t stamps() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    double time(std::size_t s) const { return times_[s]; }

    /// Appends a stamp; requires increasing time, grid.size() * m finite values.
    void append(double t, const std::vector<double>& values);

    double value(std::size_t stamp, std::size_t node, int comp) const {
        return data_[(stamp * grid_.size() + node) * m_ + comp];
    }
    const double* stamp_data(std::size_t stamp) const { return data_.data() + stamp * grid_.size() * m_; }
    std::vector<double> stamp_values(std::size_t stamp) const;
    Vector node_vector(std::size_t stamp, std::size_t node) const;

    /// Values at time t: linear interpolation between neighbouring stamps.
    std::vector<double> at_time(double t) const;

    const std::vector<double>& raw() const { return data_; }

    /// CSV: t, x, [y,] component, value. Component indices start at 1.
    /// `every` keeps every k-th stamp (the last stamp is always written).
    void write_csv(std::ostream& os, std::size_t every = 1) const;

private:
    Grid grid_;
    int m_;
    std::vector<double> times_;
    std::vector<double> data_;
};

/// Schema tag written as the first line of every CSV artifact.
inline constexpr const char* kCsvSchema = "# poslab-csv v1";

/// %.17g formatting used by every artifact.
std::string format_real(double v);

}  // namespace poslab
