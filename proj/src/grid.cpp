#include "poslab/grid.hpp"

#include "poslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace poslab {

Grid::Grid(const Domain& domain, int nx, int ny) : domain_(domain) {
    if (nx < 3 || (domain.dimension() == 2 && ny < 3)) {
        std::ostringstream os;
        os << "need at least 3 nodes per axis, got " << nx;
        if (domain.dimension() == 2) os << " x " << ny;
        throw LabError(ErrorKind::invalid_resolution, os.str());
    }
    n_[0] = nx;
    n_[1] = domain.dimension() == 2 ? ny : 1;
    h_[0] = domain.extent(0) / (nx - 1);
    h_[1] = domain.dimension() == 2 ? domain.extent(1) / (ny - 1) : 0.0;
}

Grid discretize(const Domain& domain, int resolution) { return Grid(domain, resolution, resolution); }

Point Grid::point(std::size_t node) const {
    const int i = ix(node), j = iy(node);
    Point p{i == n_[0] - 1 ? domain_.hi(0) : domain_.lo(0) + i * h_[0], 0.0};
    if (dimension() == 2) p[1] = j == n_[1] - 1 ? domain_.hi(1) : domain_.lo(1) + j * h_[1];
    return p;
}

bool Grid::on_boundary(std::size_t node) const {
    const int i = ix(node), j = iy(node);
    if (i == 0 || i == n_[0] - 1) return true;
    return dimension() == 2 && (j == 0 || j == n_[1] - 1);
}

std::vector<std::size_t> Grid::interior() const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < size(); ++p)
        if (!on_boundary(p)) out.push_back(p);
    return out;
}

std::vector<std::size_t> Grid::boundary() const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < size(); ++p)
        if (on_boundary(p)) out.push_back(p);
    return out;
}

std::vector<Point> Grid::points() const {
    std::vector<Point> out(size());
    for (std::size_t p = 0; p < size(); ++p) out[p] = point(p);
    return out;
}

double Grid::weight(std::size_t node) const {
    const int i = ix(node);
    double w = (i == 0 || i == n_[0] - 1) ? 0.5 * h_[0] : h_[0];
    if (dimension() == 2) {
        const int j = iy(node);
        w *= (j == 0 || j == n_[1] - 1) ? 0.5 * h_[1] : h_[1];
    }
    return w;
}

bool Grid::same_as(const Grid& o) const {
    if (dimension() != o.dimension() || n_[0] != o.n_[0] || n_[1] != o.n_[1]) return false;
    for (int k = 0; k < dimension(); ++k)
        if (domain_.lo(k) != o.domain_.lo(k) || domain_.hi(k) != o.domain_.hi(k)) return false;
    return true;
}

// ---------------------------------------------------------------------------

FieldTrajectory::FieldTrajectory(Grid grid, int components) : grid_(std::move(grid)), m_(components) {
    if (m_ < 1) throw LabError(ErrorKind::invalid_argument, "trajectory needs at least one component");
}

void FieldTrajectory::append(double t, const std::vector<double>& values) {
    if (values.size() != grid_.size() * static_cast<std::size_t>(m_))
        throw LabError(ErrorKind::grid_mismatch, "stamp has the wrong number of values");
    if (!times_.empty() && !(t > times_.back()))
        throw LabError(ErrorKind::invalid_argument, "trajectory stamps must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw LabError(ErrorKind::blow_up_or_unstable, "non-finite value in trajectory");
    times_.push_back(t);
    data_.insert(data_.end(), values.begin(), values.end());
}

std::vector<double> FieldTrajectory::stamp_values(std::size_t stamp) const {
    const double* p = stamp_data(stamp);
    return std::vector<double>(p, p + grid_.size() * m_);
}

Vector FieldTrajectory::node_vector(std::size_t stamp, std::size_t node) const {
    Vector v(m_);
    for (int c = 0; c < m_; ++c) v(c) = value(stamp, node, c);
    return v;
}

std::vector<double> FieldTrajectory::at_time(double t) const {
    if (times_.empty()) throw LabError(ErrorKind::invalid_argument, "empty trajectory");
    if (t <= times_.front()) return stamp_values(0);
    if (t >= times_.back()) return stamp_values(times_.size() - 1);
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t s = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[s - 1]) / (times_[s] - times_[s - 1]);
    const std::size_t n = grid_.size() * m_;
    const double* a = stamp_data(s - 1);
    const double* b = stamp_data(s);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = (1.0 - w) * a[k] + w * b[k];
    return out;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void FieldTrajectory::write_csv(std::ostream& os, std::size_t every) const {
    if (every == 0) every = 1;
    const bool two_d = grid_.dimension() == 2;
    os << kCsvSchema << " fields\n";
    os << (two_d ? "t,x,y,component,value\n" : "t,x,component,value\n");
    for (std::size_t s = 0; s < stamps(); ++s) {
        if (s % every != 0 && s + 1 != stamps()) continue;
        const std::string t = format_real(times_[s]);
        for (std::size_t p = 0; p < grid_.size(); ++p) {
            const Point x = grid_.point(p);
            std::string prefix = t + "," + format_real(x[0]);
            if (two_d) prefix += "," + format_real(x[1]);
            for (int c = 0; c < m_; ++c) os << prefix << ',' << (c + 1) << ',' << format_real(value(s, p, c)) << '\n';
        }
    }
}

}  // namespace poslab
