#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace wavelab {

using Field = std::vector<double>;

// Uniform discretization of [1, r_max]; r_0 = 1 is the obstacle boundary.
struct RadialGrid {
    double r_min = 1.0;
    double r_max = 2.0;
    std::size_t num_points = 0;
    double h = 0.0;

    double r(std::size_t i) const { return r_min + static_cast<double>(i) * h; }
    std::size_t size() const { return num_points; }
    Field coordinates() const;

    // Index of the node nearest to radius r (clamped to the grid).
    std::size_t nearest(double radius) const;

    friend bool operator==(const RadialGrid&, const RadialGrid&) = default;
};

RadialGrid make_grid(double r_max, std::size_t num_points);

// Grid with spacing as close as possible to h (r_max is kept exactly).
RadialGrid make_grid_with_spacing(double r_max, double h);

// Snapshot of (u, u_t) at time t. Dirichlet: u[0] = v[0] = 0.
struct RadialState {
    RadialGrid grid;
    double t = 0.0;
    Field u;
    Field v;
};

RadialState zero_state(const RadialGrid& grid, double t = 0.0);

// Throws DomainError on shape mismatch.
void check_shape(const RadialGrid& grid, std::span<const double> f, const char* what);

// CSV with header "r,u,v", 17 significant digits.
void write_state_csv(std::ostream& out, const RadialState& state);
RadialState read_state_csv(std::istream& in, double t = 0.0);

}  // namespace wavelab
