#pragma once

// Uniformly strided store of radial snapshots with space-time interpolation:
// cubic Hermite in t (from u and u_t) and four-point Lagrange in r.

#include "wavelab/grid.hpp"

#include <utility>
#include <vector>

namespace wavelab {

class RadialHistory {
public:
    RadialHistory() = default;
    RadialHistory(RadialGrid grid, double t0, double stride);

    // Snapshots must arrive in order at t0 + k * stride.
    void push(const RadialState& state);

    const RadialGrid& grid() const { return grid_; }
    double t_begin() const { return t0_; }
    double t_end() const;
    double stride() const { return stride_; }
    std::size_t size() const { return u_.size(); }
    double time(std::size_t k) const { return t0_ + static_cast<double>(k) * stride_; }
    const Field& u(std::size_t k) const { return u_[k]; }
    const Field& v(std::size_t k) const { return v_[k]; }

    // (u, u_t) at an arbitrary point of [t_begin, t_end] x [1, r_max]; DomainError outside.
    std::pair<double, double> sample(double t, double r) const;

    // u and u_t on the whole grid at time t (Hermite in time, no spatial interpolation).
    void fill(double t, Field& u, Field& ut) const;

    std::size_t memory_bytes() const;

private:
    std::size_t bracket_index(double t, double& s) const;

    RadialGrid grid_;
    double t0_ = 0.0;
    double stride_ = 0.0;
    std::vector<Field> u_;
    std::vector<Field> v_;
};

// Four-point Lagrange interpolation of a grid field at radius r.
double interpolate_cubic(const RadialGrid& grid, const Field& f, double r);

}  // namespace wavelab
