#pragma once

#include "wavelab/grid.hpp"

#include <span>
#include <vector>

namespace wavelab {

// First radial derivative: second-order centered in the interior,
// second-order one-sided at both edges.
Field radial_derivative(const RadialGrid& grid, std::span<const double> f);

// Radial Laplacian r^{1-n} d/dr (r^{n-1} d/dr) in flux form:
//
//   (L u)_i = [ r_{i+1/2}^{n-1} (u_{i+1} - u_i) - r_{i-1/2}^{n-1} (u_i - u_{i-1}) ] / (r_i^{n-1} h^2)
//
// This is a second-order centered approximation of u'' + (n-1)/r u'. Paired with the
// node weights h r_i^{n-1} and face weights h r_{i+1/2}^{n-1} it makes the semi-discrete
// wave equation Hamiltonian, which is why every solver in the repo uses it.
class RadialLaplacian {
public:
    RadialLaplacian(const RadialGrid& grid, int n);

    const RadialGrid& grid() const { return grid_; }
    int dimension() const { return n_; }

    // Writes L u at interior nodes 1..N-2; out[0] and out[N-1] are left untouched.
    void apply_interior(std::span<const double> u, std::span<double> out) const;

    // L u at every node, one-sided second-order u'' + (n-1)/r u' at the two edges.
    Field apply_all(std::span<const double> u) const;

    double plus(std::size_t i) const { return plus_[i]; }
    double minus(std::size_t i) const { return minus_[i]; }

    // h r_{i+1/2}^{n-1}: quadrature weight of the face between nodes i and i+1.
    double face_weight(std::size_t i) const { return face_weight_[i]; }

private:
    RadialGrid grid_;
    int n_;
    std::vector<double> plus_;
    std::vector<double> minus_;
    std::vector<double> face_weight_;
};

}  // namespace wavelab
