#include "wavelab/stencil.hpp"

#include "wavelab/error.hpp"

#include <cmath>

namespace wavelab {

Field radial_derivative(const RadialGrid& grid, std::span<const double> f) {
    check_shape(grid, f, "radial_derivative");
    const std::size_t N = f.size();
    const double inv2h = 0.5 / grid.h;
    Field d(N);
    for (std::size_t i = 1; i + 1 < N; ++i) d[i] = (f[i + 1] - f[i - 1]) * inv2h;
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
    d[N - 1] = (3.0 * f[N - 1] - 4.0 * f[N - 2] + f[N - 3]) * inv2h;
    return d;
}

RadialLaplacian::RadialLaplacian(const RadialGrid& grid, int n)
    : grid_(grid), n_(n), plus_(grid.size()), minus_(grid.size()), face_weight_(grid.size()) {
    if (grid.size() < 16) throw DomainError("RadialLaplacian: grid too small");
    const double h = grid.h;
    const double m = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid.r(i);
        const double rp = r + 0.5 * h;
        const double rm = r - 0.5 * h;
        const double node = std::pow(r, m);
        plus_[i] = std::pow(rp, m) / (node * h * h);
        minus_[i] = std::pow(rm, m) / (node * h * h);
        face_weight_[i] = h * std::pow(rp, m);
    }
}

void RadialLaplacian::apply_interior(std::span<const double> u, std::span<double> out) const {
    const std::size_t N = grid_.size();
    for (std::size_t i = 1; i + 1 < N; ++i) {
        out[i] = plus_[i] * (u[i + 1] - u[i]) - minus_[i] * (u[i] - u[i - 1]);
    }
}

Field RadialLaplacian::apply_all(std::span<const double> u) const {
    check_shape(grid_, u, "RadialLaplacian::apply_all");
    const std::size_t N = grid_.size();
    Field out(N, 0.0);
    apply_interior(u, out);
    const double h = grid_.h;
    const double m = static_cast<double>(n_ - 1);
    auto edge = [&](std::size_t i, double sign, std::size_t a, std::size_t b, std::size_t c,
                    std::size_t d) {
        const double upp = (2.0 * u[a] - 5.0 * u[b] + 4.0 * u[c] - u[d]) / (h * h);
        const double up = sign * (-3.0 * u[a] + 4.0 * u[b] - u[c]) / (2.0 * h);
        out[i] = upp + m / grid_.r(i) * up;
    };
    edge(0, 1.0, 0, 1, 2, 3);
    edge(N - 1, -1.0, N - 1, N - 2, N - 3, N - 4);
    return out;
}

}  // namespace wavelab
