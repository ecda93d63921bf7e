#include "wavelab/history.hpp"

#include "wavelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wavelab {

namespace {

struct Stencil4 {
    std::size_t i0;
    double w[4];
};

Stencil4 cubic_stencil(const RadialGrid& g, double r) {
    if (r < g.r_min - 1e-12 * g.h || r > g.r_max + 1e-12 * g.h) {
        throw DomainError("interpolation radius " + std::to_string(r) + " outside [1, " +
                          std::to_string(g.r_max) + "]");
    }
    const double x = (r - g.r_min) / g.h;
    const auto N = static_cast<std::ptrdiff_t>(g.size());
    auto i = static_cast<std::ptrdiff_t>(std::floor(x)) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, N - 4);
    Stencil4 s{static_cast<std::size_t>(i), {}};
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b) {
            if (a != b) w *= (x - static_cast<double>(i + b)) / static_cast<double>(a - b);
        }
        s.w[a] = w;
    }
    return s;
}

double weigh(const Stencil4& s, const Field& f) {
    return s.w[0] * f[s.i0] + s.w[1] * f[s.i0 + 1] + s.w[2] * f[s.i0 + 2] + s.w[3] * f[s.i0 + 3];
}

}  // namespace

double interpolate_cubic(const RadialGrid& grid, const Field& f, double r) {
    return weigh(cubic_stencil(grid, r), f);
}

RadialHistory::RadialHistory(RadialGrid grid, double t0, double stride)
    : grid_(grid), t0_(t0), stride_(stride) {
    if (!(stride > 0.0)) throw DomainError("history stride must be positive");
}

void RadialHistory::push(const RadialState& s) {
    const double expect = time(u_.size());
    if (std::abs(s.t - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
        throw DomainError("history snapshot at t = " + std::to_string(s.t) + ", expected " +
                          std::to_string(expect));
    }
    check_shape(grid_, s.u, "RadialHistory::push");
    u_.push_back(s.u);
    v_.push_back(s.v);
}

double RadialHistory::t_end() const {
    return u_.empty() ? t0_ : time(u_.size() - 1);
}

std::size_t RadialHistory::bracket_index(double t, double& s) const {
    if (u_.size() < 2) throw DomainError("history needs at least two snapshots");
    const double tol = 1e-9 * stride_;
    if (t < t0_ - tol || t > t_end() + tol) {
        throw DomainError("time " + std::to_string(t) + " outside history coverage [" +
                          std::to_string(t0_) + ", " + std::to_string(t_end()) + "]");
    }
    const double x = (t - t0_) / stride_;
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor(x)));
    k = std::min(k, u_.size() - 2);
    s = std::clamp(x - static_cast<double>(k), 0.0, 1.0);
    return k;
}

namespace {

// Cubic Hermite on [0, 1] with endpoint values a, b and scaled slopes da, db.
std::pair<double, double> hermite(double s, double a, double da, double b, double db, double H) {
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const double val = h00 * a + h10 * H * da + h01 * b + h11 * H * db;
    const double d00 = 6 * s2 - 6 * s;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s;
    const double d11 = 3 * s2 - 2 * s;
    const double der = (d00 * a + d01 * b) / H + d10 * da + d11 * db;
    return {val, der};
}

}  // namespace

std::pair<double, double> RadialHistory::sample(double t, double r) const {
    double s = 0.0;
    const std::size_t k = bracket_index(t, s);
    const Stencil4 st = cubic_stencil(grid_, r);
    return hermite(s, weigh(st, u_[k]), weigh(st, v_[k]), weigh(st, u_[k + 1]), weigh(st, v_[k + 1]),
                   stride_);
}

void RadialHistory::fill(double t, Field& u, Field& ut) const {
    double s = 0.0;
    const std::size_t k = bracket_index(t, s);
    u.resize(grid_.size());
    ut.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const auto [a, b] = hermite(s, u_[k][i], v_[k][i], u_[k + 1][i], v_[k + 1][i], stride_);
        u[i] = a;
        ut[i] = b;
    }
}

std::size_t RadialHistory::memory_bytes() const {
    return 2 * u_.size() * grid_.size() * sizeof(double);
}

}  // namespace wavelab
