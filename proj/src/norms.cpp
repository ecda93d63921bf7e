#include "wavelab/norms.hpp"

#include "wavelab/error.hpp"
#include "wavelab/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wavelab {

double bracket(double s) { return std::sqrt(1.0 + s * s); }

Field radial_weights(const RadialGrid& grid, int n) {
    Field w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        w[i] = grid.h * std::pow(grid.r(i), n - 1);
    }
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

double lp_norm(const RadialGrid& grid, int n, std::span<const double> f, double q,
               double weight_exponent) {
    check_shape(grid, f, "lp_norm");
    if (!(q >= 1.0)) throw DomainError("lp_norm: q must be >= 1, got " + std::to_string(q));
    if (std::isinf(q)) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            m = std::max(m, std::pow(bracket(grid.r(i)), weight_exponent) * std::abs(f[i]));
        }
        return m;
    }
    const Field w = radial_weights(grid, n);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double g = std::pow(bracket(grid.r(i)), weight_exponent) * std::abs(f[i]);
        if (g != 0.0) sum += w[i] * (q == 2.0 ? g * g : std::pow(g, q));
    }
    return q == 2.0 ? std::sqrt(sum) : std::pow(sum, 1.0 / q);
}

double sobolev_norm(const RadialGrid& grid, int n, std::span<const double> f, int k) {
    check_shape(grid, f, "sobolev_norm");
    if (k < 0 || k > 3) {
        throw DomainError("sobolev_norm: order must be in {0,1,2,3}, got " + std::to_string(k));
    }
    Field d(f.begin(), f.end());
    double sum = 0.0;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) d = radial_derivative(grid, d);
        const double nj = lp_norm(grid, n, d, 2.0);
        sum += nj * nj;
    }
    return std::sqrt(sum);
}

double weighted_sobolev_norm(const RadialGrid& grid, int n, std::span<const double> f,
                             int order, double weight, double r_from) {
    check_shape(grid, f, "weighted_sobolev_norm");
    if (order < 0 || order > 3) {
        throw DomainError("weighted_sobolev_norm: order must be in {0,1,2,3}");
    }
    std::size_t first = 0;
    while (first < grid.size() && grid.r(first) + 1e-12 < r_from) ++first;
    if (first + 1 >= grid.size()) return 0.0;
    Field d(f.begin(), f.end());
    double total = 0.0;
    for (int k = 0; k <= order; ++k) {
        if (k > 0) d = radial_derivative(grid, d);
        double sum = 0.0;
        for (std::size_t i = first; i < d.size(); ++i) {
            const double r = grid.r(i);
            const double g = std::pow(bracket(r), weight) * d[i];
            double wi = grid.h * std::pow(r, n - 1);
            if (i == first || i + 1 == d.size()) wi *= 0.5;
            sum += wi * g * g;
        }
        total += std::sqrt(sum);
    }
    return total;
}

double time_norm(std::span<const double> series, double dt, double q) {
    if (series.empty()) return 0.0;
    if (std::isinf(q)) {
        double m = 0.0;
        for (double s : series) m = std::max(m, std::abs(s));
        return m;
    }
    if (series.size() == 1) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double w = (k == 0 || k + 1 == series.size()) ? 0.5 * dt : dt;
        sum += w * std::pow(std::abs(series[k]), q);
    }
    return std::pow(sum, 1.0 / q);
}

namespace {

// Second-order time derivative of a uniformly spaced stack of fields.
std::vector<Field> time_derivative(const std::vector<Field>& f, double dt, int order) {
    const std::size_t K = f.size();
    const std::size_t N = f.front().size();
    std::vector<Field> d(K, Field(N, 0.0));
    if (order == 1) {
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < N; ++i) {
                if (k == 0) {
                    d[k][i] = (-3.0 * f[0][i] + 4.0 * f[1][i] - f[2][i]) / (2.0 * dt);
                } else if (k + 1 == K) {
                    d[k][i] = (3.0 * f[K - 1][i] - 4.0 * f[K - 2][i] + f[K - 3][i]) / (2.0 * dt);
                } else {
                    d[k][i] = (f[k + 1][i] - f[k - 1][i]) / (2.0 * dt);
                }
            }
        }
        return d;
    }
    // order == 2
    const double inv = 1.0 / (dt * dt);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < N; ++i) {
            if (K == 3 || (k > 0 && k + 1 < K)) {
                const std::size_t c = std::clamp<std::size_t>(k, 1, K - 2);
                d[k][i] = (f[c + 1][i] - 2.0 * f[c][i] + f[c - 1][i]) * inv;
            } else if (k == 0) {
                d[k][i] = (2.0 * f[0][i] - 5.0 * f[1][i] + 4.0 * f[2][i] - f[3][i]) * inv;
            } else {
                d[k][i] = (2.0 * f[K - 1][i] - 5.0 * f[K - 2][i] + 4.0 * f[K - 3][i] - f[K - 4][i]) * inv;
            }
        }
    }
    return d;
}

}  // namespace

double y_norm(std::span<const RadialState> history, int n, double q, double r_exp, int N) {
    if (history.empty()) return 0.0;
    if (N < 0 || N > 2) throw DomainError("y_norm: derivative order N must be in {0,1,2}");
    if (N >= 1 && history.size() < 3) {
        throw DomainError("y_norm: need at least 3 snapshots for time derivatives");
    }
    const RadialGrid& grid = history.front().grid;
    const double dt = history.size() > 1 ? history[1].t - history[0].t : 0.0;
    if (history.size() > 1 && !(dt > 0.0)) throw DomainError("y_norm: history must advance in time");

    std::vector<Field> base;
    base.reserve(history.size());
    for (const auto& s : history) {
        check_shape(grid, s.u, "y_norm");
        base.push_back(s.u);
    }

    double total = 0.0;
    std::vector<Field> dt_stack = base;
    for (int j = 0; j <= N; ++j) {
        if (j == 1) dt_stack = time_derivative(base, dt, 1);
        if (j == 2) dt_stack = time_derivative(base, dt, 2);
        std::vector<Field> stack = dt_stack;
        for (int k = 0; j + k <= N; ++k) {
            if (k > 0) {
                for (auto& f : stack) f = radial_derivative(grid, f);
            }
            Field series(stack.size());
            for (std::size_t m = 0; m < stack.size(); ++m) series[m] = lp_norm(grid, n, stack[m], r_exp);
            total += time_norm(series, dt, q);
        }
    }
    return total;
}

}  // namespace wavelab
