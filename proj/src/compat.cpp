#include "wavelab/compat.hpp"

#include "wavelab/error.hpp"
#include "wavelab/norms.hpp"
#include "wavelab/radial.hpp"
#include "wavelab/stencil.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace wavelab {

namespace {

double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
    return b;
}

double falling(double p, int m) {
    double f = 1.0;
    for (int i = 0; i < m; ++i) f *= p - static_cast<double>(i);
    return f;
}

double signed_pow(double s, double q) { return std::copysign(abs_power(s, q), s); }
double abs_pow(double s, double q) { return abs_power(s, q); }

// m-th derivative of f(s) = -c |s|^{p-1} s.
template <class S>
S force_derivative(const S& s, int m, double p, double c) {
    const double k = -c * falling(p, m);
    if (m % 2 == 0) return signed_pow(s, p - m) * k;
    return abs_pow(s, p - m) * k;
}

// d_t^k f(u)|_{t=0} from psi[0..k] (psi[j] = d_t^j u at t = 0) via incomplete Bell polynomials.
template <class S>
S force_time_derivative(const std::vector<S>& psi, int k, double p, double c) {
    if (c == 0.0) return psi[0] * 0.0;
    if (k == 0) return force_derivative(psi[0], 0, p, c);
    const S zero = psi[0] * 0.0;
    const S one = zero + 1.0;
    // B[a][m] for a <= k, m <= a.
    std::vector<std::vector<S>> B(static_cast<std::size_t>(k + 1));
    for (int a = 0; a <= k; ++a) {
        B[a].assign(static_cast<std::size_t>(a + 1), zero);
        if (a == 0) {
            B[0][0] = one;
            continue;
        }
        for (int m = 1; m <= a; ++m) {
            S sum = zero;
            for (int i = 1; i <= a - m + 1; ++i) {
                if (m - 1 > a - i) continue;
                sum = sum + psi[static_cast<std::size_t>(i)] * B[a - i][m - 1] * binomial(a - 1, i - 1);
            }
            B[a][m] = sum;
        }
    }
    S out = zero;
    for (int m = 1; m <= k; ++m) out = out + force_derivative(psi[0], m, p, c) * B[k][m];
    return out;
}

Jet jet_laplacian(const Jet& f, int n) {
    const Jet d1 = f.differentiate();
    const Jet d2 = d1.differentiate();
    const Jet r = Jet::variable(1.0, d1.size());
    return d2 + d1 * (static_cast<double>(n - 1) / r);
}

void check_order(int N) {
    if (N < 1 || N > kMaxCompatOrder) {
        throw DomainError("compatibility order must be in [1, " + std::to_string(kMaxCompatOrder) +
                          "], got " + std::to_string(N));
    }
}

std::size_t jet_size(int N) { return static_cast<std::size_t>(std::max(2 * (N / 2) + 1, 2)); }

// Shared driver: `source(j, fields_or_jets)` supplies the inhomogeneous term of level j.
template <class FieldSource, class JetSource>
CompatReport build(const RadialGrid& grid, int n, const RadialFunction& u0,
                   const RadialFunction& u1, int N, FieldSource field_source,
                   JetSource jet_source) {
    const RadialLaplacian lap(grid, n);
    const std::size_t S = jet_size(N);
    CompatReport rep;
    rep.order = N;
    rep.sequence.push_back(u0.sample(grid));
    rep.sequence.push_back(u1.sample(grid));
    std::vector<Jet> jets{u0.jet(1.0, S), u1.jet(1.0, S)};
    for (int j = 2; j <= N; ++j) {
        Field psi = lap.apply_all(rep.sequence[static_cast<std::size_t>(j - 2)]);
        const Field src = field_source(j, rep.sequence);
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] += src[i];
        rep.sequence.push_back(std::move(psi));
        jets.push_back(jet_laplacian(jets[static_cast<std::size_t>(j - 2)], n) + jet_source(j, jets));
    }
    const double floor = std::numeric_limits<double>::min();
    for (int j = 0; j <= N; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const double b = std::abs(jets[js].value());
        const double h1 = sobolev_norm(grid, n, rep.sequence[js], 1);
        rep.boundary_values.push_back(b);
        rep.h1_norms.push_back(h1);
        rep.verdicts.push_back(b <= rep.tolerance * (h1 + floor));
    }
    return rep;
}

}  // namespace

bool CompatReport::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](bool v) { return v; });
}

int CompatReport::satisfied_order() const {
    if (verdicts.size() < 2 || !verdicts[0] || !verdicts[1]) return 0;
    int m = 1;
    while (m + 1 < static_cast<int>(verdicts.size()) && verdicts[static_cast<std::size_t>(m + 1)]) ++m;
    return m;
}

double time_derivative_of_force(const std::vector<double>& psi, int k, double p, double coupling) {
    if (k < 0 || static_cast<std::size_t>(k) >= psi.size()) {
        throw DomainError("time_derivative_of_force: need psi_0 .. psi_k");
    }
    return force_time_derivative(psi, k, p, coupling);
}

CompatReport linear_sequence(const RadialGrid& grid, int n, const RadialFunction& u0,
                             const RadialFunction& u1,
                             const std::vector<RadialFunction>& F_time_derivatives, int N) {
    check_order(N);
    if (N >= 2 && F_time_derivatives.size() < static_cast<std::size_t>(N - 1)) {
        throw DomainError("linear_sequence: order " + std::to_string(N) + " needs " +
                          std::to_string(N - 1) + " time derivatives of F, got " +
                          std::to_string(F_time_derivatives.size()));
    }
    auto fsrc = [&](int j, const std::vector<Field>&) {
        return F_time_derivatives[static_cast<std::size_t>(j - 2)].sample(grid);
    };
    auto jsrc = [&](int j, const std::vector<Jet>& jets) {
        return F_time_derivatives[static_cast<std::size_t>(j - 2)].jet(1.0, jets[0].size());
    };
    return build(grid, n, u0, u1, N, fsrc, jsrc);
}

CompatReport nonlinear_sequence(const RadialGrid& grid, const Params& params,
                                const RadialFunction& u0, const RadialFunction& u1, int N,
                                double coupling) {
    params.validate();
    check_order(N);
    if (!(params.p > N)) {
        throw DomainError("nonlinear_sequence: order " + std::to_string(N) +
                          " needs p > N for f to be C^N; p = " + std::to_string(params.p));
    }
    const double p = params.p;
    auto fsrc = [&](int j, const std::vector<Field>& seq) {
        const int k = j - 2;
        Field out(grid.size(), 0.0);
        std::vector<double> psi(static_cast<std::size_t>(k + 1));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (int m = 0; m <= k; ++m) psi[static_cast<std::size_t>(m)] = seq[static_cast<std::size_t>(m)][i];
            out[i] = force_time_derivative(psi, k, p, coupling);
        }
        return out;
    };
    auto jsrc = [&](int j, const std::vector<Jet>& jets) {
        const std::vector<Jet> psi(jets.begin(), jets.begin() + (j - 1));
        return force_time_derivative(psi, j - 2, p, coupling);
    };
    return build(grid, params.n, u0, u1, N, fsrc, jsrc);
}

bool strong_condition_check(const RadialFunction& u0, const RadialFunction& u1, int N, int n) {
    const int k0 = n / 2 + N;
    auto vanishes = [](const RadialFunction& f, int order) {
        if (order < 0) return true;
        double scale = 0.0;
        const double R = std::max(f.support(), 1.0 + 1e-3);
        for (int i = 0; i <= 2000; ++i) scale = std::max(scale, std::abs(f(1.0 + (R - 1.0) * i / 2000.0)));
        const Jet j = f.jet(1.0, static_cast<std::size_t>(order + 1));
        for (int k = 0; k <= order; ++k) {
            if (std::abs(j[static_cast<std::size_t>(k)]) > 1e-10 * scale) return false;
        }
        return true;
    };
    return vanishes(u0, k0) && vanishes(u1, k0 - 1);
}

int compat_order(const RadialGrid& grid, const Params& params, const RadialFunction& u0,
                 const RadialFunction& u1) {
    const int N = std::min(kMaxCompatOrder, static_cast<int>(std::ceil(params.p)) - 1);
    if (N < 1) return 0;
    return nonlinear_sequence(grid, params, u0, u1, N).satisfied_order();
}

std::vector<Field> time_derivative_oracle(const RadialGrid& grid, const Params& params,
                                          const RadialFunction& u0, const RadialFunction& u1, double dt) {
    const RadialSolver solver(grid, params, NonlinearitySpec::defocusing(params.p));
    RadialState fwd = zero_state(grid), bwd = zero_state(grid);
    fwd.u = u0.sample(grid);
    fwd.v = u1.sample(grid);
    fwd.u[0] = fwd.v[0] = 0.0;
    bwd.u = fwd.u;
    for (std::size_t i = 0; i < grid.size(); ++i) bwd.v[i] = -fwd.v[i];
    std::vector<Field> plus, minus;  // u(k dt), u(-k dt) for k = 1, 2
    for (int k = 0; k < 2; ++k) {
        solver.step(fwd, dt);
        solver.step(bwd, dt);
        plus.push_back(fwd.u);
        minus.push_back(bwd.u);
    }
    std::vector<Field> out{fwd.u, fwd.v, Field(grid.size(), 0.0), Field(grid.size(), 0.0)};
    out[0] = u0.sample(grid);
    out[1] = u1.sample(grid);
    out[0][0] = out[1][0] = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out[2][i] = (plus[1][i] - 2.0 * out[0][i] + minus[1][i]) / (4.0 * dt * dt);
        out[3][i] = (plus[1][i] - 2.0 * plus[0][i] + 2.0 * minus[0][i] - minus[1][i]) / (2.0 * dt * dt * dt);
    }
    return out;
}

std::string to_json(const CompatReport& report) {
    nlohmann::json j;
    j["order"] = report.order;
    j["boundary_values"] = report.boundary_values;
    j["verdicts"] = report.verdicts;
    j["tolerance"] = report.tolerance;
    return j.dump(2);
}

}  // namespace wavelab
