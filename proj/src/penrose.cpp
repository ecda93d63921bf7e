#include "wavelab/penrose.hpp"

#include "wavelab/error.hpp"
#include "wavelab/fpu.hpp"
#include "wavelab/norms.hpp"
#include "wavelab/radial.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace wavelab {

namespace {

constexpr double kPi = std::numbers::pi;

double sin_weight(double a, int n) {
    if (a <= 0.0 || a >= kPi) return 0.0;
    return std::pow(std::sin(a), n - 1);
}

double omega_power(double w, double q) {
    if (w <= 0.0) return 0.0;
    return std::pow(w, q);
}

}  // namespace

PenrosePoint to_penrose(double t, double r) {
    if (!(r > 0.0)) throw DomainError("to_penrose: r must be positive");
    const double a = std::atan(t + r);
    const double b = std::atan(t - r);
    return {a + b, a - b};
}

PhysicalPoint from_penrose(PenrosePoint pt) {
    const double w = omega(pt);
    if (!(w > 0.0)) {
        throw DomainError("from_penrose: (T, alpha) = (" + std::to_string(pt.T) + ", " +
                          std::to_string(pt.alpha) + ") lies outside the diamond (omega <= 0)");
    }
    return {std::sin(pt.T) / w, std::sin(pt.alpha) / w};
}

double omega(PenrosePoint pt) { return std::cos(pt.T) + std::cos(pt.alpha); }

double omega_physical(double t, double r) { return 2.0 / (bracket(t + r) * bracket(t - r)); }

double boundary_alpha(double T) { return 0.25 * kPi + std::asin(std::cos(T) / std::numbers::sqrt2); }

double boundary_alpha_rate(double T) {
    const double c = std::cos(T);
    return -std::sin(T) / (std::numbers::sqrt2 * std::sqrt(1.0 - 0.5 * c * c));
}

double boundary_time(double alpha) {
    if (!(alpha > 0.0) || alpha > 0.5 * kPi) {
        throw DomainError("boundary_time: alpha must lie in (0, pi/2]");
    }
    return std::acos(std::min(1.0, std::sin(alpha) - std::cos(alpha)));
}

double boundary_time_slope(double alpha) {
    if (!(alpha > 0.0) || alpha >= 0.5 * kPi - 1e-15) {
        throw DomainError("boundary_time_slope: unbounded at alpha = pi/2 (defined on (0, pi/2))");
    }
    const double d = std::sin(alpha) - std::cos(alpha);
    return -(std::cos(alpha) + std::sin(alpha)) / std::sqrt(1.0 - d * d);
}

double conformal_power(const Params& params) {
    params.validate();
    const double nu = 0.5 * (params.n - 1) * params.p - 0.5 * (params.n + 3);
    if (nu < 1.0) {
        throw DomainError("conformal weight exponent nu = " + std::to_string(nu) +
                          " < 1: the compactified nonlinearity is not C^1 at the null boundary");
    }
    if (nu < smoothness_index(params.n)) {
        warn("nu = " + std::to_string(nu) + " is below the smoothness index " +
             std::to_string(smoothness_index(params.n)) + "; expect reduced convergence order");
    }
    return nu;
}

// dU/dalpha at the boundary from the quadratic through (b, 0) and the first two evolved nodes.
double boundary_slope(const CompactGrid& g, std::span<const double> U, std::size_t first, double b) {
    const double x1 = g.alpha(first);
    const double x2 = g.alpha(first + 1);
    return U[first] * (b - x2) / ((x1 - b) * (x1 - x2)) + U[first + 1] * (b - x1) / ((x2 - b) * (x2 - x1));
}

CompactGrid make_compact_grid(std::size_t N) {
    if (N < 16) throw DomainError("compact grid needs at least 16 nodes");
    return {N, kPi / static_cast<double>(N)};
}

CompactSolver::CompactSolver(const CompactGrid& grid, const Params& params, double coupling)
    : grid_(grid), params_(params), nu_(conformal_power(params)), coupling_(coupling) {
    const std::size_t N = grid.size();
    s_.resize(N);
    sp_.resize(N);
    sm_.resize(N);
    const double h = grid.d_alpha;
    for (std::size_t j = 0; j < N; ++j) {
        const double a = grid.alpha(j);
        s_[j] = sin_weight(a, params.n);
        sp_[j] = j + 1 == N ? 0.0 : sin_weight(a + 0.5 * h, params.n) / (s_[j] * h * h);
        sm_[j] = j == 0 ? 0.0 : sin_weight(a - 0.5 * h, params.n) / (s_[j] * h * h);
    }
}

CutCell CompactSolver::cut(double T) const {
    const double b = boundary_alpha(T) / grid_.d_alpha;
    auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(b - 1e-12)));
    if (first + 2 >= grid_.size()) throw SolverError("compact domain has collapsed at T = " + std::to_string(T));
    CutCell c;
    c.first = first;
    c.theta = static_cast<double>(first) + 0.5 - b;
    // quadratic through (a_b, 0), U[first], U[first + 1] evaluated one cell left of first
    c.ghost = 2.0 * (c.theta - 1.0) / c.theta;
    c.ghost_next = (1.0 - c.theta) / (1.0 + c.theta);
    return c;
}

void CompactSolver::acceleration(std::span<const double> U, double T, std::span<double> out) const {
    const std::size_t N = grid_.size();
    const CutCell c = cut(T);
    const double m = 0.25 * (params_.n - 1) * (params_.n - 1);
    const double cT = std::cos(T);
    for (std::size_t j = 0; j < c.first; ++j) out[j] = 0.0;
    for (std::size_t j = c.first; j < N; ++j) {
        const double ul = j == c.first ? c.ghost * U[j] + c.ghost_next * U[j + 1] : U[j - 1];
        const double ur = j + 1 < N ? U[j + 1] : U[j];
        double a = sp_[j] * (ur - U[j]) - sm_[j] * (U[j] - ul) - m * U[j];
        if (coupling_ != 0.0) {
            const double w = cT + std::cos(grid_.alpha(j));
            if (w > 0.0) a -= coupling_ * omega_power(w, nu_) * signed_power(U[j], params_.p);
        }
        out[j] = a;
    }
}

void CompactSolver::enforce_boundary(std::span<double> f, double T) const {
    const CutCell c = cut(T);
    for (std::size_t j = 0; j < c.first; ++j) f[j] = 0.0;
    if (c.first >= 1 && c.theta > 1.0) f[c.first - 1] = c.ghost * f[c.first] + c.ghost_next * f[c.first + 1];
}

void CompactSolver::enforce_velocity(std::span<const double> U, std::span<double> W, double T) const {
    const CutCell c = cut(T);
    for (std::size_t j = 0; j < c.first; ++j) W[j] = 0.0;
    if (c.first >= 1 && c.theta > 1.0) {
        // U = 0 along the moving boundary gives dU/dT = -a_b'(T) dU/dalpha there.
        const double b = boundary_alpha(T);
        const double Wb = -boundary_alpha_rate(T) * boundary_slope(grid_, U, c.first, b);
        const double x1 = grid_.alpha(c.first);
        W[c.first - 1] = Wb + (grid_.alpha(c.first - 1) - b) * (W[c.first] - Wb) / (x1 - b);
    }
}

void CompactSolver::step(CompactState& s, double dT) const {
    if (!(dT > 0.0) || dT > kCflFraction * grid_.d_alpha * (1.0 + 1e-12)) {
        throw SolverError("compact CFL violation: dT = " + std::to_string(dT) + " exceeds " +
                          std::to_string(kCflFraction * grid_.d_alpha));
    }
    const std::size_t N = grid_.size();
    Field a(N);
    acceleration(s.U, s.T, a);
    for (std::size_t j = 0; j < N; ++j) s.W[j] += 0.5 * dT * a[j];
    for (std::size_t j = 0; j < N; ++j) s.U[j] += dT * s.W[j];
    s.T += dT;
    enforce_boundary(s.U, s.T);
    acceleration(s.U, s.T, a);
    for (std::size_t j = 0; j < N; ++j) s.W[j] += 0.5 * dT * a[j];
    enforce_velocity(s.U, s.W, s.T);
}

CompactRhs compact_rhs(const CompactState& state) {
    const CompactSolver solver(state.grid, state.params, state.coupling);
    CompactRhs r{state.W, Field(state.grid.size(), 0.0)};
    solver.acceleration(state.U, state.T, r.dW);
    const CutCell c = solver.cut(state.T);
    for (std::size_t j = 0; j < c.first; ++j) r.dU[j] = 0.0;
    return r;
}

CompactState transform_initial(const RadialState& s0, const CompactGrid& grid, const Params& params) {
    if (s0.t != 0.0) throw DomainError("transform_initial expects the t = 0 slice");
    const RadialGrid& g = s0.grid;
    if (support_radius(s0) >= g.r_max - 2.0 * g.h) {
        throw DomainError("transform_initial: data must vanish near the outer grid edge");
    }
    CompactState c;
    c.grid = grid;
    c.T = 0.0;
    c.params = params;
    c.nu = conformal_power(params);
    c.U.assign(grid.size(), 0.0);
    c.W.assign(grid.size(), 0.0);
    const double k = 0.5 * (params.n - 1);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double a = grid.alpha(j);
        if (a <= 0.5 * kPi) continue;
        const double r = std::tan(0.5 * a);
        if (r >= g.r_max) continue;
        const double w = 1.0 + std::cos(a);
        c.U[j] = std::pow(w, -k) * interpolate_cubic(g, s0.u, r);
        c.W[j] = std::pow(w, -k - 1.0) * interpolate_cubic(g, s0.v, r);
    }
    const CompactSolver solver(grid, params);
    solver.enforce_boundary(c.U, 0.0);
    solver.enforce_velocity(c.U, c.W, 0.0);
    return c;
}

namespace {

double interpolate_alpha(const CompactGrid& g, const Field& f, double a) {
    const double x = a / g.d_alpha - 0.5;
    const auto N = static_cast<std::ptrdiff_t>(g.size());
    auto i = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(x)) - 1, 0, N - 4);
    double s = 0.0;
    for (int p = 0; p < 4; ++p) {
        double w = 1.0;
        for (int q = 0; q < 4; ++q) {
            if (p != q) w *= (x - static_cast<double>(i + q)) / static_cast<double>(p - q);
        }
        s += w * f[static_cast<std::size_t>(i + p)];
    }
    return s;
}

}  // namespace

RadialState inverse_initial(const CompactState& state, const RadialGrid& grid) {
    if (state.T != 0.0) throw DomainError("inverse_initial expects the T = 0 slice");
    RadialState s = zero_state(grid, 0.0);
    const double k = 0.5 * (state.params.n - 1);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = 2.0 * std::atan(grid.r(i));
        const double w = 1.0 + std::cos(a);
        s.u[i] = std::pow(w, k) * interpolate_alpha(state.grid, state.U, a);
        s.v[i] = std::pow(w, k + 1.0) * interpolate_alpha(state.grid, state.W, a);
    }
    return s;
}

CompactSlice transform_history(const RadialHistory& history, double T, const CompactGrid& grid,
                               const Params& params) {
    CompactSlice out{Field(grid.size(), 0.0), std::vector<bool>(grid.size(), false)};
    const double b = boundary_alpha(T);
    const double k = 0.5 * (params.n - 1);
    const RadialGrid& g = history.grid();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double a = grid.alpha(j);
        if (a <= b) continue;
        const double w = std::cos(T) + std::cos(a);
        if (!(w > 0.0)) continue;
        const PhysicalPoint x = from_penrose({T, a});
        if (x.t < history.t_begin() || x.t > history.t_end() || x.r > g.r_max || x.r < 1.0) continue;
        out.U[j] = std::pow(w, -k) * history.sample(x.t, x.r).first;
        out.valid[j] = true;
    }
    return out;
}

CompactRun evolve_compact(const CompactState& initial, double T_end, double dT,
                          const CompactRunOptions& options) {
    if (!(T_end < kPi)) throw DomainError("evolve_compact: T_end must be below pi");
    const double span = T_end - initial.T;
    if (span < 0.0) throw SolverError("evolve_compact: T_end precedes the initial time");
    enable_flush_to_zero();
    const CompactSolver solver(initial.grid, initial.params, initial.coupling);
    const auto steps = static_cast<std::size_t>(std::ceil(span / dT - 1e-9));
    const double h = steps > 0 ? span / static_cast<double>(steps) : dT;
    const std::size_t stride = std::max<std::size_t>(1, options.stride);
    CompactRun run{initial, {}};
    CompactState& s = run.final_state;
    auto record = [&] {
        for (std::size_t j = 0; j < s.U.size(); ++j) {
            if (!std::isfinite(s.U[j]) || !std::isfinite(s.W[j])) {
                throw SolverError("evolve_compact: numerical blow-up (NaN/Inf) at T = " + std::to_string(s.T));
            }
        }
        run.history.push_back(s);
        if (options.observer) options.observer(s);
    };
    record();
    for (std::size_t k = 1; k <= steps; ++k) {
        solver.step(s, h);
        if (k == steps) s.T = T_end;
        if (k % stride == 0 || k == steps) record();
    }
    return run;
}

namespace {

struct Reconstruction {
    std::vector<double> x, U, W;
};

// Piecewise-linear profile on [a_b(T), upper]: zero at the boundary, the evolved nodes,
// and the last node's values carried to the pole.
Reconstruction reconstruct(const CompactState& s, double upper) {
    const CompactSolver solver(s.grid, s.params, s.coupling);
    const CutCell c = solver.cut(s.T);
    const double b = boundary_alpha(s.T);
    const std::size_t N = s.grid.size();
    Reconstruction r;
    const double Wb = -boundary_alpha_rate(s.T) * boundary_slope(s.grid, s.U, c.first, b);
    r.x.push_back(b);
    r.U.push_back(0.0);
    r.W.push_back(Wb);
    for (std::size_t j = c.first; j < N; ++j) {
        r.x.push_back(s.grid.alpha(j));
        r.U.push_back(s.U[j]);
        r.W.push_back(s.W[j]);
    }
    r.x.push_back(kPi);
    r.U.push_back(s.U[N - 1]);
    r.W.push_back(s.W[N - 1]);
    if (upper < kPi) {
        if (!(upper > b)) throw DomainError("energy range is empty: upper limit below the boundary");
        std::size_t k = 1;
        while (r.x[k] < upper) ++k;
        const double th = (upper - r.x[k - 1]) / (r.x[k] - r.x[k - 1]);
        r.x.resize(k + 1);
        r.U.resize(k + 1);
        r.W.resize(k + 1);
        r.U[k] = r.U[k - 1] + th * (r.U[k] - r.U[k - 1]);
        r.W[k] = r.W[k - 1] + th * (r.W[k] - r.W[k - 1]);
        r.x[k] = upper;
    }
    return r;
}

double energy_over(const CompactState& s, double upper) {
    const Reconstruction r = reconstruct(s, upper);
    const int n = s.params.n;
    const double p = s.params.p;
    const double m = 0.125 * (n - 1) * (n - 1);
    const double cT = std::cos(s.T);
    auto density = [&](std::size_t k) {
        const double U = r.U[k];
        double e = 0.5 * r.W[k] * r.W[k] + m * U * U;
        if (s.coupling != 0.0) {
            e += s.coupling * omega_power(cT + std::cos(r.x[k]), s.nu) * abs_power(U, p + 1.0) / (p + 1.0);
        }
        return sin_weight(r.x[k], n) * e;
    };
    double E = 0.0;
    for (std::size_t k = 0; k + 1 < r.x.size(); ++k) {
        const double dx = r.x[k + 1] - r.x[k];
        if (dx <= 0.0) continue;
        const double du = (r.U[k + 1] - r.U[k]) / dx;
        E += 0.5 * (density(k) + density(k + 1)) * dx;
        E += 0.5 * sin_weight(0.5 * (r.x[k] + r.x[k + 1]), n) * du * du * dx;
    }
    return E;
}

}  // namespace

double energy_E(const CompactState& state) { return energy_over(state, kPi); }

double energy_F(const CompactState& state, double delta) {
    return energy_over(state, std::min(kPi, kPi - state.T + 0.25 * delta));
}

EnergyRates energy_rates(const CompactState& s) {
    const CompactSolver solver(s.grid, s.params, s.coupling);
    const CutCell c = solver.cut(s.T);
    const double b = boundary_alpha(s.T);
    const double Ua = boundary_slope(s.grid, s.U, c.first, b);
    const double g = boundary_alpha_rate(s.T);
    EnergyRates out;
    out.flux = 0.5 * sin_weight(b, s.params.n) * g * Ua * Ua * (1.0 - g * g);
    if (s.coupling != 0.0) {
        const Reconstruction r = reconstruct(s, kPi);
        const double p = s.params.p;
        const double sT = std::sin(s.T);
        const double cT = std::cos(s.T);
        auto dens = [&](std::size_t k) {
            return s.nu * omega_power(cT + std::cos(r.x[k]), s.nu - 1.0) * sin_weight(r.x[k], s.params.n) *
                   sT * abs_power(r.U[k], p + 1.0) / (p + 1.0);
        };
        double sink = 0.0;
        for (std::size_t k = 0; k + 1 < r.x.size(); ++k) {
            sink += 0.5 * (dens(k) + dens(k + 1)) * (r.x[k + 1] - r.x[k]);
        }
        out.sink = s.coupling * sink;
    }
    return out;
}

double flux_identity_residual(std::span<const CompactState> slice) {
    if (slice.size() < 3) throw DomainError("flux_identity_residual needs at least 3 snapshots");
    double integral = 0.0;
    EnergyRates prev = energy_rates(slice[0]);
    for (std::size_t k = 1; k < slice.size(); ++k) {
        const EnergyRates cur = energy_rates(slice[k]);
        const double dT = slice[k].T - slice[k - 1].T;
        integral += 0.5 * dT * ((prev.flux - prev.sink) + (cur.flux - cur.sink));
        prev = cur;
    }
    return std::abs(energy_E(slice.back()) - energy_E(slice.front()) - integral);
}

void write_compact_csv(std::ostream& out, const CompactState& s) {
    out << "alpha,U,W\n" << std::setprecision(17);
    for (std::size_t j = 0; j < s.grid.size(); ++j) {
        out << s.grid.alpha(j) << ',' << s.U[j] << ',' << s.W[j] << '\n';
    }
}

std::string compact_sidecar_json(const CompactState& s, double delta) {
    nlohmann::json j;
    j["T"] = s.T;
    j["n"] = s.params.n;
    j["p"] = s.params.p;
    j["nu"] = s.nu;
    j["delta"] = delta;
    j["Gamma_T"] = boundary_alpha(s.T);
    return j.dump(2);
}

DualResult dual_representation(const RadialFunction& u0, const RadialFunction& u1, const Params& params,
                               const DualOptions& o) {
    const RadialGrid g = make_grid_with_spacing(o.r_max, o.h);
    RadialState s = zero_state(g);
    s.u = u0.sample(g);
    s.v = u1.sample(g);
    s.u[0] = s.v[0] = 0.0;
    const double dt = 0.5 * g.h;
    RadialHistory hist(g, 0.0, 4 * dt);
    EvolveOptions eo;
    eo.log_stride = 4;
    eo.observer = [&](const RadialState& st) { hist.push(st); };
    evolve(s, o.t_cover, dt, NonlinearitySpec::defocusing(params.p), params, eo);

    const CompactGrid cg = make_compact_grid(o.N);
    DualResult out;
    out.h = g.h;
    out.dT = o.dT_fraction * cg.d_alpha;
    double E_prev = -1.0, F_prev = -1.0;
    CompactRunOptions co;
    co.observer = [&](const CompactState& c) {
        const double E = energy_E(c);
        const double F = energy_F(c, o.delta);
        if (E_prev >= 0.0) {
            out.max_increase_E = std::max(out.max_increase_E, E - E_prev);
            out.max_increase_F = std::max(out.max_increase_F, F - F_prev);
        }
        E_prev = E;
        F_prev = F;
    };
    const auto run = evolve_compact(transform_initial(s, cg, params), o.T_end, out.dT, co);
    const auto slice = transform_history(hist, o.T_end, cg, params);
    for (std::size_t j = 0; j < cg.size(); ++j) {
        if (!slice.valid[j]) continue;
        out.discrepancy = std::max(out.discrepancy, std::abs(slice.U[j] - run.final_state.U[j]));
        ++out.compared;
    }
    out.flux_residual = flux_identity_residual(run.history);
    return out;
}

}  // namespace wavelab
