#include "wavelab/radial.hpp"

#include "wavelab/error.hpp"
#include "wavelab/fpu.hpp"
#include "wavelab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

namespace wavelab {

namespace {

bool is_small_integer(double p) { return p == std::floor(p) && p >= 0.0 && p <= 64.0; }

double int_power(double a, int k) {
    double r = 1.0;
    double b = a;
    while (k > 0) {
        if (k & 1) r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

template <int K>
inline double fixed_power(double a) {
    if constexpr (K == 0) {
        return 1.0;
    } else if constexpr (K % 2 == 0) {
        const double h = fixed_power<K / 2>(a);
        return h * h;
    } else {
        return a * fixed_power<K - 1>(a);
    }
}

template <int P>
void subtract_power_force(const double* u, double* dv, std::size_t begin, std::size_t end, double c) {
    for (std::size_t i = begin; i < end; ++i) {
        const double s = u[i];
        if constexpr ((P - 1) % 2 == 0) {
            dv[i] -= c * fixed_power<P - 1>(s) * s;
        } else {
            dv[i] -= c * fixed_power<P - 1>(std::abs(s)) * s;
        }
    }
}

}  // namespace

void subtract_force(const NonlinearitySpec& nl, std::span<const double> u, std::span<double> dv,
                    std::size_t begin, std::size_t end) {
    if (nl.is_linear()) return;
    const double c = nl.coupling;
    if (!nl.truncation && nl.p == std::floor(nl.p)) {
        switch (static_cast<int>(nl.p)) {
            case 3: return subtract_power_force<3>(u.data(), dv.data(), begin, end, c);
            case 4: return subtract_power_force<4>(u.data(), dv.data(), begin, end, c);
            case 5: return subtract_power_force<5>(u.data(), dv.data(), begin, end, c);
            case 6: return subtract_power_force<6>(u.data(), dv.data(), begin, end, c);
            case 7: return subtract_power_force<7>(u.data(), dv.data(), begin, end, c);
            case 8: return subtract_power_force<8>(u.data(), dv.data(), begin, end, c);
            case 9: return subtract_power_force<9>(u.data(), dv.data(), begin, end, c);
            case 10: return subtract_power_force<10>(u.data(), dv.data(), begin, end, c);
            case 11: return subtract_power_force<11>(u.data(), dv.data(), begin, end, c);
            default: break;
        }
    }
    for (std::size_t i = begin; i < end; ++i) dv[i] -= nl.force(u[i]);
}

double abs_power(double s, double q) {
    const double a = std::abs(s);
    if (is_small_integer(q)) return int_power(a, static_cast<int>(q));
    if (a == 0.0) return q == 0.0 ? 1.0 : 0.0;
    return std::pow(a, q);
}

double signed_power(double s, double p) { return abs_power(s, p - 1.0) * s; }

NonlinearitySpec NonlinearitySpec::truncated(double p, double M) {
    if (!(M > 0.0)) throw DomainError("truncation level M must be positive");
    return {p, M, 1.0};
}

double NonlinearitySpec::force(double s) const {
    if (coupling == 0.0) return 0.0;
    if (truncation) {
        const double a = std::min(std::abs(s), *truncation);
        return coupling * abs_power(a, p - 1.0) * s;
    }
    return coupling * signed_power(s, p);
}

double NonlinearitySpec::potential(double s) const {
    if (coupling == 0.0) return 0.0;
    const double a = std::abs(s);
    if (truncation && a > *truncation) {
        const double M = *truncation;
        return coupling * (abs_power(M, p + 1.0) / (p + 1.0) +
                           abs_power(M, p - 1.0) * 0.5 * (s * s - M * M));
    }
    return coupling * abs_power(a, p + 1.0) / (p + 1.0);
}

RadialSolver::RadialSolver(const RadialGrid& grid, const Params& params, NonlinearitySpec nl)
    : lap_(grid, params.n), params_(params), nl_(nl), scratch_(grid.size(), 0.0) {
    params_.validate();
    if (!nl_.is_linear()) {
        if (nl_.p != params_.p) {
            throw DomainError("nonlinearity power " + std::to_string(nl_.p) +
                              " does not match the problem power " + std::to_string(params_.p));
        }
        params_.require_p_at_least(3.0, "the nonlinear radial solver");
    }
}

void RadialSolver::acceleration(std::span<const double> u, std::span<double> dv) const {
    const std::size_t N = u.size();
    lap_.apply_interior(u, dv);
    subtract_force(nl_, u, dv, 1, N - 1);
    dv[0] = 0.0;
    dv[N - 1] = 0.0;
}

void RadialSolver::step(RadialState& s, double dt) const {
    const double h = grid().h;
    if (!(dt > 0.0) || dt > kCflFraction * h * (1.0 + 1e-12)) {
        throw SolverError("CFL violation: dt = " + std::to_string(dt) + " exceeds " +
                          std::to_string(kCflFraction) + " * h = " +
                          std::to_string(kCflFraction * h));
    }
    const std::size_t N = s.u.size();
    Field& a = scratch_;
    a.resize(N);
    acceleration(s.u, a);
    for (std::size_t i = 0; i < N; ++i) s.v[i] += 0.5 * dt * a[i];
    for (std::size_t i = 0; i < N; ++i) s.u[i] += dt * s.v[i];
    s.u[0] = 0.0;
    acceleration(s.u, a);
    for (std::size_t i = 0; i < N; ++i) s.v[i] += 0.5 * dt * a[i];
    s.v[0] = 0.0;
    s.t += dt;
}

RadialRhs rhs(const RadialState& state, const NonlinearitySpec& nl, const Params& params) {
    RadialSolver solver(state.grid, params, nl);
    RadialRhs out{state.v, Field(state.u.size(), 0.0)};
    out.du[0] = 0.0;
    solver.acceleration(state.u, out.dv);
    return out;
}

RadialState step(const RadialState& state, double dt, const NonlinearitySpec& nl,
                 const Params& params) {
    RadialSolver solver(state.grid, params, nl);
    RadialState next = state;
    solver.step(next, dt);
    return next;
}

EnergyReport energy(const RadialState& s, const NonlinearitySpec& nl, const Params& params) {
    const RadialGrid& g = s.grid;
    check_shape(g, s.u, "energy");
    check_shape(g, s.v, "energy");
    const Field w = radial_weights(g, params.n);
    const RadialLaplacian lap(g, params.n);
    EnergyReport e;
    for (std::size_t i = 0; i < g.size(); ++i) {
        e.kinetic += 0.5 * w[i] * s.v[i] * s.v[i];
        e.potential += w[i] * nl.potential(s.u[i]);
    }
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double du = (s.u[i + 1] - s.u[i]) / g.h;
        e.gradient += 0.5 * lap.face_weight(i) * du * du;
    }
    e.total = e.kinetic + e.gradient + e.potential;
    return e;
}

std::optional<double> strauss_ratio(const RadialState& s, int n) {
    const RadialGrid& g = s.grid;
    double grad2 = 0.0;
    double sup = 0.0;
    const double half = 0.5 * n - 1.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double rp = g.r(i) + 0.5 * g.h;
        const double du = (s.u[i + 1] - s.u[i]) / g.h;
        grad2 += g.h * std::pow(rp, n - 1) * du * du;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        sup = std::max(sup, std::pow(g.r(i), half) * std::abs(s.u[i]));
    }
    if (!(grad2 > 0.0)) return std::nullopt;
    return sup / std::sqrt(grad2);
}

double support_radius(const RadialState& s) {
    for (std::size_t i = s.grid.size(); i-- > 0;) {
        if (s.u[i] != 0.0 || s.v[i] != 0.0) return s.grid.r(i);
    }
    return 1.0;
}

LogEntry make_log_entry(const RadialState& s, const NonlinearitySpec& nl, const Params& params) {
    LogEntry e;
    e.t = s.t;
    e.energy = energy(s, nl, params);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        if (std::abs(s.u[i]) > e.sup_u) {
            e.sup_u = std::abs(s.u[i]);
            e.sup_location = s.grid.r(i);
        }
    }
    e.strauss_ratio = strauss_ratio(s, params.n).value_or(std::numeric_limits<double>::quiet_NaN());
    return e;
}

namespace {

bool finite_state(const RadialState& s) {
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        if (!std::isfinite(s.u[i]) || !std::isfinite(s.v[i])) return false;
    }
    return true;
}

}  // namespace

EvolveResult evolve(const RadialState& initial, double t_end, double dt,
                    const NonlinearitySpec& nl, const Params& params,
                    const EvolveOptions& options) {
    const RadialGrid& g = initial.grid;
    check_shape(g, initial.u, "evolve");
    check_shape(g, initial.v, "evolve");
    if (initial.u[0] != 0.0 || initial.v[0] != 0.0) {
        throw DomainError("evolve: initial data violate the Dirichlet condition at r = 1");
    }
    if (!(dt > 0.0)) throw SolverError("evolve: dt must be positive");
    const double span = t_end - initial.t;
    if (span < 0.0) throw SolverError("evolve: t_end precedes the initial time");

    if (options.enforce_causal_window) {
        const double R0 = support_radius(initial);
        if (R0 > 1.0 && R0 + span >= g.r_max - 2.0 * g.h) {
            const double need = R0 + span + 2.0 * g.h;
            throw SolverError("evolve: causal window exceeded; data supported up to r = " +
                              std::to_string(R0) + " need r_max > " + std::to_string(need) +
                              " for t_end = " + std::to_string(t_end));
        }
    }

    enable_flush_to_zero();
    RadialSolver solver(g, params, nl);
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    const double h_t = steps > 0 ? span / static_cast<double>(steps) : dt;
    const std::size_t stride = std::max<std::size_t>(1, options.log_stride);

    EvolveResult result{initial, {}, false};
    RadialState& s = result.final_state;

    auto record = [&] {
        if (!finite_state(s)) {
            throw SolverError("evolve: numerical blow-up (NaN/Inf) at t = " + std::to_string(s.t));
        }
        result.log.push_back(make_log_entry(s, nl, params));
        if (options.observer) options.observer(s);
    };

    record();
    for (std::size_t k = 1; k <= steps; ++k) {
        solver.step(s, h_t);
        if (k == steps) s.t = t_end;
        if (k % stride == 0 || k == steps) {
            record();
            if (options.stop_above && result.log.back().sup_u > *options.stop_above) {
                result.stopped_early = true;
                break;
            }
        }
    }
    return result;
}

TruncationCheck truncation_consistency(const RadialState& data, const Params& params,
                                       double M_big, double t_end, double dt,
                                       std::size_t stride) {
    std::vector<Field> truncated;
    std::vector<Field> full;
    EvolveOptions opt;
    opt.log_stride = stride;
    opt.observer = [&](const RadialState& s) { truncated.push_back(s.u); };
    const auto a = evolve(data, t_end, dt, NonlinearitySpec::truncated(params.p, M_big), params, opt);
    opt.observer = [&](const RadialState& s) { full.push_back(s.u); };
    evolve(data, t_end, dt, NonlinearitySpec::defocusing(params.p), params, opt);

    TruncationCheck out;
    for (const auto& e : a.log) out.truncated_sup = std::max(out.truncated_sup, e.sup_u);
    out.conclusive = out.truncated_sup < M_big;
    for (std::size_t k = 0; k < truncated.size(); ++k) {
        for (std::size_t i = 0; i < truncated[k].size(); ++i) {
            out.max_discrepancy = std::max(out.max_discrepancy, std::abs(truncated[k][i] - full[k][i]));
        }
    }
    return out;
}

BlowupVerdict detect_blowup(std::span<const LogEntry> log, double threshold) {
    if (log.empty()) throw DomainError("detect_blowup: empty log");
    BlowupVerdict v;
    v.threshold = threshold;
    for (const auto& e : log) {
        if (e.sup_u > threshold) {
            v.exceeded = true;
            v.first_time = e.t;
            v.location = e.sup_location;
            break;
        }
    }
    return v;
}

void write_log_csv(std::ostream& out, std::span<const LogEntry> log) {
    out << "t,E_total,E_kin,E_grad,E_pot,sup_u,strauss_ratio\n";
    out << std::setprecision(17);
    for (const auto& e : log) {
        out << e.t << ',' << e.energy.total << ',' << e.energy.kinetic << ',' << e.energy.gradient
            << ',' << e.energy.potential << ',' << e.sup_u << ',' << e.strauss_ratio << '\n';
    }
}

}  // namespace wavelab
