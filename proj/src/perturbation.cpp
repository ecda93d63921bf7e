#include "wavelab/perturbation.hpp"

#include "wavelab/compat.hpp"
#include "wavelab/error.hpp"
#include "wavelab/fpu.hpp"
#include "wavelab/norms.hpp"
#include "wavelab/stencil.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

namespace wavelab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool small_integer(double p) { return p == std::floor(p) && p >= 2.0 && p <= 12.0; }

// |s|^{P-1} s
template <int P>
inline double fixed_signed_power(double s) {
    const double a = std::abs(s);
    double r = s;
    for (int k = 1; k < P; ++k) r *= a;
    return r;
}

// Calls body(power_fn) with a function computing |s|^{p-1} s, unrolled for integer p.
template <class Body>
void with_signed_power(double p, Body&& body) {
    if (small_integer(p)) {
        switch (static_cast<int>(p)) {
            case 2: return body(fixed_signed_power<2>);
            case 3: return body(fixed_signed_power<3>);
            case 4: return body(fixed_signed_power<4>);
            case 5: return body(fixed_signed_power<5>);
            case 6: return body(fixed_signed_power<6>);
            case 7: return body(fixed_signed_power<7>);
            case 8: return body(fixed_signed_power<8>);
            case 9: return body(fixed_signed_power<9>);
            case 10: return body(fixed_signed_power<10>);
            case 11: return body(fixed_signed_power<11>);
            case 12: return body(fixed_signed_power<12>);
            default: break;
        }
    }
    body([p](double s) { return signed_power(s, p); });
}

// V = p |u|^{p-1}
void potential_values(std::span<const double> u, double p, std::span<double> V) {
    const bool fast = small_integer(p - 1.0);
    const int k = static_cast<int>(p - 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = std::abs(u[i]);
        double v;
        if (fast) {
            v = 1.0;
            for (int j = 0; j < k; ++j) v *= a;
        } else {
            v = abs_power(a, p - 1.0);
        }
        V[i] = p * v;
    }
}

double sup_abs(std::span<const double> f) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(std::span<const double> f) {
    for (double x : f) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------------------
// Background

Background::Background(Kind kind, RadialGrid grid, Params params)
    : kind_(kind), grid_(grid), params_(std::move(params)) {
    params_.validate();
}

Background Background::zero(const RadialGrid& grid, const Params& params) {
    return Background(Kind::Zero, grid, params);
}

Background Background::frozen(const RadialGrid& grid, const Params& params, Field u_frozen) {
    check_shape(grid, u_frozen, "Background::frozen");
    Background b(Kind::Frozen, grid, params);
    b.frozen_ = std::move(u_frozen);
    return b;
}

double oscillation_period(const RadialHistory& history) {
    double global = 0.0;
    std::vector<double> su(history.size()), sv(history.size());
    for (std::size_t k = 0; k < history.size(); ++k) {
        su[k] = sup_abs(history.u(k));
        sv[k] = sup_abs(history.v(k));
        global = std::max(global, su[k]);
    }
    double period = kInf;
    for (std::size_t k = 0; k < history.size(); ++k) {
        if (su[k] < 1e-3 * global || sv[k] == 0.0) continue;
        period = std::min(period, 2.0 * kPi * su[k] / sv[k]);
    }
    return period;
}

Background Background::stored(RadialHistory history, const Params& params) {
    if (history.size() < 2) throw DomainError("stored background needs at least two snapshots");
    const double period = oscillation_period(history);
    if (history.stride() > period / 8.0 * (1.0 + 1e-12)) {
        throw DomainError("background stride " + std::to_string(history.stride()) +
                          " gives fewer than 8 samples per oscillation (period ~ " +
                          std::to_string(period) + ")");
    }
    Background b(Kind::Stored, history.grid(), params);
    b.history_ = std::make_shared<const RadialHistory>(std::move(history));
    return b;
}

Background Background::streaming(const RadialState& initial, const Params& params, double dt) {
    check_shape(initial.grid, initial.u, "Background::streaming");
    check_shape(initial.grid, initial.v, "Background::streaming");
    if (!(dt > 0.0) || dt > RadialSolver::kCflFraction * initial.grid.h * (1.0 + 1e-12)) {
        throw SolverError("streaming background: dt = " + std::to_string(dt) + " violates the CFL bound");
    }
    Background b(Kind::Streaming, initial.grid, params);
    b.solver_ = std::make_shared<RadialSolver>(initial.grid, params, NonlinearitySpec::defocusing(params.p));
    b.current_ = initial;
    b.dt_ = dt;
    b.t0_ = initial.t;
    b.frozen_.assign(1, support_radius(initial));  // initial support, for the causal check
    return b;
}

double Background::t_end() const {
    return kind_ == Kind::Stored ? history_->t_end() : kInf;
}

void Background::frame(double t, Field& u, Field& ut) {
    const std::size_t N = grid_.size();
    switch (kind_) {
        case Kind::Zero:
            u.assign(N, 0.0);
            ut.assign(N, 0.0);
            return;
        case Kind::Frozen:
            u = frozen_;
            ut.assign(N, 0.0);
            return;
        case Kind::Stored:
            history_->fill(t, u, ut);
            return;
        case Kind::Streaming:
            break;
    }
    const double x = (t - t0_) / dt_;
    const double k = std::round(x);
    if (std::abs(x - k) > 1e-6 || k < 0.0) {
        throw DomainError("streaming background: t = " + std::to_string(t) + " is not on its time lattice");
    }
    const auto target = static_cast<std::size_t>(k);
    if (target < steps_taken_) {
        throw DomainError("streaming background cannot go back to t = " + std::to_string(t) +
                          " from t = " + std::to_string(current_.t));
    }
    const double R0 = frozen_.front();
    if (R0 > 1.0 && R0 + (t - t0_) >= grid_.r_max - 2.0 * grid_.h) {
        throw SolverError("streaming background: causal window exceeded at t = " + std::to_string(t) +
                          " (data up to r = " + std::to_string(R0) + ", r_max = " +
                          std::to_string(grid_.r_max) + ")");
    }
    enable_flush_to_zero();
    while (steps_taken_ < target) {
        solver_->step(current_, dt_);
        ++steps_taken_;
        if (steps_taken_ % 64 == 0 && !all_finite(current_.u)) {
            throw SolverError("streaming background: NaN/Inf at t = " + std::to_string(current_.t));
        }
    }
    current_.t = t0_ + static_cast<double>(steps_taken_) * dt_;
    u = current_.u;
    ut = current_.v;
}

double Background::potential(double t, double r) {
    if (kind_ == Kind::Zero) return 0.0;
    if (kind_ == Kind::Stored) {
        return params_.p * abs_power(history_->sample(t, r).first, params_.p - 1.0);
    }
    Field u, ut;
    frame(t, u, ut);
    return params_.p * abs_power(interpolate_cubic(grid_, u, r), params_.p - 1.0);
}

void Background::potential_field(double t, Field& V) {
    Field u, ut;
    frame(t, u, ut);
    V.resize(u.size());
    potential_values(u, params_.p, V);
}

// ---------------------------------------------------------------------------------------
// Linearized channel

ModeSolver::ModeSolver(const RadialGrid& grid, const Params& params, int ell)
    : lap_(grid, params.n), params_(params), ell_(ell), centrifugal_(grid.size(), 0.0),
      weights_(radial_weights(grid, params.n)) {
    if (ell < 0) throw DomainError("mode index l must be nonnegative");
    const double c = static_cast<double>(ell) * static_cast<double>(ell + params.n - 2);
    for (std::size_t i = 0; i < grid.size(); ++i) centrifugal_[i] = c / (grid.r(i) * grid.r(i));
}

void ModeSolver::acceleration(std::span<const double> w, std::span<const double> V, std::span<double> out) const {
    const std::size_t N = w.size();
    lap_.apply_interior(w, out);
    if (ell_ != 0) {
        for (std::size_t i = 1; i + 1 < N; ++i) out[i] -= centrifugal_[i] * w[i];
    }
    if (!V.empty()) {
        for (std::size_t i = 1; i + 1 < N; ++i) out[i] -= V[i] * w[i];
    }
    out[0] = 0.0;
    out[N - 1] = 0.0;
}

void ModeSolver::step(ModeState& s, std::span<const double> V_now, std::span<const double> V_next,
                      double dt) const {
    const double h = lap_.grid().h;
    if (!(dt > 0.0) || dt > RadialSolver::kCflFraction * h * (1.0 + 1e-12)) {
        throw SolverError("mode step: CFL violation, dt = " + std::to_string(dt));
    }
    const std::size_t N = s.w.size();
    Field a(N);
    acceleration(s.w, V_now, a);
    for (std::size_t i = 0; i < N; ++i) s.w_t[i] += 0.5 * dt * a[i];
    for (std::size_t i = 0; i < N; ++i) s.w[i] += dt * s.w_t[i];
    s.w[0] = 0.0;
    acceleration(s.w, V_next, a);
    for (std::size_t i = 0; i < N; ++i) s.w_t[i] += 0.5 * dt * a[i];
    s.w_t[0] = 0.0;
    s.t += dt;
}

double ModeSolver::energy(const ModeState& s, std::span<const double> V) const {
    const RadialGrid& g = lap_.grid();
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double d = s.w_t[i] * s.w_t[i] + centrifugal_[i] * s.w[i] * s.w[i];
        if (!V.empty()) d += V[i] * s.w[i] * s.w[i];
        e += 0.5 * weights_[i] * d;
    }
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double dw = (s.w[i + 1] - s.w[i]) / g.h;
        e += 0.5 * lap_.face_weight(i) * dw * dw;
    }
    return e;
}

ModeRhs linearized_mode_rhs(const ModeState& state, Background& background, const Params& params) {
    if (!(state.grid == background.grid())) throw DomainError("mode grid differs from the background grid");
    Field V;
    background.potential_field(state.t, V);
    const ModeSolver solver(state.grid, params, state.ell);
    ModeRhs r{state.w, Field(state.w.size(), 0.0)};
    r.dw[0] = 0.0;
    solver.acceleration(state.w, V, r.dw_t);
    return r;
}

// ---------------------------------------------------------------------------------------
// Second-order remainder kernel

double F_kernel(double u, double w, double p) {
    if (!(p > 3.0)) throw DomainError("F_kernel needs p > 3, got p = " + std::to_string(p));
    static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                             0.9602898564975363};
    static constexpr std::array<double, 4> wt{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};
    auto integrand = [&](double s) { return signed_power(u + s * w, p - 2.0) * (1.0 - s); };
    auto gauss = [&](double a, double b) {
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t k = 0; k < 4; ++k) sum += wt[k] * (integrand(c - h * x[k]) + integrand(c + h * x[k]));
        return h * sum;
    };
    double integral;
    const double root = w != 0.0 ? -u / w : -1.0;
    if (root > 0.0 && root < 1.0) {
        integral = gauss(0.0, root) + gauss(root, 1.0);
    } else {
        integral = gauss(0.0, 1.0);
    }
    return -p * (p - 1.0) * integral;
}

// ---------------------------------------------------------------------------------------
// M(T)

StrichartzPair strichartz_pair(int n, double delta) {
    if (!(delta >= 0.0 && delta < 1.0)) {
        throw DomainError("Strichartz exponent delta must lie in [0, 1), got " + std::to_string(delta));
    }
    StrichartzPair s;
    s.q = delta == 0.0 ? kInf : 2.0 / delta;
    s.r = 2.0 * n / (n - 2.0 - delta);
    return s;
}

void check_admissible(int n, double q, double r_exp) {
    if (!(q >= 2.0)) throw DomainError("inadmissible pair: q = " + std::to_string(q) + " < 2");
    const double delta = std::isinf(q) ? 0.0 : 2.0 / q;
    const StrichartzPair s = strichartz_pair(n, delta);
    if (std::abs(s.r - r_exp) > 1e-9 * s.r) {
        throw DomainError("inadmissible pair: q = " + std::to_string(q) + " needs r = " + std::to_string(s.r) +
                          ", got " + std::to_string(r_exp));
    }
}

double M_norm(std::span<const RadialState> history, int n, int m, double q, double r_exp) {
    check_admissible(n, q, r_exp);
    if (m < 0) throw DomainError("M_norm: m must be nonnegative");
    if (history.empty()) return 0.0;
    const int mm = std::min(m, 1);
    return y_norm(history, n, kInf, 2.0, mm + 1) + y_norm(history, n, q, r_exp, mm);
}

MTracker::MTracker(int m, double q) : m_(std::min(std::max(m, 0), 1)), q_(q) {
    if (!(q >= 1.0)) throw DomainError("MTracker: q must be >= 1");
}

void MTracker::add(double t, const DerivativeNorms& d) {
    const std::size_t n2 = m_ == 1 ? 6 : 3;
    const std::size_t nr = m_ == 1 ? 3 : 1;
    for (std::size_t j = 0; j < n2; ++j) sup_[j] = std::max(sup_[j], d.l2[j]);
    for (std::size_t j = 0; j < nr; ++j) {
        if (std::isinf(q_)) {
            integral_[j] = std::max(integral_[j], d.lr[j]);
        } else {
            const double cur = std::pow(d.lr[j], q_);
            if (started_) integral_[j] += 0.5 * (t - t_prev_) * (prev_[j] + cur);
            prev_[j] = cur;
        }
    }
    started_ = true;
    t_prev_ = t;
}

double MTracker::value() const {
    double v = 0.0;
    for (double s : sup_) v += s;
    for (double s : integral_) v += std::isinf(q_) ? s : std::pow(s, 1.0 / q_);
    return v;
}

// ---------------------------------------------------------------------------------------
// Weak-strong energy bound

GronwallConstants gronwall_constants(double p, double T, double sup_u, double sup_ut) {
    if (!(p > 1.0)) throw DomainError("gronwall_constants: p must exceed 1");
    const double a1 = std::pow(sup_u, p - 1.0);
    const double kappa = std::max(1.0, std::pow(2.0, p - 2.0));  // (x+y)^{p-1} <= kappa (x^{p-1} + y^{p-1})
    const double cA = std::min(1.0, std::pow(2.0, 2.0 - p));
    const double C1 = 0.5 * p * a1;
    const double D = sup_ut * 0.5 * p * (p - 1.0) * kappa;  // |H| u_t <= D (a1 w^2 + |w|^{p+1})
    const double G = 0.5 * p * kappa;                        // G <= G (a1 w^2 + |w|^{p+1})
    const double alpha = 1.0 + G * (p + 1.0);
    const double beta = G * a1 + 2.0 * T * D * a1 + 2.0 * C1;
    GronwallConstants c;
    c.K0 = std::max(alpha, beta) / cA;
    c.K1 = (D * (4.0 * T * T * a1 + p + 1.0) + 4.0 * T * C1) / cA;
    c.C = std::max(c.K0, c.K1);
    return c;
}

double gronwall_log_bound(const GronwallConstants& c, double t, double E0, double L0) {
    const double s = E0 + L0;
    if (!(s > 0.0)) return -kInf;
    return std::log(c.C) + c.C * t + std::log(s);
}

EnergySplit energy_split(const RadialState& u, const RadialState& v, const Params& params) {
    const RadialGrid& g = u.grid;
    if (!(g == v.grid)) throw DomainError("energy_split: runs use different grids");
    const double p = params.p;
    const Field wr = radial_weights(g, params.n);
    const RadialLaplacian lap(g, params.n);
    EnergySplit s;
    s.t = u.t;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = v.u[i] - u.u[i];
        const double wt = v.v[i] - u.v[i];
        const double Fu = abs_power(u.u[i], p + 1.0) / (p + 1.0);
        const double Fv = abs_power(v.u[i], p + 1.0) / (p + 1.0);
        const double fu = signed_power(u.u[i], p);
        s.E_u += wr[i] * (0.5 * u.v[i] * u.v[i] + Fu);
        s.E_v += wr[i] * (0.5 * v.v[i] * v.v[i] + Fv);
        s.A += wr[i] * (0.5 * wt * wt + Fv - Fu - fu * w);
        s.B += wr[i] * (u.v[i] * wt + fu * w);
        s.E_w += wr[i] * (0.5 * wt * wt + abs_power(w, p + 1.0) / (p + 1.0));
        s.w_l2_sq += wr[i] * w * w;
        s.sup_u = std::max(s.sup_u, std::abs(u.u[i]));
        s.sup_ut = std::max(s.sup_ut, std::abs(u.v[i]));
    }
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double fw = lap.face_weight(i);
        const double du = (u.u[i + 1] - u.u[i]) / g.h;
        const double dv = (v.u[i + 1] - v.u[i]) / g.h;
        const double dw = dv - du;
        s.E_u += 0.5 * fw * du * du;
        s.E_v += 0.5 * fw * dv * dv;
        s.A += 0.5 * fw * dw * dw;
        s.B += fw * du * dw;
        s.E_w += 0.5 * fw * dw * dw;
    }
    return s;
}

GronwallReport gronwall_check(std::span<const RadialState> u_run, std::span<const RadialState> v_run,
                              const Params& params) {
    if (u_run.empty() || u_run.size() != v_run.size()) {
        throw DomainError("gronwall_check: runs must have the same nonzero number of snapshots");
    }
    GronwallReport r;
    double sup_u = 0.0, sup_ut = 0.0;
    for (std::size_t k = 0; k < u_run.size(); ++k) {
        if (!(u_run[k].grid == v_run[k].grid) || std::abs(u_run[k].t - v_run[k].t) > 1e-12 * std::max(1.0, u_run[k].t)) {
            throw DomainError("gronwall_check: mismatched discretizations at snapshot " + std::to_string(k));
        }
        r.splits.push_back(energy_split(u_run[k], v_run[k], params));
        const auto& s = r.splits.back();
        sup_u = std::max(sup_u, s.sup_u);
        sup_ut = std::max(sup_ut, s.sup_ut);
        r.max_identity_error = std::max(r.max_identity_error,
                                        std::abs(s.E_v - s.E_u - s.A - s.B) / std::max(1.0, std::abs(s.E_v)));
    }
    const double t0 = u_run.front().t;
    r.constants = gronwall_constants(params.p, u_run.back().t - t0, sup_u, sup_ut);
    const double E0 = r.splits.front().E_w;
    const double L0 = r.splits.front().w_l2_sq;
    r.bound_holds = true;
    for (const auto& s : r.splits) {
        const double lb = gronwall_log_bound(r.constants, s.t - t0, E0, L0);
        r.bound.push_back(std::exp(lb));
        if (s.E_w > 0.0 && !(std::log(s.E_w) <= lb + 1e-12)) r.bound_holds = false;
    }
    return r;
}

// ---------------------------------------------------------------------------------------
// Axisymmetric fields

double AxisymGrid::d_theta() const { return kPi / static_cast<double>(n_theta); }

AxisymState make_axisym_state(const AxisymGrid& grid, const RadialFunction& radial, int legendre) {
    if (grid.n_theta < 2) throw DomainError("axisymmetric grid needs at least two polar cells");
    if (legendre < 0) throw DomainError("Legendre degree must be nonnegative");
    AxisymState s;
    s.grid = grid;
    s.w.assign(grid.size(), 0.0);
    s.w_t.assign(grid.size(), 0.0);
    const Field f = radial.sample(grid.radial);
    for (std::size_t k = 0; k < grid.n_theta; ++k) {
        const double P = std::legendre(static_cast<unsigned>(legendre), std::cos(grid.theta(k)));
        for (std::size_t i = 1; i < grid.radial.size(); ++i) s.w[grid.index(i, k)] = f[i] * P;
    }
    return s;
}

void write_axisym_csv(std::ostream& out, const AxisymState& s) {
    out << "r,theta,w,w_t\n" << std::setprecision(17);
    for (std::size_t k = 0; k < s.grid.n_theta; ++k) {
        for (std::size_t i = 0; i < s.grid.radial.size(); ++i) {
            const std::size_t j = s.grid.index(i, k);
            out << s.grid.radial.r(i) << ',' << s.grid.theta(k) << ',' << s.w[j] << ',' << s.w_t[j] << '\n';
        }
    }
}

std::string axisym_sidecar_json(const AxisymState& s, const Params& params) {
    nlohmann::json j;
    j["t"] = s.t;
    j["n"] = params.n;
    j["p"] = params.p;
    j["n_r"] = s.grid.radial.size();
    j["n_theta"] = s.grid.n_theta;
    j["h"] = s.grid.radial.h;
    j["d_theta"] = s.grid.d_theta();
    return j.dump(2);
}

std::string to_string(PerturbationMode mode) {
    return mode == PerturbationMode::Linearized ? "linearized" : "axisymmetric";
}

namespace {

// ---------------------------------------------------------------------------------------
// Lockstep members

class Member {
public:
    virtual ~Member() = default;
    // Acceleration at the initial time.
    virtual void prepare(const Field& u) = 0;
    // One kick-drift-kick step; u_next is the background at the end of the step.
    virtual void step(const Field& u_next, double dt) = 0;
    virtual void record(double t, const Field& u, const Field& ut) = 0;
};

DerivativeNorms radial_derivative_norms(const RadialGrid& g, int n, double r_exp, const Field& w,
                                        const Field& wt, const Field& a) {
    const Field wr = radial_derivative(g, w);
    const Field wrr = radial_derivative(g, wr);
    const Field wtr = radial_derivative(g, wt);
    DerivativeNorms d;
    const Field* fields[6] = {&w, &wt, &wr, &a, &wtr, &wrr};
    for (std::size_t j = 0; j < 6; ++j) d.l2[j] = lp_norm(g, n, *fields[j], 2.0);
    for (std::size_t j = 0; j < 3; ++j) d.lr[j] = lp_norm(g, n, *fields[j], r_exp);
    return d;
}

class ModeMember : public Member {
public:
    ModeMember(const ModeState& initial, const Params& params, const PerturbationRunOptions& opt)
        : solver_(initial.grid, params, initial.ell), params_(params), state_(initial), opt_(opt),
          pair_(strichartz_pair(params.n, opt.m_norm.delta)), tracker_(opt.m_norm.m, pair_.q),
          a_(initial.grid.size()), V_(initial.grid.size()),
          weights_(radial_weights(initial.grid, params.n)) {
        check_shape(initial.grid, initial.w, "evolve_mode");
        check_shape(initial.grid, initial.w_t, "evolve_mode");
        if (initial.w[0] != 0.0 || initial.w_t[0] != 0.0) {
            throw DomainError("mode data violate the Dirichlet condition at r = 1");
        }
        const double c = static_cast<double>(initial.ell) * (initial.ell + params.n - 2);
        c_max_ = c;
    }

    void prepare(const Field& u) override {
        potential_values(u, params_.p, V_);
        solver_.acceleration(state_.w, V_, a_);
    }

    void step(const Field& u_next, double dt) override {
        const std::size_t N = a_.size();
        for (std::size_t i = 0; i < N; ++i) state_.w_t[i] += 0.5 * dt * a_[i];
        for (std::size_t i = 0; i < N; ++i) state_.w[i] += dt * state_.w_t[i];
        state_.w[0] = 0.0;
        potential_values(u_next, params_.p, V_);
        solver_.acceleration(state_.w, V_, a_);
        for (std::size_t i = 0; i < N; ++i) state_.w_t[i] += 0.5 * dt * a_[i];
        state_.w_t[0] = 0.0;
        state_.t += dt;
        dt_ = dt;
    }

    void record(double t, const Field& u, const Field& ut) override {
        state_.t = t;
        if (!all_finite(state_.w) || !all_finite(state_.w_t)) {
            throw SolverError("linearized mode: NaN/Inf at t = " + std::to_string(t));
        }
        const RadialGrid& g = state_.grid;
        if (dt_ > 0.0) {
            const double omega2 = 4.0 / (g.h * g.h) + sup_abs(V_) + c_max_;
            if (dt_ * dt_ * omega2 >= 4.0) {
                throw SolverError("linearized mode: step exceeds the stability bound of the potential at t = " +
                                  std::to_string(t));
            }
        }
        tracker_.add(t, radial_derivative_norms(g, params_.n, pair_.r, state_.w, state_.w_t, a_));
        PerturbationSample s;
        s.t = t;
        s.M = tracker_.value();
        // energy of w with the |w|^{p+1} term, centrifugal part included
        double e = solver_.energy(state_, {});
        double l2 = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            e += weights_[i] * abs_power(state_.w[i], params_.p + 1.0) / (params_.p + 1.0);
            l2 += weights_[i] * state_.w[i] * state_.w[i];
        }
        s.E_w = e;
        s.w_l2_sq = l2;
        s.sup_w = sup_abs(state_.w);
        s.sup_u = sup_abs(u);
        s.sup_ut = sup_abs(ut);
        samples_.push_back(s);
        if (opt_.keep_every > 0 && (samples_.size() - 1) % opt_.keep_every == 0) {
            kept_.push_back(RadialState{g, t, state_.w, state_.w_t});
        }
    }

    ModeRun result() && { return ModeRun{std::move(state_), std::move(samples_), std::move(kept_)}; }
    std::vector<PerturbationSample>& samples() { return samples_; }

private:
    ModeSolver solver_;
    Params params_;
    ModeState state_;
    PerturbationRunOptions opt_;
    StrichartzPair pair_;
    MTracker tracker_;
    Field a_, V_, weights_;
    std::vector<PerturbationSample> samples_;
    std::vector<RadialState> kept_;
    double c_max_ = 0.0;
    double dt_ = 0.0;
};

// w_tt = Lap w - [f(u + w) - f(u)] on the (r, theta) grid, f(s) = |s|^{p-1} s.
class AxisymMember : public Member {
public:
    AxisymMember(const AxisymState& initial, const Params& params, const PerturbationRunOptions& opt)
        : grid_(initial.grid), lap_(initial.grid.radial, 3), params_(params), state_(initial), opt_(opt),
          pair_(strichartz_pair(3, opt.m_norm.delta)), tracker_(opt.m_norm.m, pair_.q),
          a_(initial.grid.size(), 0.0) {
        if (params.n != 3) throw DomainError("axisymmetric runs are implemented for n = 3 only");
        if (state_.w.size() != grid_.size() || state_.w_t.size() != grid_.size()) {
            throw DomainError("axisymmetric state does not match its grid");
        }
        const std::size_t Nr = grid_.radial.size();
        const std::size_t Nt = grid_.n_theta;
        const double dth = grid_.d_theta();
        for (std::size_t k = 0; k < Nt; ++k) {
            if (state_.w[grid_.index(0, k)] != 0.0 || state_.w_t[grid_.index(0, k)] != 0.0) {
                throw DomainError("axisymmetric data violate the Dirichlet condition at r = 1");
            }
        }
        // cell measure mu_k = cos(theta_{k-1/2}) - cos(theta_{k+1/2}), sum 2
        mu_.resize(Nt);
        cp_.resize(Nt);
        cm_.resize(Nt);
        face_.resize(Nt);
        for (std::size_t k = 0; k < Nt; ++k) {
            const double lo = static_cast<double>(k) * dth;
            const double hi = lo + dth;
            mu_[k] = std::cos(lo) - std::cos(hi);
            const double A = mu_[k] / dth;
            face_[k] = k + 1 < Nt ? std::sin(hi) : 0.0;
            cp_[k] = face_[k] / (A * dth * dth);
            cm_[k] = k > 0 ? std::sin(lo) / (A * dth * dth) : 0.0;
        }
        inv_r2_.resize(Nr);
        for (std::size_t i = 0; i < Nr; ++i) inv_r2_[i] = 1.0 / (grid_.radial.r(i) * grid_.radial.r(i));
        wr_ = radial_weights(grid_.radial, 3);
        // Gershgorin bound on the spatial operator
        double rad = 0.0;
        for (std::size_t i = 1; i + 1 < Nr; ++i) rad = std::max(rad, 2.0 * (lap_.plus(i) + lap_.minus(i)));
        double ang = 0.0;
        for (std::size_t k = 0; k < Nt; ++k) ang = std::max(ang, 2.0 * (cp_[k] + cm_[k]) * inv_r2_[1]);
        omega2_ = rad + ang;
        active_ = std::min(Nr, last_nonzero() + 4);
    }

    void prepare(const Field& u) override { acceleration(u); }

    void step(const Field& u_next, double dt) override {
        if (!(dt > 0.0) || dt * dt * omega2_ >= 4.0) {
            throw SolverError("axisymmetric step: dt = " + std::to_string(dt) + " violates the CFL bound");
        }
        const std::size_t Nr = grid_.radial.size();
        active_ = std::min(Nr, active_ + 2);
        for (std::size_t k = 0; k < grid_.n_theta; ++k) {
            const std::size_t o = k * Nr;
            for (std::size_t i = 0; i < active_; ++i) state_.w_t[o + i] += 0.5 * dt * a_[o + i];
            for (std::size_t i = 0; i < active_; ++i) state_.w[o + i] += dt * state_.w_t[o + i];
            state_.w[o] = 0.0;
        }
        acceleration(u_next);
        for (std::size_t k = 0; k < grid_.n_theta; ++k) {
            const std::size_t o = k * Nr;
            for (std::size_t i = 0; i < active_; ++i) state_.w_t[o + i] += 0.5 * dt * a_[o + i];
            state_.w_t[o] = 0.0;
        }
        state_.t += dt;
        dt_ = dt;
        if (++steps_ % 32 == 0) active_ = std::min(Nr, last_nonzero() + 4);
    }

    void record(double t, const Field& u, const Field& ut) override {
        state_.t = t;
        if (!all_finite(state_.w) || !all_finite(state_.w_t)) {
            throw SolverError("axisymmetric run: NaN/Inf at t = " + std::to_string(t));
        }
        if (dt_ > 0.0) {
            const double V = params_.p * abs_power(max_sum(u), params_.p - 1.0);
            if (dt_ * dt_ * (omega2_ + V) >= 4.0) {
                throw SolverError("axisymmetric run: step exceeds the stability bound of the potential at t = " +
                                  std::to_string(t));
            }
        }
        tracker_.add(t, derivative_norms());
        PerturbationSample s;
        s.t = t;
        s.M = tracker_.value();
        const EnergySplit e = split(u, ut);
        s.E_w = e.E_w;
        s.w_l2_sq = e.w_l2_sq;
        s.identity_error = std::abs(e.E_v - e.E_u - e.A - e.B) / std::max(1.0, std::abs(e.E_v));
        s.sup_w = sup_abs(state_.w);
        s.sup_u = sup_abs(u);
        s.sup_ut = sup_abs(ut);
        samples_.push_back(s);
        if (opt_.keep_every > 0 && (samples_.size() - 1) % opt_.keep_every == 0) kept_.push_back(state_);
    }

    AxisymRun result() && { return AxisymRun{std::move(state_), std::move(samples_), std::move(kept_)}; }
    std::vector<PerturbationSample>& samples() { return samples_; }

    // Energies of u, v = u + w and the pieces A, B over the (r, theta) measure
    // (mu_k / 2) r^2 dr, normalized so a theta-independent field has its radial energy.
    EnergySplit split(const Field& u, const Field& ut) const {
        const std::size_t Nr = grid_.radial.size();
        const double p = params_.p;
        const double h = grid_.radial.h;
        const double dth = grid_.d_theta();
        EnergySplit s;
        s.t = state_.t;
        for (std::size_t k = 0; k < grid_.n_theta; ++k) {
            const double m = 0.5 * mu_[k];
            const std::size_t o = k * Nr;
            for (std::size_t i = 0; i < Nr; ++i) {
                const double w = state_.w[o + i];
                const double wt = state_.w_t[o + i];
                const double v = u[i] + w;
                const double vt = ut[i] + wt;
                const double Fu = abs_power(u[i], p + 1.0) / (p + 1.0);
                const double Fv = abs_power(v, p + 1.0) / (p + 1.0);
                const double fu = signed_power(u[i], p);
                const double c = m * wr_[i];
                s.E_u += c * (0.5 * ut[i] * ut[i] + Fu);
                s.E_v += c * (0.5 * vt * vt + Fv);
                s.A += c * (0.5 * wt * wt + Fv - Fu - fu * w);
                s.B += c * (ut[i] * wt + fu * w);
                s.E_w += c * (0.5 * wt * wt + abs_power(w, p + 1.0) / (p + 1.0));
                s.w_l2_sq += c * w * w;
            }
            for (std::size_t i = 0; i + 1 < Nr; ++i) {
                const double fw = m * lap_.face_weight(i);
                const double du = (u[i + 1] - u[i]) / h;
                const double dw = (state_.w[o + i + 1] - state_.w[o + i]) / h;
                const double dv = du + dw;
                s.E_u += 0.5 * fw * du * du;
                s.E_v += 0.5 * fw * dv * dv;
                s.A += 0.5 * fw * dw * dw;
                s.B += fw * du * dw;
                s.E_w += 0.5 * fw * dw * dw;
            }
            if (k + 1 < grid_.n_theta) {
                for (std::size_t i = 0; i < Nr; ++i) {
                    const double c = 0.5 * face_[k] * dth * wr_[i] * inv_r2_[i];
                    const double dw = (state_.w[o + Nr + i] - state_.w[o + i]) / dth;
                    s.E_v += 0.5 * c * dw * dw;
                    s.A += 0.5 * c * dw * dw;
                    s.E_w += 0.5 * c * dw * dw;
                }
            }
        }
        return s;
    }

private:
    // max |u + w| over the grid
    double max_sum(const Field& u) const {
        const std::size_t Nr = grid_.radial.size();
        double m = 0.0;
        for (std::size_t k = 0; k < grid_.n_theta; ++k) {
            for (std::size_t i = 0; i < Nr; ++i) m = std::max(m, std::abs(u[i] + state_.w[k * Nr + i]));
        }
        return m;
    }

    std::size_t last_nonzero() const {
        const std::size_t Nr = grid_.radial.size();
        std::size_t last = 0;
        for (std::size_t k = 0; k < grid_.n_theta; ++k) {
            const std::size_t o = k * Nr;
            for (std::size_t i = Nr; i-- > last + 1;) {
                if (state_.w[o + i] != 0.0 || state_.w_t[o + i] != 0.0) {
                    last = i;
                    break;
                }
            }
        }
        return last;
    }

    void acceleration(const Field& u) {
        const std::size_t Nr = grid_.radial.size();
        const std::size_t Nt = grid_.n_theta;
        const std::size_t end = std::min(active_, Nr - 1);
        const Field& w = state_.w;
        with_signed_power(params_.p, [&](auto f) {
            for (std::size_t k = 0; k < Nt; ++k) {
                const std::size_t o = k * Nr;
                const double cp = cp_[k];
                const double cm = cm_[k];
                const double* up = k + 1 < Nt ? &w[o + Nr] : nullptr;
                const double* dn = k > 0 ? &w[o - Nr] : nullptr;
                for (std::size_t i = 1; i < end; ++i) {
                    const double wi = w[o + i];
                    double acc = lap_.plus(i) * (w[o + i + 1] - wi) - lap_.minus(i) * (wi - w[o + i - 1]);
                    double ang = 0.0;
                    if (up) ang += cp * (up[i] - wi);
                    if (dn) ang -= cm * (wi - dn[i]);
                    acc += inv_r2_[i] * ang;
                    if (wi != 0.0) acc -= f(u[i] + wi) - f(u[i]);
                    a_[o + i] = acc;
                }
                a_[o] = 0.0;
                if (end == Nr - 1) a_[o + Nr - 1] = 0.0;
            }
        });
    }

    DerivativeNorms derivative_norms() const {
        const std::size_t Nr = grid_.radial.size();
        const std::size_t Nt = grid_.n_theta;
        const double h = grid_.radial.h;
        const double dth = grid_.d_theta();
        // centered differences; even reflection across the poles
        auto dr = [&](const Field& f, std::size_t k, std::size_t i) {
            const std::size_t o = k * Nr;
            if (i == 0) return (-3.0 * f[o] + 4.0 * f[o + 1] - f[o + 2]) / (2.0 * h);
            if (i + 1 == Nr) return (3.0 * f[o + i] - 4.0 * f[o + i - 1] + f[o + i - 2]) / (2.0 * h);
            return (f[o + i + 1] - f[o + i - 1]) / (2.0 * h);
        };
        auto drr = [&](const Field& f, std::size_t k, std::size_t i) {
            const std::size_t o = k * Nr;
            const std::size_t c = std::clamp<std::size_t>(i, 1, Nr - 2);
            return (f[o + c + 1] - 2.0 * f[o + c] + f[o + c - 1]) / (h * h);
        };
        auto at = [&](const Field& f, std::ptrdiff_t k, std::size_t i) {
            if (k < 0) k = -k - 1;
            if (k >= static_cast<std::ptrdiff_t>(Nt)) k = 2 * static_cast<std::ptrdiff_t>(Nt) - k - 1;
            return f[static_cast<std::size_t>(k) * Nr + i];
        };
        auto dt_ = [&](const Field& f, std::size_t k, std::size_t i) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            return (at(f, kk + 1, i) - at(f, kk - 1, i)) / (2.0 * dth);
        };
        auto dtt = [&](const Field& f, std::size_t k, std::size_t i) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            return (at(f, kk + 1, i) - 2.0 * at(f, kk, i) + at(f, kk - 1, i)) / (dth * dth);
        };
        const double q = pair_.r;
        std::array<double, 6> s2{};
        std::array<double, 3> sr{};
        const Field& w = state_.w;
        const Field& wt = state_.w_t;
        // derivative of w_theta / r in r, from centered w_theta at neighbouring radii
        auto drtheta = [&](std::size_t k, std::size_t i) {
            const std::size_t c = std::clamp<std::size_t>(i, 1, Nr - 2);
            return (dt_(w, k, c + 1) - dt_(w, k, c - 1)) / (2.0 * h);
        };
        for (std::size_t k = 0; k < Nt; ++k) {
            const double th = grid_.theta(k);
            const double cot = std::cos(th) / std::sin(th);
            const double m = 0.5 * mu_[k];
            for (std::size_t i = 0; i < Nr; ++i) {
                const std::size_t j = k * Nr + i;
                const double r = grid_.radial.r(i);
                const double c = m * wr_[i];
                const double wrv = dr(w, k, i);
                const double wth = dt_(w, k, i) / r;
                const double grad = std::sqrt(wrv * wrv + wth * wth);
                const double tr = dr(wt, k, i);
                const double tth = dt_(wt, k, i) / r;
                const double gradt = std::sqrt(tr * tr + tth * tth);
                const double Hrr = drr(w, k, i);
                const double Hrt = drtheta(k, i) / r - dt_(w, k, i) / (r * r);
                const double Htt = dtt(w, k, i) / (r * r) + wrv / r;
                const double Hpp = wrv / r + cot * dt_(w, k, i) / (r * r);
                const double hess = std::sqrt(Hrr * Hrr + 2.0 * Hrt * Hrt + Htt * Htt + Hpp * Hpp);
                const double vals[6] = {w[j], wt[j], grad, a_[j], gradt, hess};
                for (std::size_t d = 0; d < 6; ++d) s2[d] += c * vals[d] * vals[d];
                for (std::size_t d = 0; d < 3; ++d) {
                    const double x = std::abs(vals[d]);
                    if (x != 0.0) sr[d] += c * std::pow(x, q);
                }
            }
        }
        DerivativeNorms out;
        for (std::size_t d = 0; d < 6; ++d) out.l2[d] = std::sqrt(s2[d]);
        for (std::size_t d = 0; d < 3; ++d) out.lr[d] = std::pow(sr[d], 1.0 / q);
        return out;
    }

    AxisymGrid grid_;
    RadialLaplacian lap_;
    Params params_;
    AxisymState state_;
    PerturbationRunOptions opt_;
    StrichartzPair pair_;
    MTracker tracker_;
    Field a_;
    std::vector<double> mu_, cp_, cm_, face_, inv_r2_;
    Field wr_;
    double omega2_ = 0.0;
    std::size_t active_ = 0;
    std::size_t steps_ = 0;
    double dt_ = 0.0;
    std::vector<PerturbationSample> samples_;
    std::vector<AxisymState> kept_;
};

struct Slot {
    Member* member;
    std::optional<std::string> error;
};

// Advances all members from t0 to t_end on one step lattice, recording every `stride` steps
// and at the end. Members that throw get their message stored and stop.
void run_lockstep(Background& bg, std::vector<Slot>& slots, double t0, double t_end, double dt,
                  std::size_t stride) {
    if (!(dt > 0.0)) throw SolverError("perturbation run: dt must be positive");
    const double span = t_end - t0;
    if (span < 0.0) throw SolverError("perturbation run: t_end precedes the initial time");
    if (t_end > bg.t_end() + 1e-9) {
        throw DomainError("perturbation run to t = " + std::to_string(t_end) + " exceeds the background coverage (" +
                          std::to_string(bg.t_end()) + ")");
    }
    enable_flush_to_zero();
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    const double h = steps > 0 ? span / static_cast<double>(steps) : dt;
    stride = std::max<std::size_t>(1, stride);
    Field u, ut;
    auto guarded = [&](auto&& fn) {
        for (auto& s : slots) {
            if (s.error) continue;
            try {
                fn(*s.member);
            } catch (const Error& e) {
                s.error = e.what();
            }
        }
    };
    bg.frame(t0, u, ut);
    guarded([&](Member& m) {
        m.prepare(u);
        m.record(t0, u, ut);
    });
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = k == steps ? t_end : t0 + static_cast<double>(k) * h;
        bg.frame(t, u, ut);
        const bool rec = k % stride == 0 || k == steps;
        guarded([&](Member& m) {
            m.step(u, h);
            if (rec) m.record(t, u, ut);
        });
        if (std::all_of(slots.begin(), slots.end(), [](const Slot& s) { return s.error.has_value(); })) return;
    }
}

}  // namespace

ModeRun evolve_mode(const ModeState& initial, Background& background, const Params& params, double t_end,
                    double dt, const PerturbationRunOptions& options) {
    if (!(initial.grid == background.grid())) throw DomainError("mode grid differs from the background grid");
    ModeMember member(initial, params, options);
    std::vector<Slot> slots{{&member, std::nullopt}};
    run_lockstep(background, slots, initial.t, t_end, dt, options.record_stride);
    if (slots.front().error) throw SolverError(*slots.front().error);
    return std::move(member).result();
}

AxisymRun evolve_axisym(const AxisymState& initial, Background& background, const Params& params,
                        double t_end, double dt, const PerturbationRunOptions& options) {
    if (!(initial.grid.radial == background.grid())) {
        throw DomainError("axisymmetric grid differs from the background grid");
    }
    AxisymMember member(initial, params, options);
    std::vector<Slot> slots{{&member, std::nullopt}};
    run_lockstep(background, slots, initial.t, t_end, dt, options.record_stride);
    if (slots.front().error) throw SolverError(*slots.front().error);
    return std::move(member).result();
}

std::vector<StabilityRecord> stability_sweep(std::span<const double> epsilons, const PerturbationShape& shape,
                                             Background& background, const Params& params,
                                             const SweepOptions& options) {
    const RadialGrid& g = background.grid();
    const RadialFunction radial(shape.radial);
    {
        const double top = std::max(radial.support(), 2.0) + 1.0;
        const int order = compat_order(make_grid(top, 401), params, radial, RadialFunction(ProfileSpec{}));
        if (order < 1) {
            throw DomainError("perturbation shape fails the compatibility screen (order " + std::to_string(order) +
                              " < 1)");
        }
    }
    PerturbationRunOptions ro;
    ro.record_stride = options.record_stride;
    ro.m_norm = options.m_norm;

    std::vector<StabilityRecord> records;
    std::vector<std::unique_ptr<Member>> members;
    std::vector<Slot> slots;
    std::vector<std::vector<PerturbationSample>*> sample_refs;
    for (PerturbationMode mode : options.modes) {
        for (double eps : epsilons) {
            StabilityRecord rec;
            rec.epsilon = eps;
            rec.mode = mode;
            ProfileSpec scaled = shape.radial;
            scaled.amplitude *= eps;
            try {
                if (mode == PerturbationMode::Linearized) {
                    ModeState ms{shape.legendre, g, 0.0, sample(scaled, g), Field(g.size(), 0.0)};
                    ms.w[0] = 0.0;
                    auto m = std::make_unique<ModeMember>(ms, params, ro);
                    sample_refs.push_back(&m->samples());
                    members.push_back(std::move(m));
                } else {
                    const AxisymGrid ag{g, options.n_theta};
                    auto m = std::make_unique<AxisymMember>(make_axisym_state(ag, RadialFunction(scaled), shape.legendre),
                                                            params, ro);
                    sample_refs.push_back(&m->samples());
                    members.push_back(std::move(m));
                }
                slots.push_back({members.back().get(), std::nullopt});
            } catch (const Error& e) {
                rec.error = e.what();
                sample_refs.push_back(nullptr);
                members.push_back(nullptr);
                slots.push_back({nullptr, rec.error});
            }
            records.push_back(std::move(rec));
        }
    }
    std::vector<Slot> live;
    std::vector<std::size_t> live_index;
    for (std::size_t j = 0; j < slots.size(); ++j) {
        if (slots[j].member) {
            live.push_back(slots[j]);
            live_index.push_back(j);
        }
    }
    const double dt = options.dt > 0.0 ? options.dt : 0.5 * g.h;
    run_lockstep(background, live, 0.0, options.t_end, dt, options.record_stride);
    for (std::size_t j = 0; j < live.size(); ++j) {
        if (live[j].error) records[live_index[j]].error = live[j].error;
    }

    for (std::size_t j = 0; j < records.size(); ++j) {
        StabilityRecord& rec = records[j];
        if (!sample_refs[j]) continue;
        rec.samples = *sample_refs[j];
        if (rec.samples.empty()) continue;
        double sup_u = 0.0, sup_ut = 0.0;
        for (const auto& s : rec.samples) {
            if (s.t <= options.window + 1e-12) rec.M_window = s.M;
            sup_u = std::max(sup_u, s.sup_u);
            sup_ut = std::max(sup_ut, s.sup_ut);
        }
        rec.M_end = rec.samples.back().M;
        rec.growth = rec.M_window > 0.0 ? rec.M_end / rec.M_window : (rec.M_end == 0.0 ? 0.0 : kInf);
        rec.bounded = !rec.error && rec.samples.back().t >= options.t_end - 1e-9 &&
                      rec.M_end <= options.growth_limit * rec.M_window;
        const double t0 = rec.samples.front().t;
        rec.constants = gronwall_constants(params.p, rec.samples.back().t - t0, sup_u, sup_ut);
        const double E0 = rec.samples.front().E_w;
        const double L0 = rec.samples.front().w_l2_sq;
        rec.bound_holds = true;
        for (const auto& s : rec.samples) {
            const double lb = gronwall_log_bound(rec.constants, s.t - t0, E0, L0);
            rec.bound.push_back(std::exp(lb));
            if (s.E_w > 0.0 && !(std::log(s.E_w) <= lb + 1e-12)) rec.bound_holds = false;
        }
    }
    return records;
}

void write_sweep_csv(std::ostream& out, std::span<const StabilityRecord> records) {
    out << "epsilon,t,M,E_w,bound\n" << std::setprecision(17);
    for (const auto& r : records) {
        for (std::size_t k = 0; k < r.samples.size(); ++k) {
            const auto& s = r.samples[k];
            out << r.epsilon << ',' << s.t << ',' << s.M << ',' << s.E_w << ',' << r.bound[k] << '\n';
        }
    }
}

}  // namespace wavelab
