#pragma once

#include "wavelab/grid.hpp"
#include "wavelab/params.hpp"
#include "wavelab/stencil.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace wavelab {

// f(s) = coupling * min{|s|, M}^{p-1} s  (truncated when M is present),
// f(s) = coupling * |s|^{p-1} s          (otherwise).
// coupling = +1 is the defocusing problem, 0 the linear wave equation and -1 the
// focusing sign (used only to self-test the blow-up detector).
struct NonlinearitySpec {
    double p = 7.0;
    std::optional<double> truncation;
    double coupling = 1.0;

    static NonlinearitySpec defocusing(double p) { return {p, std::nullopt, 1.0}; }
    static NonlinearitySpec truncated(double p, double M);
    static NonlinearitySpec linear(double p = 7.0) { return {p, std::nullopt, 0.0}; }
    static NonlinearitySpec focusing(double p) { return {p, std::nullopt, -1.0}; }

    bool is_linear() const { return coupling == 0.0; }

    double force(double s) const;      // f(s)
    double potential(double s) const;  // F(s) = int_0^s f
};

// |s|^{p-1} s, with repeated multiplication for integer p.
double signed_power(double s, double p);
// |s|^q for q >= 0.
double abs_power(double s, double q);

// dv[i] -= f(u[i]) for begin <= i < end; unrolled for small integer powers.
void subtract_force(const NonlinearitySpec& nl, std::span<const double> u, std::span<double> dv,
                    std::size_t begin, std::size_t end);

struct EnergyReport {
    double kinetic = 0.0;
    double gradient = 0.0;
    double potential = 0.0;
    double total = 0.0;
};

struct BlowupVerdict {
    bool exceeded = false;
    double threshold = 0.0;
    std::optional<double> first_time;
    std::optional<double> location;
};

struct LogEntry {
    double t = 0.0;
    EnergyReport energy;
    double sup_u = 0.0;
    double sup_location = 1.0;
    double strauss_ratio = 0.0;  // NaN when the gradient vanishes
};

// Precomputed operator for one (grid, n, nonlinearity) triple.
class RadialSolver {
public:
    static constexpr double kCflFraction = 0.9;

    RadialSolver(const RadialGrid& grid, const Params& params, NonlinearitySpec nl);

    const RadialGrid& grid() const { return lap_.grid(); }
    const Params& params() const { return params_; }
    const NonlinearitySpec& nonlinearity() const { return nl_; }
    const RadialLaplacian& laplacian() const { return lap_; }

    // dv = L u - f(u) at interior nodes, 0 at both edges.
    void acceleration(std::span<const double> u, std::span<double> dv) const;

    // One kick-drift-kick Stormer-Verlet step, in place.
    void step(RadialState& state, double dt) const;

private:
    RadialLaplacian lap_;
    Params params_;
    NonlinearitySpec nl_;
    mutable Field scratch_;
};

// du = v, dv = L u - f(u).
struct RadialRhs {
    Field du;
    Field dv;
};
RadialRhs rhs(const RadialState& state, const NonlinearitySpec& nl, const Params& params);

RadialState step(const RadialState& state, double dt, const NonlinearitySpec& nl,
                 const Params& params);

EnergyReport energy(const RadialState& state, const NonlinearitySpec& nl, const Params& params);

// sup_i r_i^{n/2-1} |u_i| / ||d_r u||_{L^2}; nullopt when the gradient vanishes.
std::optional<double> strauss_ratio(const RadialState& state, int n);

// Largest radius where u or v is nonzero (1 for the zero state).
double support_radius(const RadialState& state);

struct EvolveOptions {
    std::size_t log_stride = 1;  // steps between log entries / observer calls
    std::function<void(const RadialState&)> observer;
    // Stop quietly once sup|u| exceeds this value (used by the blow-up self-test).
    std::optional<double> stop_above;
    // Skip the finite-speed window check (the caller guarantees the data reach the edge late).
    bool enforce_causal_window = true;
};

struct EvolveResult {
    RadialState final_state;
    std::vector<LogEntry> log;
    bool stopped_early = false;
};

EvolveResult evolve(const RadialState& initial, double t_end, double dt,
                    const NonlinearitySpec& nl, const Params& params,
                    const EvolveOptions& options = {});

struct TruncationCheck {
    bool conclusive = false;
    double max_discrepancy = 0.0;
    double truncated_sup = 0.0;
};

TruncationCheck truncation_consistency(const RadialState& data, const Params& params,
                                       double M_big, double t_end, double dt,
                                       std::size_t stride = 10);

BlowupVerdict detect_blowup(std::span<const LogEntry> log, double threshold);

LogEntry make_log_entry(const RadialState& state, const NonlinearitySpec& nl, const Params& params);

// CSV header "t,E_total,E_kin,E_grad,E_pot,sup_u,strauss_ratio".
void write_log_csv(std::ostream& out, std::span<const LogEntry> log);

}  // namespace wavelab
