#pragma once

// Perturbations w of a radial background solution u.
//
// Two evolutions are provided:
//   * the linearized equation w_tt = Lap w - l(l+n-2)/r^2 w - V w, V = p|u|^{p-1}, for one
//     spherical-harmonic channel l in any dimension;
//   * the full difference equation w_tt = Lap w - [f(u+w) - f(u)] for axisymmetric w in
//     three dimensions on an (r, theta) grid.
// Both run against a Background. A streaming background advances the radial solver in
// lockstep with the perturbation, so long runs never store the background history.

#include "wavelab/grid.hpp"
#include "wavelab/history.hpp"
#include "wavelab/params.hpp"
#include "wavelab/profiles.hpp"
#include "wavelab/radial.hpp"

#include <array>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wavelab {

class Background {
public:
    // u = 0 for all t.
    static Background zero(const RadialGrid& grid, const Params& params);
    // u(t) = u_frozen for all t, u_t = 0 (a static potential; not a solution).
    static Background frozen(const RadialGrid& grid, const Params& params, Field u_frozen);
    // Strided history; DomainError unless it holds at least 8 samples per oscillation.
    static Background stored(RadialHistory history, const Params& params);
    // Defocusing radial solver started from `initial` with step dt.
    static Background streaming(const RadialState& initial, const Params& params, double dt);

    const RadialGrid& grid() const { return grid_; }
    const Params& params() const { return params_; }
    bool is_streaming() const { return solver_ != nullptr; }
    // Last time the background can be evaluated at (infinite unless stored).
    double t_end() const;

    // u and u_t on the grid at time t. A streaming background only moves forward, on the
    // lattice t0 + k dt; asking for an earlier time throws.
    void frame(double t, Field& u, Field& ut);
    // V = p|u|^{p-1} at (t, r), cubic in r.
    double potential(double t, double r);
    void potential_field(double t, Field& V);

private:
    enum class Kind { Zero, Frozen, Stored, Streaming };
    Background(Kind kind, RadialGrid grid, Params params);

    Kind kind_;
    RadialGrid grid_;
    Params params_;
    Field frozen_;
    std::shared_ptr<const RadialHistory> history_;
    std::shared_ptr<RadialSolver> solver_;
    RadialState current_;
    double dt_ = 0.0;
    std::size_t steps_taken_ = 0;
    double t0_ = 0.0;
};

// 2 pi sup|u| / sup|u_t| over the snapshots carrying at least 1e-3 of the largest amplitude:
// the period of a sinusoid with the observed amplitude ratio. Infinite for u = 0.
double oscillation_period(const RadialHistory& history);

struct ModeState {
    int ell = 0;
    RadialGrid grid;
    double t = 0.0;
    Field w;
    Field w_t;
};

struct ModeRhs {
    Field dw;
    Field dw_t;
};

// dw = w_t, dw_t = Lap w - l(l+n-2)/r^2 w - V(t) w, zero at both edges.
ModeRhs linearized_mode_rhs(const ModeState& state, Background& background, const Params& params);

class ModeSolver {
public:
    ModeSolver(const RadialGrid& grid, const Params& params, int ell);

    int ell() const { return ell_; }
    void acceleration(std::span<const double> w, std::span<const double> V, std::span<double> out) const;
    // Kick-drift-kick with V at the start and at the end of the step.
    void step(ModeState& state, std::span<const double> V_now, std::span<const double> V_next,
              double dt) const;
    // 1/2 |w_t|^2 + 1/2 |w_r|^2 + 1/2 l(l+n-2) w^2/r^2 + 1/2 V w^2.
    double energy(const ModeState& state, std::span<const double> V) const;

private:
    RadialLaplacian lap_;
    Params params_;
    int ell_;
    Field centrifugal_;
    Field weights_;
};

// Integrand of F[u,w] = -p(p-1) int_0^1 |u + s w|^{p-3} (u + s w)(1 - s) ds by 8-node
// Gauss-Legendre, split where u + s w changes sign. DomainError for p <= 3.
double F_kernel(double u, double w, double p);

// Admissible pair q = 2/delta, r = 2n/(n-2-delta) for 0 <= delta < 1 (q infinite at 0).
struct StrichartzPair {
    double q = 0.0;
    double r = 0.0;
};
StrichartzPair strichartz_pair(int n, double delta);
// DomainError unless (q, r_exp) = strichartz_pair(n, delta) for some delta in [0, 1).
void check_admissible(int n, double q, double r_exp);

// M(T) = Y^{inf,2; m+1} + Y^{q,r; m} of a stored radial history, m capped at 1.
double M_norm(std::span<const RadialState> history, int n, int m, double q, double r_exp);

// Spatial norms of one snapshot for the running M(T). Index order of the (time, space)
// derivative pairs: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
struct DerivativeNorms {
    std::array<double, 6> l2{};
    std::array<double, 3> lr{};
};

// Running M(t) from snapshots at increasing times (trapezoid in t for finite q).
class MTracker {
public:
    MTracker(int m, double q);
    void add(double t, const DerivativeNorms& norms);
    double value() const;
    int m() const { return m_; }

private:
    int m_;
    double q_;
    bool started_ = false;
    double t_prev_ = 0.0;
    std::array<double, 6> sup_{};
    std::array<double, 3> integral_{};
    std::array<double, 3> prev_{};
};

struct MNormSpec {
    int m = 1;
    double delta = 0.5;
};

// Explicit constants of the weak-strong energy bound
//   E(w(t)) <= K0 (E(w(0)) + |w(0)|^2) exp(K1 t),
// assembled from the pointwise estimates behind it with a = sup|u|, b = sup|u_t| on [0,T].
// C = max(K0, K1) gives the form C e^{Ct}(E(w(0)) + |w(0)|^2).
struct GronwallConstants {
    double K0 = 0.0;
    double K1 = 0.0;
    double C = 0.0;
};
GronwallConstants gronwall_constants(double p, double T, double sup_u, double sup_ut);
// log of C e^{Ct} (E0 + L0); stays finite where the bound itself overflows.
double gronwall_log_bound(const GronwallConstants& c, double t, double E0, double L0);

// Pieces of E(v) = E(u) + A + B for v = u + w at one time.
struct EnergySplit {
    double t = 0.0;
    double E_u = 0.0;
    double E_v = 0.0;
    double A = 0.0;
    double B = 0.0;
    double E_w = 0.0;       // energy of w with the |w|^{p+1}/(p+1) term
    double w_l2_sq = 0.0;   // |w|^2_{L^2}
    double sup_u = 0.0;
    double sup_ut = 0.0;
};

EnergySplit energy_split(const RadialState& u, const RadialState& v, const Params& params);

struct GronwallReport {
    std::vector<EnergySplit> splits;
    std::vector<double> bound;  // C e^{Ct}(E(w(0)) + |w(0)|^2), may be +inf
    GronwallConstants constants;
    double max_identity_error = 0.0;  // max |E(v) - E(u) - A - B| / max(1, E(v))
    bool bound_holds = false;
};

// u_run and v_run: snapshots on one grid at equal times; T is the final time.
GronwallReport gronwall_check(std::span<const RadialState> u_run, std::span<const RadialState> v_run,
                              const Params& params);

// Axisymmetric three-dimensional fields on [1, r_max] x (0, pi), theta staggered.
struct AxisymGrid {
    RadialGrid radial;
    std::size_t n_theta = 8;
    double d_theta() const;
    double theta(std::size_t k) const { return (static_cast<double>(k) + 0.5) * d_theta(); }
    std::size_t size() const { return radial.size() * n_theta; }
    // storage index: contiguous in r
    std::size_t index(std::size_t i, std::size_t k) const { return k * radial.size() + i; }
};

struct AxisymState {
    AxisymGrid grid;
    double t = 0.0;
    Field w;
    Field w_t;
};

// w = radial(r) * angular(theta) with w_t = 0; the legendre degree selects the angular
// factor P_l(cos theta).
AxisymState make_axisym_state(const AxisymGrid& grid, const RadialFunction& radial, int legendre);

// Snapshot record shared by both perturbation runs.
struct PerturbationSample {
    double t = 0.0;
    double M = 0.0;
    double E_w = 0.0;
    double w_l2_sq = 0.0;
    double sup_w = 0.0;
    double identity_error = 0.0;  // |E(v) - E(u) - A - B| / max(1, E(v)) (axisymmetric runs)
    double sup_u = 0.0;
    double sup_ut = 0.0;
};

struct PerturbationRunOptions {
    std::size_t record_stride = 20;
    MNormSpec m_norm;
    // Store full snapshots every this many records (0: none).
    std::size_t keep_every = 0;
};

struct ModeRun {
    ModeState final_state;
    std::vector<PerturbationSample> samples;
    std::vector<RadialState> kept;  // (w, w_t) snapshots
};

ModeRun evolve_mode(const ModeState& initial, Background& background, const Params& params,
                    double t_end, double dt, const PerturbationRunOptions& options = {});

struct AxisymRun {
    AxisymState final_state;
    std::vector<PerturbationSample> samples;
    std::vector<AxisymState> kept;
};

// n = 3 only. The active radial window grows with the data and is trimmed to the last
// nonzero node, which leaves results bit-identical to a full-grid update.
AxisymRun evolve_axisym(const AxisymState& initial, Background& background, const Params& params,
                        double t_end, double dt, const PerturbationRunOptions& options = {});

// CSV "r,theta,w,w_t" and sidecar {t, n, p, n_r, n_theta, h, d_theta}.
void write_axisym_csv(std::ostream& out, const AxisymState& state);
std::string axisym_sidecar_json(const AxisymState& state, const Params& params);

enum class PerturbationMode { Linearized, Axisymmetric };
std::string to_string(PerturbationMode mode);

struct PerturbationShape {
    ProfileSpec radial;  // unit-amplitude radial factor
    int legendre = 1;    // angular degree (channel l in linearized runs)
};

struct SweepOptions {
    double t_end = 50.0;
    double dt = 0.0;       // 0: the background's step
    std::size_t record_stride = 20;
    std::size_t n_theta = 8;
    MNormSpec m_norm;
    double window = 1.0;   // M over [0, window] is the reference level
    double growth_limit = 10.0;
    std::vector<PerturbationMode> modes{PerturbationMode::Linearized, PerturbationMode::Axisymmetric};
};

struct StabilityRecord {
    double epsilon = 0.0;
    PerturbationMode mode = PerturbationMode::Linearized;
    std::vector<PerturbationSample> samples;
    std::vector<double> bound;  // weak-strong bound per sample (may be +inf)
    GronwallConstants constants;
    double M_window = 0.0;
    double M_end = 0.0;
    double growth = 0.0;  // M_end / M_window, 0 when both vanish
    bool bounded = false;
    bool bound_holds = false;
    std::optional<std::string> error;
};

// All members run in lockstep against one background (a streaming background is advanced
// once per step for all of them). A member that throws is recorded and dropped.
std::vector<StabilityRecord> stability_sweep(std::span<const double> epsilons, const PerturbationShape& shape,
                                             Background& background, const Params& params,
                                             const SweepOptions& options);

// CSV "epsilon,t,M,E_w,bound", one row per sample of each record.
void write_sweep_csv(std::ostream& out, std::span<const StabilityRecord> records);

}  // namespace wavelab
