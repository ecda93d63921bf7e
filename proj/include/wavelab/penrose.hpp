#pragma once

// Conformal compactification of the exterior problem.
//
// Coordinates: T = atan(t+r) + atan(t-r), alpha = atan(t+r) - atan(t-r), with inverse
// (t, r) = (sin T, sin alpha) / omega and conformal factor
// omega = cos T + cos alpha = 2 / (<t+r> <t-r>). A radial solution u corresponds to
// U = omega^{-(n-1)/2} u, which solves on the sphere
//
//   U_TT = sin^{1-n}(alpha) d_alpha(sin^{n-1}(alpha) d_alpha U) - ((n-1)^2/4) U - w^nu |U|^{p-1} U
//
// with w = max(omega, 0) and nu = (n-1)p/2 - (n+3)/2, on alpha > a_b(T), where the obstacle
// boundary r = 1 sits at a_b(T) = pi/4 + asin(cos T / sqrt 2).
//
// Discretization: staggered alpha nodes (j + 1/2) pi / N so neither pole is a node, the
// sin^{n-1}-weighted conservative operator (its faces at 0 and pi have zero weight, which
// is the pole regularity condition), Stormer-Verlet in T. The moving Dirichlet boundary
// masks nodes left of a_b(T) and gives the first active node (at least half a cell inside
// the domain) a ghost neighbour from the quadratic through the boundary zero and the first
// two active nodes.

#include "wavelab/grid.hpp"
#include "wavelab/history.hpp"
#include "wavelab/params.hpp"
#include "wavelab/profiles.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wavelab {

struct PenrosePoint {
    double T = 0.0;
    double alpha = 0.0;
};

struct PhysicalPoint {
    double t = 0.0;
    double r = 0.0;
};

PenrosePoint to_penrose(double t, double r);
// DomainError when omega <= 0 (outside the diamond).
PhysicalPoint from_penrose(PenrosePoint pt);

double omega(PenrosePoint pt);
double omega_physical(double t, double r);

// Image of r = 1: alpha as a function of T, for T in [0, pi).
double boundary_alpha(double T);
// d/dT of boundary_alpha.
double boundary_alpha_rate(double T);
// Inverse curve: T as a function of alpha, alpha in (0, pi/2].
double boundary_time(double alpha);
// d/dalpha of boundary_time on (0, pi/2); DomainError at alpha = pi/2 (slope unbounded).
double boundary_time_slope(double alpha);

// nu = (n-1)p/2 - (n+3)/2. DomainError when nu < 1; warns when nu < floor(n/2) + 1.
double conformal_power(const Params& params);

struct CompactGrid {
    std::size_t N = 0;
    double d_alpha = 0.0;
    double alpha(std::size_t j) const { return (static_cast<double>(j) + 0.5) * d_alpha; }
    std::size_t size() const { return N; }
};

CompactGrid make_compact_grid(std::size_t N);

// dU/dalpha at alpha = b from the quadratic through (b, 0) and nodes first, first + 1.
double boundary_slope(const CompactGrid& grid, std::span<const double> U, std::size_t first, double b);

struct CompactState {
    CompactGrid grid;
    double T = 0.0;
    Field U;
    Field W;  // dU/dT
    Params params;
    double nu = 0.0;
    double coupling = 1.0;  // 0 switches the nonlinear term off
};

// First active node and ghost coefficients at time T.
struct CutCell {
    std::size_t first = 0;  // first evolved node
    double theta = 0.0;     // (alpha_first - a_b(T)) / d_alpha, in [0.5, 1.5)
    double ghost = 0.0;     // ghost value = ghost * U[first] + ghost_next * U[first + 1]
    double ghost_next = 0.0;
};

class CompactSolver {
public:
    // coupling 0 switches the nonlinear term off.
    CompactSolver(const CompactGrid& grid, const Params& params, double coupling = 1.0);

    const CompactGrid& grid() const { return grid_; }
    double nu() const { return nu_; }
    double coupling() const { return coupling_; }

    CutCell cut(double T) const;

    // Right side of U_TT at time T; zero on masked nodes.
    void acceleration(std::span<const double> U, double T, std::span<double> out) const;

    // Zeroes masked nodes and stores the interpolated value in the node just left of the
    // first active one when it lies inside the domain.
    void enforce_boundary(std::span<double> f, double T) const;

    // Same masking for W = dU/dT. The in-domain node left of the first one interpolates
    // between the first node and the boundary value -a_b'(T) U_alpha.
    void enforce_velocity(std::span<const double> U, std::span<double> W, double T) const;

    void step(CompactState& state, double dT) const;

    static constexpr double kCflFraction = 0.5;

    double weight(std::size_t j) const { return s_[j]; }
    double face_plus(std::size_t j) const { return sp_[j]; }
    double face_minus(std::size_t j) const { return sm_[j]; }

private:
    CompactGrid grid_;
    Params params_;
    double nu_;
    double coupling_;
    std::vector<double> s_, sp_, sm_;
};

struct CompactRhs {
    Field dU;
    Field dW;
};
CompactRhs compact_rhs(const CompactState& state);

// t = 0 slice of a radial state mapped to T = 0 (U = omega^{-(n-1)/2} u0,
// W = omega^{-(n+1)/2} u1), cubic interpolation in r.
CompactState transform_initial(const RadialState& s0, const CompactGrid& grid, const Params& params);

// Inverse at T = 0: u(r) = omega^{(n-1)/2} U(2 atan r), cubic interpolation in alpha.
RadialState inverse_initial(const CompactState& state, const RadialGrid& grid);

// U(T, alpha_j) from a stored radial history; valid[j] false where the physical point is
// outside the history (time or radius) or behind the boundary.
struct CompactSlice {
    Field U;
    std::vector<bool> valid;
};
CompactSlice transform_history(const RadialHistory& history, double T, const CompactGrid& grid,
                               const Params& params);

struct CompactRunOptions {
    std::size_t stride = 1;
    std::function<void(const CompactState&)> observer;
};

struct CompactRun {
    CompactState final_state;
    std::vector<CompactState> history;  // every `stride` steps, first and last included
};

CompactRun evolve_compact(const CompactState& initial, double T_end, double dT,
                          const CompactRunOptions& options = {});

// E(T) over [a_b(T), pi] and F(T) over [a_b(T), pi - T + delta/4].
double energy_E(const CompactState& state);
double energy_F(const CompactState& state, double delta = 0.2);

// Instantaneous terms of dE/dT: boundary flux (<= 0) and the weight-decay sink (>= 0),
// dE/dT = flux - sink.
struct EnergyRates {
    double flux = 0.0;
    double sink = 0.0;
};
EnergyRates energy_rates(const CompactState& state);

// |E(T_last) - E(T_first) - int flux dT + int sink dT| over a uniformly spaced slice.
double flux_identity_residual(std::span<const CompactState> slice);

// CSV "alpha,U,W" and the sidecar {T, n, p, nu, delta, Gamma_T}.
void write_compact_csv(std::ostream& out, const CompactState& state);
std::string compact_sidecar_json(const CompactState& state, double delta);

// Same data evolved twice: a radial run stored as a history and a compact run from the
// transformed t = 0 slice. The discrepancy is the sup over compact nodes whose physical
// preimage the history covers, at T_end. E and F increases are the largest step-to-step
// increments along the compact run.
struct DualOptions {
    double h = 0.01;            // radial spacing, dt = h/2
    std::size_t N = 500;        // compact cells, dT = dT_fraction * d_alpha
    double T_end = 1.0;
    double r_max = 14.0;
    double t_cover = 10.0;      // physical time covered by the stored history
    double dT_fraction = 0.4;
    double delta = 0.2;
};

struct DualResult {
    double h = 0.0;
    double dT = 0.0;
    double discrepancy = 0.0;
    std::size_t compared = 0;
    double flux_residual = 0.0;
    double max_increase_E = 0.0;
    double max_increase_F = 0.0;
};

DualResult dual_representation(const RadialFunction& u0, const RadialFunction& u1, const Params& params,
                               const DualOptions& options = {});

}  // namespace wavelab
