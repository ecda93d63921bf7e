#pragma once

// Compatibility sequences for the mixed problem u_tt = Lap u + f(u), u|_{r=1} = 0.
//
//   linear:    h_0 = u0, h_1 = u1, h_j = Lap h_{j-2} + d_t^{j-2} F(0, .)
//   nonlinear: psi_0 = u0, psi_1 = u1, psi_j = Lap psi_{j-2} + d_t^{j-2}(f(u))|_{t=0}
//
// with f(u) = -|u|^{p-1} u and the time derivatives of f(u) expanded by Faa di Bruno in
// terms of psi_0 .. psi_{j-2}. The fields psi_j are computed on the grid with the radial
// discrete Laplacian. Their boundary traces psi_j(1) are computed from exact Taylor jets of
// the analytic data, because a finite-difference trace carries O(h^2) truncation error
// that would swamp the 1e-8 membership tolerance.
//
// H^1_0 membership is operationalized as |psi_j(1)| <= tol (||psi_j||_{H^1} + floor).
// The order is capped at 4: each level applies one more discrete Laplacian.

#include "wavelab/grid.hpp"
#include "wavelab/params.hpp"
#include "wavelab/profiles.hpp"

#include <string>
#include <vector>

namespace wavelab {

inline constexpr int kMaxCompatOrder = 4;
inline constexpr double kCompatTolerance = 1e-8;

struct CompatReport {
    int order = 0;
    std::vector<Field> sequence;          // psi_0 .. psi_N (or h_j) on the grid
    std::vector<double> boundary_values;  // |psi_j(1)|
    std::vector<double> h1_norms;         // ||psi_j||_{H^1}
    std::vector<bool> verdicts;
    double tolerance = kCompatTolerance;

    bool passed() const;
    // Largest M <= order with verdicts 0..M all passing; 0 when psi_0 or psi_1 fails.
    int satisfied_order() const;
};

// F_time_derivatives[k] = d_t^k F(0, .), needed for k = 0 .. N-2.
CompatReport linear_sequence(const RadialGrid& grid, int n, const RadialFunction& u0,
                             const RadialFunction& u1,
                             const std::vector<RadialFunction>& F_time_derivatives, int N);

// coupling = 0 injects f = 0 (then the result coincides with the linear sequence).
CompatReport nonlinear_sequence(const RadialGrid& grid, const Params& params,
                                const RadialFunction& u0, const RadialFunction& u1, int N,
                                double coupling = 1.0);

// Sufficient screen: u0 in H_0^{floor(n/2)+N+1}, u1 in H_0^{floor(n/2)+N}, i.e. u0 and its
// radial derivatives up to order floor(n/2)+N vanish at r = 1 (u1 up to floor(n/2)+N-1).
bool strong_condition_check(const RadialFunction& u0, const RadialFunction& u1, int N, int n);

// Order satisfied by (u0, u1) for the given problem, up to kMaxCompatOrder.
int compat_order(const RadialGrid& grid, const Params& params, const RadialFunction& u0,
                 const RadialFunction& u1);

// d_t^k f(u) at t = 0 by Faa di Bruno, for f(s) = -coupling |s|^{p-1} s. Exposed for tests.
double time_derivative_of_force(const std::vector<double>& psi, int k, double p, double coupling);

// psi_0 .. psi_3 extracted from leapfrog runs with step dt forward and backward in time
// (backward = forward from (u0, -u1)): psi_2 from the +-2dt central difference, psi_3 from
// the +-dt, +-2dt one. Both converge at order 2 in dt to the grid sequence above.
std::vector<Field> time_derivative_oracle(const RadialGrid& grid, const Params& params,
                                          const RadialFunction& u0, const RadialFunction& u1, double dt);

// {"order":..,"boundary_values":[..],"verdicts":[..],"tolerance":..}
std::string to_json(const CompatReport& report);

}  // namespace wavelab
