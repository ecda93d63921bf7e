#pragma once

// Discrete norms on radial fields.
//
// All integrals use the radial measure r^{n-1} dr on [1, r_max]. The surface factor
// |S^{n-1}| is omitted throughout: estimates in the analysis hold up to constants and the
// factor cancels in every ratio the verification suite forms.
//
// For radial f the full H^k(Omega) norm is equivalent (not equal) to the radial
// Sobolev norm computed here: the angular parts of the Hessian are combinations of
// f'/r with bounded coefficients on r >= 1.

#include "wavelab/grid.hpp"

#include <limits>
#include <span>

namespace wavelab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Japanese bracket <s> = (1 + s^2)^{1/2}.
double bracket(double s);

// Trapezoid weights h r_i^{n-1} (halved at both ends).
Field radial_weights(const RadialGrid& grid, int n);

// (int_1^{r_max} |<r>^a f|^q r^{n-1} dr)^{1/q}; q = infinity gives the weighted sup.
double lp_norm(const RadialGrid& grid, int n, std::span<const double> f, double q,
               double weight_exponent = 0.0);

// (sum_{j<=k} ||d_r^j f||_{L^2}^2)^{1/2}, k in {0,1,2,3}.
double sobolev_norm(const RadialGrid& grid, int n, std::span<const double> f, int k);

// Weighted Sobolev norm of H^{a,b}(|x| >= r_from):
//   sum_{k<=a} ||<r>^b d_r^k f||_{L^2(r >= r_from)}.
double weighted_sobolev_norm(const RadialGrid& grid, int n, std::span<const double> f,
                             int order, double weight, double r_from);

// L^q in time of a sampled series s(t_k) on a uniform time stride (trapezoid in t).
double time_norm(std::span<const double> series, double dt, double q);

// Spacetime Y^{q, r_exp; N} norm of a uniformly spaced history:
//   sum_{j+k<=N} || d_t^j d_r^k u ||_{L^q_t L^{r_exp}_x}.
// Time derivatives come from second-order differences of the stored u history.
double y_norm(std::span<const RadialState> history, int n, double q, double r_exp, int N);

}  // namespace wavelab
