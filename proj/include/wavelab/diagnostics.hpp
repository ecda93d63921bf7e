#pragma once

// Post-processing of radial runs: weighted decay, Hardy-type interval inequality, data
// norms, Strichartz-type spacetime norms and higher-norm histories.
//
// Every monitor comes as a tracker fed one snapshot at a time (so long runs need not keep
// their history) plus a convenience function over a stored run.

#include "wavelab/grid.hpp"
#include "wavelab/params.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wavelab {

// bounded iff max over the second half of the times <= slack * max over the first half.
struct BoundednessVerdict {
    double first_half_max = 0.0;
    double second_half_max = 0.0;
    double slack = 1.2;
    bool bounded = true;
};
BoundednessVerdict half_verdict(std::span<const double> t, std::span<const double> values, double slack = 1.2);

// r^{n/2-1} <t+r>^{1/2} <t-r>^{1/2}
double decay_weight(int n, double t, double r);
// sup_r decay_weight * |u|
double decay_Q(const RadialState& state, int n);

struct DecayReport {
    int n = 3;
    std::vector<double> t;
    std::vector<double> Q;
    std::vector<double> C_emp;     // running max of Q
    std::vector<double> sup_u;
    std::vector<double> t_sup;     // <t> sup|u|
    std::vector<double> l2;        // ||u(t)||_{L^2}
    BoundednessVerdict Q_verdict;
    BoundednessVerdict t_sup_verdict;
    BoundednessVerdict l2_verdict;
};

class DecayTracker {
public:
    explicit DecayTracker(int n);
    void add(const RadialState& state);
    // DomainError unless the snapshots are uniformly spaced and reach min_t_end.
    DecayReport report(double min_t_end = 20.0) const;

private:
    DecayReport r_;
};

DecayReport decay_profile(std::span<const RadialState> run, int n, double min_t_end = 20.0);

// int ||V(t)||_inf dt with V = p|u|^{p-1}, split at the midpoint of the run.
struct PotentialIntegral {
    double head = 0.0;  // first half
    double tail = 0.0;  // second half
    double total = 0.0;
    bool finite = false;
    bool tail_le_head = false;
};
PotentialIntegral potential_integral(std::span<const double> t, std::span<const double> sup_u, double p);

// sup_I s^{n/2-1}|V| against (int_I s^{n-1} V'^2)^{1/2} + |I|^{-1} (int_I s^{n-1} V^2)^{1/2},
// on num_quad geometrically spaced nodes (Simpson in log s). ratio is empty when rhs = 0.
struct HardyResult {
    double lhs = 0.0;
    double grad_term = 0.0;
    double mass_term = 0.0;
    double rhs = 0.0;
    std::optional<double> ratio;
};
HardyResult hardy_check(const std::function<double(double)>& V, const std::function<double(double)>& dV,
                        double a, double b, int n, std::size_t num_quad = 1025);

// Random test function on a random interval [a, b] inside [0.05, 20]: a polynomial of degree
// <= 6 in (s - a)/(b - a) or a power s^alpha with alpha in [-n/2, 2].
struct HardyTrial {
    bool power = false;
    std::vector<double> coeffs;
    double alpha = 0.0;
    double a = 1.0;
    double b = 2.0;
    // V(s / lambda) and its s-derivative, i.e. the trial dilated to [lambda a, lambda b]
    double value(double s, double lambda = 1.0) const;
    double derivative(double s, double lambda = 1.0) const;
};
std::vector<HardyTrial> hardy_trials(std::size_t count, std::uint64_t seed, int n);

struct HardySuite {
    std::size_t trials = 0;
    std::size_t degenerate = 0;           // trials with rhs = 0
    std::vector<double> lambdas;
    std::vector<double> C_H;              // max ratio per dilation
    double max_variation = 0.0;           // max |C_H(lambda)/C_H(1) - 1|
    bool finite = false;
    bool stable = false;                  // max_variation <= 0.1
};
HardySuite hardy_suite(std::size_t count, std::uint64_t seed, int n, std::span<const double> lambdas,
                       std::size_t num_quad = 1025);

// Data norm with H^{a,b}(|x| >= M) = sum_{k<=a} ||<r>^b d_r^k f||_{L^2(r>=M)}.
struct DataNorm {
    int N0 = 0;                  // floor(n/2) + 1
    double weight_exponent = 0;  // n(p-1)/(p+1) - 1
    bool order_capped = false;   // radial derivatives are capped at 3
    double C_M = 0.0;
    double u0_H2 = 0.0;
    double u1_H1 = 0.0;
    double weighted_lp = 0.0;    // ||<x>^{weight_exponent} u0||_{L^{p+1}}
    double full = 0.0;
};
DataNorm data_norm(const RadialGrid& grid, std::span<const double> u0, std::span<const double> u1, double M,
                   const Params& params);

enum class PairClass { Admissible, EndpointExcluded, SobolevExtended, Neither };
std::string to_string(PairClass c);
// Admissible: 2/q + (n-1)/r = (n-1)/2 with 2 < q <= inf and 2 <= r < 2(n-1)/(n-3).
// Endpoint: (2, 2(n-1)/(n-3)). Sobolev-extended: q = 2/delta, r = 2n/(n-2-delta), 0 <= delta < 1.
PairClass classify_pair(int n, double q, double r);

struct StrichartzEntry {
    double q = 0.0;
    double r = 0.0;
    PairClass cls = PairClass::Neither;
    double norm = 0.0;                 // ||u||_{L^q_t L^r_x} over the run
    std::optional<double> data_ratio;  // norm / (||u0||_{H^1 dot} + ||u1||_{L^2}), linear runs only
};

class StrichartzTracker {
public:
    StrichartzTracker(int n, std::vector<std::pair<double, double>> pairs, bool linear);
    void add(const RadialState& state);
    std::vector<StrichartzEntry> results() const;

private:
    int n_;
    bool linear_;
    std::vector<std::pair<double, double>> pairs_;
    std::vector<double> acc_, prev_;
    double t_prev_ = 0.0;
    std::size_t count_ = 0;
    double data_norm_ = 0.0;
};

std::vector<StrichartzEntry> strichartz_monitor(std::span<const RadialState> run, int n,
                                                std::vector<std::pair<double, double>> pairs, bool linear);

// ||grad_{t,x} u||: k = 1 is (||u_t||^2 + ||u_r||^2)^{1/2} with the energy quadrature
// (equal to sqrt(2 (kinetic + gradient))); k = 2 adds u_tt, u_tr, u_rr (u_tt from the
// defocusing equation).
struct SobolevSeries {
    int k = 1;
    std::vector<double> t;
    std::vector<double> norm;
    std::vector<double> running_max;
    BoundednessVerdict verdict;
};

class SobolevTracker {
public:
    SobolevTracker(const Params& params, int k);
    void add(const RadialState& state);
    SobolevSeries series() const;

private:
    Params params_;
    SobolevSeries s_;
};

SobolevSeries sobolev_history(std::span<const RadialState> run, const Params& params, int k);

// CSV "t,<name>".
void write_series_csv(std::ostream& out, const std::string& name, std::span<const double> t,
                      std::span<const double> values);
std::string decay_report_json(const DecayReport& report);
std::string hardy_suite_json(const HardySuite& suite);
std::string data_norm_json(const DataNorm& norm);
std::string strichartz_json(std::span<const StrichartzEntry> entries);
std::string sobolev_json(const SobolevSeries& series);
std::string potential_integral_json(const PotentialIntegral& pi);

}  // namespace wavelab
