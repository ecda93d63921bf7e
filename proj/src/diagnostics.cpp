#include "wavelab/diagnostics.hpp"

#include "wavelab/error.hpp"
#include "wavelab/norms.hpp"
#include "wavelab/radial.hpp"
#include "wavelab/stencil.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <utility>

namespace wavelab {

namespace {

double sup_abs(std::span<const double> f) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
}

void require_uniform(std::span<const double> t, const char* what) {
    if (t.size() < 2) return;
    const double dt = t[1] - t[0];
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double d = t[k] - t[k - 1];
        if (!(d > 0.0) || std::abs(d - dt) > 1e-6 * dt) {
            throw DomainError(std::string(what) + ": snapshots must be uniformly spaced in time");
        }
    }
}

nlohmann::json verdict_json(const BoundednessVerdict& v) {
    return {{"first_half_max", v.first_half_max},
            {"second_half_max", v.second_half_max},
            {"slack", v.slack},
            {"bounded", v.bounded}};
}

// json has no infinity; non-finite values are written as null
nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

BoundednessVerdict half_verdict(std::span<const double> t, std::span<const double> values, double slack) {
    if (t.size() != values.size()) throw DomainError("half_verdict: size mismatch");
    BoundednessVerdict v;
    v.slack = slack;
    if (t.empty()) return v;
    const double mid = 0.5 * (t.front() + t.back());
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] <= mid) {
            v.first_half_max = std::max(v.first_half_max, values[k]);
        } else {
            v.second_half_max = std::max(v.second_half_max, values[k]);
        }
    }
    v.bounded = v.second_half_max <= slack * v.first_half_max;
    return v;
}

// ---------------------------------------------------------------------------------------
// Decay

double decay_weight(int n, double t, double r) {
    return std::pow(r, 0.5 * n - 1.0) * std::sqrt(bracket(t + r) * bracket(t - r));
}

double decay_Q(const RadialState& s, int n) {
    double q = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        if (s.u[i] == 0.0) continue;
        q = std::max(q, decay_weight(n, s.t, s.grid.r(i)) * std::abs(s.u[i]));
    }
    return q;
}

DecayTracker::DecayTracker(int n) { r_.n = n; }

void DecayTracker::add(const RadialState& s) {
    r_.t.push_back(s.t);
    r_.Q.push_back(decay_Q(s, r_.n));
    r_.C_emp.push_back(std::max(r_.C_emp.empty() ? 0.0 : r_.C_emp.back(), r_.Q.back()));
    const double sup = sup_abs(s.u);
    r_.sup_u.push_back(sup);
    r_.t_sup.push_back(bracket(s.t) * sup);
    r_.l2.push_back(lp_norm(s.grid, r_.n, s.u, 2.0));
}

DecayReport DecayTracker::report(double min_t_end) const {
    if (r_.t.size() < 2 || r_.t.back() - r_.t.front() < min_t_end - 1e-9) {
        throw DomainError("decay_profile: run too short (need t_end >= " + std::to_string(min_t_end) + ")");
    }
    require_uniform(r_.t, "decay_profile");
    DecayReport out = r_;
    out.Q_verdict = half_verdict(out.t, out.Q);
    out.t_sup_verdict = half_verdict(out.t, out.t_sup);
    out.l2_verdict = half_verdict(out.t, out.l2);
    return out;
}

DecayReport decay_profile(std::span<const RadialState> run, int n, double min_t_end) {
    DecayTracker tr(n);
    for (const auto& s : run) tr.add(s);
    return tr.report(min_t_end);
}

PotentialIntegral potential_integral(std::span<const double> t, std::span<const double> sup_u, double p) {
    if (t.size() != sup_u.size() || t.size() < 2) {
        throw DomainError("potential_integral: need matching series with at least two samples");
    }
    PotentialIntegral out;
    const double mid = 0.5 * (t.front() + t.back());
    auto V = [&](std::size_t k) { return p * abs_power(sup_u[k], p - 1.0); };
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double t0 = t[k], t1 = t[k + 1];
        const double v0 = V(k), v1 = V(k + 1);
        if (t1 <= mid) {
            out.head += 0.5 * (t1 - t0) * (v0 + v1);
        } else if (t0 >= mid) {
            out.tail += 0.5 * (t1 - t0) * (v0 + v1);
        } else {
            const double vm = v0 + (v1 - v0) * (mid - t0) / (t1 - t0);
            out.head += 0.5 * (mid - t0) * (v0 + vm);
            out.tail += 0.5 * (t1 - mid) * (vm + v1);
        }
    }
    out.total = out.head + out.tail;
    out.finite = std::isfinite(out.total);
    out.tail_le_head = out.finite && out.tail <= out.head;
    return out;
}

// ---------------------------------------------------------------------------------------
// Hardy-type inequality

HardyResult hardy_check(const std::function<double(double)>& V, const std::function<double(double)>& dV,
                        double a, double b, int n, std::size_t num_quad) {
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) {
        throw DomainError("hardy_check: degenerate interval [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    if (n < 3) throw DomainError("hardy_check: n must be at least 3");
    if (num_quad < 3) num_quad = 3;
    if (num_quad % 2 == 0) ++num_quad;
    const double L = std::log(b / a);
    const double dx = 1.0 / static_cast<double>(num_quad - 1);
    double grad = 0.0, mass = 0.0;
    HardyResult r;
    for (std::size_t k = 0; k < num_quad; ++k) {
        const double s = k + 1 == num_quad ? b : a * std::exp(L * static_cast<double>(k) * dx);
        const double v = V(s);
        const double d = dV(s);
        r.lhs = std::max(r.lhs, std::pow(s, 0.5 * n - 1.0) * std::abs(v));
        const double w = (k == 0 || k + 1 == num_quad) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        const double jac = std::pow(s, n - 1) * s * L;  // s^{n-1} ds/dx
        grad += w * jac * d * d;
        mass += w * jac * v * v;
    }
    grad *= dx / 3.0;
    mass *= dx / 3.0;
    r.grad_term = std::sqrt(grad);
    r.mass_term = std::sqrt(mass) / (b - a);
    r.rhs = r.grad_term + r.mass_term;
    if (r.rhs > 0.0) r.ratio = r.lhs / r.rhs;
    return r;
}

double HardyTrial::value(double s, double lambda) const {
    const double x = s / lambda;
    if (power) return coeffs.empty() ? std::pow(x, alpha) : coeffs.front() * std::pow(x, alpha);
    const double y = (x - a) / (b - a);
    double v = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) v = v * y + coeffs[k];
    return v;
}

double HardyTrial::derivative(double s, double lambda) const {
    const double x = s / lambda;
    if (power) {
        const double c = coeffs.empty() ? 1.0 : coeffs.front();
        return c * alpha * std::pow(x, alpha - 1.0) / lambda;
    }
    const double y = (x - a) / (b - a);
    double d = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) d = d * y + static_cast<double>(k) * coeffs[k];
    return d / (b - a) / lambda;
}

std::vector<HardyTrial> hardy_trials(std::size_t count, std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const double lo = std::log(0.05), hi = std::log(20.0);
    std::vector<HardyTrial> out;
    out.reserve(count);
    while (out.size() < count) {
        HardyTrial t;
        double a = std::exp(lo + (hi - lo) * unit(rng));
        double b = std::exp(lo + (hi - lo) * unit(rng));
        if (a > b) std::swap(a, b);
        if (b < 1.001 * a) continue;
        t.a = a;
        t.b = b;
        t.power = unit(rng) < 0.5;
        if (t.power) {
            t.alpha = -0.5 * n + (2.0 + 0.5 * n) * unit(rng);
            t.coeffs = {unit(rng) < 0.5 ? -1.0 : 1.0};
        } else {
            const auto degree = static_cast<std::size_t>(unit(rng) * 7.0);
            t.coeffs.resize(std::min<std::size_t>(degree, 6) + 1);
            for (double& c : t.coeffs) c = coef(rng);
        }
        out.push_back(std::move(t));
    }
    return out;
}

HardySuite hardy_suite(std::size_t count, std::uint64_t seed, int n, std::span<const double> lambdas,
                       std::size_t num_quad) {
    const auto trials = hardy_trials(count, seed, n);
    HardySuite suite;
    suite.trials = count;
    suite.lambdas.push_back(1.0);
    for (double l : lambdas) {
        if (!(l > 0.0)) throw DomainError("hardy_suite: dilation factors must be positive");
        if (l != 1.0) suite.lambdas.push_back(l);
    }
    for (double lambda : suite.lambdas) {
        double C = 0.0;
        std::size_t degenerate = 0;
        for (const auto& tr : trials) {
            const auto res = hardy_check([&](double s) { return tr.value(s, lambda); },
                                         [&](double s) { return tr.derivative(s, lambda); }, lambda * tr.a,
                                         lambda * tr.b, n, num_quad);
            if (res.ratio) {
                C = std::max(C, *res.ratio);
            } else {
                ++degenerate;
            }
        }
        suite.C_H.push_back(C);
        if (lambda == 1.0) suite.degenerate = degenerate;
    }
    const double base = suite.C_H.front();
    suite.finite = std::all_of(suite.C_H.begin(), suite.C_H.end(), [](double c) { return std::isfinite(c); });
    for (double c : suite.C_H) suite.max_variation = std::max(suite.max_variation, std::abs(c / base - 1.0));
    suite.stable = suite.finite && base > 0.0 && suite.max_variation <= 0.1;
    return suite;
}

// ---------------------------------------------------------------------------------------
// Data norms

DataNorm data_norm(const RadialGrid& grid, std::span<const double> u0, std::span<const double> u1, double M,
                   const Params& params) {
    params.validate();
    if (!(M > 1.0)) throw DomainError("data_norm: M must exceed 1, got " + std::to_string(M));
    if (M >= grid.r_max) throw DomainError("data_norm: M lies outside the grid");
    check_shape(grid, u0, "data_norm");
    check_shape(grid, u1, "data_norm");
    const int n = params.n;
    const double p = params.p;
    DataNorm d;
    d.N0 = n / 2 + 1;
    d.weight_exponent = n * (p - 1.0) / (p + 1.0) - 1.0;
    const int order0 = std::min(d.N0 + 1, 3);
    const int order1 = std::min(d.N0, 3);
    d.order_capped = d.N0 + 1 > 3;
    d.C_M = weighted_sobolev_norm(grid, n, u0, order0, d.N0, M) +
            weighted_sobolev_norm(grid, n, u1, order1, d.N0 + 1, M);
    d.u0_H2 = sobolev_norm(grid, n, u0, 2);
    d.u1_H1 = sobolev_norm(grid, n, u1, 1);
    d.weighted_lp = lp_norm(grid, n, u0, p + 1.0, d.weight_exponent);
    d.full = d.C_M + d.u0_H2 + d.u1_H1 + d.weighted_lp;
    return d;
}

// ---------------------------------------------------------------------------------------
// Strichartz-type norms

std::string to_string(PairClass c) {
    switch (c) {
        case PairClass::Admissible: return "admissible";
        case PairClass::EndpointExcluded: return "endpoint-excluded";
        case PairClass::SobolevExtended: return "sobolev-extended";
        case PairClass::Neither: return "neither";
    }
    return "neither";
}

PairClass classify_pair(int n, double q, double r) {
    if (n < 3) throw DomainError("classify_pair: n must be at least 3");
    if (!(q > 0.0) || !(r > 0.0)) throw DomainError("classify_pair: exponents must be positive");
    const double tol = 1e-12;
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    const double inv_r = std::isinf(r) ? 0.0 : 1.0 / r;
    const double gap = 2.0 * inv_q + (n - 1) * inv_r - 0.5 * (n - 1);
    if (std::abs(gap) <= tol) {
        const double r_end = n == 3 ? std::numeric_limits<double>::infinity() : 2.0 * (n - 1) / (n - 3.0);
        if (std::abs(q - 2.0) <= tol && (std::isinf(r_end) ? std::isinf(r) : std::abs(r - r_end) <= tol * r_end)) {
            return PairClass::EndpointExcluded;
        }
        if (q > 2.0 && r >= 2.0 && r < r_end) return PairClass::Admissible;
    }
    // q = 2/delta, r = 2n/(n-2-delta)
    const double delta = 2.0 * inv_q;
    if (delta >= 0.0 && delta < 1.0 && std::isfinite(r)) {
        const double r_expected = 2.0 * n / (n - 2.0 - delta);
        if (std::abs(r - r_expected) <= 1e-9 * r_expected) return PairClass::SobolevExtended;
    }
    return PairClass::Neither;
}

StrichartzTracker::StrichartzTracker(int n, std::vector<std::pair<double, double>> pairs, bool linear)
    : n_(n), linear_(linear), pairs_(std::move(pairs)), acc_(pairs_.size(), 0.0), prev_(pairs_.size(), 0.0) {
    for (const auto& [q, r] : pairs_) {
        if (!(q >= 1.0) || !(r >= 1.0)) throw DomainError("strichartz_monitor: exponents must be >= 1");
    }
}

void StrichartzTracker::add(const RadialState& s) {
    if (count_ == 0) {
        double grad = 0.0;
        const RadialLaplacian lap(s.grid, n_);
        for (std::size_t i = 0; i + 1 < s.grid.size(); ++i) {
            const double du = (s.u[i + 1] - s.u[i]) / s.grid.h;
            grad += lap.face_weight(i) * du * du;
        }
        data_norm_ = std::sqrt(grad) + lp_norm(s.grid, n_, s.v, 2.0);
    } else if (!(s.t > t_prev_)) {
        throw DomainError("strichartz_monitor: snapshots must advance in time");
    }
    for (std::size_t j = 0; j < pairs_.size(); ++j) {
        const auto [q, r] = pairs_[j];
        const double x = lp_norm(s.grid, n_, s.u, r);
        if (std::isinf(q)) {
            acc_[j] = std::max(acc_[j], x);
        } else {
            const double cur = std::pow(x, q);
            if (count_ > 0) acc_[j] += 0.5 * (s.t - t_prev_) * (prev_[j] + cur);
            prev_[j] = cur;
        }
    }
    t_prev_ = s.t;
    ++count_;
}

std::vector<StrichartzEntry> StrichartzTracker::results() const {
    std::vector<StrichartzEntry> out;
    for (std::size_t j = 0; j < pairs_.size(); ++j) {
        const auto [q, r] = pairs_[j];
        StrichartzEntry e;
        e.q = q;
        e.r = r;
        e.cls = classify_pair(n_, q, r);
        e.norm = std::isinf(q) ? acc_[j] : std::pow(acc_[j], 1.0 / q);
        if (linear_ && data_norm_ > 0.0) e.data_ratio = e.norm / data_norm_;
        out.push_back(e);
    }
    return out;
}

std::vector<StrichartzEntry> strichartz_monitor(std::span<const RadialState> run, int n,
                                                std::vector<std::pair<double, double>> pairs, bool linear) {
    StrichartzTracker tr(n, std::move(pairs), linear);
    for (const auto& s : run) tr.add(s);
    return tr.results();
}

// ---------------------------------------------------------------------------------------
// Higher-norm history

SobolevTracker::SobolevTracker(const Params& params, int k) : params_(params) {
    params_.validate();
    if (k < 1 || k > 2) throw DomainError("sobolev_history: k must be 1 or 2, got " + std::to_string(k));
    s_.k = k;
}

void SobolevTracker::add(const RadialState& s) {
    const RadialGrid& g = s.grid;
    const RadialLaplacian lap(g, params_.n);
    const Field w = radial_weights(g, params_.n);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += w[i] * s.v[i] * s.v[i];
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double du = (s.u[i + 1] - s.u[i]) / g.h;
        sum += lap.face_weight(i) * du * du;
    }
    if (s_.k == 2) {
        const RadialSolver solver(g, params_, NonlinearitySpec::defocusing(params_.p));
        Field utt(g.size());
        solver.acceleration(s.u, utt);
        const Field ur = radial_derivative(g, s.u);
        const Field urr = radial_derivative(g, ur);
        const Field utr = radial_derivative(g, s.v);
        for (const Field* f : {&std::as_const(utt), &std::as_const(utr), &std::as_const(urr)}) {
            const double x = lp_norm(g, params_.n, *f, 2.0);
            sum += x * x;
        }
    }
    s_.t.push_back(s.t);
    s_.norm.push_back(std::sqrt(sum));
    s_.running_max.push_back(std::max(s_.running_max.empty() ? 0.0 : s_.running_max.back(), s_.norm.back()));
}

SobolevSeries SobolevTracker::series() const {
    SobolevSeries out = s_;
    out.verdict = half_verdict(out.t, out.norm);
    return out;
}

SobolevSeries sobolev_history(std::span<const RadialState> run, const Params& params, int k) {
    SobolevTracker tr(params, k);
    for (const auto& s : run) tr.add(s);
    return tr.series();
}

// ---------------------------------------------------------------------------------------
// Output

void write_series_csv(std::ostream& out, const std::string& name, std::span<const double> t,
                      std::span<const double> values) {
    if (t.size() != values.size()) throw DomainError("write_series_csv: size mismatch");
    out << "t," << name << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < t.size(); ++k) out << t[k] << ',' << values[k] << '\n';
}

std::string decay_report_json(const DecayReport& r) {
    nlohmann::json j;
    j["n"] = r.n;
    j["samples"] = r.t.size();
    j["t_end"] = r.t.empty() ? 0.0 : r.t.back();
    j["C_emp"] = r.C_emp.empty() ? 0.0 : r.C_emp.back();
    j["max_t_sup"] = r.t_sup.empty() ? 0.0 : *std::max_element(r.t_sup.begin(), r.t_sup.end());
    j["Q_verdict"] = verdict_json(r.Q_verdict);
    j["t_sup_verdict"] = verdict_json(r.t_sup_verdict);
    j["l2_verdict"] = verdict_json(r.l2_verdict);
    return j.dump(2);
}

std::string hardy_suite_json(const HardySuite& s) {
    nlohmann::json j;
    j["trials"] = s.trials;
    j["degenerate"] = s.degenerate;
    j["lambdas"] = s.lambdas;
    nlohmann::json c = nlohmann::json::array();
    for (double x : s.C_H) c.push_back(num(x));
    j["C_H"] = c;
    j["max_variation"] = num(s.max_variation);
    j["finite"] = s.finite;
    j["stable"] = s.stable;
    return j.dump(2);
}

std::string data_norm_json(const DataNorm& d) {
    nlohmann::json j{{"N0", d.N0},
                     {"weight_exponent", d.weight_exponent},
                     {"order_capped", d.order_capped},
                     {"C_M", num(d.C_M)},
                     {"u0_H2", num(d.u0_H2)},
                     {"u1_H1", num(d.u1_H1)},
                     {"weighted_lp", num(d.weighted_lp)},
                     {"full", num(d.full)}};
    return j.dump(2);
}

std::string strichartz_json(std::span<const StrichartzEntry> entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json j{{"q", num(e.q)}, {"r", num(e.r)}, {"class", to_string(e.cls)}, {"norm", num(e.norm)}};
        j["data_ratio"] = e.data_ratio ? num(*e.data_ratio) : nlohmann::json(nullptr);
        arr.push_back(j);
    }
    return arr.dump(2);
}

std::string sobolev_json(const SobolevSeries& s) {
    nlohmann::json j;
    j["k"] = s.k;
    j["samples"] = s.t.size();
    j["max_norm"] = s.running_max.empty() ? 0.0 : s.running_max.back();
    j["verdict"] = verdict_json(s.verdict);
    return j.dump(2);
}

std::string potential_integral_json(const PotentialIntegral& p) {
    nlohmann::json j{{"head", num(p.head)},
                     {"tail", num(p.tail)},
                     {"total", num(p.total)},
                     {"finite", p.finite},
                     {"tail_le_head", p.tail_le_head}};
    return j.dump(2);
}

}  // namespace wavelab
