#include "wavelab/experiment.hpp"

#include "wavelab/compat.hpp"
#include "wavelab/diagnostics.hpp"
#include "wavelab/error.hpp"
#include "wavelab/grid.hpp"
#include "wavelab/penrose.hpp"
#include "wavelab/perturbation.hpp"
#include "wavelab/radial.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <algorithm>
#include <limits>
#include <sstream>

#ifndef WAVELAB_VERSION
#define WAVELAB_VERSION "unknown"
#endif

namespace wavelab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<std::pair<std::string, ExperimentKind>>& kind_names() {
    static const std::vector<std::pair<std::string, ExperimentKind>> names{
        {"run-radial", ExperimentKind::RunRadial},   {"run-penrose", ExperimentKind::RunPenrose},
        {"run-perturb", ExperimentKind::RunPerturb}, {"check-compat", ExperimentKind::CheckCompat},
        {"diagnose", ExperimentKind::Diagnose},      {"hardy-test", ExperimentKind::HardyTest},
        {"sweep", ExperimentKind::Sweep}};
    return names;
}

// Field access with line-numbered messages. Lines are found by scanning the text for the
// quoted keys of the path in order, which is exact for the usual one-key-per-line layout.
class Reader {
public:
    Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
        std::string where = source_;
        if (const auto line = line_of(path)) where += ":" + std::to_string(*line);
        throw ConfigError(where + ": " + msg);
    }

    static std::string dotted(const std::vector<std::string>& path) {
        std::string s;
        for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
        return s;
    }

    const json* find(const json& root, const std::vector<std::string>& path) const {
        const json* cur = &root;
        for (std::size_t k = 0; k < path.size(); ++k) {
            if (!cur->is_object()) {
                fail({path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k)},
                     "field '" + dotted({path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k)}) +
                         "' must be an object");
            }
            const auto it = cur->find(path[k]);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        }
        return cur;
    }

    const json& require(const json& root, const std::vector<std::string>& path) const {
        const json* v = find(root, path);
        if (!v) {
            std::vector<std::string> parent(path.begin(), path.end() - 1);
            fail(parent, "missing required field '" + dotted(path) + "'");
        }
        return *v;
    }

    double number(const json& v, const std::vector<std::string>& path) const {
        if (v.is_string() && (v == "inf" || v == "infinity")) return kInf;
        if (!v.is_number()) fail(path, "field '" + dotted(path) + "' must be a number");
        return v.get<double>();
    }

    double number(const json& root, const std::vector<std::string>& path, double fallback) const {
        const json* v = find(root, path);
        return v ? number(*v, path) : fallback;
    }

    double positive(const json& root, const std::vector<std::string>& path, double fallback) const {
        const double x = number(root, path, fallback);
        if (!(x > 0.0)) fail(path, "field '" + dotted(path) + "' must be positive");
        return x;
    }

    std::size_t count(const json& root, const std::vector<std::string>& path, std::size_t fallback) const {
        const json* v = find(root, path);
        if (!v) return fallback;
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            fail(path, "field '" + dotted(path) + "' must be a nonnegative integer");
        }
        return v->get<std::size_t>();
    }

    std::string string(const json& root, const std::vector<std::string>& path, const std::string& fallback) const {
        const json* v = find(root, path);
        if (!v) return fallback;
        if (!v->is_string()) fail(path, "field '" + dotted(path) + "' must be a string");
        return v->get<std::string>();
    }

    bool boolean(const json& root, const std::vector<std::string>& path, bool fallback) const {
        const json* v = find(root, path);
        if (!v) return fallback;
        if (!v->is_boolean()) fail(path, "field '" + dotted(path) + "' must be true or false");
        return v->get<bool>();
    }

    std::vector<double> numbers(const json& root, const std::vector<std::string>& path,
                                std::vector<double> fallback) const {
        const json* v = find(root, path);
        if (!v) return fallback;
        if (!v->is_array()) fail(path, "field '" + dotted(path) + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : *v) out.push_back(number(x, path));
        return out;
    }

    ProfileSpec profile(const json& root, const std::vector<std::string>& path, const std::string& fallback) const {
        const json* v = find(root, path);
        if (!v) return preset(fallback);
        if (v->is_string()) return named(v->get<std::string>(), path);
        if (!v->is_object()) fail(path, "field '" + dotted(path) + "' must be a profile name or object");
        ProfileSpec s = named(string(root, append(path, "profile"), fallback), path);
        s.amplitude = number(root, append(path, "amplitude"), s.amplitude);
        s.a = number(root, append(path, "a"), s.a);
        s.b = number(root, append(path, "b"), s.b);
        s.power = number(root, append(path, "power"), s.power);
        s.center = number(root, append(path, "center"), s.center);
        s.width = number(root, append(path, "width"), s.width);
        s.ramp = number(root, append(path, "ramp"), s.ramp);
        if (s.kind != ProfileKind::Zero && !(s.b > s.a)) fail(path, "profile '" + dotted(path) + "' needs a < b");
        if (s.kind == ProfileKind::Bump && (s.power != std::floor(s.power) || s.power < 1.0)) {
            fail(path, "bump power in '" + dotted(path) + "' must be a positive integer");
        }
        return s;
    }

    static std::vector<std::string> append(std::vector<std::string> p, const std::string& k) {
        p.push_back(k);
        return p;
    }

    std::optional<std::size_t> line_of(const std::vector<std::string>& path) const {
        std::size_t pos = 0;
        bool found = false;
        for (const auto& key : path) {
            const auto at = text_.find("\"" + key + "\"", pos);
            if (at == std::string::npos) break;
            pos = at;
            found = true;
        }
        if (!found) return std::nullopt;
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    }

private:
    ProfileSpec named(const std::string& name, const std::vector<std::string>& path) const {
        try {
            return preset(name);
        } catch (const ConfigError& e) {
            fail(path, e.what());
        }
    }

    const std::string& text_;
    std::string source_;
};

std::string hex64(std::uint64_t x) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

// Output sink that records file names in creation order.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw SolverError("cannot write " + (dir_ / name).string());
        f << content;
        if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    }

    template <class Fn>
    void write_with(const std::string& name, Fn&& fn) {
        std::ostringstream os;
        fn(os);
        write(name, os.str());
    }

    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    const ExperimentConfig& cfg;
    Reader reader;
    Outputs& out;
    std::vector<std::string>& failures;

    const json& opts() const { return cfg.raw; }
    std::vector<std::string> opt(const std::string& k) const { return {"options", k}; }
    void check(bool ok, const std::string& msg) const {
        if (!ok) failures.push_back(msg);
    }
    RadialGrid grid() const { return make_grid_with_spacing(cfg.r_max, cfg.h); }
    RadialState data(const RadialGrid& g) const {
        RadialState s = zero_state(g);
        s.u = sample(cfg.u0, g);
        s.v = sample(cfg.u1, g);
        s.u[0] = s.v[0] = 0.0;
        return s;
    }
};

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

void require_compat(const Context& c, int needed) {
    if (needed <= 0) return;
    const double top = std::max({profile_support(c.cfg.u0), profile_support(c.cfg.u1), 2.0}) + 1.0;
    const int order = compat_order(make_grid(top, 401), c.cfg.params, c.cfg.u0, c.cfg.u1);
    if (order < needed) {
        throw ConfigError(c.cfg.source + ": data satisfy compatibility conditions only to order " +
                          std::to_string(order) + " (need " + std::to_string(needed) + ")");
    }
}

void run_radial(Context& c) {
    const auto& o = c.opts();
    const std::string kind = c.reader.string(o, c.opt("nonlinearity"), "defocusing");
    NonlinearitySpec nl = NonlinearitySpec::defocusing(c.cfg.params.p);
    if (kind == "linear") {
        nl = NonlinearitySpec::linear(c.cfg.params.p);
    } else if (kind == "truncated") {
        nl = NonlinearitySpec::truncated(c.cfg.params.p, c.reader.positive(o, c.opt("truncation"), 10.0));
    } else if (kind != "defocusing") {
        c.reader.fail(c.opt("nonlinearity"), "nonlinearity must be defocusing, linear or truncated");
    }
    require_compat(c, static_cast<int>(c.reader.count(o, c.opt("compat_order"), 0)));
    const double tol = c.reader.positive(o, c.opt("energy_tolerance"), 1e-3);
    EvolveOptions eo;
    eo.log_stride = std::max<std::size_t>(1, c.reader.count(o, c.opt("log_stride"), 10));
    const RadialGrid g = c.grid();
    const auto res = evolve(c.data(g), c.cfg.t_end, c.cfg.dt, nl, c.cfg.params, eo);
    c.out.write_with("fields.csv", [&](std::ostream& os) { write_state_csv(os, res.final_state); });
    c.out.write_with("log.csv", [&](std::ostream& os) { write_log_csv(os, res.log); });
    const double E0 = res.log.front().energy.total;
    double drift = 0.0;
    for (const auto& e : res.log) drift = std::max(drift, std::abs(e.energy.total - E0));
    const double rel = E0 > 0.0 ? drift / E0 : drift;
    c.check(rel <= tol, "energy drift " + fmt(rel) + " exceeds " + fmt(tol));
}

void run_penrose(Context& c) {
    const auto& o = c.opts();
    const std::size_t N = c.reader.count(o, c.opt("N"), 500);
    const double frac = c.reader.positive(o, c.opt("dT_fraction"), 0.4);
    const double delta = c.reader.positive(o, c.opt("delta"), 0.2);
    const std::size_t stride = std::max<std::size_t>(1, c.reader.count(o, c.opt("stride"), 10));
    const RadialGrid g = c.grid();
    const CompactGrid cg = make_compact_grid(N);
    std::ostringstream energies;
    energies << "T,E,F\n" << std::setprecision(17);
    double E_prev = -1.0, F_prev = -1.0, inc_E = 0.0, inc_F = 0.0;
    std::size_t k = 0;
    CompactRunOptions co;
    co.observer = [&](const CompactState& s) {
        const double E = energy_E(s);
        const double F = energy_F(s, delta);
        if (E_prev >= 0.0) {
            inc_E = std::max(inc_E, E - E_prev);
            inc_F = std::max(inc_F, F - F_prev);
        }
        E_prev = E;
        F_prev = F;
        if (k++ % stride == 0) energies << s.T << ',' << E << ',' << F << '\n';
    };
    const auto run = evolve_compact(transform_initial(c.data(g), cg, c.cfg.params), c.cfg.t_end, frac * cg.d_alpha, co);
    energies << run.final_state.T << ',' << energy_E(run.final_state) << ',' << energy_F(run.final_state, delta) << '\n';
    c.out.write_with("compact.csv", [&](std::ostream& os) { write_compact_csv(os, run.final_state); });
    c.out.write("compact.json", compact_sidecar_json(run.final_state, delta));
    c.out.write("energies.csv", energies.str());
    c.check(inc_E <= 0.0, "E increased by " + fmt(inc_E));
    c.check(inc_F <= 0.0, "F increased by " + fmt(inc_F));

    if (c.reader.boolean(o, {"options", "dual_oracle", "enabled"}, false)) {
        DualOptions d;
        d.h = c.cfg.h;
        d.N = N;
        d.T_end = c.cfg.t_end;
        d.r_max = c.cfg.r_max;
        d.t_cover = c.reader.positive(o, {"options", "dual_oracle", "t_cover"}, 10.0);
        d.dT_fraction = frac;
        d.delta = delta;
        const double tol = c.reader.positive(o, {"options", "dual_oracle", "tolerance"}, 5e-3);
        const auto r = dual_representation(c.cfg.u0, c.cfg.u1, c.cfg.params, d);
        json j{{"h", r.h},
               {"dT", r.dT},
               {"sup_difference", r.discrepancy},
               {"compared_nodes", r.compared},
               {"tolerance", tol},
               {"flux_residual", r.flux_residual}};
        c.out.write("dual.json", j.dump(2));
        c.check(r.compared > 0, "dual oracle compared no nodes");
        c.check(r.discrepancy <= tol, "dual discrepancy " + fmt(r.discrepancy) + " exceeds " + fmt(tol));
    }
}

PerturbationShape read_shape(const Context& c) {
    PerturbationShape s;
    s.radial = c.reader.profile(c.opts(), c.opt("shape"), "bump4");
    s.legendre = static_cast<int>(c.reader.count(c.opts(), c.opt("legendre"), 1));
    return s;
}

SweepOptions read_sweep_options(const Context& c) {
    const auto& o = c.opts();
    SweepOptions so;
    so.t_end = c.cfg.t_end;
    so.dt = c.cfg.dt;
    so.record_stride = std::max<std::size_t>(1, c.reader.count(o, c.opt("record_stride"), 20));
    so.n_theta = c.reader.count(o, c.opt("n_theta"), 8);
    so.window = c.reader.positive(o, c.opt("window"), 1.0);
    so.growth_limit = c.reader.positive(o, c.opt("growth_limit"), 10.0);
    so.m_norm.delta = c.reader.number(o, c.opt("delta"), 0.5);
    if (const json* modes = c.reader.find(o, c.opt("modes"))) {
        if (!modes->is_array()) c.reader.fail(c.opt("modes"), "field 'options.modes' must be an array");
        so.modes.clear();
        for (const auto& m : *modes) {
            if (m == "linearized") {
                so.modes.push_back(PerturbationMode::Linearized);
            } else if (m == "axisymmetric") {
                so.modes.push_back(PerturbationMode::Axisymmetric);
            } else {
                c.reader.fail(c.opt("modes"), "modes must be 'linearized' or 'axisymmetric'");
            }
        }
    }
    return so;
}

json record_json(const StabilityRecord& r) {
    double max_id = 0.0;
    for (const auto& s : r.samples) max_id = std::max(max_id, s.identity_error);
    json j{{"epsilon", r.epsilon},
           {"mode", to_string(r.mode)},
           {"M_window", r.M_window},
           {"M_end", r.M_end},
           {"growth", r.growth},
           {"bounded", r.bounded},
           {"bound_holds", r.bound_holds},
           {"C", r.constants.C},
           {"max_identity_error", max_id},
           {"samples", r.samples.size()}};
    j["error"] = r.error ? json(*r.error) : json(nullptr);
    return j;
}

void check_records(Context& c, const std::vector<StabilityRecord>& recs, double identity_tol) {
    for (const auto& r : recs) {
        const std::string tag = to_string(r.mode) + " epsilon=" + fmt(r.epsilon);
        if (r.error) {
            c.failures.push_back(tag + ": " + *r.error);
            continue;
        }
        c.check(r.bounded, tag + ": M grew by " + fmt(r.growth));
        c.check(r.bound_holds, tag + ": energy bound violated");
        for (const auto& s : r.samples) {
            if (s.identity_error > identity_tol) {
                c.failures.push_back(tag + ": decomposition identity error " + fmt(s.identity_error));
                break;
            }
        }
    }
}

void run_perturb(Context& c) {
    const auto& o = c.opts();
    const std::string mode = c.reader.string(o, c.opt("mode"), "axisymmetric");
    if (mode != "axisymmetric" && mode != "linearized") {
        c.reader.fail(c.opt("mode"), "mode must be 'linearized' or 'axisymmetric'");
    }
    const double eps = c.reader.number(o, c.opt("epsilon"), 1e-2);
    const PerturbationShape shape = read_shape(c);
    SweepOptions so = read_sweep_options(c);
    so.modes = {mode == "axisymmetric" ? PerturbationMode::Axisymmetric : PerturbationMode::Linearized};
    const RadialGrid g = c.grid();
    Background bg = Background::streaming(c.data(g), c.cfg.params, c.cfg.dt);
    const std::vector<double> eps_list{eps};
    const auto recs = stability_sweep(eps_list, shape, bg, c.cfg.params, so);
    c.out.write_with("perturbation.csv", [&](std::ostream& os) { write_sweep_csv(os, recs); });
    c.out.write("perturbation.json", record_json(recs.front()).dump(2));
    if (recs.front().error) throw SolverError(*recs.front().error);
    check_records(c, recs, c.reader.positive(o, c.opt("identity_tolerance"), 1e-10));
}

void run_sweep(Context& c) {
    const auto& o = c.opts();
    const auto eps = c.reader.numbers(o, c.opt("epsilons"), {1e-3, 1e-2, 1e-1});
    if (eps.empty()) c.reader.fail(c.opt("epsilons"), "options.epsilons must not be empty");
    const PerturbationShape shape = read_shape(c);
    const SweepOptions so = read_sweep_options(c);
    const double ratio_tol = c.reader.positive(o, c.opt("ratio_tolerance"), 0.2);
    const RadialGrid g = c.grid();
    Background bg = Background::streaming(c.data(g), c.cfg.params, c.cfg.dt);
    const auto recs = stability_sweep(eps, shape, bg, c.cfg.params, so);
    json summary = json::array();
    for (PerturbationMode m : so.modes) {
        std::vector<StabilityRecord> sel;
        for (const auto& r : recs) {
            if (r.mode == m) sel.push_back(r);
        }
        c.out.write_with("sweep_" + to_string(m) + ".csv", [&](std::ostream& os) { write_sweep_csv(os, sel); });
        // linear response between the two smallest positive epsilons
        std::vector<const StabilityRecord*> pos;
        for (const auto& r : sel) {
            if (r.epsilon > 0.0 && !r.error) pos.push_back(&r);
        }
        std::sort(pos.begin(), pos.end(), [](auto* a, auto* b) { return a->epsilon < b->epsilon; });
        if (pos.size() >= 2) {
            const double a = pos[0]->M_end / pos[0]->epsilon;
            const double b = pos[1]->M_end / pos[1]->epsilon;
            const double dev = std::abs(a / b - 1.0);
            c.check(dev <= ratio_tol, to_string(m) + ": M/epsilon differs by " + fmt(dev) + " between the two smallest epsilons");
        }
    }
    for (const auto& r : recs) summary.push_back(record_json(r));
    c.out.write("sweep.json", summary.dump(2));
    check_records(c, recs, c.reader.positive(o, c.opt("identity_tolerance"), 1e-10));
}

void run_compat(Context& c) {
    const int N = static_cast<int>(c.reader.count(c.opts(), c.opt("order"), 3));
    const double top = std::max({profile_support(c.cfg.u0), profile_support(c.cfg.u1), 2.0}) + 1.0;
    const RadialGrid g = make_grid(std::min(top, c.cfg.r_max), std::max<std::size_t>(401, static_cast<std::size_t>((top - 1.0) / c.cfg.h) + 1));
    const auto rep = nonlinear_sequence(g, c.cfg.params, c.cfg.u0, c.cfg.u1, N);
    c.out.write("compat.json", to_json(rep));
    if (c.reader.boolean(c.opts(), c.opt("require"), true)) {
        c.check(rep.passed(), "compatibility conditions fail beyond order " + std::to_string(rep.satisfied_order()));
    }
}

std::vector<std::pair<double, double>> read_pairs(const Context& c) {
    std::vector<std::pair<double, double>> pairs{{kInf, 2.0}, {4.0, 12.0}};
    if (const json* v = c.reader.find(c.opts(), c.opt("pairs"))) {
        if (!v->is_array()) c.reader.fail(c.opt("pairs"), "options.pairs must be an array of [q, r] pairs");
        pairs.clear();
        for (const auto& p : *v) {
            if (!p.is_array() || p.size() != 2) c.reader.fail(c.opt("pairs"), "each pair must be [q, r]");
            pairs.emplace_back(c.reader.number(p[0], c.opt("pairs")), c.reader.number(p[1], c.opt("pairs")));
        }
    }
    return pairs;
}

void run_diagnose(Context& c) {
    const auto& o = c.opts();
    const double every = c.reader.positive(o, c.opt("sample_every"), 0.05);
    const double min_t = c.reader.number(o, c.opt("min_t_end"), 20.0);
    const int k = static_cast<int>(c.reader.count(o, c.opt("k"), 2));
    const double M = c.reader.number(o, c.opt("M"), 2.0);
    const bool linear = c.reader.string(o, c.opt("nonlinearity"), "defocusing") == "linear";
    const RadialGrid g = c.grid();
    const RadialState s0 = c.data(g);
    const auto pairs = read_pairs(c);
    for (const auto& [q, r] : pairs) {
        if (!(q >= 1.0) || !(r >= 1.0)) c.reader.fail(c.opt("pairs"), "pair exponents must be >= 1");
    }
    const DataNorm dn = data_norm(g, s0.u, s0.v, M, c.cfg.params);
    DecayTracker decay(c.cfg.params.n);
    SobolevTracker sob(c.cfg.params, k);
    StrichartzTracker str(c.cfg.params.n, pairs, linear);
    EvolveOptions eo;
    eo.log_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(every / c.cfg.dt)));
    eo.observer = [&](const RadialState& s) {
        decay.add(s);
        sob.add(s);
        str.add(s);
    };
    const auto nl = linear ? NonlinearitySpec::linear(c.cfg.params.p) : NonlinearitySpec::defocusing(c.cfg.params.p);
    evolve(s0, c.cfg.t_end, c.cfg.dt, nl, c.cfg.params, eo);
    const DecayReport rep = decay.report(min_t);
    const SobolevSeries ss = sob.series();
    const auto entries = str.results();
    const PotentialIntegral pi = potential_integral(rep.t, rep.sup_u, c.cfg.params.p);
    json j;
    j["decay"] = json::parse(decay_report_json(rep));
    j["data_norm"] = json::parse(data_norm_json(dn));
    j["strichartz"] = json::parse(strichartz_json(entries));
    j["sobolev"] = json::parse(sobolev_json(ss));
    j["potential_integral"] = json::parse(potential_integral_json(pi));
    c.out.write("diagnostics.json", j.dump(2));
    c.out.write_with("decay.csv", [&](std::ostream& os) { write_series_csv(os, "Q", rep.t, rep.Q); });
    c.out.write_with("sup_decay.csv", [&](std::ostream& os) { write_series_csv(os, "norm", rep.t, rep.t_sup); });
    c.out.write_with("sobolev.csv", [&](std::ostream& os) { write_series_csv(os, "norm", ss.t, ss.norm); });
    if (c.reader.boolean(o, c.opt("assert"), true)) {
        c.check(rep.Q_verdict.bounded, "Q(t) grew: " + fmt(rep.Q_verdict.second_half_max) + " vs " +
                                           fmt(rep.Q_verdict.first_half_max));
        c.check(rep.t_sup_verdict.bounded, "<t> sup|u| grew");
        c.check(ss.verdict.bounded, "higher norm grew");
        c.check(pi.tail_le_head, "potential integral tail exceeds head");
    }
}

void run_hardy(Context& c) {
    const auto& o = c.opts();
    const std::size_t trials = c.reader.count(o, c.opt("trials"), 10000);
    const auto lambdas = c.reader.numbers(o, c.opt("lambdas"), {0.5, 0.75, 1.5, 2.0});
    const std::size_t quad = c.reader.count(o, c.opt("num_quad"), 513);
    for (double l : lambdas) {
        if (!(l > 0.0)) c.reader.fail(c.opt("lambdas"), "dilation factors must be positive");
    }
    const auto suite = hardy_suite(trials, c.cfg.seed, c.cfg.params.n, lambdas, quad);
    c.out.write("hardy.json", hardy_suite_json(suite));
    c.check(suite.finite, "Hardy ratio bound is not finite");
    c.check(suite.stable, "Hardy constant varies by " + fmt(suite.max_variation) + " under dilation");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    for (const auto& [name, k] : kind_names()) {
        if (k == kind) return name;
    }
    return "unknown";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto pos = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < pos; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        if (const auto at = what.find("parse error"); at != std::string::npos) what = what.substr(at);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                          what + ")");
    }
    const Reader rd(text, source);
    if (!doc.is_object()) throw ConfigError(source + ":1: config must be a JSON object");

    ExperimentConfig c;
    c.raw = doc;
    c.source = source;
    const json& kind = rd.require(doc, {"experiment"});
    bool known = false;
    for (const auto& [name, k] : kind_names()) {
        if (kind == name) {
            c.kind = k;
            known = true;
        }
    }
    if (!known) {
        std::string list;
        for (const auto& [name, k] : kind_names()) list += (list.empty() ? "" : ", ") + name;
        rd.fail({"experiment"}, "unknown experiment " + kind.dump() + " (expected one of " + list + ")");
    }

    const json& n = rd.require(doc, {"params", "n"});
    if (!n.is_number_integer()) rd.fail({"params", "n"}, "field 'params.n' must be an integer");
    const double p = rd.number(rd.require(doc, {"params", "p"}), {"params", "p"});
    c.params = Params{n.get<int>(), p, rd.string(doc, {"params", "label"}, "")};
    try {
        c.params.validate();
    } catch (const Error& e) {
        rd.fail({"params"}, e.what());
    }

    c.r_max = rd.positive(doc, {"grid", "r_max"}, 14.0);
    if (!(c.r_max > 1.0)) rd.fail({"grid", "r_max"}, "grid.r_max must exceed 1");
    c.h = rd.positive(doc, {"grid", "h"}, 0.01);
    if (c.h > 0.25 * (c.r_max - 1.0)) rd.fail({"grid", "h"}, "grid.h is too coarse for the interval");

    c.t_end = rd.number(doc, {"time", "t_end"}, 1.0);
    if (!(c.t_end >= 0.0)) rd.fail({"time", "t_end"}, "time.t_end must be nonnegative");
    const bool has_dt = rd.find(doc, {"time", "dt"}) != nullptr;
    const bool has_cfl = rd.find(doc, {"time", "cfl"}) != nullptr;
    if (has_dt && has_cfl) rd.fail({"time"}, "give time.dt or time.cfl, not both");
    if (has_cfl && rd.number(doc, {"time", "cfl"}, 0.5) > 0.9) rd.fail({"time", "cfl"}, "time.cfl must not exceed 0.9");
    c.dt = has_dt ? rd.positive(doc, {"time", "dt"}, 0.0) : rd.positive(doc, {"time", "cfl"}, 0.5) * c.h;

    c.u0 = rd.profile(doc, {"data", "u0"}, "zero");
    c.u1 = rd.profile(doc, {"data", "u1"}, "zero");
    c.output = rd.string(doc, {"output"}, to_string(c.kind));
    if (c.output.empty() || fs::path(c.output).is_absolute() || c.output.find("..") != std::string::npos) {
        rd.fail({"output"}, "output must be a relative directory name");
    }
    c.output_root = rd.string(doc, {"output_root"}, ".");
    if (const json* s = rd.find(doc, {"seed"})) {
        if (!s->is_number_integer() || s->get<long long>() < 0) rd.fail({"seed"}, "seed must be a nonnegative integer");
        c.seed = s->get<std::uint64_t>();
    }
    if (const json* o = rd.find(doc, {"options"})) {
        if (!o->is_object()) rd.fail({"options"}, "options must be an object");
        c.options = *o;
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string());
}

fs::path output_directory(const ExperimentConfig& c) {
    const char* env = std::getenv("WAVELAB_OUT");
    const fs::path root = env && *env ? fs::path(env) : fs::path(c.output_root);
    return root / c.output;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return fnv1a(ss.str());
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
    RunOutcome r;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        r.exit_code = kExitConfig;
        r.error = "cannot create output directory " + dir.string() + ": " + ec.message();
        return r;
    }
    Outputs out(dir);
    const std::string text = cfg.raw.dump(2);
    Context c{cfg, Reader(text, cfg.source), out, r.failures};
    const auto start = std::chrono::steady_clock::now();
    try {
        switch (cfg.kind) {
            case ExperimentKind::RunRadial: run_radial(c); break;
            case ExperimentKind::RunPenrose: run_penrose(c); break;
            case ExperimentKind::RunPerturb: run_perturb(c); break;
            case ExperimentKind::CheckCompat: run_compat(c); break;
            case ExperimentKind::Diagnose: run_diagnose(c); break;
            case ExperimentKind::HardyTest: run_hardy(c); break;
            case ExperimentKind::Sweep: run_sweep(c); break;
        }
        r.exit_code = r.failures.empty() ? kExitPass : kExitAssertion;
    } catch (const ConfigError& e) {
        r.exit_code = kExitConfig;
        r.error = e.what();
    } catch (const SolverError& e) {
        r.exit_code = kExitSolver;
        r.error = e.what();
    } catch (const DomainError& e) {
        r.exit_code = kExitConfig;
        r.error = e.what();
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.exit_code == kExitSolver) {
        json f{{"experiment", to_string(cfg.kind)}, {"error", r.error}};
        out.write("failure.json", f.dump(2));
    }
    r.files = out.files();

    json m;
    m["config"] = cfg.raw;
    m["config_hash"] = hex64(fnv1a(cfg.raw.dump()));
    m["code_version"] = WAVELAB_VERSION;
    m["wall_time_s"] = r.wall_time;
    m["exit_code"] = r.exit_code;
    m["failures"] = r.failures;
    m["error"] = r.error.empty() ? json(nullptr) : json(r.error);
    json files = json::array();
    for (const auto& name : r.files) files.push_back({{"file", name}, {"fnv1a", hex64(fnv1a_file(dir / name))}});
    m["outputs"] = files;
    std::ofstream(dir / "manifest.json", std::ios::binary) << m.dump(2) << '\n';
    return r;
}

VerifyOutcome verify_manifest(const fs::path& manifest, const fs::path& scratch) {
    std::ifstream f(manifest, std::ios::binary);
    if (!f) throw ConfigError(manifest.string() + ": cannot open manifest");
    json m;
    try {
        m = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(manifest.string() + ": malformed manifest (" + e.what() + ")");
    }
    if (!m.contains("config") || !m.contains("outputs") || !m["outputs"].is_array()) {
        throw ConfigError(manifest.string() + ": manifest lacks config or outputs");
    }
    const ExperimentConfig cfg = parse_config(m["config"].dump(2), manifest.string() + "#config");
    const RunOutcome r = run_experiment(cfg, scratch);
    VerifyOutcome v;
    if (m.contains("exit_code") && m["exit_code"] != r.exit_code) {
        v.mismatches.push_back("exit code " + std::to_string(r.exit_code) + " differs from recorded " +
                               m["exit_code"].dump());
    }
    for (const auto& entry : m["outputs"]) {
        const std::string name = entry.value("file", "");
        const std::string want = entry.value("fnv1a", "");
        ++v.checked;
        if (!fs::exists(scratch / name)) {
            v.mismatches.push_back(name + ": not produced");
            continue;
        }
        const std::string got = hex64(fnv1a_file(scratch / name));
        if (got != want) v.mismatches.push_back(name + ": hash " + got + " differs from recorded " + want);
    }
    v.exit_code = v.mismatches.empty() ? kExitPass : kExitAssertion;
    return v;
}

}  // namespace wavelab
