#include <doctest.h>

#include "wavelab/error.hpp"
#include "wavelab/penrose.hpp"
#include "wavelab/profiles.hpp"
#include "wavelab/radial.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace wavelab;

namespace {

constexpr double kPi = std::numbers::pi;
const Params kP = make_params(3, 7.0);

RadialState bump_state(const RadialGrid& g, double amplitude) {
    ProfileSpec s = preset("bump4");
    s.amplitude = amplitude;
    RadialState st = zero_state(g);
    st.u = sample(s, g);
    return st;
}

DualResult dual_run(double h, std::size_t N, double T1) {
    DualOptions o;
    o.h = h;
    o.N = N;
    o.T_end = T1;
    return dual_representation(preset("bump4"), ProfileSpec{}, kP, o);
}

double linear_flux_residual(std::size_t N) {
    const auto g = make_grid_with_spacing(8.0, 0.0025);
    const auto cg = make_compact_grid(N);
    CompactState c0 = transform_initial(bump_state(g, 1.0), cg, kP);
    c0.coupling = 0.0;
    const auto run = evolve_compact(c0, 1.0, 0.4 * cg.d_alpha);
    return flux_identity_residual(run.history);
}

}  // namespace

TEST_CASE("penrose map examples") {
    const auto a = to_penrose(0.0, 1.0);
    CHECK(a.T == 0.0);
    CHECK(a.alpha == doctest::Approx(kPi / 2).epsilon(1e-15));
    const auto b = to_penrose(0.0, 3.0);
    CHECK(b.alpha == doctest::Approx(2 * std::atan(3.0)).epsilon(1e-15));
    const auto c = to_penrose(1.0, 1.0);
    CHECK(c.T == doctest::Approx(std::atan(2.0)).epsilon(1e-15));
    CHECK(c.alpha == doctest::Approx(std::atan(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(to_penrose(0.0, 0.0), DomainError);

    const auto back = from_penrose({0.0, kPi / 2});
    CHECK(back.t == doctest::Approx(0.0));
    CHECK(back.r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(from_penrose({kPi / 2, kPi}), DomainError);
}

TEST_CASE("map roundtrip and conformal factor identity on a lattice") {
    double worst_rt = 0.0, worst_w = 0.0;
    for (int i = 0; i < 100; ++i) {
        for (int k = 0; k < 100; ++k) {
            const double t = -10.0 + 20.0 * i / 99.0;
            const double r = 0.05 + 10.0 * k / 99.0;
            const auto pt = to_penrose(t, r);
            const auto x = from_penrose(pt);
            const double scale = std::max(1.0, std::abs(t) + r);
            worst_rt = std::max(worst_rt, (std::abs(x.t - t) + std::abs(x.r - r)) / scale);
            worst_w = std::max(worst_w, std::abs(omega(pt) - omega_physical(t, r)));
        }
    }
    CHECK(worst_rt <= 1e-12);
    CHECK(worst_w <= 1e-12);
    CHECK(omega({0.0, kPi / 2}) == doctest::Approx(1.0));
    CHECK(omega_physical(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(omega({0.0, 0.0}) == 2.0);
    CHECK(omega_physical(0.0, 0.0) == 2.0);
}

TEST_CASE("boundary curves") {
    CHECK(boundary_alpha(0.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(boundary_time(kPi / 2) == doctest::Approx(0.0));
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double T = 0.01 + (kPi - 0.02) * i / 9999.0;
        worst = std::max(worst, std::abs(boundary_time(boundary_alpha(T)) - T));
    }
    CHECK(worst <= 1e-12);
    CHECK(boundary_time_slope(kPi / 4) == doctest::Approx(-std::numbers::sqrt2).epsilon(1e-14));
    bool steep = true;
    for (int i = 1; i <= 1000; ++i) {
        const double a = (kPi / 2) * i / 1001.0;
        steep = steep && boundary_time_slope(a) < -1.0;
    }
    CHECK(steep);
    CHECK_THROWS_AS(boundary_time_slope(kPi / 2), DomainError);
    // the curve is the image of r = 1
    for (double t : {0.2, 1.0, 5.0}) {
        const auto pt = to_penrose(t, 1.0);
        CHECK(boundary_alpha(pt.T) == doctest::Approx(pt.alpha).epsilon(1e-13));
    }
    const double e = 1e-6;
    for (double T : {0.3, 1.5, 2.8}) {
        CHECK(boundary_alpha_rate(T) ==
              doctest::Approx((boundary_alpha(T + e) - boundary_alpha(T - e)) / (2 * e)).epsilon(1e-7));
    }
}

TEST_CASE("conformal power") {
    CHECK(conformal_power(kP) == 4.0);
    CHECK_THROWS_AS(conformal_power(make_params(3, 3.0)), DomainError);
}

TEST_CASE("compact rhs: zero data and the switched-off region") {
    const auto cg = make_compact_grid(200);
    CompactState z;
    z.grid = cg;
    z.T = 0.7;
    z.params = kP;
    z.nu = 4.0;
    z.U.assign(cg.size(), 0.0);
    z.W.assign(cg.size(), 0.0);
    const auto r0 = compact_rhs(z);
    for (std::size_t j = 0; j < cg.size(); ++j) CHECK(r0.dW[j] == 0.0);

    CompactState one = z;
    for (std::size_t j = 0; j < cg.size(); ++j) one.U[j] = 0.5;
    CompactState lin = one;
    lin.coupling = 0.0;
    const auto a = compact_rhs(one);
    const auto b = compact_rhs(lin);
    const CompactSolver solver(cg, kP);
    const auto cut = solver.cut(z.T);
    for (std::size_t j = cut.first; j < cg.size(); ++j) {
        if (z.T + cg.alpha(j) > kPi) {
            CHECK(a.dW[j] == b.dW[j]);
        } else {
            CHECK(a.dW[j] < b.dW[j]);
        }
    }
    for (std::size_t j = 0; j < cut.first; ++j) CHECK(a.dW[j] == 0.0);
}

TEST_CASE("cut cell keeps the first node at least half a cell inside") {
    const CompactSolver solver(make_compact_grid(300), kP);
    for (double T = 0.0; T < 3.0; T += 0.0137) {
        const auto c = solver.cut(T);
        CHECK(c.theta >= 0.5 - 1e-9);
        CHECK(c.theta < 1.5 + 1e-9);
    }
}

TEST_CASE("initial transform") {
    const auto g = make_grid_with_spacing(8.0, 0.005);
    const auto cg = make_compact_grid(800);
    const auto z = transform_initial(zero_state(g), cg, kP);
    for (std::size_t j = 0; j < cg.size(); ++j) CHECK(z.U[j] == 0.0);

    const RadialState s = bump_state(g, 1.0);
    const auto c = transform_initial(s, cg, kP);
    const ProfileSpec spec = preset("bump4");
    double worst = 0.0;
    for (std::size_t j = 0; j < cg.size(); ++j) {
        const double a = cg.alpha(j);
        if (a <= kPi / 2 || std::tan(a / 2) > 7.0) continue;
        const double expect = evaluate(spec, std::tan(a / 2)) / (1.0 + std::cos(a));
        worst = std::max(worst, std::abs(c.U[j] - expect));
    }
    CHECK(worst < 1e-6);

    // roundtrip error is interpolation error: O(h^4) in both grids
    auto roundtrip = [&](double h, std::size_t N) {
        const auto gg = make_grid_with_spacing(8.0, h);
        const RadialState si = bump_state(gg, 1.0);
        const auto back = inverse_initial(transform_initial(si, make_compact_grid(N), kP), gg);
        double e = 0.0;
        for (std::size_t i = 0; i < gg.size(); ++i) {
            if (gg.r(i) > 1.2 && gg.r(i) < 4.0) e = std::max(e, std::abs(back.u[i] - si.u[i]));
        }
        return e;
    };
    const double e1 = roundtrip(0.02, 400);
    const double e2 = roundtrip(0.01, 800);
    CHECK(e1 < 1e-4);
    CHECK(e1 / e2 > 10.0);
}

TEST_CASE("evolve_compact: zero data, CFL and time limit") {
    const auto cg = make_compact_grid(200);
    const auto g = make_grid_with_spacing(8.0, 0.01);
    const auto z = evolve_compact(transform_initial(zero_state(g), cg, kP), 2.0, 0.4 * cg.d_alpha);
    for (double u : z.final_state.U) CHECK(u == 0.0);
    CHECK(z.final_state.T == 2.0);
    CHECK(energy_E(z.final_state) == 0.0);
    CHECK_THROWS_AS(evolve_compact(z.history.front(), kPi, 0.001), DomainError);
    CHECK_THROWS_AS(evolve_compact(z.history.front(), 1.0, 0.6 * cg.d_alpha), SolverError);
}

TEST_CASE("dual representation agrees at second order; energies do not increase") {
    const auto coarse = dual_run(0.01, 500, 1.0);
    const auto fine = dual_run(0.005, 1000, 1.0);
    CHECK(coarse.discrepancy < 5e-3);
    CHECK(coarse.discrepancy / fine.discrepancy >= 3.5);
    CHECK(coarse.max_increase_E <= 0.0);
    CHECK(fine.max_increase_E <= 0.0);
    CHECK(coarse.max_increase_F <= 0.0);
    CHECK(fine.max_increase_F <= 0.0);
    CHECK(fine.flux_residual < coarse.flux_residual);
    CHECK(coarse.compared > 100);
}

TEST_CASE("flux identity residual shrinks under refinement (linear)") {
    const double r1 = linear_flux_residual(500);
    const double r2 = linear_flux_residual(1000);
    const double r3 = linear_flux_residual(2000);
    CHECK(r1 < 2e-3);
    CHECK(r1 / r2 >= 2.0);
    CHECK(r2 / r3 >= 2.0);
}

TEST_CASE("compact output formats") {
    const auto g = make_grid_with_spacing(6.0, 0.01);
    const auto cg = make_compact_grid(64);
    const auto c = transform_initial(bump_state(g, 1.0), cg, kP);
    std::ostringstream os;
    write_compact_csv(os, c);
    CHECK(os.str().rfind("alpha,U,W\n", 0) == 0);
    const auto j = nlohmann::json::parse(compact_sidecar_json(c, 0.2));
    for (const char* k : {"T", "n", "p", "nu", "delta", "Gamma_T"}) CHECK(j.contains(k));
    CHECK(j["nu"].get<double>() == 4.0);
    CHECK_THROWS_AS(energy_F(c, -8.0), DomainError);
}
