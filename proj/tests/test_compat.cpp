#include <doctest.h>

#include "wavelab/compat.hpp"
#include "wavelab/error.hpp"
#include "wavelab/stencil.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <random>

using namespace wavelab;

namespace {

const Params kP = make_params(3, 7.0);

// (r-1)^2 (2-r)^2 on [1, 2], zero beyond
RadialFunction quartic() {
    auto f = [](const auto& r) {
        const auto a = r - 1.0;
        const auto b = 2.0 - r;
        return a * a * b * b;
    };
    return RadialFunction(
        [f](double r) { return r <= 2.0 ? f(r) : 0.0; },
        [f](double x0, std::size_t n) { return f(Jet::variable(x0, n)); }, 2.0);
}

RadialFunction zero() { return ProfileSpec{}; }

}  // namespace

TEST_CASE("zero data pass at every order") {
    const auto g = make_grid(3.0, 201);
    const auto rep = linear_sequence(g, 3, zero(), zero(), {zero(), zero(), zero()}, 4);
    CHECK(rep.sequence.size() == 5);
    CHECK(rep.passed());
    for (const auto& f : rep.sequence) {
        for (double x : f) CHECK(x == 0.0);
    }
}

TEST_CASE("Dirichlet violation fails at j = 0") {
    const auto g = make_grid(3.0, 201);
    const RadialFunction u0([](double r) { return (3.0 - r) * (3.0 - r); },
                            [](double x0, std::size_t n) {
                                const Jet r = Jet::variable(x0, n);
                                return (3.0 - r) * (3.0 - r);
                            },
                            3.0);
    const auto rep = linear_sequence(g, 3, u0, zero(), {zero()}, 2);
    CHECK_FALSE(rep.verdicts[0]);
    CHECK(rep.boundary_values[0] == doctest::Approx(4.0));
    CHECK(rep.satisfied_order() == 0);
}

TEST_CASE("linear sequence h_2 = Lap u0 against the exact Laplacian") {
    const auto g = make_grid(3.0, 401);
    const auto rep = linear_sequence(g, 3, quartic(), zero(), {zero()}, 2);
    CHECK(rep.verdicts[0]);
    CHECK(rep.verdicts[1]);
    CHECK_FALSE(rep.verdicts[2]);
    // u0'' + (2/r) u0' at r = 1 is 2
    CHECK(rep.boundary_values[2] == doctest::Approx(2.0).epsilon(1e-13));
    // interior values against u0'' + 2 u0'/r written out by hand
    for (double r : {1.25, 1.5, 1.75}) {
        const double a = r - 1.0;
        const double b = 2.0 - r;
        const double d1 = 2 * a * b * b - 2 * a * a * b;
        const double d2 = 2 * b * b - 8 * a * b + 2 * a * a;
        CHECK(rep.sequence[2][g.nearest(r)] == doctest::Approx(d2 + 2.0 * d1 / r).epsilon(1e-3));
    }
}

TEST_CASE("linear sequence needs the F derivatives") {
    const auto g = make_grid(3.0, 201);
    CHECK_THROWS_AS(linear_sequence(g, 3, zero(), zero(), {zero()}, 3), DomainError);
    CHECK_THROWS_AS(linear_sequence(g, 3, zero(), zero(), {}, 5), DomainError);
}

TEST_CASE("nonlinear sequence with u0 = 0") {
    const auto g = make_grid(4.0, 301);
    const ProfileSpec gs = preset("gauss_cut");
    const auto rep = nonlinear_sequence(g, kP, zero(), gs, 4);
    const Field lap_g = RadialLaplacian(g, 3).apply_all(sample(gs, g));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(rep.sequence[2][i] == 0.0);
        CHECK(rep.sequence[3][i] == lap_g[i]);
        CHECK(rep.sequence[4][i] == 0.0);
    }
    CHECK(rep.passed());
}

TEST_CASE("Faa di Bruno terms against the hand-expanded chain rule") {
    const double p = 7.0;
    auto f1 = [&](double s) { return -p * std::pow(std::abs(s), p - 1); };
    auto f2 = [&](double s) { return -p * (p - 1) * std::pow(std::abs(s), p - 2) * (s < 0 ? -1.0 : 1.0); };
    auto f3 = [&](double s) { return -p * (p - 1) * (p - 2) * std::pow(std::abs(s), p - 3); };
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> psi{U(rng), U(rng), U(rng), U(rng)};
        const double s = psi[0];
        CHECK(time_derivative_of_force(psi, 0, p, 1.0) == doctest::Approx(-std::pow(std::abs(s), p - 1) * s));
        CHECK(time_derivative_of_force(psi, 1, p, 1.0) == doctest::Approx(f1(s) * psi[1]));
        CHECK(time_derivative_of_force(psi, 2, p, 1.0) ==
              doctest::Approx(f2(s) * psi[1] * psi[1] + f1(s) * psi[2]));
        CHECK(time_derivative_of_force(psi, 3, p, 1.0) ==
              doctest::Approx(f3(s) * std::pow(psi[1], 3) + 3 * f2(s) * psi[1] * psi[2] + f1(s) * psi[3]));
    }
}

TEST_CASE("nonlinear sequence rejects p <= N and out-of-range orders") {
    const auto g = make_grid(3.0, 201);
    CHECK_THROWS_AS(nonlinear_sequence(g, make_params(3, 3.0), zero(), zero(), 3), DomainError);
    CHECK_THROWS_AS(nonlinear_sequence(g, kP, zero(), zero(), 5), DomainError);
    CHECK_THROWS_AS(nonlinear_sequence(g, kP, zero(), zero(), 0), DomainError);
}

TEST_CASE("linear and nonlinear sequences coincide with the force switched off") {
    const auto g = make_grid(4.0, 301);
    ProfileSpec b = preset("bump4");
    b.amplitude = 2.0;
    const ProfileSpec c = preset("gauss_cut");
    const auto lin = linear_sequence(g, 3, b, c, {zero(), zero(), zero()}, 4);
    const auto nl = nonlinear_sequence(g, kP, b, c, 4, 0.0);
    for (int j = 0; j <= 4; ++j) CHECK(lin.sequence[j] == nl.sequence[j]);
    CHECK(lin.boundary_values == nl.boundary_values);
}

TEST_CASE("catalog compat orders") {
    const auto all = list_profiles();
    CHECK(all.size() == 4);
    auto order = [&](const std::string& name) {
        for (const auto& e : all) {
            if (e.name == name) return e.compat_order;
        }
        return -1;
    };
    CHECK(order("bump4") == 3);
    CHECK(order("gauss_cut") == 4);
    CHECK(order("poly_bc") == 1);
    CHECK(order("zero") == 4);
    CHECK(list_profiles("bump").size() == 1);
    CHECK(list_profiles("nope").empty());
    CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("strong condition screen") {
    ProfileSpec away{ProfileKind::GaussCut, 1.0, 1.5, 4.0, 0.0, 2.5, 0.5, 0.5};
    CHECK(strong_condition_check(away, zero(), 4, 3));
    // u0(1) = 0 with u0'(1) != 0
    const RadialFunction linear_edge([](double r) { return r <= 2.0 ? (r - 1.0) * (2.0 - r) : 0.0; },
                                     [](double x0, std::size_t n) {
                                         const Jet r = Jet::variable(x0, n);
                                         return (r - 1.0) * (2.0 - r);
                                     },
                                     2.0);
    CHECK_FALSE(strong_condition_check(linear_edge, zero(), 1, 3));
    // bump4 vanishes to order 3: enough for N = 2 when n = 3 (derivatives up to 3)
    CHECK(strong_condition_check(preset("bump4"), zero(), 2, 3));
    CHECK_FALSE(strong_condition_check(preset("bump4"), zero(), 3, 3));
}

TEST_CASE("compat report json") {
    const auto g = make_grid(3.0, 201);
    const auto rep = nonlinear_sequence(g, kP, preset("bump4"), zero(), 4);
    const auto j = nlohmann::json::parse(to_json(rep));
    CHECK(j["order"] == 4);
    CHECK(j["verdicts"].size() == 5);
    CHECK(j["verdicts"][4] == false);
    CHECK(j["tolerance"] == 1e-8);
}

TEST_CASE("time-derivative oracle converges to the sequence at second order") {
    const auto g = make_grid_with_spacing(6.0, 0.01);
    ProfileSpec a = preset("bump4");
    a.amplitude = 1.5;
    ProfileSpec b = preset("gauss_cut");
    b.amplitude = 0.7;
    const auto rep = nonlinear_sequence(g, kP, a, b, 3);
    auto errors = [&](double dt) {
        const auto o = time_derivative_oracle(g, kP, a, b, dt);
        std::array<double, 4> e{};
        for (std::size_t j = 0; j < 4; ++j) {
            for (std::size_t i = 1; i + 1 < g.size(); ++i) e[j] = std::max(e[j], std::abs(o[j][i] - rep.sequence[j][i]));
        }
        return e;
    };
    const auto coarse = errors(2e-3);
    const auto fine = errors(1e-3);
    CHECK(coarse[0] == 0.0);
    CHECK(coarse[1] == 0.0);
    for (std::size_t j = 2; j < 4; ++j) {
        CHECK(fine[j] > 0.0);
        CHECK(coarse[j] / fine[j] == doctest::Approx(4.0).epsilon(0.05));
    }
}
