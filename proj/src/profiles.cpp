#include "wavelab/profiles.hpp"

#include "wavelab/compat.hpp"
#include "wavelab/error.hpp"

#include <algorithm>

namespace wavelab {

Field sample(const ProfileSpec& spec, const RadialGrid& grid) {
    Field f(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = evaluate(spec, grid.r(i));
    return f;
}

Jet profile_jet(const ProfileSpec& spec, double x0, std::size_t size) {
    return evaluate(spec, Jet::variable(x0, size));
}

double profile_support(const ProfileSpec& spec) {
    switch (spec.kind) {
        case ProfileKind::Zero:
            return 1.0;
        case ProfileKind::Bump:
        case ProfileKind::GaussCut:
        case ProfileKind::Power:
            return spec.b;
    }
    return spec.b;
}

RadialFunction::RadialFunction(const ProfileSpec& spec)
    : value_([spec](double r) { return evaluate(spec, r); }),
      jet_([spec](double x0, std::size_t size) { return profile_jet(spec, x0, size); }),
      support_(profile_support(spec)) {}

RadialFunction::RadialFunction(std::function<double(double)> value,
                               std::function<Jet(double, std::size_t)> jet, double support)
    : value_(std::move(value)), jet_(std::move(jet)), support_(support) {}

Field RadialFunction::sample(const RadialGrid& grid) const {
    Field f(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = value_(grid.r(i));
    return f;
}

namespace {

std::vector<CatalogEntry> build_catalog() {
    ProfileSpec bump4{ProfileKind::Bump, 1.0, 1.0, 3.0, 4.0};
    ProfileSpec gauss{ProfileKind::GaussCut, 1.0, 1.0, 4.0, 0.0, 2.5, 0.5, 0.5};
    ProfileSpec poly{ProfileKind::Bump, 1.0, 1.0, 3.0, 2.0};
    ProfileSpec zero{};
    std::vector<CatalogEntry> c{
        {"bump4", "(r-1)^4 (3-r)^4 normalized to max 1, supported in [1, 3]", bump4, 0},
        {"gauss_cut", "exp(-((r-2.5)/0.5)^2) times a smooth cutoff on [1, 4]", gauss, 0},
        {"poly_bc", "(r-1)^2 (3-r)^2 normalized; vanishes to second order at r = 1", poly, 0},
        {"zero", "identically zero", zero, 0},
    };
    const Params params = make_params(3, 7.0);
    for (auto& e : c) {
        const double R = std::max(profile_support(e.spec), 2.0) + 1.0;
        const RadialGrid grid = make_grid(R, 401);
        e.compat_order = compat_order(grid, params, e.spec, ProfileSpec{});
    }
    return c;
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> c = build_catalog();
    return c;
}

}  // namespace

std::vector<CatalogEntry> list_profiles(const std::string& filter) {
    std::vector<CatalogEntry> out;
    for (const auto& e : catalog()) {
        if (filter.empty() || e.name.find(filter) != std::string::npos) out.push_back(e);
    }
    return out;
}

ProfileSpec preset(const std::string& name) {
    for (const auto& e : catalog()) {
        if (e.name == name) return e.spec;
    }
    throw ConfigError("unknown profile '" + name + "'");
}

}  // namespace wavelab
