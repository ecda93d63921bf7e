#pragma once

// Analytic radial data profiles used by experiments and tests.
//
// Every profile is a template over the scalar type so the same formula serves grid
// sampling (double) and exact boundary jets (Jet).

#include "wavelab/grid.hpp"
#include "wavelab/jet.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace wavelab {

enum class ProfileKind {
    Zero,
    Bump,       // A (r-a)^k (b-r)^k / ((b-a)/2)^{2k} on [a, b], zero elsewhere
    GaussCut,   // A exp(-((r-c)/w)^2) chi(r), chi a C^infinity cutoff supported in [a, b]
    Power,      // A r^s on [a, b] (no cutoff; for Hardy tests and extremal profiles)
};

struct ProfileSpec {
    ProfileKind kind = ProfileKind::Zero;
    double amplitude = 1.0;
    double a = 1.0;
    double b = 3.0;
    double power = 4.0;   // k for Bump, s for Power
    double center = 2.5;  // GaussCut
    double width = 0.5;   // GaussCut
    double ramp = 0.5;    // GaussCut: width of the cutoff transition layers
};

namespace detail {

// C^infinity step: 0 for x <= 0, 1 for x >= 1.
template <class S>
S smooth_step(const S& x) {
    const double x0 = value_of(x);
    if (x0 <= 0.0) return x * 0.0;
    if (x0 >= 1.0) return x * 0.0 + 1.0;
    using std::exp;
    const S one_minus = 1.0 - x;
    const S phi = exp(-1.0 / x);
    const S psi = exp(-1.0 / one_minus);
    return phi / (phi + psi);
}

template <class S>
S ipow(const S& x, int k) {
    S r = x * 0.0 + 1.0;
    for (int i = 0; i < k; ++i) r = r * x;
    return r;
}

}  // namespace detail

template <class S>
S evaluate(const ProfileSpec& spec, const S& r) {
    const double r0 = value_of(r);
    const S zero = r * 0.0;
    switch (spec.kind) {
        case ProfileKind::Zero:
            return zero;
        case ProfileKind::Bump: {
            if (r0 < spec.a || r0 >= spec.b) return zero;
            const int k = static_cast<int>(spec.power);
            const double half = 0.5 * (spec.b - spec.a);
            const double norm = std::pow(half, 2 * k);
            return detail::ipow(r - spec.a, k) * detail::ipow(spec.b - r, k) * (spec.amplitude / norm);
        }
        case ProfileKind::GaussCut: {
            if (r0 <= spec.a || r0 >= spec.b) return zero;
            using std::exp;
            const S z = (r - spec.center) / spec.width;
            const S chi = detail::smooth_step((r - spec.a) / spec.ramp) *
                          detail::smooth_step((spec.b - r) / spec.ramp);
            return exp(-(z * z)) * chi * spec.amplitude;
        }
        case ProfileKind::Power: {
            if (r0 < spec.a || r0 > spec.b) return zero;
            using std::pow;
            return pow(r, spec.power) * spec.amplitude;
        }
    }
    return zero;
}

// Samples the profile on the grid.
Field sample(const ProfileSpec& spec, const RadialGrid& grid);

// Taylor jet of the profile at radius x0 with `size` coefficients.
Jet profile_jet(const ProfileSpec& spec, double x0, std::size_t size);

// Largest radius where the profile can be nonzero.
double profile_support(const ProfileSpec& spec);

// Type-erased radial function with exact jets; implicitly built from a ProfileSpec.
class RadialFunction {
public:
    RadialFunction(const ProfileSpec& spec);  // NOLINT(google-explicit-constructor)
    RadialFunction(std::function<double(double)> value,
                   std::function<Jet(double, std::size_t)> jet, double support);

    double operator()(double r) const { return value_(r); }
    Jet jet(double x0, std::size_t size) const { return jet_(x0, size); }
    double support() const { return support_; }
    Field sample(const RadialGrid& grid) const;

private:
    std::function<double(double)> value_;
    std::function<Jet(double, std::size_t)> jet_;
    double support_ = 1.0;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    ProfileSpec spec;
    // Order of the nonlinear compatibility conditions satisfied by (u0 = profile, u1 = 0)
    // for n = 3, p = 7, computed with the compat module (capped at the testable order 4).
    int compat_order = 0;
};

// Built-in profiles whose name contains `filter` (all of them for an empty filter).
std::vector<CatalogEntry> list_profiles(const std::string& filter = {});

// Catalog preset by name with default parameters; throws ConfigError if unknown.
ProfileSpec preset(const std::string& name);

}  // namespace wavelab
