#include "wavelab/jet.hpp"

#include "wavelab/error.hpp"

#include <algorithm>
#include <cmath>

namespace wavelab {

Jet::Jet(std::size_t size, double value) : c_(size, 0.0) {
    if (size > 0) c_[0] = value;
}

Jet Jet::variable(double x0, std::size_t size) {
    Jet j(size, x0);
    if (size > 1) j.c_[1] = 1.0;
    return j;
}

double Jet::derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return (*this)[k] * f;
}

Jet Jet::differentiate() const {
    Jet d;
    if (c_.size() <= 1) return d;
    d.c_.resize(c_.size() - 1);
    for (std::size_t k = 0; k + 1 < c_.size(); ++k) d.c_[k] = static_cast<double>(k + 1) * c_[k + 1];
    return d;
}

std::size_t Jet::leading_order() const {
    for (std::size_t k = 0; k < c_.size(); ++k) {
        if (c_[k] != 0.0) return k;
    }
    return c_.size();
}

Jet Jet::truncated(std::size_t size) const {
    Jet t;
    t.c_.assign(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(std::min(size, c_.size())));
    return t;
}

Jet& Jet::operator+=(const Jet& o) {
    const std::size_t n = std::min(c_.size(), o.c_.size());
    c_.resize(n);
    for (std::size_t k = 0; k < n; ++k) c_[k] += o.c_[k];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    const std::size_t n = std::min(c_.size(), o.c_.size());
    c_.resize(n);
    for (std::size_t k = 0; k < n; ++k) c_[k] -= o.c_[k];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
}

Jet operator+(Jet a, double s) {
    if (a.size() > 0) a[0] += s;
    return a;
}

Jet operator*(const Jet& a, const Jet& b) {
    const std::size_t n = std::min(a.size(), b.size());
    Jet r(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j <= k; ++j) s += a[j] * b[k - j];
        r[k] = s;
    }
    return r;
}

Jet operator/(const Jet& a, const Jet& b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n == 0) return Jet();
    if (b[0] == 0.0) throw DomainError("Jet division by a series vanishing at the expansion point");
    Jet q(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = a[k];
        for (std::size_t j = 1; j <= k; ++j) s -= b[j] * q[k - j];
        q[k] = s / b[0];
    }
    return q;
}

Jet operator/(double s, const Jet& a) { return Jet(a.size(), s) / a; }

Jet exp(const Jet& f) {
    const std::size_t n = f.size();
    Jet g(n, 0.0);
    if (n == 0) return g;
    g[0] = std::exp(f[0]);
    for (std::size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * f[j] * g[k - j];
        g[k] = s / static_cast<double>(k);
    }
    return g;
}

Jet log(const Jet& f) {
    const std::size_t n = f.size();
    if (n == 0) return Jet();
    if (!(f[0] > 0.0)) throw DomainError("Jet log of a nonpositive value");
    Jet g(n, 0.0);
    g[0] = std::log(f[0]);
    for (std::size_t k = 1; k < n; ++k) {
        double s = f[k];
        for (std::size_t j = 1; j < k; ++j) s -= static_cast<double>(j) * g[j] * f[k - j] / static_cast<double>(k);
        g[k] = s / f[0];
    }
    return g;
}

Jet pow(const Jet& f, double q) {
    const std::size_t n = f.size();
    if (n == 0) return Jet();
    if (!(f[0] > 0.0)) throw DomainError("Jet pow needs a positive base");
    Jet g(n, 0.0);
    g[0] = std::pow(f[0], q);
    for (std::size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
            s += (q * static_cast<double>(j) - static_cast<double>(k - j)) * f[j] * g[k - j];
        }
        g[k] = s / (static_cast<double>(k) * f[0]);
    }
    return g;
}

namespace {

// |f|^q and the sign of the leading coefficient, for f vanishing at x0.
Jet vanishing_abs_pow(const Jet& f, double q, double& sign) {
    const std::size_t n = f.size();
    const std::size_t k0 = f.leading_order();
    sign = 1.0;
    if (k0 >= n) return Jet(n, 0.0);
    const double lead_power = q * static_cast<double>(k0);
    if (lead_power >= static_cast<double>(n)) {
        sign = f[k0] > 0.0 ? 1.0 : -1.0;
        return Jet(n, 0.0);
    }
    if (lead_power != std::floor(lead_power) || q < 1.0) {
        throw DomainError("abs_pow: |f|^q is not differentiable to the requested order at the "
                          "expansion point");
    }
    sign = f[k0] > 0.0 ? 1.0 : -1.0;
    Jet g(n - k0, 0.0);
    for (std::size_t k = k0; k < n; ++k) g[k - k0] = sign * f[k];
    const Jet gq = pow(g, q);
    const auto shift = static_cast<std::size_t>(lead_power);
    Jet out(n, 0.0);
    for (std::size_t k = 0; k + shift < n && k < gq.size(); ++k) out[k + shift] = gq[k];
    return out;
}

}  // namespace

Jet abs_pow(const Jet& f, double q) {
    if (f.size() == 0) return Jet();
    if (q == 0.0) return Jet(f.size(), 1.0);
    if (f[0] > 0.0) return pow(f, q);
    if (f[0] < 0.0) return pow(-f, q);
    double sign = 1.0;
    return vanishing_abs_pow(f, q, sign);
}

Jet signed_pow(const Jet& f, double q) {
    if (f.size() == 0) return Jet();
    if (f[0] > 0.0) return pow(f, q);
    if (f[0] < 0.0) return -pow(-f, q);
    double sign = 1.0;
    Jet a = vanishing_abs_pow(f, q, sign);
    return a * sign;
}

}  // namespace wavelab
