#pragma once

// Truncated Taylor series ("jets") about a point x0: c[k] = f^{(k)}(x0) / k!.
//
// Used to evaluate boundary traces of compatibility sequences exactly: the analytic data
// profiles are templated on the scalar type, so instantiating them with Jet gives the
// derivatives at r = 1 without finite-difference truncation error.

#include <cstddef>
#include <vector>

namespace wavelab {

class Jet {
public:
    Jet() = default;
    Jet(std::size_t size, double value);  // constant
    static Jet variable(double x0, std::size_t size);

    std::size_t size() const { return c_.size(); }
    double operator[](std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }
    double& operator[](std::size_t k) { return c_[k]; }
    double value() const { return c_.empty() ? 0.0 : c_[0]; }

    // k-th derivative at x0 (k! c[k]).
    double derivative(std::size_t k) const;

    // d/dx; one fewer coefficient.
    Jet differentiate() const;

    // Index of the first nonzero coefficient, or size() for the zero jet.
    std::size_t leading_order() const;

    Jet truncated(std::size_t size) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(double s);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) { return a *= -1.0; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s);
    friend Jet operator+(double s, Jet a) { return a + s; }
    friend Jet operator-(Jet a, double s) { return a + (-s); }
    friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
    friend Jet operator/(double s, const Jet& a);

private:
    std::vector<double> c_;
};

Jet exp(const Jet& f);
Jet log(const Jet& f);
// f^q for f(x0) > 0.
Jet pow(const Jet& f, double q);

// |f|^q on the one-sided neighbourhood x >= x0. When f(x0) = 0 the leading power must be
// integral or exceed the jet order; otherwise DomainError (derivative does not exist).
Jet abs_pow(const Jet& f, double q);

// sign(f) |f|^q on x >= x0, same conventions as abs_pow.
Jet signed_pow(const Jet& f, double q);

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

}  // namespace wavelab
