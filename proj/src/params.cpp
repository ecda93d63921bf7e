#include "wavelab/params.hpp"

#include "wavelab/error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace wavelab {

void Params::validate() const {
    if (n < 3) throw DomainError("dimension n must be >= 3, got " + std::to_string(n));
    if (!(p > 1.0) || !std::isfinite(p)) {
        throw DomainError("power p must be a finite number > 1, got " + std::to_string(p));
    }
}

void Params::require_p_at_least(double bound, const char* who) const {
    validate();
    if (p < bound) {
        throw DomainError(std::string(who) + " requires p >= " + std::to_string(bound) +
                          ", got p = " + std::to_string(p));
    }
}

Params make_params(int n, double p, std::string label) {
    Params params{n, p, std::move(label)};
    params.validate();
    return params;
}

int smoothness_index(int n) { return n / 2 + 1; }

}  // namespace wavelab
