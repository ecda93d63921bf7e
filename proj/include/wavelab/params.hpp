#pragma once

#include <string>

namespace wavelab {

// Problem family: box u + |u|^{p-1} u = 0 outside the unit ball of R^n.
struct Params {
    int n = 3;
    double p = 7.0;
    std::string label;

    // Throws DomainError unless n >= 3 and p > 1.
    void validate() const;

    // Stronger entry-point checks used by individual modules.
    void require_p_at_least(double bound, const char* who) const;
};

Params make_params(int n, double p, std::string label = {});

// N0 = floor(n/2) + 1, the smoothness index of the weighted data norm.
int smoothness_index(int n);

}  // namespace wavelab
