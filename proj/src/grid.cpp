#include "wavelab/grid.hpp"

#include "wavelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace wavelab {

Field RadialGrid::coordinates() const {
    Field r(num_points);
    for (std::size_t i = 0; i < num_points; ++i) r[i] = this->r(i);
    return r;
}

std::size_t RadialGrid::nearest(double radius) const {
    const double x = std::round((radius - r_min) / h);
    if (x <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(x), num_points - 1);
}

RadialGrid make_grid(double r_max, std::size_t num_points) {
    if (!(r_max > 1.0) || !std::isfinite(r_max)) {
        throw DomainError("make_grid: r_max must exceed the obstacle radius 1, got " +
                          std::to_string(r_max));
    }
    if (num_points < 16) {
        throw DomainError("make_grid: need at least 16 points, got " + std::to_string(num_points));
    }
    RadialGrid g;
    g.r_min = 1.0;
    g.r_max = r_max;
    g.num_points = num_points;
    g.h = (r_max - 1.0) / static_cast<double>(num_points - 1);
    return g;
}

RadialGrid make_grid_with_spacing(double r_max, double h) {
    if (!(h > 0.0)) throw DomainError("make_grid_with_spacing: h must be positive");
    const auto cells = static_cast<std::size_t>(std::llround((r_max - 1.0) / h));
    return make_grid(r_max, cells + 1);
}

RadialState zero_state(const RadialGrid& grid, double t) {
    return RadialState{grid, t, Field(grid.size(), 0.0), Field(grid.size(), 0.0)};
}

void check_shape(const RadialGrid& grid, std::span<const double> f, const char* what) {
    if (f.size() != grid.size()) {
        throw DomainError(std::string(what) + ": field has " + std::to_string(f.size()) +
                          " samples, grid has " + std::to_string(grid.size()));
    }
}

void write_state_csv(std::ostream& out, const RadialState& state) {
    out << "r,u,v\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < state.grid.size(); ++i) {
        out << state.grid.r(i) << ',' << state.u[i] << ',' << state.v[i] << '\n';
    }
}

RadialState read_state_csv(std::istream& in, double t) {
    std::string line;
    if (!std::getline(in, line) || line != "r,u,v") {
        throw DomainError("read_state_csv: expected header 'r,u,v'");
    }
    Field r, u, v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double a = 0, b = 0, c = 0;
        if (!(row >> a >> b >> c)) throw DomainError("read_state_csv: malformed row '" + line + "'");
        r.push_back(a);
        u.push_back(b);
        v.push_back(c);
    }
    if (r.size() < 16) throw DomainError("read_state_csv: too few rows");
    RadialState s{make_grid(r.back(), r.size()), t, std::move(u), std::move(v)};
    return s;
}

}  // namespace wavelab
