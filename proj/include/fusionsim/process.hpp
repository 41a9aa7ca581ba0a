#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fusionsim/errors.hpp"
#include "fusionsim/random_stream.hpp"

namespace fusionsim::process {

using Pair = std::array<double, 2>;

/// Correlation of the bivariate Wiener source, 0 <= rho <= 1.
class ProcessParams {
public:
    explicit ProcessParams(double rho) : rho_(rho) {
        if (!(rho >= 0.0 && rho <= 1.0))
            throw InputDomainError("rho must lie in [0, 1], got " + std::to_string(rho));
        complement_ = std::sqrt(1.0 - rho * rho);
    }
    double rho() const noexcept { return rho_; }
    /// sqrt(1 - rho^2)
    double complement() const noexcept { return complement_; }

private:
    double rho_;
    double complement_;
};

struct ProcessPath {
    std::vector<double> times;
    std::vector<Pair> values;
};

/**
 * Exact Gaussian increment of (W1, W2) over a step of length dt.
 *
 * W1 is driven by B1 alone; W2 mixes B1 and an independent B2, so each
 * component has variance dt and the pair has covariance rho * dt.
 */
inline Pair sample_increment(const ProcessParams& params, double dt, RandomStream& rng) {
    if (!(dt > 0.0))
        throw InputDomainError("increment step must be positive, got " + std::to_string(dt));
    const double scale = std::sqrt(dt);
    const auto [g1, g2] = rng.normal_pair();
    const double d1 = scale * g1;
    // rho * d1 keeps d2 == d1 bit-for-bit when rho == 1.
    const double d2 = params.rho() * d1 + params.complement() * scale * g2;
    return {d1, d2};
}

inline ProcessPath simulate_path(const ProcessParams& params, std::span<const double> grid,
                                 RandomStream& rng) {
    if (grid.empty() || grid.front() != 0.0)
        throw InputDomainError("path grid must start at 0");
    ProcessPath path;
    path.times.assign(grid.begin(), grid.end());
    path.values.reserve(grid.size());
    path.values.push_back({0.0, 0.0});
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double dt = grid[k] - grid[k - 1];
        if (!(dt > 0.0))
            throw InputDomainError("path grid must be strictly increasing (index " +
                                   std::to_string(k) + ")");
        const Pair inc = sample_increment(params, dt, rng);
        const Pair& prev = path.values.back();
        path.values.push_back({prev[0] + inc[0], prev[1] + inc[1]});
    }
    return path;
}

/// Stored value at an exact grid time. No interpolation.
inline Pair value_at(const ProcessPath& path, double t) {
    const auto it = std::lower_bound(path.times.begin(), path.times.end(), t);
    if (it == path.times.end() || *it != t)
        throw LookupError("time " + std::to_string(t) + " is not a grid point of the path");
    return path.values[static_cast<std::size_t>(it - path.times.begin())];
}

} // namespace fusionsim::process
