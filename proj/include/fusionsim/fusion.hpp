#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fusionsim/errors.hpp"

namespace fusionsim::fusion {

using Pair = std::array<double, 2>;

/// Receiver knowledge at time t: newest delivered sample (time, value) of each source.
struct FusionState {
    double t = 0.0;
    double s1 = 0.0;
    double v1 = 0.0;
    double s2 = 0.0;
    double v2 = 0.0;
    double rho = 0.0;

    double age1() const noexcept { return t - s1; }
    double age2() const noexcept { return t - s2; }
};

/// Weights of the stale own sample (g) and the fresher sample of the other source (q).
struct FusionWeights {
    double g = 1.0;
    double q = 0.0;
};

/// First and raw second moment of the channel delay, E[Y] and E[Y^2].
struct DelayMoments {
    double mu_y = 0.0;
    double sigma_y = 0.0;

    DelayMoments() = default;
    DelayMoments(double mu, double sigma) : mu_y(mu), sigma_y(sigma) {
        // sigma >= mu^2 up to rounding of the caller's sums
        if (!(mu >= 0.0) || !(sigma >= mu * mu * (1.0 - 1e-12)))
            throw InputDomainError("delay moments need mu_y >= 0 and sigma_y >= mu_y^2");
    }
};

namespace detail {
inline void require_age_state(double t, double age1, double age2) {
    if (!(age1 >= 0.0 && age2 >= 0.0 && age1 <= t && age2 <= t))
        throw InputDomainError("ages must satisfy 0 <= age <= t");
}
} // namespace detail

/**
 * Fusion weights for estimating a source whose own sample is older
 * (age delta_own) than the other source's sample (age delta_other).
 */
inline FusionWeights fusion_weights(double t, double rho, double delta_own, double delta_other) {
    if (!(delta_own > delta_other))
        throw ContractError("fusion weights are defined only when the own sample is staler");
    if (!(delta_other >= 0.0) || !(t >= delta_own))
        throw InputDomainError("fusion weights need 0 <= delta_other < delta_own <= t");
    const double r2 = rho * rho;
    const double denom = (t - delta_other) - r2 * (t - delta_own);
    if (!(denom > 0.0))
        throw SingularityError("fusion weight denominator vanished");
    return {(1.0 - r2) * (t - delta_other) / denom, rho * (delta_own - delta_other) / denom};
}

/// MMSE estimate of (W1_t, W2_t). A source at least as fresh as the other keeps its own sample.
inline Pair mmse_estimate(const FusionState& s) {
    const double a1 = s.age1();
    const double a2 = s.age2();
    detail::require_age_state(s.t, a1, a2);
    Pair est{s.v1, s.v2};
    if (a1 > a2) {
        const auto w = fusion_weights(s.t, s.rho, a1, a2);
        est[0] = w.g * s.v1 + w.q * s.v2;
    } else if (a2 > a1) {
        const auto w = fusion_weights(s.t, s.rho, a2, a1);
        est[1] = w.g * s.v2 + w.q * s.v1;
    }
    return est;
}

/**
 * E[W^target_t | W1_{t1} = y1, W2_{t2} = y2] by direct Gaussian conditioning.
 *
 * Builds the cross covariance and the 2x2 observation covariance from the
 * Wiener construction and solves the system with partial pivoting. Rank
 * deficient observation covariances fall back to the pseudo-inverse.
 */
inline double gaussian_conditioning_oracle(double t, double rho, double t1, double t2, double y1,
                                           double y2, int target) {
    if (target != 1 && target != 2)
        throw InputDomainError("target must be 1 or 2");
    if (!(t1 >= 0.0 && t2 >= 0.0 && t1 <= t && t2 <= t))
        throw InputDomainError("observation times must lie in [0, t]");

    const double tmin = std::min(t1, t2);
    const double a = t1, b = rho * tmin, d = t2; // [[a, b], [b, d]]
    const double cx1 = target == 1 ? t1 : rho * t1;
    const double cx2 = target == 1 ? rho * t2 : t2;

    const double scale = std::max({a, d, 1e-300});
    const double det = a * d - b * b;
    if (std::abs(det) > 1e-13 * scale * scale) {
        double x1, x2;
        if (std::abs(a) >= std::abs(b)) {
            const double m = b / a;
            x2 = (y2 - m * y1) / (d - m * b);
            x1 = (y1 - b * x2) / a;
        } else {
            const double m = a / b;
            x2 = (y1 - m * y2) / (b - m * d);
            x1 = (y2 - d * x2) / b;
        }
        return cx1 * x1 + cx2 * x2;
    }

    // Rank <= 1. Sigma+ = Sigma / trace^2 for a rank-one symmetric PSD matrix.
    const double tr = a + d;
    if (tr == 0.0) {
        if (y1 != 0.0 || y2 != 0.0)
            throw SingularityError("observations at time 0 must be zero");
        return 0.0;
    }
    const double inv = 1.0 / (tr * tr);
    const double x1 = inv * (a * y1 + b * y2);
    const double x2 = inv * (b * y1 + d * y2);
    const double r1 = a * x1 + b * x2 - y1;
    const double r2 = b * x1 + d * x2 - y2;
    const double tol = 1e-9 * std::max({1.0, std::abs(y1), std::abs(y2)});
    if (std::abs(r1) > tol || std::abs(r2) > tol)
        throw SingularityError("observation outside the range of a singular covariance");
    return cx1 * x1 + cx2 * x2;
}

/// Conditional expected squared error of the MMSE estimate at time t given ages delta1, delta2.
inline double expected_mse(double t, double rho, double delta1, double delta2) {
    detail::require_age_state(t, delta1, delta2);
    const double gap = delta1 - delta2;
    if (gap == 0.0)
        return delta1 + delta2;
    const double r2 = rho * rho;
    const double num = r2 * gap * gap;
    if (num == 0.0)
        return delta1 + delta2;
    const double denom =
        (1.0 - r2) * t + r2 * std::max(delta1, delta2) - std::min(delta1, delta2);
    if (!(denom > 0.0))
        throw InternalInvariantError("expected_mse denominator must be positive");
    return delta1 + delta2 - num / denom;
}

/// Information-adjusted age gap between sample times x and y.
inline double q_rho(double x, double y, double rho) {
    if (!(x >= 0.0 && y >= 0.0))
        throw InputDomainError("q_rho needs non-negative sample times");
    const double gap = std::abs(x - y);
    if (gap == 0.0)
        return 0.0;
    const double r2 = rho * rho;
    return gap * (1.0 - r2 * gap / (std::max(x, y) - r2 * std::min(x, y)));
}

/**
 * Expected integrated MSE over one inter-delivery interval [D_i, D_{i+1}),
 * averaging over the next delay. y_i is the delay of the sample that opened
 * the interval, z_i the wait before the next sample.
 */
inline double interval_cost(double s1, double s2, double y_i, double z_i,
                            const DelayMoments& moments, double rho) {
    if (!(s1 >= 0.0 && s2 >= 0.0 && y_i >= 0.0 && z_i >= 0.0))
        throw InputDomainError("interval_cost arguments must be non-negative");
    const double mu = moments.mu_y;
    return moments.sigma_y + mu * z_i + (z_i + mu) * (2.0 * y_i + z_i + q_rho(s1, s2, rho));
}

} // namespace fusionsim::fusion
