#pragma once

#include <string>

#include "fusionsim/errors.hpp"
#include "fusionsim/fusion.hpp"

namespace fusionsim::mdp {

/**
 * Correlation-adjusted age gap as a function of the gap and the envelope,
 * h(gamma, M) = q_rho(M, M - gamma) = gamma (1 - rho^2) M / ((1 - rho^2) M + rho^2 gamma).
 */
inline double h_rho(double gamma, double m, double rho) {
    if (!(gamma >= 0.0) || !(m >= gamma))
        throw InputDomainError("h_rho needs m >= gamma >= 0 (gamma=" + std::to_string(gamma) +
                               ", m=" + std::to_string(m) + ")");
    if (gamma == 0.0)
        return 0.0;
    const double r2 = rho * rho;
    const double scaled = (1.0 - r2) * m;
    // Fraction first so that rho = 0 returns gamma bit-for-bit.
    return gamma * (scaled / (scaled + r2 * gamma));
}

/// Per-epoch Dinkelbach cost of the recurrent (gamma, y) model.
inline double cost_mdp3(double gamma, double y, double z, double lambda,
                        const fusion::DelayMoments& mom) {
    if (!(gamma >= 0.0 && y >= 0.0 && z >= 0.0))
        throw InputDomainError("cost_mdp3 needs gamma, y, z >= 0");
    const double mu = mom.mu_y;
    return mom.sigma_y + mu * z - lambda * mu - lambda * z + (z + mu) * (2.0 * y + z + gamma);
}

/// Per-epoch Dinkelbach cost of the (gamma, M, y) model: gamma replaced by h_rho(gamma, M).
inline double cost_mdp2(double gamma, double m, double y, double z, double lambda, double rho,
                        const fusion::DelayMoments& mom) {
    if (!(y >= 0.0 && z >= 0.0))
        throw InputDomainError("cost_mdp2 needs y, z >= 0");
    const double mu = mom.mu_y;
    return mom.sigma_y + mu * z - lambda * mu - lambda * z +
           (z + mu) * (2.0 * y + z + h_rho(gamma, m, rho));
}

} // namespace fusionsim::mdp
