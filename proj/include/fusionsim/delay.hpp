#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fusionsim/errors.hpp"
#include "fusionsim/fusion.hpp"
#include "fusionsim/random_stream.hpp"

namespace fusionsim {

/// Finite-support channel delay distribution with cached E[Y] and E[Y^2].
class DelayDistribution {
public:
    DelayDistribution(std::vector<double> values, std::vector<double> probs)
        : values_(std::move(values)), probs_(std::move(probs)) {
        if (values_.empty() || values_.size() != probs_.size())
            throw InputDomainError("delay support and probabilities must be non-empty and equal length");
        double total = 0.0, mu = 0.0, sigma = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            const double y = values_[k], p = probs_[k];
            if (!std::isfinite(y) || y < 0.0)
                throw InputDomainError("delay values must be finite and non-negative");
            if (!(p >= 0.0 && p <= 1.0))
                throw InputDomainError("delay probabilities must lie in [0, 1]");
            if (k > 0 && !(y > values_[k - 1]))
                throw InputDomainError("delay support must be strictly increasing");
            total += p;
            mu += p * y;
            sigma += p * y * y;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InputDomainError("delay probabilities must sum to 1");
        moments_ = fusion::DelayMoments(mu, sigma);
        cdf_.reserve(probs_.size());
        double acc = 0.0;
        for (double p : probs_)
            cdf_.push_back(acc += p);
        cdf_.back() = 1.0;
    }

    /// Y = 0 with probability p, y_max with probability 1 - p.
    static DelayDistribution binary(double p, double y_max) {
        if (!(p >= 0.0 && p <= 1.0))
            throw InputDomainError("binary delay needs 0 <= p <= 1");
        if (!(y_max > 0.0))
            throw InputDomainError("binary delay needs y_max > 0");
        if (p == 1.0)
            return DelayDistribution({0.0}, {1.0});
        if (p == 0.0)
            return DelayDistribution({y_max}, {1.0});
        return DelayDistribution({0.0, y_max}, {p, 1.0 - p});
    }

    static DelayDistribution deterministic(double y) { return DelayDistribution({y}, {1.0}); }

    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return values_.size(); }
    const fusion::DelayMoments& moments() const noexcept { return moments_; }
    double mean() const noexcept { return moments_.mu_y; }
    double stddev() const noexcept {
        return std::sqrt(std::max(0.0, moments_.sigma_y - moments_.mu_y * moments_.mu_y));
    }
    double max_value() const noexcept { return values_.back(); }

    double sample(RandomStream& rng) const {
        if (values_.size() == 1)
            return values_.front();
        const double u = rng.uniform();
        for (std::size_t k = 0; k + 1 < cdf_.size(); ++k)
            if (u < cdf_[k])
                return values_[k];
        return values_.back();
    }

private:
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> cdf_;
    fusion::DelayMoments moments_;
};

} // namespace fusionsim
