#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "fusionsim/errors.hpp"

namespace fusionsim::policies {

/// Scheduling decision expressed by age rank rather than by source index.
enum class RankAction { Fresher, Staler };

struct CoupledEpoch {
    double gamma = 0.0;
    double m = 0.0;
    double gamma_flipped = 0.0;
    double m_flipped = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/**
 * Runs two copies of the sample-time dynamics on shared delays and waits.
 *
 * The baseline follows `actions` except at `flip_epoch`, where it schedules
 * the fresher (minimum-age) source; the flipped copy schedules the staler
 * (maximum-age) source there. Every other decision is shared by age rank,
 * so the two copies differ in at most one interchange. Entry k holds the
 * state both copies are in at epoch k.
 */
inline std::vector<CoupledEpoch> run_interchange(std::span<const double> delays,
                                                 std::span<const double> waits,
                                                 std::span<const RankAction> actions,
                                                 std::size_t flip_epoch,
                                                 std::array<double, 2> initial_samples = {0.0, 0.0}) {
    if (delays.size() != waits.size() || delays.size() != actions.size())
        throw InputDomainError("delays, waits and actions must have equal length");
    if (flip_epoch >= delays.size())
        throw InputDomainError("flip epoch outside the horizon");

    std::array<double, 2> base = initial_samples;
    std::array<double, 2> flipped = initial_samples;
    auto step = [](std::array<double, 2>& s, RankAction a, double y, double z) {
        const int fresher = s[1] > s[0] ? 1 : 0;
        const int target = a == RankAction::Fresher ? fresher : 1 - fresher;
        s[target] = std::max(s[0], s[1]) + y + z;
    };

    std::vector<CoupledEpoch> out;
    out.reserve(delays.size());
    for (std::size_t k = 0; k < delays.size(); ++k) {
        out.push_back({std::abs(base[0] - base[1]), std::max(base[0], base[1]),
                       std::abs(flipped[0] - flipped[1]), std::max(flipped[0], flipped[1]), delays[k],
                       waits[k]});
        if (k == flip_epoch) {
            step(base, RankAction::Fresher, delays[k], waits[k]);
            step(flipped, RankAction::Staler, delays[k], waits[k]);
        } else {
            step(base, actions[k], delays[k], waits[k]);
            step(flipped, actions[k], delays[k], waits[k]);
        }
    }
    return out;
}

} // namespace fusionsim::policies
