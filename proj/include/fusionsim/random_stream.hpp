#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace fusionsim {

/**
 * Counter-based uniform stream keyed by (seed, stream id).
 *
 * Draw k of a stream is splitmix64(key + (k+1) * golden), so a stream's
 * output never depends on how many draws other streams have made.
 * Normals come from Box-Muller on consecutive uniforms.
 */
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id),
          key_(mix(seed ^ mix(stream_id + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix(key_ + counter_ * kGolden);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Two independent standard normals.
    std::pair<double, double> normal_pair() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        auto [a, b] = normal_pair();
        spare_ = b;
        has_spare_ = true;
        return a;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream ids used by the simulation harness for one replication.
namespace streams {
inline constexpr std::uint64_t kDelay = 0;
inline constexpr std::uint64_t kPath = 1;
inline constexpr std::uint64_t kScheduler = 2;
inline constexpr std::uint64_t kTuning = 3;
inline constexpr std::uint64_t kPerReplication = 16;

inline constexpr std::uint64_t id(std::uint64_t replication, std::uint64_t purpose) {
    return replication * kPerReplication + purpose;
}
} // namespace streams

} // namespace fusionsim
