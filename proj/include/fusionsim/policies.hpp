#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "fusionsim/errors.hpp"
#include "fusionsim/network.hpp"
#include "fusionsim/policy_table.hpp"
#include "fusionsim/random_stream.hpp"

namespace fusionsim::policies {

/// Maximum Age First. Ties go to source 1.
inline int maf_schedule(double delta1, double delta2) noexcept { return delta2 > delta1 ? 2 : 1; }

/// Uniform random source.
inline int rand_schedule(RandomStream& rng) noexcept { return rng.uniform() < 0.5 ? 1 : 2; }

/// Threshold water-filling: wait until the mean age reaches T.
inline double wf_wait(double delta1, double delta2, double threshold) noexcept {
    return std::max(0.0, threshold - 0.5 * (delta1 + delta2));
}

inline double zero_wait() noexcept { return 0.0; }

inline double constant_wait(double d) {
    if (!(d >= 0.0))
        throw ConfigError("sampler.d", "constant wait must be non-negative");
    return d;
}

/**
 * Wait prescribed by a solved table at the nearest (gamma, y) node.
 * States outside the grid are clamped to its boundary; `clamp_count`
 * is incremented when that happens.
 */
inline double tabular_wait(double gamma, double y, const PolicyTable& table,
                           std::size_t* clamp_count = nullptr) {
    bool clamped = false;
    const auto g = detail::nearest_node(table.gamma_values, gamma, clamped);
    const auto k = detail::nearest_node(table.y_values, y, clamped);
    if (clamped && clamp_count)
        ++*clamp_count;
    return table.actions[table.index(g, k)];
}

enum class SchedulerKind { Maf, Rand };

class SchedulerPolicy {
public:
    static SchedulerPolicy maf() { return SchedulerPolicy(SchedulerKind::Maf, std::nullopt); }
    static SchedulerPolicy rand(RandomStream rng) { return SchedulerPolicy(SchedulerKind::Rand, rng); }

    SchedulerKind kind() const noexcept { return kind_; }

    int operator()(const network::DeliveryView& view) {
        if (kind_ == SchedulerKind::Maf)
            return maf_schedule(view.ages[0], view.ages[1]);
        return rand_schedule(*rng_);
    }

private:
    SchedulerPolicy(SchedulerKind kind, std::optional<RandomStream> rng) : kind_(kind), rng_(rng) {}

    SchedulerKind kind_;
    std::optional<RandomStream> rng_;
};

struct ZeroWait {};
struct ConstantWait { double d = 0.0; };
struct WaterFilling { double threshold = 0.0; };
struct Tabular { std::shared_ptr<const PolicyTable> table; };

class SamplerPolicy {
public:
    using Kind = std::variant<ZeroWait, ConstantWait, WaterFilling, Tabular>;

    explicit SamplerPolicy(Kind kind) : kind_(std::move(kind)) {
        if (auto* c = std::get_if<ConstantWait>(&kind_); c && !(c->d >= 0.0))
            throw ConfigError("sampler.d", "constant wait must be non-negative");
        if (auto* w = std::get_if<WaterFilling>(&kind_); w && !(w->threshold >= 0.0))
            throw ConfigError("sampler.T", "water-filling threshold must be non-negative");
        if (auto* t = std::get_if<Tabular>(&kind_); t && (!t->table || t->table->node_count() == 0))
            throw ConfigError("sampler.table_path", "tabular sampler needs a non-empty table");
    }

    const Kind& kind() const noexcept { return kind_; }
    /// Lookups that fell outside the table grid.
    std::size_t clamp_count() const noexcept { return clamps_; }

    double operator()(const network::DeliveryView& view) {
        return std::visit(
            [&](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ZeroWait>)
                    return zero_wait();
                else if constexpr (std::is_same_v<K, ConstantWait>)
                    return k.d;
                else if constexpr (std::is_same_v<K, WaterFilling>)
                    return wf_wait(view.ages[0], view.ages[1], k.threshold);
                else
                    return tabular_wait(view.state.gamma, view.state.y, *k.table, &clamps_);
            },
            kind_);
    }

private:
    Kind kind_;
    std::size_t clamps_ = 0;
};

} // namespace fusionsim::policies
