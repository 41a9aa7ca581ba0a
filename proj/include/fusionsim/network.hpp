#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusionsim/delay.hpp"
#include "fusionsim/errors.hpp"
#include "fusionsim/fusion.hpp"
#include "fusionsim/process.hpp"
#include "fusionsim/random_stream.hpp"

namespace fusionsim::network {

/// One transmission: sampled at S_i, delivered at D_i = S_i + Y_i, followed by wait Z_i.
struct EpochRecord {
    std::size_t index = 0;
    int source = 1;
    double sample_time = 0.0;
    double wait = 0.0;
    double delay = 0.0;
    double delivery = 0.0;
    double sample_value = 0.0;
};

/// Receiver state right after delivery i: age gap, envelope, delay and both sample times.
struct EpochState {
    double gamma = 0.0;
    double m = 0.0;
    double y = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;

    static EpochState from_samples(double s1, double s2, double y) {
        return {std::abs(s1 - s2), std::max(s1, s2), y, s1, s2};
    }
    /// Delivery instant that produced this state.
    double delivery() const noexcept { return m + y; }
};

struct RunMetrics {
    double horizon = 0.0;
    double avg_mse_analytic = 0.0;
    std::optional<double> avg_mse_empirical;
    double avg_aoi = 0.0;
    std::size_t epoch_count = 0;
    std::vector<double> equivalence_gap_trace;
};

/// Time averages after the first `epochs` deliveries.
struct Checkpoint {
    std::size_t epochs = 0;
    double horizon = 0.0;
    double avg_mse_analytic = 0.0;
    double avg_aoi = 0.0;
};

/// What a policy sees at a decision instant: the history up to and including this delivery.
struct DeliveryView {
    double time = 0.0;
    std::array<double, 2> ages{0.0, 0.0};
    EpochState state;
    std::span<const EpochRecord> history;
};

template <class S>
concept Scheduler = requires(S s, const DeliveryView& v) {
    { s(v) } -> std::convertible_to<int>;
};

template <class F>
concept Sampler = requires(F f, const DeliveryView& v) {
    { f(v) } -> std::convertible_to<double>;
};

struct EpisodeOptions {
    std::size_t n_epochs = 1;
    /// Grid step for the simulated-path MSE; absent disables it.
    std::optional<double> empirical_dt;
    /// Epoch counts at which time averages are snapshotted.
    std::vector<std::size_t> checkpoints;
};

struct EpisodeResult {
    std::vector<EpochRecord> records;
    /// states[i] is the receiver state right after delivery i.
    std::vector<EpochState> states;
    RunMetrics metrics;
    std::vector<Checkpoint> checkpoints;
};

/**
 * Exact integral of the conditional MSE over [D, D + L), where D is the
 * delivery that produced `state_before`. Within the interval the MSE is
 * 2t - s1 - s2 - R with R fixed, so the integral reduces to
 * L^2 + L (2y + q_rho(s1, s2)).
 */
inline double integrate_epsilon(const EpochState& state_before, double interval_length, double rho) {
    if (!(interval_length >= 0.0))
        throw InputDomainError("interval length must be non-negative");
    const double L = interval_length;
    const double q = fusion::q_rho(state_before.s1, state_before.s2, rho);
    return L * L + L * (2.0 * state_before.y + q);
}

/// Integral of Delta1 + Delta2 over the same interval.
inline double integrate_aoi(const EpochState& state_before, double interval_length) {
    const double L = interval_length;
    return L * L + L * (2.0 * state_before.y + state_before.gamma);
}

/// Ages of both sources right after delivery i, from records 0..i (deliveries are in order).
inline std::array<double, 2> aoi_pair_at_delivery(std::span<const EpochRecord> records, std::size_t i) {
    if (i >= records.size())
        throw LookupError("epoch index outside history");
    const double d = records[i].delivery;
    std::array<double, 2> latest{0.0, 0.0};
    for (const auto& r : records.first(i + 1))
        latest[r.source - 1] = std::max(latest[r.source - 1], r.sample_time);
    return {d - latest[0], d - latest[1]};
}

namespace detail {

/// Streams the true path forward in time and integrates the squared estimation error.
class EmpiricalTracker {
public:
    EmpiricalTracker(double rho, double dt, RandomStream& rng) : params_(rho), dt_(dt), rng_(&rng) {}

    double total() const noexcept { return integral_; }

    /**
     * Integrates over [from, to] with the estimator frozen at `est` (its
     * time field is overwritten per point) and returns W at `sample_time`,
     * which must lie in [from, to]. The value at `to` is the left limit.
     */
    process::Pair walk(double from, double to, double sample_time, fusion::FusionState est) {
        double prev_t = from;
        double prev_err = error_at(from, est);
        process::Pair sampled = w_;
        bool have_sample = sample_time <= from;
        auto visit = [&](double t) {
            advance(t);
            const double e = error_at(t, est);
            integral_ += 0.5 * (prev_err + e) * (t - prev_t);
            prev_t = t;
            prev_err = e;
        };
        while (next_grid_time() <= from)
            ++k_;
        for (;;) {
            const double g = next_grid_time();
            if (!have_sample && sample_time <= std::min(g, to)) {
                visit(sample_time);
                sampled = w_;
                have_sample = true;
            }
            if (g >= to)
                break;
            visit(g);
            ++k_;
        }
        visit(to);
        return sampled;
    }

private:
    double next_grid_time() const noexcept { return static_cast<double>(k_) * dt_; }

    void advance(double t) {
        if (t > t_) {
            const auto inc = process::sample_increment(params_, t - t_, *rng_);
            w_[0] += inc[0];
            w_[1] += inc[1];
            t_ = t;
        }
    }

    double error_at(double t, fusion::FusionState s) const {
        s.t = t;
        const auto est = fusion::mmse_estimate(s);
        const double e1 = w_[0] - est[0];
        const double e2 = w_[1] - est[1];
        return e1 * e1 + e2 * e2;
    }

    process::ProcessParams params_;
    double dt_;
    RandomStream* rng_;
    process::Pair w_{0.0, 0.0};
    double t_ = 0.0;
    double integral_ = 0.0;
    std::size_t k_ = 1;
};

inline void check_delivery_identity(const std::array<double, 2>& ages, const EpochState& st) {
    const double tol = 1e-9 * std::max(1.0, st.m + st.y);
    const double lo = std::min(ages[0], ages[1]);
    if (std::abs(lo - st.y) > tol || std::abs(ages[0] + ages[1] - (2.0 * st.y + st.gamma)) > tol)
        throw InternalInvariantError("delivered-sample age identity violated");
}

} // namespace detail

/**
 * Simulates n_epochs transmissions over the non-preemptive channel.
 *
 * Both sources start with a virtual sample W = 0 at t = 0. Epoch 0 is
 * sampled at t = 0; afterwards S_{i+1} = D_i + Z_i. The scheduler picks
 * a_{i+1} and the sampler picks Z_i at each delivery D_i from the history
 * delivered so far. The horizon is D_{n-1}.
 *
 * When `options.empirical_dt` is set the true path is simulated on the
 * union of the uniform grid and all epoch instants, and the squared error
 * of the fusion estimate is integrated by the trapezoidal rule.
 */
template <Scheduler Sched, Sampler Samp>
EpisodeResult run_episode(double rho, const DelayDistribution& delay, Sched&& scheduler,
                          Samp&& sampler, const EpisodeOptions& options, RandomStream& delay_rng,
                          RandomStream* path_rng = nullptr) {
    if (options.n_epochs < 1)
        throw InputDomainError("n_epochs must be at least 1");
    if (options.empirical_dt && !(*options.empirical_dt > 0.0))
        throw InputDomainError("empirical grid step must be positive");
    if (options.empirical_dt && path_rng == nullptr)
        throw ContractError("empirical MSE needs a path random stream");
    process::ProcessParams params(rho);

    const std::size_t n = options.n_epochs;
    EpisodeResult out;
    out.records.reserve(n);
    out.states.reserve(n);

    std::optional<detail::EmpiricalTracker> tracker;
    if (options.empirical_dt)
        tracker.emplace(params.rho(), *options.empirical_dt, *path_rng);

    auto checkpoint_it = options.checkpoints.begin();
    double mse_integral = 0.0;
    double aoi_integral = 0.0;

    auto as_source = [](int a) {
        if (a != 1 && a != 2)
            throw ContractError("scheduler returned source " + std::to_string(a) + ", expected 1 or 2");
        return a;
    };

    // Receiver knowledge: newest delivered sample per source.
    std::array<double, 2> s{0.0, 0.0};
    std::array<double, 2> v{0.0, 0.0};
    auto fusion_state = [&](double t) { return fusion::FusionState{t, s[0], v[0], s[1], v[1], rho}; };

    // Epoch 0.
    EpochState state = EpochState::from_samples(0.0, 0.0, 0.0);
    int source = as_source(scheduler(DeliveryView{0.0, {0.0, 0.0}, state, {}}));
    double sample_time = 0.0;
    double y = delay.sample(delay_rng);
    double delivery = y;
    double sample_value = 0.0;
    mse_integral += integrate_epsilon(state, delivery, rho);
    aoi_integral += integrate_aoi(state, delivery);
    if (tracker) {
        sample_value = tracker->walk(0.0, delivery, sample_time, fusion_state(0.0))[source - 1];
    }

    for (std::size_t i = 0;; ++i) {
        // Delivery of epoch i.
        s[source - 1] = sample_time;
        v[source - 1] = sample_value;
        out.records.push_back({i, source, sample_time, std::numeric_limits<double>::quiet_NaN(), y,
                               delivery, sample_value});
        state = EpochState::from_samples(s[0], s[1], y);
        out.states.push_back(state);
        const std::array<double, 2> ages{delivery - s[0], delivery - s[1]};
        detail::check_delivery_identity(ages, state);

        if (checkpoint_it != options.checkpoints.end() && *checkpoint_it == i + 1) {
            const double h = delivery;
            out.checkpoints.push_back({i + 1, h, h > 0.0 ? mse_integral / h : 0.0,
                                       h > 0.0 ? aoi_integral / h : 0.0});
            ++checkpoint_it;
        }

        const DeliveryView view{delivery, ages, state, std::span<const EpochRecord>(out.records)};
        const double wait = static_cast<double>(sampler(view));
        if (!(wait >= 0.0))
            throw ContractError("sampler returned a negative or NaN wait");
        out.records.back().wait = wait;
        if (i + 1 == n)
            break;
        const int next_source = as_source(scheduler(view));

        // Epoch i + 1.
        const double next_sample_time = delivery + wait;
        const double next_y = delay.sample(delay_rng);
        const double next_delivery = next_sample_time + next_y;
        const double length = wait + next_y;
        mse_integral += integrate_epsilon(state, length, rho);
        aoi_integral += integrate_aoi(state, length);
        if (tracker) {
            sample_value = tracker->walk(delivery, next_delivery, next_sample_time,
                                         fusion_state(delivery))[next_source - 1];
        }
        source = next_source;
        sample_time = next_sample_time;
        y = next_y;
        delivery = next_delivery;
    }

    auto& m = out.metrics;
    m.epoch_count = n;
    m.horizon = delivery;
    // Zero-length horizons only arise from zero delays with zero waits; report the limit 0.
    m.avg_mse_analytic = m.horizon > 0.0 ? mse_integral / m.horizon : 0.0;
    m.avg_aoi = m.horizon > 0.0 ? aoi_integral / m.horizon : 0.0;
    if (tracker)
        m.avg_mse_empirical = m.horizon > 0.0 ? tracker->total() / m.horizon : 0.0;
    return out;
}

} // namespace fusionsim::network
