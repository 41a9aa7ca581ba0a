#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fusionsim/delay.hpp"
#include "fusionsim/errors.hpp"
#include "fusionsim/mdp_costs.hpp"
#include "fusionsim/network.hpp"
#include "fusionsim/policies.hpp"
#include "fusionsim/policy_table.hpp"
#include "fusionsim/random_stream.hpp"

namespace fusionsim::mdp {

/**
 * Discretized state/action space of the recurrent (gamma, y) model.
 *
 * The next gap is gamma' = y + z. Every reachable gamma' up to the top
 * node must be a node; larger values are clamped to the top node and
 * counted.
 */
class MdpGrid {
public:
    MdpGrid(std::vector<double> gamma_values, DelayDistribution delay, std::vector<double> z_actions)
        : gammas_(std::move(gamma_values)), delay_(std::move(delay)), actions_(std::move(z_actions)) {
        if (gammas_.empty() || gammas_.front() != 0.0)
            throw InputDomainError("gamma grid must start at 0");
        if (actions_.empty() || actions_.front() < 0.0)
            throw InputDomainError("action grid must be non-empty and non-negative");
        for (std::size_t k = 1; k < gammas_.size(); ++k)
            if (!(gammas_[k] > gammas_[k - 1]))
                throw InputDomainError("gamma grid must be strictly increasing");
        for (std::size_t k = 1; k < actions_.size(); ++k)
            if (!(actions_[k] > actions_[k - 1]))
                throw InputDomainError("action grid must be strictly increasing");

        const double top = gammas_.back();
        next_.resize(delay_.size() * actions_.size());
        for (std::size_t k = 0; k < delay_.size(); ++k)
            for (std::size_t a = 0; a < actions_.size(); ++a) {
                const double g = delay_.values()[k] + actions_[a];
                const double tol = 1e-9 * std::max(1.0, g);
                std::size_t idx;
                if (g > top + tol) {
                    idx = gammas_.size() - 1;
                    ++clamped_;
                } else {
                    auto it = std::lower_bound(gammas_.begin(), gammas_.end(), g - tol);
                    if (it == gammas_.end() || std::abs(*it - g) > tol)
                        throw ContractError("gamma grid is not closed under y + z = " + std::to_string(g));
                    idx = static_cast<std::size_t>(it - gammas_.begin());
                }
                next_[k * actions_.size() + a] = idx;
            }
    }

    const std::vector<double>& gamma_values() const noexcept { return gammas_; }
    const DelayDistribution& delay() const noexcept { return delay_; }
    const std::vector<double>& z_actions() const noexcept { return actions_; }

    std::size_t gamma_count() const noexcept { return gammas_.size(); }
    std::size_t y_count() const noexcept { return delay_.size(); }
    std::size_t action_count() const noexcept { return actions_.size(); }
    std::size_t state_count() const noexcept { return gamma_count() * y_count(); }
    std::size_t state_index(std::size_t g, std::size_t k) const noexcept { return g * y_count() + k; }

    /// Gamma node reached from delay node k under action a.
    std::size_t next_gamma(std::size_t k, std::size_t a) const noexcept {
        return next_[k * actions_.size() + a];
    }
    /// (y, z) pairs whose successor gap lies above the top node.
    std::size_t clamped_transitions() const noexcept { return clamped_; }

private:
    std::vector<double> gammas_;
    DelayDistribution delay_;
    std::vector<double> actions_;
    std::vector<std::size_t> next_;
    std::size_t clamped_ = 0;
};

struct GridOptions {
    double step = 0.25;
    /// Extra room above 2 E[Y] + 3 std(Y) in the action grid.
    double t_headroom = 2.0;
};

inline double default_max_wait(const DelayDistribution& delay, const GridOptions& opt = {}) {
    return 2.0 * delay.mean() + 3.0 * delay.stddev() + opt.t_headroom;
}

/// Uniform action grid and a gamma grid covering every reachable y + z.
inline MdpGrid make_default_grid(const DelayDistribution& delay, const GridOptions& opt = {}) {
    if (!(opt.step > 0.0))
        throw InputDomainError("grid step must be positive");
    const double zmax = default_max_wait(delay, opt);
    std::vector<double> zs;
    for (std::size_t k = 0;; ++k) {
        const double z = static_cast<double>(k) * opt.step;
        zs.push_back(z);
        if (z >= zmax)
            break;
    }
    std::vector<double> gs;
    const double gmax = std::ceil(delay.max_value() + zs.back());
    for (std::size_t k = 0; static_cast<double>(k) * opt.step <= gmax; ++k)
        gs.push_back(static_cast<double>(k) * opt.step);
    for (double y : delay.values())
        for (double z : zs)
            gs.push_back(y + z);
    std::sort(gs.begin(), gs.end());
    std::vector<double> unique;
    for (double g : gs)
        if (unique.empty() || g - unique.back() > 1e-9 * std::max(1.0, g))
            unique.push_back(g);
    return MdpGrid(std::move(unique), delay, std::move(zs));
}

struct MdpSolution {
    PolicyTable table;
    /// Action index per state, state_index(g, k) order.
    std::vector<std::size_t> action_index;
    double gain = 0.0;
    double lambda = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::size_t clamped_transitions = 0;
    /// Multipliers visited by the Dinkelbach loop, last entry = lambda.
    std::vector<double> lambda_trace;
};

struct RviOptions {
    double tol = 1e-9;
    std::size_t max_iter = 200000;
    /// Self-loop mixing weight tau in (0, 1]; tau < 1 removes periodicity without changing the gain.
    double aperiodicity = 0.9;
};

namespace detail {
inline std::vector<double> cost_table(const MdpGrid& grid, double lambda) {
    const auto& mom = grid.delay().moments();
    std::vector<double> c(grid.state_count() * grid.action_count());
    for (std::size_t g = 0; g < grid.gamma_count(); ++g)
        for (std::size_t k = 0; k < grid.y_count(); ++k)
            for (std::size_t a = 0; a < grid.action_count(); ++a)
                c[grid.state_index(g, k) * grid.action_count() + a] =
                    cost_mdp3(grid.gamma_values()[g], grid.delay().values()[k], grid.z_actions()[a],
                              lambda, mom);
    return c;
}
} // namespace detail

/**
 * Relative value iteration for the average-cost (gamma, y) model at multiplier lambda.
 *
 * Iterates V <- tau * min_z [psi + E V(y + z, Y')] + (1 - tau) V and
 * renormalizes at the reference state (gamma = 0, smallest y). Stops when
 * the span of successive differences, divided by tau, is at most tol; the
 * gain is the midpoint of that difference vector divided by tau.
 */
inline MdpSolution rvi_solve(const MdpGrid& grid, double lambda, const RviOptions& opt = {}) {
    if (!(opt.tol > 0.0))
        throw InputDomainError("RVI tolerance must be positive");
    if (!(opt.aperiodicity > 0.0 && opt.aperiodicity <= 1.0))
        throw InputDomainError("aperiodicity weight must lie in (0, 1]");

    const std::size_t ns = grid.state_count(), na = grid.action_count(), ny = grid.y_count();
    const auto& probs = grid.delay().probs();
    const double tau = opt.aperiodicity;
    const auto cost = detail::cost_table(grid, lambda);

    std::vector<double> v(ns, 0.0), tv(ns), ev(grid.gamma_count());
    std::vector<std::size_t> best(ns, 0);
    double span = std::numeric_limits<double>::infinity(), mid = 0.0;
    std::size_t it = 0;
    while (true) {
        for (std::size_t g = 0; g < grid.gamma_count(); ++g) {
            double acc = 0.0;
            for (std::size_t k = 0; k < ny; ++k)
                acc += probs[k] * v[grid.state_index(g, k)];
            ev[g] = acc;
        }
        double dmax = -std::numeric_limits<double>::infinity();
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < grid.gamma_count(); ++g)
            for (std::size_t k = 0; k < ny; ++k) {
                const std::size_t s = grid.state_index(g, k);
                double q_best = std::numeric_limits<double>::infinity();
                std::size_t a_best = 0;
                for (std::size_t a = 0; a < na; ++a) {
                    const double q = cost[s * na + a] + ev[grid.next_gamma(k, a)];
                    if (q < q_best) {
                        q_best = q;
                        a_best = a;
                    }
                }
                best[s] = a_best;
                tv[s] = tau * q_best + (1.0 - tau) * v[s];
                const double d = tv[s] - v[s];
                dmax = std::max(dmax, d);
                dmin = std::min(dmin, d);
            }
        ++it;
        span = (dmax - dmin) / tau;
        mid = 0.5 * (dmax + dmin) / tau;
        const double ref = tv[0];
        for (std::size_t s = 0; s < ns; ++s)
            v[s] = tv[s] - ref;
        if (span <= opt.tol)
            break;
        if (it >= opt.max_iter)
            throw IterationLimitError("relative value iteration did not converge in " +
                                          std::to_string(it) + " iterations",
                                      span);
    }

    MdpSolution sol;
    sol.gain = mid;
    sol.lambda = lambda;
    sol.iterations = it;
    sol.residual = span;
    sol.clamped_transitions = grid.clamped_transitions();
    sol.action_index = best;
    sol.table.gamma_values = grid.gamma_values();
    sol.table.y_values = grid.delay().values();
    sol.table.actions.resize(ns);
    sol.table.relative_values = v;
    for (std::size_t s = 0; s < ns; ++s)
        sol.table.actions[s] = grid.z_actions()[best[s]];
    return sol;
}

/// Long-run per-epoch averages of a fixed stationary policy.
struct PolicyEvaluation {
    /// Mean lambda = 0 cost per epoch (expected integrated MSE per interval).
    double numerator = 0.0;
    /// Mean interval length E[Z + Y'].
    double denominator = 0.0;
    double ratio = 0.0;
    std::vector<double> stationary;
    std::size_t iterations = 0;
};

/**
 * Stationary distribution of the finite chain induced by a policy, started
 * from gamma = 0 with y drawn from the delay law. Power iteration runs on
 * the lazy chain (I + P) / 2, which has the same stationary law and no
 * periodicity, until the L1 change is at most tol.
 */
inline PolicyEvaluation evaluate_policy(const MdpGrid& grid, std::span<const std::size_t> action_index,
                                        double tol = 1e-12, std::size_t max_iter = 10000000) {
    if (action_index.size() != grid.state_count())
        throw InputDomainError("policy size does not match the grid");
    const std::size_t ns = grid.state_count(), ny = grid.y_count();
    const auto& probs = grid.delay().probs();
    std::vector<double> pi(ns, 0.0), next(ns);
    for (std::size_t k = 0; k < ny; ++k)
        pi[grid.state_index(0, k)] = probs[k];

    PolicyEvaluation out;
    for (std::size_t it = 1;; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < ns; ++s) {
            if (pi[s] == 0.0)
                continue;
            const std::size_t k = s % ny;
            const std::size_t g2 = grid.next_gamma(k, action_index[s]);
            for (std::size_t k2 = 0; k2 < ny; ++k2)
                next[grid.state_index(g2, k2)] += pi[s] * probs[k2];
        }
        double change = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            const double lazy = 0.5 * (pi[s] + next[s]);
            change += std::abs(lazy - pi[s]);
            pi[s] = lazy;
        }
        if (change <= tol) {
            out.iterations = it;
            break;
        }
        if (it >= max_iter)
            throw IterationLimitError("stationary power iteration did not converge", change);
    }

    const auto& mom = grid.delay().moments();
    for (std::size_t s = 0; s < ns; ++s) {
        if (pi[s] == 0.0)
            continue;
        const std::size_t g = s / ny, k = s % ny;
        const double z = grid.z_actions()[action_index[s]];
        out.numerator += pi[s] * cost_mdp3(grid.gamma_values()[g], grid.delay().values()[k], z, 0.0, mom);
        out.denominator += pi[s] * (z + mom.mu_y);
    }
    out.ratio = out.denominator > 0.0 ? out.numerator / out.denominator : 0.0;
    out.stationary = std::move(pi);
    return out;
}

struct DinkelbachOptions {
    double tol_lambda = 1e-7;
    RviOptions rvi{};
    double lambda0 = 0.0;
    std::size_t max_iter = 100;
};

/**
 * Dinkelbach iteration on the ratio of mean interval cost to mean interval length.
 *
 * Each step solves the average-cost problem at lambda_k by RVI and sets
 * lambda_{k+1} to the exact ratio achieved by that policy. Stops once the
 * optimal gain at lambda_k is within tol_lambda of zero.
 */
inline MdpSolution dinkelbach_solve(const MdpGrid& grid, const DinkelbachOptions& opt = {}) {
    if (!(opt.tol_lambda > 0.0))
        throw InputDomainError("Dinkelbach tolerance must be positive");
    double lambda = opt.lambda0;
    std::vector<double> trace;
    std::size_t total_iterations = 0;
    for (std::size_t k = 0;; ++k) {
        MdpSolution sol = rvi_solve(grid, lambda, opt.rvi);
        total_iterations += sol.iterations;
        trace.push_back(lambda);
        if (std::abs(sol.gain) <= opt.tol_lambda) {
            sol.lambda_trace = std::move(trace);
            sol.iterations = total_iterations;
            return sol;
        }
        if (k + 1 >= opt.max_iter)
            throw IterationLimitError("Dinkelbach iteration did not settle", std::abs(sol.gain),
                                      std::move(trace));
        lambda = evaluate_policy(grid, sol.action_index).ratio;
    }
}

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    std::size_t evaluations = 0;
};

/// Golden-section search for a unimodal f on [low, high]; returns the midpoint of the final bracket.
inline ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double low,
                                             double high, double tol) {
    if (!(low < high))
        throw InputDomainError("golden-section bracket needs low < high");
    if (!(tol > 0.0))
        throw InputDomainError("golden-section tolerance must be positive");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = low, b = high;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    std::size_t evals = 2;
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    const double x = 0.5 * (a + b);
    return {x, f(x), evals + 1};
}

/**
 * Renewal-reward estimate of the long-run cost per unit time of water-filling
 * with threshold T under MAF, on a fixed delay sequence (delays.size() - 1 epochs).
 * Under MAF the mean age at delivery i is y_i + gamma_i / 2 and gamma_{i+1} = y_i + z_i.
 */
inline double wf_renewal_cost(double threshold, std::span<const double> delays,
                              const fusion::DelayMoments& mom) {
    if (delays.size() < 2)
        throw InputDomainError("renewal evaluation needs at least two delay draws");
    double gamma = 0.0, num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < delays.size(); ++i) {
        const double y = delays[i];
        const double z = policies::wf_wait(y + gamma, y, threshold);
        num += cost_mdp3(gamma, y, z, 0.0, mom);
        den += delays[i + 1] + z;
        gamma = y + z;
    }
    return den > 0.0 ? num / den : 0.0;
}

/**
 * Tunes the water-filling threshold by golden-section search. Every probe
 * reuses one pre-drawn delay sequence so that J(T) is deterministic in T.
 * Throws BoundExpansionError when the minimum sits on the upper bound.
 */
inline ScalarMinimum golden_section_threshold(const DelayDistribution& delay, double low, double high,
                                              double tol, std::size_t evaluator_epochs,
                                              RandomStream& rng) {
    if (evaluator_epochs < 1)
        throw InputDomainError("evaluator needs at least one epoch");
    std::vector<double> delays(evaluator_epochs + 1);
    for (auto& y : delays)
        y = delay.sample(rng);
    const auto& mom = delay.moments();
    auto result = golden_section_minimize(
        [&](double t) { return wf_renewal_cost(t, delays, mom); }, low, high, tol);
    if (high - result.x <= 2.0 * tol)
        throw BoundExpansionError("water-filling cost still decreasing at the upper bound; raise `high`",
                                  high);
    return result;
}

/// Default tuning bracket upper end, 3 (E[Y] + max wait of the default action grid).
inline double default_threshold_high(const DelayDistribution& delay) {
    return 3.0 * (delay.mean() + default_max_wait(delay));
}

/// golden_section_threshold with the upper bound doubled until the minimum is interior.
inline ScalarMinimum tune_wf_threshold(const DelayDistribution& delay, RandomStream rng,
                                       std::size_t evaluator_epochs, double tol = 1e-3,
                                       double low = 0.0, double high = -1.0) {
    if (high <= low)
        high = default_threshold_high(delay);
    for (int attempt = 0; attempt < 30; ++attempt) {
        RandomStream probe = rng;
        try {
            return golden_section_threshold(delay, low, high, tol, evaluator_epochs, probe);
        } catch (const BoundExpansionError&) {
            high = low + 2.0 * (high - low);
        }
    }
    throw BoundExpansionError("threshold bracket expansion gave up", high);
}

/**
 * Running mean over epochs of psi_lambda - c_lambda^rho, the gap between the
 * recurrent-model cost and the envelope-model cost. Each term equals
 * (z + mu_y) (gamma - h_rho(gamma, M)) and is non-negative; lambda cancels.
 * The trace must come from MAF scheduling.
 */
inline std::vector<double> equivalence_gap(std::span<const network::EpochRecord> records,
                                           std::span<const network::EpochState> states, double rho,
                                           double lambda, const fusion::DelayMoments& moments) {
    (void)lambda;
    if (records.size() != states.size())
        throw InputDomainError("records and states must have equal length");
    std::vector<double> running;
    running.reserve(records.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0) {
            const auto& prev = states[i - 1];
            if (prev.gamma > 0.0) {
                const int staler = prev.s1 < prev.s2 ? 1 : 2;
                if (records[i].source != staler)
                    throw ContractError("equivalence gap needs a MAF trace (epoch " + std::to_string(i) + ")");
            }
        }
        const auto& st = states[i];
        const double z = records[i].wait;
        sum += (z + moments.mu_y) * (st.gamma - h_rho(st.gamma, st.m, rho));
        running.push_back(sum / static_cast<double>(i + 1));
    }
    return running;
}

} // namespace fusionsim::mdp
