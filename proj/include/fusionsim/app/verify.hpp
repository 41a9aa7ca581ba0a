#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fusionsim/app/config.hpp"
#include "fusionsim/app/csv.hpp"
#include "fusionsim/app/experiments.hpp"
#include "fusionsim/delay.hpp"
#include "fusionsim/fusion.hpp"
#include "fusionsim/interchange.hpp"
#include "fusionsim/mdp.hpp"
#include "fusionsim/network.hpp"
#include "fusionsim/policies.hpp"

namespace fusionsim::app {

/// One measured property: `measured <relation> bound`.
struct Check {
    std::string suite;
    std::string property;
    double measured = 0.0;
    std::string relation;
    double bound = 0.0;
    bool passed = false;
};

inline Check make_check(std::string suite, std::string property, double measured, std::string relation, double bound) {
    bool ok = false;
    if (relation == "<=")
        ok = measured <= bound;
    else if (relation == "<")
        ok = measured < bound;
    else if (relation == ">")
        ok = measured > bound;
    else if (relation == "==")
        ok = measured == bound;
    else
        throw InternalInvariantError("unknown relation " + relation);
    return {std::move(suite), std::move(property), measured, std::move(relation), bound, ok};
}

inline const std::vector<std::string>& verify_columns() {
    static const std::vector<std::string> cols{"suite", "property", "measured", "relation", "bound", "passed"};
    return cols;
}

inline std::vector<Cell> to_cells(const Check& c) {
    return {c.suite, c.property, c.measured, c.relation, c.bound, std::string(c.passed ? "PASS" : "FAIL")};
}

namespace detail {

inline std::vector<Check> verify_estimator(const ExperimentConfig& c) {
    RandomStream rng(c.seed, 101);
    double worst = 0.0;
    std::size_t bound_violations = 0;
    for (int k = 0; k < 1000; ++k) {
        const double t = 100.0 * rng.uniform(), rho = rng.uniform();
        const double s1 = t * rng.uniform(), s2 = t * rng.uniform();
        const double v1 = 10.0 * (rng.uniform() - 0.5), v2 = 10.0 * (rng.uniform() - 0.5);
        const auto e = fusion::mmse_estimate({t, s1, v1, s2, v2, rho});
        for (int m = 1; m <= 2; ++m) {
            const double o = fusion::gaussian_conditioning_oracle(t, rho, s1, s2, v1, v2, m);
            const double scale = std::max({std::abs(o), std::abs(v1), std::abs(v2)});
            worst = std::max(worst, std::abs(e[m - 1] - o) / scale);
        }
        bound_violations += fusion::expected_mse(t, rho, t - s1, t - s2) > (t - s1) + (t - s2) + 1e-12;
    }
    return {make_check("estimator", "oracle_max_relative_error", worst, "<=", 1e-9),
            make_check("estimator", "mse_above_age_sum_count", static_cast<double>(bound_violations), "==", 0.0)};
}

inline std::vector<Check> verify_costs(const ExperimentConfig& c) {
    RandomStream pick(c.seed, 102);
    double worst_z = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto delay = DelayDistribution::binary(0.3 + 0.69 * pick.uniform(), 1.0 + 19.0 * pick.uniform());
        const double s1 = 30.0 * pick.uniform(), s2 = 30.0 * pick.uniform();
        const double y = 5.0 * pick.uniform(), z = 4.0 * pick.uniform(), rho = pick.uniform();
        const double d = std::max(s1, s2) + y;
        const double e0 = fusion::expected_mse(d, rho, d - s1, d - s2);
        RandomStream rng(c.seed, 200 + k);
        double sum = 0.0, sum2 = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const double len = z + delay.sample(rng);
            const double v = 0.5 * (e0 + fusion::expected_mse(d + len, rho, d + len - s1, d + len - s2)) * len;
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / n, se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / (n - 1));
        const double exact = fusion::interval_cost(s1, s2, y, z, delay.moments(), rho);
        worst_z = std::max(worst_z, se > 0.0 ? std::abs(exact - mean) / se : std::abs(exact - mean));
    }
    std::size_t monotone = 0, above = 0;
    for (double rho : {0.3, 0.9, 0.99})
        for (int i = 1; i <= 100; ++i) {
            const double m = 0.5 * i;
            for (int j = 0; j < 100; ++j) {
                const double g0 = m * j / 100.0, g1 = m * (j + 1) / 100.0;
                monotone += !(mdp::h_rho(g1, m, rho) > mdp::h_rho(g0, m, rho));
                above += mdp::h_rho(g1, m, rho) > g1;
            }
        }
    double mismatch = 0.0;
    const fusion::DelayMoments mom(1.0, 20.0);
    for (int k = 0; k < 1000; ++k) {
        const double m = 40.0 * pick.uniform(), g = m * pick.uniform();
        const double y = 5.0 * pick.uniform(), z = 5.0 * pick.uniform(), l = 20.0 * pick.uniform();
        mismatch = std::max(mismatch, std::abs(mdp::cost_mdp2(g, m, y, z, l, 0.0, mom) - mdp::cost_mdp3(g, y, z, l, mom)));
    }
    return {make_check("costs", "interval_cost_max_abs_z", worst_z, "<=", 4.0),
            make_check("costs", "h_rho_non_increasing_steps", static_cast<double>(monotone), "==", 0.0),
            make_check("costs", "h_rho_above_gap_count", static_cast<double>(above), "==", 0.0),
            make_check("costs", "rho0_cost_mismatch", mismatch, "==", 0.0)};
}

inline std::vector<Check> verify_coupling(const ExperimentConfig& c) {
    RandomStream rng(c.seed, 103);
    const fusion::DelayMoments mom(2.0, 10.0);
    std::size_t gap_violations = 0, cost_violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(45 * rng.uniform());
        std::vector<double> ys(n), zs(n);
        std::vector<policies::RankAction> acts(n);
        for (std::size_t k = 0; k < n; ++k) {
            ys[k] = rng.uniform() < 0.7 ? 0.0 : 10.0 * rng.uniform();
            zs[k] = rng.uniform() < 0.5 ? 0.0 : 5.0 * rng.uniform();
            acts[k] = rng.uniform() < 0.5 ? policies::RankAction::Fresher : policies::RankAction::Staler;
        }
        const auto flip = static_cast<std::size_t>(static_cast<double>(n) * rng.uniform());
        const double rho = rng.uniform();
        const auto path = policies::run_interchange(ys, zs, acts, flip, {10.0 * rng.uniform(), 10.0 * rng.uniform()});
        for (const auto& e : path) {
            gap_violations += e.gamma_flipped > e.gamma + 1e-12;
            for (double lambda : {0.0, 1.0, 10.0}) {
                const double a = mdp::cost_mdp2(e.gamma, e.m, e.y, e.z, lambda, rho, mom);
                const double b = mdp::cost_mdp2(e.gamma_flipped, e.m_flipped, e.y, e.z, lambda, rho, mom);
                cost_violations += b > a + 1e-9 * std::max(1.0, std::abs(a));
            }
        }
    }
    return {make_check("coupling", "gap_violations", static_cast<double>(gap_violations), "==", 0.0),
            make_check("coupling", "cost_violations", static_cast<double>(cost_violations), "==", 0.0)};
}

inline std::vector<Check> verify_equivalence(const ExperimentConfig& c) {
    const auto delay = c.delay.make();
    auto trace = [&](double rho) {
        RandomStream rng(c.seed, streams::kDelay);
        network::EpisodeOptions opt;
        opt.n_epochs = 100000;
        return network::run_episode(rho, delay, policies::SchedulerPolicy::maf(),
                                    policies::SamplerPolicy(policies::WaterFilling{2.0 * delay.mean() + 2.0}), opt, rng);
    };
    const auto r0 = trace(0.0);
    const auto g0 = mdp::equivalence_gap(r0.records, r0.states, 0.0, 1.0, delay.moments());
    double max0 = 0.0;
    for (double g : g0)
        max0 = std::max(max0, std::abs(g));
    const auto r9 = trace(0.9);
    const auto g9 = mdp::equivalence_gap(r9.records, r9.states, 0.9, 1.0, delay.moments());
    double negative = 0.0;
    for (double g : g9)
        negative += g < 0.0;
    const double ratio = g9[999] > 0.0 ? g9.back() / g9[999] : 0.0;
    return {make_check("equivalence", "rho0_max_abs_gap", max0, "==", 0.0),
            make_check("equivalence", "negative_running_gap_count", negative, "==", 0.0),
            make_check("equivalence", "gap_ratio_1e5_over_1e3", ratio, "<", 1.0)};
}

/// Optimal gain by enumerating stationary policies (communicating model, so one start state suffices).
inline double enumerated_gain(const mdp::MdpGrid& grid, double lambda) {
    std::vector<std::size_t> pol(grid.state_count(), 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        const auto ev = mdp::evaluate_policy(grid, pol);
        best = std::min(best, ev.numerator - lambda * ev.denominator);
        std::size_t pos = 0;
        while (pos < pol.size() && ++pol[pos] == grid.action_count())
            pol[pos++] = 0;
        if (pos == pol.size())
            return best;
    }
}

inline std::vector<Check> verify_mdp(const ExperimentConfig& c) {
    RandomStream rng(c.seed, 104);
    double worst = 0.0;
    const std::vector<std::vector<double>> zsets{{0.0, 1.0}, {0.0, 1.0, 2.0}, {1.0, 2.0}};
    const std::vector<std::vector<double>> ysets{{0.0, 1.0}, {0.0, 2.0}, {1.0}};
    for (const auto& ys : ysets)
        for (const auto& zs : zsets) {
            const double p = 0.05 + 0.9 * rng.uniform();
            const auto d = ys.size() == 1 ? DelayDistribution(ys, {1.0}) : DelayDistribution(ys, {p, 1.0 - p});
            const mdp::MdpGrid grid({0.0, 1.0, 2.0}, d, zs);
            const double lambda = 10.0 * rng.uniform();
            worst = std::max(worst, std::abs(mdp::rvi_solve(grid, lambda).gain - enumerated_gain(grid, lambda)));
        }
    const auto delay = c.delay.make();
    const auto grid = mdp::make_default_grid(delay, {c.solve.step, c.solve.t_headroom});
    mdp::DinkelbachOptions opt;
    opt.tol_lambda = c.solve.tol_lambda;
    opt.rvi.tol = c.solve.rvi_tol;
    const auto sol = mdp::dinkelbach_solve(grid, opt);
    const double ls = sol.lambda;
    const double below = mdp::rvi_solve(grid, ls - 0.5, opt.rvi).gain;
    const double above = mdp::rvi_solve(grid, ls + 0.5, opt.rvi).gain;
    const auto wf = tune_threshold(delay, c);
    return {make_check("mdp", "rvi_vs_enumeration_max_abs_diff", worst, "<=", 1e-8),
            make_check("mdp", "gain_below_lambda_star", below, ">", 0.0),
            make_check("mdp", "minus_gain_above_lambda_star", -above, ">", 0.0),
            make_check("mdp", "abs_gain_at_lambda_star_over_lambda", std::abs(sol.gain) / ls, "<=", 1e-4),
            make_check("mdp", "wf_vs_lambda_star_relative_gap", std::abs(ls - wf.value) / ls, "<=", 0.02)};
}

} // namespace detail

inline std::vector<Check> cmd_verify(const ExperimentConfig& c) {
    std::vector<Check> out;
    for (const auto& s : c.suites) {
        std::vector<Check> part;
        if (s == "estimator")
            part = detail::verify_estimator(c);
        else if (s == "costs")
            part = detail::verify_costs(c);
        else if (s == "coupling")
            part = detail::verify_coupling(c);
        else if (s == "equivalence")
            part = detail::verify_equivalence(c);
        else if (s == "mdp")
            part = detail::verify_mdp(c);
        else
            throw ConfigError("verify.suites", "unknown suite " + s);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

} // namespace fusionsim::app
