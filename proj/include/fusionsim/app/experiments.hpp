#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fusionsim/app/config.hpp"
#include "fusionsim/app/csv.hpp"
#include "fusionsim/app/workers.hpp"
#include "fusionsim/delay.hpp"
#include "fusionsim/mdp.hpp"
#include "fusionsim/network.hpp"
#include "fusionsim/policies.hpp"
#include "fusionsim/policy_table.hpp"

namespace fusionsim::app {

/// Mean and standard error of per-replication values.
struct Estimate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
};

inline Estimate estimate(const std::vector<double>& xs) {
    Estimate e;
    if (xs.empty())
        return e;
    const double n = static_cast<double>(xs.size());
    e.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) {
        e.se = 0.0;
        return e;
    }
    double ss = 0.0;
    for (double x : xs)
        ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (n - 1.0) / n);
    return e;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Everything a replication needs besides its index: delay law, resolved threshold, loaded table.
struct Prepared {
    ExperimentConfig config;
    DelayDistribution delay;
    std::optional<double> threshold;
    std::shared_ptr<const PolicyTable> table;
};

/// Water-filling threshold tuned with the run's tuning stream.
inline mdp::ScalarMinimum tune_threshold(const DelayDistribution& delay, const ExperimentConfig& c) {
    return mdp::tune_wf_threshold(delay, RandomStream(c.seed, streams::kTuning), c.tuning_epochs);
}

inline Prepared prepare(const ExperimentConfig& c) {
    Prepared p{c, c.delay.make(), c.sampler.threshold, nullptr};
    if (c.sampler.kind == "wf" && !p.threshold)
        p.threshold = tune_threshold(p.delay, c).x;
    if (c.sampler.kind == "tabular") {
        try {
            p.table = std::make_shared<const PolicyTable>(load_policy_table(c.sampler.table_path));
        } catch (const std::exception& e) {
            throw ConfigError("sampler.table_path", e.what());
        }
    }
    return p;
}

inline policies::SamplerPolicy make_sampler(const Prepared& p) {
    const auto& k = p.config.sampler.kind;
    if (k == "zero-wait")
        return policies::SamplerPolicy(policies::ZeroWait{});
    if (k == "constant")
        return policies::SamplerPolicy(policies::ConstantWait{p.config.sampler.d});
    if (k == "wf")
        return policies::SamplerPolicy(policies::WaterFilling{*p.threshold});
    return policies::SamplerPolicy(policies::Tabular{p.table});
}

inline policies::SchedulerPolicy make_scheduler(const ExperimentConfig& c, std::size_t rep) {
    if (c.scheduler == "rand")
        return policies::SchedulerPolicy::rand(RandomStream(c.seed, streams::id(rep, streams::kScheduler)));
    return policies::SchedulerPolicy::maf();
}

struct Replication {
    network::RunMetrics metrics;
    std::vector<network::Checkpoint> checkpoints;
    std::size_t clamps = 0;
};

inline Replication run_replication(const Prepared& p, std::size_t rep, const std::vector<std::size_t>& checkpoints = {}) {
    const auto& c = p.config;
    RandomStream delay_rng(c.seed, streams::id(rep, streams::kDelay));
    RandomStream path_rng(c.seed, streams::id(rep, streams::kPath));
    network::EpisodeOptions opt;
    opt.n_epochs = c.n_epochs;
    opt.empirical_dt = c.dt_empirical;
    opt.checkpoints = checkpoints;
    auto sampler = make_sampler(p);
    auto result = network::run_episode(c.rho, p.delay, make_scheduler(c, rep), sampler, opt, delay_rng,
                                       c.dt_empirical ? &path_rng : nullptr);
    return {result.metrics, std::move(result.checkpoints), sampler.clamp_count()};
}

inline std::vector<Replication> run_replications(const Prepared& p, std::size_t workers,
                                                 const std::vector<std::size_t>& checkpoints = {}) {
    return parallel_map(p.config.replications, workers,
                        [&](std::size_t rep) { return run_replication(p, rep, checkpoints); });
}

/// Row shared by simulate, fig3 and fig4.
struct ResultRow {
    std::string experiment;
    std::string label;
    std::size_t epochs = 0;
    ExperimentConfig config;
    double sampler_param = std::numeric_limits<double>::quiet_NaN();
    double horizon_time = 0.0;
    Estimate mse;
    Estimate mse_empirical;
    Estimate aoi;
    double wall_seconds = 0.0;
};

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{
        "experiment", "label",        "epochs",         "rho",         "delay_kind", "p",
        "y_max",      "mu_y",         "sigma_y",        "scheduler",   "sampler",    "sampler_param",
        "n_epochs",   "replications", "seed",           "horizon_time", "avg_mse_analytic",
        "avg_mse_empirical", "avg_aoi", "stderr_mse", "stderr_aoi",  "wall_seconds", "config"};
    return cols;
}

inline std::vector<Cell> to_cells(const ResultRow& r) {
    const auto& c = r.config;
    const auto mom = c.delay.make().moments();
    const bool binary = c.delay.kind == "binary";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {r.experiment,
            r.label,
            static_cast<long long>(r.epochs),
            c.rho,
            c.delay.kind,
            binary ? c.delay.p : nan,
            binary ? c.delay.y_max : nan,
            mom.mu_y,
            mom.sigma_y,
            c.scheduler,
            c.sampler.kind,
            r.sampler_param,
            static_cast<long long>(c.n_epochs),
            static_cast<long long>(c.replications),
            static_cast<long long>(c.seed),
            r.horizon_time,
            r.mse.mean,
            r.mse_empirical.mean,
            r.aoi.mean,
            r.mse.se,
            r.aoi.se,
            r.wall_seconds,
            config_to_json(c).dump()};
}

/// Config echoed in a result row; re-running it reproduces the row.
inline ExperimentConfig config_from_row(const CsvTable& table, std::size_t row) {
    return parse_config(table.at(row, "config"));
}

inline double sampler_param(const Prepared& p) {
    if (p.config.sampler.kind == "constant")
        return p.config.sampler.d;
    if (p.config.sampler.kind == "wf")
        return *p.threshold;
    return std::numeric_limits<double>::quiet_NaN();
}

inline ResultRow summarize(const std::string& experiment, const std::string& label, const Prepared& p,
                           const std::vector<Replication>& reps, double wall) {
    ResultRow row;
    row.experiment = experiment;
    row.label = label;
    row.epochs = p.config.n_epochs;
    row.config = p.config;
    // Echo the resolved threshold so that the row's config reproduces it without re-tuning.
    if (p.config.sampler.kind == "wf")
        row.config.sampler.threshold = p.threshold;
    row.sampler_param = sampler_param(p);
    std::vector<double> h, mse, emp, aoi;
    for (const auto& r : reps) {
        h.push_back(r.metrics.horizon);
        mse.push_back(r.metrics.avg_mse_analytic);
        aoi.push_back(r.metrics.avg_aoi);
        if (r.metrics.avg_mse_empirical)
            emp.push_back(*r.metrics.avg_mse_empirical);
    }
    row.horizon_time = estimate(h).mean;
    row.mse = estimate(mse);
    row.mse_empirical = estimate(emp);
    row.aoi = estimate(aoi);
    row.wall_seconds = wall;
    return row;
}

inline ResultRow cmd_simulate(const ExperimentConfig& c, std::size_t workers) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = prepare(c);
    const auto reps = run_replications(p, workers);
    return summarize("simulate", "", p, reps, seconds_since(t0));
}

/// Geometric epoch counts from `first` to `last` (inclusive), `per_decade` points per factor of 10.
inline std::vector<std::size_t> geometric_checkpoints(std::size_t first, std::size_t last, std::size_t per_decade) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0;; ++k) {
        const double e = static_cast<double>(first) * std::pow(10.0, static_cast<double>(k) / static_cast<double>(per_decade));
        const auto n = static_cast<std::size_t>(std::llround(e));
        if (n >= last)
            break;
        if (out.empty() || n > out.back())
            out.push_back(n);
    }
    out.push_back(last);
    return out;
}

struct Fig3Result {
    std::vector<ResultRow> rows;
    std::vector<std::string> failures;
};

/**
 * Convergence trace of time-average MSE and AoI. Checks that AoI >= MSE
 * at every logged horizon and, for rho > 0, that the relative gap at the
 * final horizon is below the one at the first.
 */
inline Fig3Result cmd_fig3(const ExperimentConfig& c, std::size_t workers) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = prepare(c);
    const auto points = geometric_checkpoints(std::min(c.fig3.first_epochs, c.n_epochs), c.n_epochs,
                                              c.fig3.points_per_decade);
    const auto reps = run_replications(p, workers, points);
    const double wall = seconds_since(t0);

    Fig3Result out;
    for (std::size_t j = 0; j < points.size(); ++j) {
        ResultRow row;
        row.experiment = "fig3";
        row.label = "checkpoint";
        row.epochs = points[j];
        row.config = c;
        if (c.sampler.kind == "wf")
            row.config.sampler.threshold = p.threshold;
        row.sampler_param = sampler_param(p);
        std::vector<double> h, mse, aoi;
        for (const auto& r : reps) {
            h.push_back(r.checkpoints.at(j).horizon);
            mse.push_back(r.checkpoints.at(j).avg_mse_analytic);
            aoi.push_back(r.checkpoints.at(j).avg_aoi);
        }
        row.horizon_time = estimate(h).mean;
        row.mse = estimate(mse);
        row.aoi = estimate(aoi);
        row.wall_seconds = wall;
        out.rows.push_back(row);
    }

    auto rel_gap = [](const ResultRow& r) { return r.aoi.mean > 0.0 ? (r.aoi.mean - r.mse.mean) / r.aoi.mean : 0.0; };
    for (const auto& r : out.rows) {
        if (r.aoi.mean < r.mse.mean - 1e-12 * std::abs(r.aoi.mean))
            out.failures.push_back("AoI below MSE at " + std::to_string(r.epochs) + " epochs");
    }
    if (c.rho > 0.0 && out.rows.size() >= 2 && !(rel_gap(out.rows.back()) < rel_gap(out.rows.front())))
        out.failures.push_back("relative AoI-MSE gap did not shrink between the first and final horizon");
    return out;
}

/// The six benchmark combinations of fig4, in output order.
inline const std::vector<std::pair<std::string, std::string>>& fig4_combos() {
    static const std::vector<std::pair<std::string, std::string>> combos{
        {"zero-wait", "maf"}, {"constant", "maf"}, {"wf", "maf"},
        {"zero-wait", "rand"}, {"constant", "rand"}, {"wf", "rand"}};
    return combos;
}

/// Average MSE of every benchmark combination at every axis value; WF is re-tuned per axis value.
inline std::vector<ResultRow> cmd_fig4(const ExperimentConfig& c, std::size_t workers) {
    std::vector<ResultRow> rows;
    for (double v : c.fig4.grid) {
        ExperimentConfig base = c;
        base.delay = DelaySpec{};
        base.delay.kind = "binary";
        base.delay.p = c.fig4.axis == "p" ? v : c.fig4.p;
        base.delay.y_max = c.fig4.axis == "p" ? c.fig4.y_max : v;
        const auto delay = base.delay.make();
        const double threshold = tune_threshold(delay, base).x;
        for (const auto& [sampler, scheduler] : fig4_combos()) {
            const auto t0 = std::chrono::steady_clock::now();
            ExperimentConfig sub = base;
            sub.scheduler = scheduler;
            sub.sampler = SamplerSpec{};
            sub.sampler.kind = sampler;
            sub.sampler.d = 1.0;
            if (sampler == "wf")
                sub.sampler.threshold = threshold;
            const auto p = prepare(sub);
            const auto reps = run_replications(p, workers);
            rows.push_back(summarize("fig4", sampler + "+" + scheduler, p, reps, seconds_since(t0)));
        }
    }
    return rows;
}

/// Solver summary for `solve`.
struct SolveResult {
    ExperimentConfig config;
    mdp::MdpSolution solution;
    mdp::ScalarMinimum wf;
    std::size_t gamma_nodes = 0, y_nodes = 0, actions = 0, clamped = 0, dinkelbach_steps = 0;
    double relative_gap = 0.0;
    double wall_seconds = 0.0;
    std::string table_path;
};

inline SolveResult cmd_solve(const ExperimentConfig& c, const std::string& table_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto delay = c.delay.make();
    const auto grid = mdp::make_default_grid(delay, {c.solve.step, c.solve.t_headroom});
    mdp::DinkelbachOptions opt;
    opt.tol_lambda = c.solve.tol_lambda;
    opt.rvi.tol = c.solve.rvi_tol;
    SolveResult r;
    r.config = c;
    r.solution = mdp::dinkelbach_solve(grid, opt);
    r.wf = tune_threshold(delay, c);
    r.gamma_nodes = grid.gamma_count();
    r.y_nodes = grid.y_count();
    r.actions = grid.action_count();
    r.clamped = grid.clamped_transitions();
    r.dinkelbach_steps = r.solution.lambda_trace.size();
    r.relative_gap = std::abs(r.solution.lambda - r.wf.value) / r.solution.lambda;
    r.table_path = table_path;
    save_policy_table(r.solution.table, table_path);
    r.wall_seconds = seconds_since(t0);
    return r;
}

inline const std::vector<std::string>& solve_columns() {
    static const std::vector<std::string> cols{
        "experiment", "delay_kind", "p", "y_max", "mu_y", "sigma_y", "gamma_nodes", "y_nodes", "actions",
        "clamped_transitions", "lambda_star", "theta_at_lambda_star", "rvi_residual", "rvi_iterations",
        "dinkelbach_steps", "wf_threshold", "wf_cost", "relative_gap", "seed", "wall_seconds", "table_path",
        "config"};
    return cols;
}

inline std::vector<Cell> to_cells(const SolveResult& r) {
    const auto& c = r.config;
    const auto mom = c.delay.make().moments();
    const bool binary = c.delay.kind == "binary";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto ll = [](std::size_t x) { return static_cast<long long>(x); };
    return {std::string("solve"),
            c.delay.kind,
            binary ? c.delay.p : nan,
            binary ? c.delay.y_max : nan,
            mom.mu_y,
            mom.sigma_y,
            ll(r.gamma_nodes),
            ll(r.y_nodes),
            ll(r.actions),
            ll(r.clamped),
            r.solution.lambda,
            r.solution.gain,
            r.solution.residual,
            ll(r.solution.iterations),
            ll(r.dinkelbach_steps),
            r.wf.x,
            r.wf.value,
            r.relative_gap,
            static_cast<long long>(c.seed),
            r.wall_seconds,
            r.table_path,
            config_to_json(c).dump()};
}

} // namespace fusionsim::app
