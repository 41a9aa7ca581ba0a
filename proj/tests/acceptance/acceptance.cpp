// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fusionsim/app/config.hpp"
#include "fusionsim/app/experiments.hpp"
#include "fusionsim/delay.hpp"
#include "fusionsim/fusion.hpp"
#include "fusionsim/interchange.hpp"
#include "fusionsim/mdp.hpp"
#include "fusionsim/network.hpp"
#include "fusionsim/policies.hpp"
#include "fusionsim/process.hpp"
#include "oracles.hpp"

using namespace fusionsim;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < budget_s;
    const bool ok = o.ok && in_time;
    failures += !ok;
    std::printf("%s criterion %d: %s | %s | %.2fs (budget %.0fs)%s\n", ok ? "PASS" : "FAIL", id, title,
                o.detail.c_str(), s, budget_s, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
}

const auto kFig = DelayDistribution::binary(0.95, 20.0);

Outcome estimator_oracle() {
    RandomStream rng(1001, 0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double t = 100.0 * rng.uniform(), rho = rng.uniform();
        const double d1 = t * rng.uniform(), d2 = t * rng.uniform();
        const double v1 = 20.0 * (rng.uniform() - 0.5), v2 = 20.0 * (rng.uniform() - 0.5);
        const auto e = fusion::mmse_estimate({t, t - d1, v1, t - d2, v2, rho});
        for (int m = 1; m <= 2; ++m) {
            const double o = fusion::gaussian_conditioning_oracle(t, rho, t - d1, t - d2, v1, v2, m);
            const double scale = std::max({std::abs(o), std::abs(v1), std::abs(v2)});
            worst = std::max(worst, std::abs(e[m - 1] - o) / scale);
        }
    }
    return {worst <= 1e-9, fmt("max relative error %.3g <= 1e-9", worst)};
}

Outcome analytic_vs_empirical() {
    struct Layout {
        double s1, s2, t;
    };
    const std::vector<Layout> layouts{{4.0, 7.5, 10.0}, {8.0, 3.0, 9.0}};
    std::string detail;
    bool ok = true;
    std::uint64_t stream = 0;
    for (double rho : {0.0, 0.5, 0.9})
        for (const auto& L : layouts) {
            std::vector<double> grid{0.0, std::min(L.s1, L.s2), std::max(L.s1, L.s2), L.t};
            const std::size_t i1 = L.s1 <= L.s2 ? 1 : 2, i2 = L.s1 <= L.s2 ? 2 : 1;
            process::ProcessParams params(rho);
            RandomStream rng(1002, stream++);
            oracles::Running acc;
            for (int k = 0; k < 100000; ++k) {
                const auto path = process::simulate_path(params, grid, rng);
                const auto est = fusion::mmse_estimate({L.t, L.s1, path.values[i1][0], L.s2, path.values[i2][1], rho});
                const double e1 = path.values[3][0] - est[0], e2 = path.values[3][1] - est[1];
                acc.add(e1 * e1 + e2 * e2);
            }
            const double exact = fusion::expected_mse(L.t, rho, L.t - L.s1, L.t - L.s2);
            const double z = std::abs(acc.mean - exact) / acc.se();
            ok = ok && z <= 3.0;
            detail += fmt("%s rho=%.1f z=%.2f", detail.empty() ? "" : ";", rho, z);
        }
    return {ok, detail + " (bound 3)"};
}

Outcome interval_cost_oracle() {
    RandomStream pick(1003, 0);
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto delay = DelayDistribution::binary(0.05 + 0.94 * pick.uniform(), 1.0 + 24.0 * pick.uniform());
        const double s1 = 40.0 * pick.uniform(), s2 = 40.0 * pick.uniform();
        const double y = delay.values()[pick.uniform() < 0.5 ? 0 : delay.size() - 1];
        const double z = 6.0 * pick.uniform(), rho = pick.uniform();
        RandomStream rng(1003, 1 + k);
        const auto mc = oracles::interval_integral_mc(s1, s2, y, z, delay, rho, 100000, rng);
        const double exact = fusion::interval_cost(s1, s2, y, z, delay.moments(), rho);
        worst = std::max(worst, std::abs(exact - mc.mean) / mc.se);
    }
    return {worst <= 3.0, fmt("max |z| over 50 tuples %.2f <= 3", worst)};
}

Outcome maf_coupling() {
    RandomStream rng(1004, 0);
    std::size_t gap_bad = 0, cost_bad = 0, epochs = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 10 + static_cast<std::size_t>(90 * rng.uniform());
        const auto delay = DelayDistribution::binary(rng.uniform(), 1.0 + 24.0 * rng.uniform());
        std::vector<double> ys(n), zs(n);
        std::vector<policies::RankAction> acts(n);
        for (std::size_t k = 0; k < n; ++k) {
            ys[k] = delay.sample(rng);
            zs[k] = rng.uniform() < 0.4 ? 0.0 : 8.0 * rng.uniform();
            acts[k] = rng.uniform() < 0.5 ? policies::RankAction::Fresher : policies::RankAction::Staler;
        }
        const auto flip = static_cast<std::size_t>(static_cast<double>(n) * rng.uniform());
        const double rho = rng.uniform();
        const auto path = policies::run_interchange(ys, zs, acts, flip, {20.0 * rng.uniform(), 20.0 * rng.uniform()});
        for (const auto& e : path) {
            ++epochs;
            gap_bad += e.gamma_flipped > e.gamma;
            for (double lambda : {0.0, 1.0, 10.0}) {
                const double a = mdp::cost_mdp2(e.gamma, e.m, e.y, e.z, lambda, rho, delay.moments());
                const double b = mdp::cost_mdp2(e.gamma_flipped, e.m_flipped, e.y, e.z, lambda, rho, delay.moments());
                cost_bad += b > a;
            }
        }
    }
    return {gap_bad == 0 && cost_bad == 0,
            fmt("%zu epochs, gap violations %zu, cost violations %zu", epochs, gap_bad, cost_bad)};
}

network::EpisodeResult wf_maf_trace(double rho, double threshold, std::size_t n) {
    RandomStream rng(1005, streams::kDelay);
    network::EpisodeOptions opt;
    opt.n_epochs = n;
    return network::run_episode(rho, kFig, policies::SchedulerPolicy::maf(),
                                policies::SamplerPolicy(policies::WaterFilling{threshold}), opt, rng);
}

Outcome equivalence_decay() {
    const double threshold = mdp::tune_wf_threshold(kFig, RandomStream(1005, streams::kTuning), 200000).x;
    const auto r0 = wf_maf_trace(0.0, threshold, 1000000);
    double max0 = 0.0;
    for (double g : mdp::equivalence_gap(r0.records, r0.states, 0.0, 1.0, kFig.moments()))
        max0 = std::max(max0, std::abs(g));
    const auto r9 = wf_maf_trace(0.9, threshold, 1000000);
    const auto gap = mdp::equivalence_gap(r9.records, r9.states, 0.9, 1.0, kFig.moments());
    const double at4 = gap[10000 - 1], at6 = gap.back();
    const double ratio = at6 / at4;
    return {ratio < 0.01 && max0 == 0.0,
            fmt("gap(1e4)=%.4g gap(1e6)=%.4g ratio %.4f < 0.01; rho=0 max |gap| %.3g == 0", at4, at6, ratio, max0)};
}

Outcome gain_sign_structure() {
    const auto grid = mdp::make_default_grid(kFig);
    const auto sol = mdp::dinkelbach_solve(grid);
    const double ls = sol.lambda;
    const double lo = mdp::rvi_solve(grid, ls - 0.5).gain, hi = mdp::rvi_solve(grid, ls + 0.5).gain;
    const double rel = std::abs(sol.gain) / ls;
    return {lo > 0.0 && hi < 0.0 && rel <= 1e-4,
            fmt("lambda*=%.6f gain(-0.5)=%.4g gain(+0.5)=%.4g |gain(lambda*)|/lambda*=%.3g", ls, lo, hi, rel)};
}

Outcome rvi_small_instances() {
    const std::vector<std::vector<double>> gamma_grids{{0.0}, {0.0, 1.0}, {0.0, 1.0, 2.0}};
    const std::vector<std::vector<double>> supports{{0.0}, {1.0}, {2.0}, {0.0, 1.0}, {0.0, 2.0}, {1.0, 2.0}};
    std::vector<std::vector<double>> action_sets;
    for (int mask = 1; mask < 8; ++mask) {
        std::vector<double> a;
        for (int b = 0; b < 3; ++b)
            if (mask & (1 << b))
                a.push_back(static_cast<double>(b));
        action_sets.push_back(a);
    }
    std::size_t count = 0;
    double worst = 0.0;
    for (const auto& gs : gamma_grids)
        for (const auto& ys : supports)
            for (double p : ys.size() == 1 ? std::vector<double>{1.0} : std::vector<double>{0.3, 0.8})
                for (const auto& zs : action_sets)
                    for (double lambda : {0.0, 1.5, 4.0}) {
                        const auto d = ys.size() == 1 ? DelayDistribution(ys, {1.0}) : DelayDistribution(ys, {p, 1.0 - p});
                        const mdp::MdpGrid grid(gs, d, zs);
                        const double g = mdp::rvi_solve(grid, lambda).gain;
                        worst = std::max(worst, std::abs(g - oracles::exhaustive_optimal_gain(grid, lambda)));
                        ++count;
                    }
    return {worst <= 1e-8, fmt("%zu instances, max |gain - exhaustive| %.3g <= 1e-8", count, worst)};
}

Outcome fig3_reproduction() {
    auto c = app::parse_config(R"({"rho": 0.9, "delay": {"kind": "binary", "p": 0.95, "y_max": 20},
        "scheduler": "maf", "sampler": {"kind": "wf", "T": "auto"}, "n_epochs": 100000,
        "replications": 200, "seed": 1008, "fig3": {"first_epochs": 100, "points_per_decade": 4}})");
    const auto res = app::cmd_fig3(c, 1);
    const auto& rows = res.rows;
    bool dominance = true;
    for (const auto& r : rows)
        dominance = dominance && r.aoi.mean >= r.mse.mean;
    auto gap = [](const app::ResultRow& r) { return (r.aoi.mean - r.mse.mean) / r.aoi.mean; };
    const bool shrinks = gap(rows.back()) < gap(rows.front());
    double drift_mse = 0.0, drift_aoi = 0.0;
    for (const auto& r : rows) {
        if (r.epochs * 10 < rows.back().epochs)
            continue;
        drift_mse = std::max(drift_mse, std::abs(r.mse.mean - rows.back().mse.mean) / rows.back().mse.mean);
        drift_aoi = std::max(drift_aoi, std::abs(r.aoi.mean - rows.back().aoi.mean) / rows.back().aoi.mean);
    }
    const bool ok = dominance && shrinks && drift_mse < 0.01 && drift_aoi < 0.01 && res.failures.empty();
    return {ok, fmt("AoI>=MSE at all %zu horizons: %s; rel gap %.4g -> %.4g; last-decade drift mse %.4f aoi %.4f < 0.01",
                    rows.size(), dominance ? "yes" : "no", gap(rows.front()), gap(rows.back()), drift_mse, drift_aoi)};
}

Outcome fig4_ordering() {
    std::string detail;
    bool ok = true;
    for (const char* axis : {"ymax", "p"}) {
        auto c = app::parse_config(std::string(R"({"rho": 0.9, "n_epochs": 20000, "replications": 100, "seed": 1009,
            "fig4": {"axis": ")") + axis + R"("}})");
        const auto rows = app::cmd_fig4(c, 1);
        double min_sep = 1e300;
        std::vector<double> xs, zw, wf;
        for (std::size_t g = 0; g < c.fig4.grid.size(); ++g) {
            const app::ResultRow* best = nullptr;
            for (std::size_t k = 0; k < 6; ++k) {
                const auto& r = rows[6 * g + k];
                if (r.label == "wf+maf")
                    best = &r;
                if (r.label == "zero-wait+maf")
                    zw.push_back(r.mse.mean);
            }
            wf.push_back(best->mse.mean);
            xs.push_back(c.fig4.grid[g]);
            for (std::size_t k = 0; k < 6; ++k) {
                const auto& r = rows[6 * g + k];
                if (&r == best)
                    continue;
                const double sep = (r.mse.mean - best->mse.mean) / std::hypot(r.mse.se, best->mse.se);
                min_sep = std::min(min_sep, sep);
            }
        }
        ok = ok && min_sep > 2.0;
        detail += fmt("%saxis %s: min separation %.1f SE", detail.empty() ? "" : "; ", axis, min_sep);
        if (std::string(axis) == "ymax") {
            auto slope = [&](const std::vector<double>& ys) {
                const double n = static_cast<double>(xs.size());
                double sx = 0, sy = 0, sxx = 0, sxy = 0;
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    sx += xs[i];
                    sy += ys[i];
                    sxx += xs[i] * xs[i];
                    sxy += xs[i] * ys[i];
                }
                return (n * sxy - sx * sy) / (n * sxx - sx * sx);
            };
            const double s_zw = slope(zw), s_wf = slope(wf);
            ok = ok && s_zw > s_wf;
            detail += fmt(", slope ZW %.3f > WF %.3f", s_zw, s_wf);
        }
    }
    return {ok, detail + " (bound 2 SE)"};
}

Outcome optimizer_agreement() {
    const auto sol = mdp::dinkelbach_solve(mdp::make_default_grid(kFig));
    const auto wf = mdp::tune_wf_threshold(kFig, RandomStream(1010, streams::kTuning), 200000);
    const double rel = std::abs(sol.lambda - wf.value) / sol.lambda;
    return {rel <= 0.02, fmt("lambda*=%.6f J(T*)=%.6f at T*=%.4f, relative gap %.4g <= 0.02", sol.lambda, wf.value, wf.x, rel)};
}

} // namespace

int main() {
    criterion(1, "estimator matches Gaussian conditioning", 1, estimator_oracle);
    criterion(2, "analytic MSE matches simulated paths", 60, analytic_vs_empirical);
    criterion(3, "interval cost matches Monte-Carlo integral", 60, interval_cost_oracle);
    criterion(4, "MAF single-interchange coupling", 10, maf_coupling);
    criterion(5, "running equivalence gap decays", 120, equivalence_decay);
    criterion(6, "gain sign structure around lambda*", 120, gain_sign_structure);
    criterion(7, "RVI gain equals exhaustive policy evaluation", 10, rvi_small_instances);
    criterion(8, "time-average MSE/AoI convergence trace", 300, fig3_reproduction);
    criterion(9, "WF+MAF lowest MSE across benchmark grids", 900, fig4_ordering);
    criterion(10, "MDP multiplier agrees with tuned threshold cost", 300, optimizer_agreement);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
