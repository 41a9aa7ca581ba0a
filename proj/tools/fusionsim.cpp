#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fusionsim/app/config.hpp"
#include "fusionsim/app/csv.hpp"
#include "fusionsim/app/experiments.hpp"
#include "fusionsim/app/verify.hpp"
#include "fusionsim/app/workers.hpp"
#include "fusionsim/errors.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kVerification = 3, kSolver = 4 };

std::string columns_help() {
    using namespace fusionsim::app;
    return "\nCSV columns (fixed order, reals with 9 significant digits):\n"
           "  simulate, fig3, fig4: " + format_header(result_columns()) + "\n"
           "  verify:               " + format_header(verify_columns()) + "\n"
           "  solve:                " + format_header(solve_columns()) + "\n"
           "Output files are appended to; an existing file must carry the same header.\n"
           "Exit status: 0 ok, 1 other error, 2 config error, 3 verification failure, 4 solver did not converge.\n"
           "FUSIONSIM_WORKERS sets the worker count when --workers is absent.\n";
}

std::string default_table_path(const std::string& out) {
    std::filesystem::path p(out);
    p.replace_extension(".policy.tsv");
    return p.string();
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
}

int run(const std::string& command, const std::string& config_path, const std::string& out,
        std::optional<long long> seed, std::optional<long long> workers_opt, std::string table) {
    using namespace fusionsim;
    using namespace fusionsim::app;
    auto cfg = load_config(config_path);
    if (seed) {
        if (*seed < 0)
            throw ConfigError("--seed", "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(*seed);
    }
    const std::size_t workers = resolve_workers(workers_opt);
    ensure_parent(out);

    if (command == "simulate") {
        const auto row = cmd_simulate(cfg, workers);
        append_csv(out, result_columns(), {to_cells(row)});
        std::printf("avg_mse_analytic=%.9g stderr=%.9g avg_aoi=%.9g sampler_param=%.9g\n", row.mse.mean, row.mse.se,
                    row.aoi.mean, row.sampler_param);
        return kOk;
    }
    if (command == "fig3") {
        const auto res = cmd_fig3(cfg, workers);
        std::vector<std::vector<Cell>> rows;
        for (const auto& r : res.rows)
            rows.push_back(to_cells(r));
        append_csv(out, result_columns(), rows);
        for (const auto& f : res.failures)
            std::fprintf(stderr, "fig3 check failed: %s\n", f.c_str());
        std::printf("fig3: %zu horizons written, %zu check failures\n", res.rows.size(), res.failures.size());
        return res.failures.empty() ? kOk : kVerification;
    }
    if (command == "fig4") {
        std::vector<std::vector<Cell>> rows;
        for (const auto& r : cmd_fig4(cfg, workers))
            rows.push_back(to_cells(r));
        append_csv(out, result_columns(), rows);
        std::printf("fig4: %zu rows written\n", rows.size());
        return kOk;
    }
    if (command == "verify") {
        const auto checks = cmd_verify(cfg);
        std::vector<std::vector<Cell>> rows;
        bool ok = true;
        for (const auto& c : checks) {
            rows.push_back(to_cells(c));
            std::printf("%s %s.%s measured=%.9g %s %.9g\n", c.passed ? "PASS" : "FAIL", c.suite.c_str(),
                        c.property.c_str(), c.measured, c.relation.c_str(), c.bound);
            ok = ok && c.passed;
        }
        append_csv(out, verify_columns(), rows);
        return ok ? kOk : kVerification;
    }
    if (command == "solve") {
        if (table.empty())
            table = cfg.solve.table_path.empty() ? default_table_path(out) : cfg.solve.table_path;
        ensure_parent(table);
        const auto r = cmd_solve(cfg, table);
        append_csv(out, solve_columns(), {to_cells(r)});
        std::printf("lambda*=%.9g theta(lambda*)=%.3g T*=%.9g J(T*)=%.9g relative_gap=%.4g table=%s\n",
                    r.solution.lambda, r.solution.gain, r.wf.x, r.wf.value, r.relative_gap, table.c_str());
        return kOk;
    }
    throw fusionsim::ConfigError("command", "unknown command " + command);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-source status-update simulator with MMSE fusion, sampling and scheduling policies."};
    app.footer(columns_help());
    app.require_subcommand(1, 1);

    std::string config_path, out, table;
    std::optional<long long> seed, workers;
    std::string command;
    for (const auto& [name, about] : std::vector<std::pair<std::string, std::string>>{
             {"simulate", "Run replicated episodes and write one aggregate row."},
             {"fig3", "Time-average MSE and AoI at geometrically spaced horizons."},
             {"fig4", "Average MSE of the six benchmark policy combinations along one axis."},
             {"verify", "Run property suites and report measured values against bounds."},
             {"solve", "Solve the average-cost MDP, tune the water-filling threshold and compare."}}) {
        auto* sub = app.add_subcommand(name, about);
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--out", out, "CSV file to append results to")->required();
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--workers", workers, "Worker threads for replications");
        if (name == "solve")
            sub->add_option("--table", table, "Policy table output (default: <out>.policy.tsv)");
        sub->callback([&command, n = name] { command = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        return run(command, config_path, out, seed, workers, table);
    } catch (const fusionsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const fusionsim::VerificationFailure& e) {
        std::fprintf(stderr, "verification failed: %s\n", e.what());
        return kVerification;
    } catch (const fusionsim::IterationLimitError& e) {
        std::fprintf(stderr, "solver did not converge: %s (residual %.3g)\n", e.what(), e.residual());
        return kSolver;
    } catch (const fusionsim::BoundExpansionError& e) {
        std::fprintf(stderr, "solver did not converge: %s (high %.6g)\n", e.what(), e.high());
        return kSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
}
