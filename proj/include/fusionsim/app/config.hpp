#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fusionsim/delay.hpp"
#include "fusionsim/errors.hpp"

namespace fusionsim::app {

using nlohmann::json;

struct DelaySpec {
    std::string kind = "binary";
    double p = 0.95;
    double y_max = 20.0;
    std::vector<double> values;
    std::vector<double> probs;

    DelayDistribution make() const {
        try {
            if (kind == "binary")
                return DelayDistribution::binary(p, y_max);
            return DelayDistribution(values, probs);
        } catch (const InputDomainError& e) {
            throw ConfigError(kind == "binary" ? "delay" : "delay.probs", e.what());
        }
    }
};

struct SamplerSpec {
    std::string kind = "wf";
    double d = 1.0;
    /// Water-filling threshold; empty means "auto" (tuned by golden section).
    std::optional<double> threshold;
    std::string table_path;
};

struct Fig3Spec {
    std::size_t first_epochs = 100;
    std::size_t points_per_decade = 4;
};

struct Fig4Spec {
    std::string axis = "ymax";
    std::vector<double> grid;
    double p = 0.95;
    double y_max = 25.0;
};

struct SolveSpec {
    double step = 0.25;
    double t_headroom = 2.0;
    double tol_lambda = 1e-7;
    double rvi_tol = 1e-9;
    std::string table_path;
};

inline const std::vector<std::string>& all_suites() {
    static const std::vector<std::string> s{"estimator", "costs", "coupling", "equivalence", "mdp"};
    return s;
}

struct ExperimentConfig {
    double rho = 0.9;
    DelaySpec delay;
    std::string scheduler = "maf";
    SamplerSpec sampler;
    std::size_t n_epochs = 100000;
    std::size_t replications = 200;
    std::optional<double> dt_empirical;
    std::uint64_t seed = 1;
    std::size_t tuning_epochs = 200000;
    Fig3Spec fig3;
    Fig4Spec fig4;
    SolveSpec solve;
    std::vector<std::string> suites = all_suites();
};

inline std::vector<double> default_fig4_grid(const std::string& axis) {
    if (axis == "p")
        return {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
    return {5.0, 10.0, 15.0, 20.0, 25.0};
}

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ConfigError(where.empty() ? "<root>" : where, "expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError(where.empty() ? key : where + "." + key, "unknown field");
    }
}

inline std::string join(const std::string& where, const char* key) {
    return where.empty() ? std::string(key) : where + "." + key;
}

inline double number(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError(join(where, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        throw ConfigError(join(where, key), "must be finite");
    return x;
}

inline std::size_t count(const json& obj, const std::string& where, const char* key, std::size_t fallback,
                         std::size_t minimum) {
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(minimum))
        throw ConfigError(join(where, key), "expected an integer >= " + std::to_string(minimum));
    return v.get<std::size_t>();
}

inline std::string text(const json& obj, const std::string& where, const char* key, const std::string& fallback,
                        std::initializer_list<const char*> choices = {}) {
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string())
        throw ConfigError(join(where, key), "expected a string");
    auto s = v.get<std::string>();
    if (choices.size() > 0 && std::none_of(choices.begin(), choices.end(), [&](const char* c) { return s == c; })) {
        std::string list;
        for (const char* c : choices)
            list += (list.empty() ? "" : ", ") + std::string(c);
        throw ConfigError(join(where, key), "must be one of: " + list);
    }
    return s;
}

inline std::vector<double> numbers(const json& obj, const std::string& where, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_array() || v.empty())
        throw ConfigError(join(where, key), "expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number())
            throw ConfigError(join(where, key), "expected a non-empty array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace detail

/// Parses and validates a config document. Errors name the offending field.
inline ExperimentConfig config_from_json(const json& doc) {
    using namespace detail;
    check_keys(doc, "", {"rho", "delay", "scheduler", "sampler", "n_epochs", "replications", "dt_empirical",
                         "seed", "tuning_epochs", "fig3", "fig4", "solve", "verify"});
    ExperimentConfig c;
    c.rho = number(doc, "", "rho", c.rho);
    if (!(c.rho >= 0.0 && c.rho <= 1.0))
        throw ConfigError("rho", "must lie in [0, 1]");

    if (doc.contains("delay")) {
        const auto& d = doc.at("delay");
        check_keys(d, "delay", {"kind", "p", "y_max", "values", "probs"});
        c.delay.kind = text(d, "delay", "kind", "binary", {"binary", "discrete"});
        if (c.delay.kind == "binary") {
            c.delay.p = number(d, "delay", "p", c.delay.p);
            c.delay.y_max = number(d, "delay", "y_max", c.delay.y_max);
            if (!(c.delay.p >= 0.0 && c.delay.p <= 1.0))
                throw ConfigError("delay.p", "must lie in [0, 1]");
            if (!(c.delay.y_max > 0.0))
                throw ConfigError("delay.y_max", "must be positive");
        } else {
            if (!d.contains("values"))
                throw ConfigError("delay.values", "required for a discrete delay");
            if (!d.contains("probs"))
                throw ConfigError("delay.probs", "required for a discrete delay");
            c.delay.values = numbers(d, "delay", "values");
            c.delay.probs = numbers(d, "delay", "probs");
            if (c.delay.values.size() != c.delay.probs.size())
                throw ConfigError("delay.probs", "must have the same length as delay.values");
        }
        c.delay.make();
    }

    c.scheduler = text(doc, "", "scheduler", c.scheduler, {"maf", "rand"});

    if (doc.contains("sampler")) {
        const auto& s = doc.at("sampler");
        check_keys(s, "sampler", {"kind", "d", "T", "table_path"});
        c.sampler.kind = text(s, "sampler", "kind", "wf", {"zero-wait", "constant", "wf", "tabular"});
        if (c.sampler.kind == "constant") {
            c.sampler.d = number(s, "sampler", "d", c.sampler.d);
            if (!(c.sampler.d >= 0.0))
                throw ConfigError("sampler.d", "constant wait must be non-negative");
        } else if (c.sampler.kind == "wf") {
            if (s.contains("T") && !(s.at("T").is_string() && s.at("T").get<std::string>() == "auto")) {
                const double t = number(s, "sampler", "T", 0.0);
                if (!(t >= 0.0))
                    throw ConfigError("sampler.T", "threshold must be non-negative or \"auto\"");
                c.sampler.threshold = t;
            }
        } else if (c.sampler.kind == "tabular") {
            c.sampler.table_path = text(s, "sampler", "table_path", "");
            if (c.sampler.table_path.empty())
                throw ConfigError("sampler.table_path", "required for a tabular sampler");
        }
    }

    c.n_epochs = count(doc, "", "n_epochs", c.n_epochs, 1);
    c.replications = count(doc, "", "replications", c.replications, 1);
    if (doc.contains("dt_empirical") && !doc.at("dt_empirical").is_null()) {
        const double dt = number(doc, "", "dt_empirical", 0.0);
        if (!(dt > 0.0))
            throw ConfigError("dt_empirical", "must be positive");
        c.dt_empirical = dt;
    }
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned())
            throw ConfigError("seed", "expected a non-negative integer");
        c.seed = doc.at("seed").get<std::uint64_t>();
    }
    c.tuning_epochs = count(doc, "", "tuning_epochs", c.tuning_epochs, 1);

    if (doc.contains("fig3")) {
        const auto& f = doc.at("fig3");
        check_keys(f, "fig3", {"first_epochs", "points_per_decade"});
        c.fig3.first_epochs = count(f, "fig3", "first_epochs", c.fig3.first_epochs, 1);
        c.fig3.points_per_decade = count(f, "fig3", "points_per_decade", c.fig3.points_per_decade, 1);
    }

    if (doc.contains("fig4")) {
        const auto& f = doc.at("fig4");
        check_keys(f, "fig4", {"axis", "grid", "p", "y_max"});
        c.fig4.axis = text(f, "fig4", "axis", c.fig4.axis, {"ymax", "p"});
        if (f.contains("grid"))
            c.fig4.grid = numbers(f, "fig4", "grid");
        c.fig4.p = number(f, "fig4", "p", c.fig4.p);
        c.fig4.y_max = number(f, "fig4", "y_max", c.fig4.y_max);
    }
    if (c.fig4.grid.empty())
        c.fig4.grid = default_fig4_grid(c.fig4.axis);
    for (double v : c.fig4.grid) {
        if (c.fig4.axis == "p" ? !(v >= 0.0 && v <= 1.0) : !(v > 0.0))
            throw ConfigError("fig4.grid", "value out of range for axis " + c.fig4.axis);
    }
    if (!(c.fig4.p >= 0.0 && c.fig4.p <= 1.0))
        throw ConfigError("fig4.p", "must lie in [0, 1]");
    if (!(c.fig4.y_max > 0.0))
        throw ConfigError("fig4.y_max", "must be positive");

    if (doc.contains("solve")) {
        const auto& s = doc.at("solve");
        check_keys(s, "solve", {"step", "t_headroom", "tol_lambda", "rvi_tol", "table_path"});
        c.solve.step = number(s, "solve", "step", c.solve.step);
        c.solve.t_headroom = number(s, "solve", "t_headroom", c.solve.t_headroom);
        c.solve.tol_lambda = number(s, "solve", "tol_lambda", c.solve.tol_lambda);
        c.solve.rvi_tol = number(s, "solve", "rvi_tol", c.solve.rvi_tol);
        c.solve.table_path = text(s, "solve", "table_path", "");
        if (!(c.solve.step > 0.0))
            throw ConfigError("solve.step", "must be positive");
        if (!(c.solve.t_headroom >= 0.0))
            throw ConfigError("solve.t_headroom", "must be non-negative");
        if (!(c.solve.tol_lambda > 0.0))
            throw ConfigError("solve.tol_lambda", "must be positive");
        if (!(c.solve.rvi_tol > 0.0))
            throw ConfigError("solve.rvi_tol", "must be positive");
    }

    if (doc.contains("verify")) {
        const auto& v = doc.at("verify");
        check_keys(v, "verify", {"suites"});
        if (v.contains("suites")) {
            const auto& arr = v.at("suites");
            if (!arr.is_array() || arr.empty())
                throw ConfigError("verify.suites", "expected a non-empty array of suite names");
            c.suites.clear();
            for (const auto& s : arr) {
                const auto& known = all_suites();
                if (!s.is_string() || std::find(known.begin(), known.end(), s.get<std::string>()) == known.end())
                    throw ConfigError("verify.suites", "unknown suite " + s.dump());
                c.suites.push_back(s.get<std::string>());
            }
        }
    }
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("--config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Full config as JSON; config_from_json(config_to_json(c)) reproduces c.
inline json config_to_json(const ExperimentConfig& c) {
    json d;
    if (c.delay.kind == "binary")
        d = {{"kind", "binary"}, {"p", c.delay.p}, {"y_max", c.delay.y_max}};
    else
        d = {{"kind", "discrete"}, {"values", c.delay.values}, {"probs", c.delay.probs}};
    json s = {{"kind", c.sampler.kind}};
    if (c.sampler.kind == "constant")
        s["d"] = c.sampler.d;
    else if (c.sampler.kind == "wf")
        s["T"] = c.sampler.threshold ? json(*c.sampler.threshold) : json("auto");
    else if (c.sampler.kind == "tabular")
        s["table_path"] = c.sampler.table_path;
    json doc = {{"rho", c.rho},
                {"delay", d},
                {"scheduler", c.scheduler},
                {"sampler", s},
                {"n_epochs", c.n_epochs},
                {"replications", c.replications},
                {"seed", c.seed},
                {"tuning_epochs", c.tuning_epochs},
                {"fig3", {{"first_epochs", c.fig3.first_epochs}, {"points_per_decade", c.fig3.points_per_decade}}},
                {"fig4", {{"axis", c.fig4.axis}, {"grid", c.fig4.grid}, {"p", c.fig4.p}, {"y_max", c.fig4.y_max}}},
                {"solve",
                 {{"step", c.solve.step},
                  {"t_headroom", c.solve.t_headroom},
                  {"tol_lambda", c.solve.tol_lambda},
                  {"rvi_tol", c.solve.rvi_tol}}},
                {"verify", {{"suites", c.suites}}}};
    if (!c.solve.table_path.empty())
        doc["solve"]["table_path"] = c.solve.table_path;
    if (c.dt_empirical)
        doc["dt_empirical"] = *c.dt_empirical;
    return doc;
}

} // namespace fusionsim::app
