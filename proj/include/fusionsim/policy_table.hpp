#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fusionsim/errors.hpp"

namespace fusionsim {

/**
 * Stationary waiting policy on a (gamma, y) node grid, row-major in gamma:
 * entry (g, k) lives at g * y_values.size() + k.
 */
struct PolicyTable {
    std::vector<double> gamma_values;
    std::vector<double> y_values;
    std::vector<double> actions;
    std::vector<double> relative_values;

    std::size_t index(std::size_t g, std::size_t k) const noexcept { return g * y_values.size() + k; }
    std::size_t node_count() const noexcept { return gamma_values.size() * y_values.size(); }
};

namespace detail {
/// Nearest node in a sorted list, ties toward the smaller node. Sets `clamped` outside the envelope.
inline std::size_t nearest_node(const std::vector<double>& nodes, double x, bool& clamped) {
    if (x < nodes.front()) {
        clamped = true;
        return 0;
    }
    if (x > nodes.back()) {
        clamped = true;
        return nodes.size() - 1;
    }
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    const auto hi = static_cast<std::size_t>(it - nodes.begin());
    if (hi == 0 || nodes[hi] == x)
        return hi;
    return (x - nodes[hi - 1] <= nodes[hi] - x) ? hi - 1 : hi;
}
} // namespace detail

inline void write_policy_table(const PolicyTable& table, std::ostream& os) {
    os << "gamma\ty\taction\trelative_value\n";
    char buf[128];
    for (std::size_t g = 0; g < table.gamma_values.size(); ++g)
        for (std::size_t k = 0; k < table.y_values.size(); ++k) {
            const auto i = table.index(g, k);
            std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t%.17g\t%.17g\n", table.gamma_values[g],
                          table.y_values[k], table.actions[i], table.relative_values[i]);
            os << buf;
        }
}

inline void save_policy_table(const PolicyTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_policy_table(table, os);
}

inline PolicyTable read_policy_table(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "gamma\ty\taction\trelative_value")
        throw InputDomainError("policy table header must be 'gamma\\ty\\taction\\trelative_value'");
    struct Row { double gamma, y, action, value; };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        Row r{};
        if (!(ls >> r.gamma >> r.y >> r.action >> r.value))
            throw InputDomainError("malformed policy table row at line " + std::to_string(lineno));
        rows.push_back(r);
    }
    if (rows.empty())
        throw InputDomainError("policy table has no rows");

    PolicyTable t;
    for (const auto& r : rows) {
        if (t.gamma_values.empty() || r.gamma != t.gamma_values.back())
            t.gamma_values.push_back(r.gamma);
        if (t.gamma_values.size() == 1)
            t.y_values.push_back(r.y);
    }
    if (rows.size() != t.node_count())
        throw InputDomainError("policy table is not a complete gamma x y grid");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t g = i / t.y_values.size(), k = i % t.y_values.size();
        if (rows[i].gamma != t.gamma_values[g] || rows[i].y != t.y_values[k])
            throw InputDomainError("policy table rows are not ordered by gamma then y");
        t.actions.push_back(rows[i].action);
        t.relative_values.push_back(rows[i].value);
    }
    if (!std::is_sorted(t.gamma_values.begin(), t.gamma_values.end()) ||
        !std::is_sorted(t.y_values.begin(), t.y_values.end()))
        throw InputDomainError("policy table nodes must be increasing");
    return t;
}

inline PolicyTable load_policy_table(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open policy table " + path);
    return read_policy_table(is);
}

} // namespace fusionsim
