#pragma once

#include "mmdrb/control_sim.hpp"
#include "mmdrb/moment_problem.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmdrb {

/// Shortest round-trippable formatting for doubles in CSV/JSON output.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

/**
 * Read a headerless CSV of points, one row per point; the first row fixes the
 * dimension. Errors carry the 1-based row number.
 */
inline PointList read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    PointList points;
    std::string line;
    std::size_t row = 0;
    Eigen::Index dim = -1;
    while (std::getline(in, line)) {
        ++row;
        // Tolerate trailing carriage returns from Windows-edited files.
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                values.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ": malformed value '" + cell + "' at row " +
                                         std::to_string(row));
            }
        }
        if (values.empty())
            throw std::runtime_error(path + ": empty row " + std::to_string(row));
        if (dim < 0) dim = static_cast<Eigen::Index>(values.size());
        if (static_cast<Eigen::Index>(values.size()) != dim)
            throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                                     std::to_string(values.size()) + " columns, expected " +
                                     std::to_string(dim));
        Point p(dim);
        for (Eigen::Index i = 0; i < dim; ++i) p[i] = values[static_cast<std::size_t>(i)];
        points.push_back(std::move(p));
    }
    if (points.empty()) throw std::runtime_error(path + ": no data rows");
    return points;
}

/// Write content to path atomically: write a sibling temp file, then rename.
inline void write_string_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

/**
 * Transport table as CSV. One-dimensional points use the header
 * `point,weight`; d-dimensional points use `x1,...,xd,weight`.
 */
inline std::string transport_csv(const std::vector<std::pair<Point, double>>& table) {
    if (table.empty()) throw std::invalid_argument("transport_csv: empty table");
    const Eigen::Index dim = table.front().first.size();
    std::ostringstream out;
    if (dim == 1) {
        out << "point,weight\n";
    } else {
        for (Eigen::Index d = 0; d < dim; ++d) out << "x" << (d + 1) << ",";
        out << "weight\n";
    }
    for (const auto& [point, weight] : table) {
        for (Eigen::Index d = 0; d < dim; ++d) out << format_double(point[d]) << ",";
        out << format_double(weight) << "\n";
    }
    return out.str();
}

/// One sweep row; mirrors the CSV column layout.
struct SweepRow {
    double epsilon = 0.0;
    double worst_case_prob = 0.0;
    double cantelli = 0.0;
    double chernoff = 0.0;
    double empirical_freq = 0.0;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "epsilon,worst_case_prob,cantelli,chernoff,empirical_freq\n";
    for (const auto& r : rows)
        out << format_double(r.epsilon) << "," << format_double(r.worst_case_prob) << ","
            << format_double(r.cantelli) << "," << format_double(r.chernoff) << ","
            << format_double(r.empirical_freq) << "\n";
    return out.str();
}

inline std::string ensemble_csv(const ScenarioEnsemble& ensemble) {
    std::ostringstream out;
    out << "time,scenario_id,x1,x2\n";
    for (std::size_t t = 0; t < ensemble.states.size(); ++t)
        for (std::size_t m = 0; m < ensemble.states[t].size(); ++m)
            out << format_double(ensemble.times[t]) << "," << m << ","
                << format_double(ensemble.states[t][m][0]) << ","
                << format_double(ensemble.states[t][m][1]) << "\n";
    return out.str();
}

inline std::string control_csv(const std::vector<double>& control) {
    std::ostringstream out;
    out << "step,u\n";
    for (std::size_t k = 0; k < control.size(); ++k)
        out << k << "," << format_double(control[k]) << "\n";
    return out.str();
}

/// Read a control sequence from `step,u` CSV (header optional).
inline std::vector<double> read_control_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open control file: " + path);
    std::vector<double> control;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos)
            continue;  // header line
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ": expected `step,u` at row " + std::to_string(row));
        try {
            control.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": malformed control value at row " +
                                     std::to_string(row));
        }
    }
    if (control.empty()) throw std::runtime_error(path + ": no control rows");
    return control;
}

/// Worst-case series next to the plain empirical frequency, per timestep.
inline std::string series_csv(const std::vector<double>& times, const std::vector<double>& values,
                              const std::vector<double>& empirical) {
    if (times.size() != values.size() || times.size() != empirical.size())
        throw std::invalid_argument("series_csv: length mismatch");
    std::ostringstream out;
    out << "time,value,empirical_freq\n";
    for (std::size_t t = 0; t < times.size(); ++t)
        out << format_double(times[t]) << "," << format_double(values[t]) << ","
            << format_double(empirical[t]) << "\n";
    return out.str();
}

/**
 * Flat key-value configuration: one `key = value` per line, `#` starts a
 * comment, arrays are comma-separated. Lookups are typed; missing keys fall
 * back to the caller's default.
 */
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text) {
        KeyValueConfig cfg;
        std::stringstream ss(text);
        std::string line;
        std::size_t row = 0;
        while (std::getline(ss, line)) {
            ++row;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(row) +
                                         ": expected `key = value`");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error("config line " + std::to_string(row) + ": empty key");
            cfg.entries_[key] = value;
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse(buffer.str());
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : to_double(key, it->second);
    }

    long get_long(const std::string& key, long fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        try {
            std::size_t used = 0;
            long v = std::stol(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config key '" + key + "': expected an integer, got '" +
                                     it->second + "'");
        }
    }

    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        std::vector<double> values;
        std::stringstream ss(it->second);
        std::string cell;
        while (std::getline(ss, cell, ',')) values.push_back(to_double(key, trim(cell)));
        if (values.empty())
            throw std::runtime_error("config key '" + key + "': empty array");
        return values;
    }

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return "";
        const auto last = s.find_last_not_of(" \t\r\n");
        return s.substr(first, last - first + 1);
    }

    static double to_double(const std::string& key, const std::string& value) {
        try {
            std::size_t used = 0;
            double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config key '" + key + "': expected a number, got '" +
                                     value + "'");
        }
    }

    std::map<std::string, std::string> entries_;
};

inline void to_json(nlohmann::json& j, const Solution& s) {
    j = nlohmann::json{{"value", s.value},
                       {"multiplier", s.multiplier},
                       {"constraint_residual", s.constraint_residual},
                       {"status", to_string(s.status)},
                       {"iterations", s.iterations},
                       {"jitter_applied", s.jitter_applied}};
    if (std::isfinite(s.dual_value)) j["dual_value"] = s.dual_value;
}

inline void to_json(nlohmann::json& j, const WorstCaseResult& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.expansion_points) {
        nlohmann::json coords = nlohmann::json::array();
        for (Eigen::Index d = 0; d < p.size(); ++d) coords.push_back(p[d]);
        points.push_back(coords);
    }
    nlohmann::json weights = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.weights.size(); ++i) weights.push_back(r.weights[i]);
    j = nlohmann::json{{"value", r.value},
                       {"epsilon", r.epsilon},
                       {"weights", weights},
                       {"points", points},
                       {"diagnostics", r.solution_diagnostics}};
}

}  // namespace mmdrb
