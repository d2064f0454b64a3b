// Command-line front end: sweep, transport, control, and bounds commands
// emitting plot-ready CSV/JSON.

#include "mmdrb/io.hpp"
#include "mmdrb/mmdrb.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

Range parse_range(const std::string& text, const std::string& what) {
    Range r;
    const auto first = text.find(':');
    const auto second = text.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw std::runtime_error(what + ": expected lo:hi:n, got '" + text + "'");
    try {
        r.lo = std::stod(text.substr(0, first));
        r.hi = std::stod(text.substr(first + 1, second - first - 1));
        r.count = std::stoi(text.substr(second + 1));
    } catch (const std::exception&) {
        throw std::runtime_error(what + ": expected lo:hi:n, got '" + text + "'");
    }
    if (r.count < 1) throw std::runtime_error(what + ": need at least one point");
    if (!(r.lo <= r.hi)) throw std::runtime_error(what + ": lower bound exceeds upper bound");
    return r;
}

std::vector<double> linspace(const Range& r) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(r.count));
    if (r.count == 1) {
        values.push_back(r.lo);
        return values;
    }
    for (int i = 0; i < r.count; ++i)
        values.push_back(r.lo + (r.hi - r.lo) * i / (r.count - 1));
    return values;
}

mmdrb::ExpansionPlan plan_from_ranges(const std::vector<Range>& ranges, bool include_data) {
    mmdrb::ExpansionPlan plan;
    const auto d = static_cast<Eigen::Index>(ranges.size());
    plan.grid_lower = mmdrb::Vector(d);
    plan.grid_upper = mmdrb::Vector(d);
    plan.grid_counts.resize(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        plan.grid_lower[static_cast<Eigen::Index>(i)] = ranges[i].lo;
        plan.grid_upper[static_cast<Eigen::Index>(i)] = ranges[i].hi;
        plan.grid_counts[i] = ranges[i].count;
    }
    plan.include_data = include_data;
    return plan;
}

json range_json(const Range& r) {
    return json{{"lo", r.lo}, {"hi", r.hi}, {"count", r.count}};
}

// Options shared by the data-driven commands, resolved from flags and an
// optional config file (flags win).
struct CommonOpts {
    std::string data_path;
    std::string kernel_family = "gaussian";
    double sigma = 0.0;  // resolved later; 0 means "use the median heuristic"
    bool median_requested = false;
    int poly_degree = 2;
    std::vector<double> sum_scales{0.5, 1.0, 2.0};
    double threshold = 2.5;
    std::vector<Range> grid;
    bool include_data = true;
    unsigned long seed = 0;
    std::string out;
};

mmdrb::KernelSpec resolve_kernel(CommonOpts& opts, const mmdrb::PointList& reference) {
    if (opts.kernel_family == "poly") {
        opts.sigma = 0.0;
        return mmdrb::KernelSpec::polynomial(opts.poly_degree);
    }
    if (opts.sigma <= 0.0) opts.sigma = mmdrb::median_heuristic(reference);
    if (opts.kernel_family == "gaussian") return mmdrb::KernelSpec::gaussian(opts.sigma);
    if (opts.kernel_family == "sum")
        return mmdrb::KernelSpec::sum_of_gaussians_from_scales(opts.sigma, opts.sum_scales);
    throw std::runtime_error("unknown kernel family: " + opts.kernel_family);
}

json kernel_json(const CommonOpts& opts) {
    json j{{"family", opts.kernel_family}};
    if (opts.kernel_family == "poly") {
        j["degree"] = opts.poly_degree;
    } else {
        j["sigma"] = opts.sigma;
        if (opts.kernel_family == "sum") j["scales"] = opts.sum_scales;
    }
    return j;
}

json common_json(const CommonOpts& opts) {
    json grids = json::array();
    for (const auto& r : opts.grid) grids.push_back(range_json(r));
    return json{{"data", opts.data_path},        {"kernel", kernel_json(opts)},
                {"threshold", opts.threshold},   {"grid", grids},
                {"include_data", opts.include_data}, {"seed", opts.seed}};
}

void write_json(const std::string& path, const json& j) {
    mmdrb::write_string_atomic(path, j.dump(2) + "\n");
}

int run_sweep(CommonOpts opts, const Range& eps_range, const mmdrb::SolverConfig& solver) {
    const mmdrb::PointList data = mmdrb::read_points_csv(opts.data_path);
    if (data.front().size() != 1)
        throw std::runtime_error("sweep requires one-dimensional data");
    const mmdrb::KernelSpec kernel = resolve_kernel(opts, data);
    if (opts.grid.empty()) opts.grid.push_back(Range{0.0, 5.0, 100});
    const mmdrb::ExpansionPlan plan = plan_from_ranges(opts.grid, opts.include_data);

    const double c = opts.threshold;
    const auto violates = [c](const mmdrb::Point& x) { return x[0] > c; };
    const std::vector<double> eps_grid = linspace(eps_range);
    const std::vector<mmdrb::WorstCaseResult> results =
        mmdrb::violation_sweep(data, kernel, eps_grid, violates, plan, solver);

    const mmdrb::TailBoundReport tails = mmdrb::tail_bounds(c);
    const double empirical = mmdrb::empirical_violation_frequency(data, violates);
    std::vector<mmdrb::SweepRow> rows;
    rows.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i)
        rows.push_back({eps_grid[i], results[i].value, tails.cantelli_bound,
                        tails.chernoff_bound, empirical});
    mmdrb::write_string_atomic(opts.out + ".csv", mmdrb::sweep_csv(rows));

    json echo{{"command", "sweep"},
              {"config", common_json(opts)},
              {"eps_grid", range_json(eps_range)},
              {"results",
               {{"rows", rows.size()},
                {"empirical_freq", empirical},
                {"max_worst_case_prob", results.back().value}}}};
    write_json(opts.out + ".json", echo);
    return 0;
}

int run_transport(CommonOpts opts, double epsilon, const mmdrb::SolverConfig& solver) {
    const mmdrb::PointList data = mmdrb::read_points_csv(opts.data_path);
    if (data.front().size() != 1)
        throw std::runtime_error("transport requires one-dimensional data");
    const mmdrb::KernelSpec kernel = resolve_kernel(opts, data);
    if (opts.grid.empty()) opts.grid.push_back(Range{0.0, 5.0, 100});
    const mmdrb::ExpansionPlan plan = plan_from_ranges(opts.grid, opts.include_data);

    const double c = opts.threshold;
    const auto violates = [c](const mmdrb::Point& x) { return x[0] > c; };
    const mmdrb::WorstCaseResult result =
        mmdrb::worst_case_violation_probability(data, kernel, epsilon, violates, plan, solver);
    mmdrb::write_string_atomic(opts.out + ".csv", mmdrb::transport_csv(result.transport_table));

    json result_json;
    to_json(result_json, result);
    result_json.erase("points");  // the CSV already carries the support
    result_json.erase("weights");
    json echo{{"command", "transport"},
              {"config", common_json(opts)},
              {"epsilon", epsilon},
              {"results", result_json}};
    write_json(opts.out + ".json", echo);
    return 0;
}

int run_bounds(double threshold, const std::string& out) {
    const mmdrb::TailBoundReport report = mmdrb::tail_bounds(threshold);
    json j{{"command", "bounds"},
           {"config", {{"threshold", threshold}}},
           {"threshold", report.threshold},
           {"cantelli", report.cantelli_bound},
           {"chernoff", report.chernoff_bound}};
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json(out + ".json", j);
    }
    return 0;
}

std::function<bool(const mmdrb::Point&)> make_constraint(const std::string& kind, double limit) {
    if (kind == "box") return [limit](const mmdrb::Point& x) { return x[0] > limit; };
    if (kind == "circle") return [limit](const mmdrb::Point& x) { return x.norm() > limit; };
    throw std::runtime_error("constraint must be box or circle, got '" + kind + "'");
}

int run_control(const std::string& config_path, const std::string& out_flag,
                const std::string& seed_flag, const mmdrb::SolverConfig& solver) {
    const mmdrb::KeyValueConfig cfg = mmdrb::KeyValueConfig::load(config_path);

    mmdrb::ScenarioConfig scenario;
    const std::vector<double> mean =
        cfg.get_doubles("mean", {scenario.initial_mean[0], scenario.initial_mean[1]});
    const std::vector<double> variance =
        cfg.get_doubles("variance", {scenario.initial_variance[0], scenario.initial_variance[1]});
    if (mean.size() != 2 || variance.size() != 2)
        throw std::runtime_error("config: mean and variance need exactly two entries");
    scenario.initial_mean << mean[0], mean[1];
    scenario.initial_variance << variance[0], variance[1];
    scenario.scenario_count = static_cast<int>(cfg.get_long("scenarios", 50));
    scenario.horizon = cfg.get_double("horizon", 1.0);
    scenario.control_steps = static_cast<int>(cfg.get_long("steps", 10));
    scenario.substeps = static_cast<int>(cfg.get_long("substeps", 10));
    scenario.seed = static_cast<unsigned long>(cfg.get_long("seed", 0));
    if (!seed_flag.empty()) scenario.seed = std::stoul(seed_flag);
    scenario.validate();

    mmdrb::VdpParams params;
    params.damping = cfg.get_double("damping", params.damping);

    const std::string constraint_kind = cfg.get_string("constraint", "box");
    const double limit = constraint_kind == "circle" ? cfg.get_double("radius", 1.5)
                                                     : cfg.get_double("bound", 1.5);
    const auto violates = make_constraint(constraint_kind, limit);
    const double epsilon = cfg.get_double("eps", 0.01);
    if (epsilon < 0.0) throw std::runtime_error("config: eps must be nonnegative");

    std::vector<double> control;
    double gain = 0.0, x1_ref = 0.0;
    const std::string control_file = cfg.get_string("control_file", "");
    if (!control_file.empty()) {
        control = mmdrb::read_control_csv(control_file);
        if (static_cast<int>(control.size()) != scenario.control_steps)
            throw std::runtime_error("control file length does not match step count");
    } else {
        gain = cfg.get_double("gain", 3.0);
        x1_ref = cfg.get_double("x1_ref", 1.4);
        control = mmdrb::proportional_policy_controls(scenario, params, gain, x1_ref);
    }

    const mmdrb::ScenarioEnsemble ensemble = mmdrb::simulate_ensemble(scenario, control, params);

    // Kernel bandwidth from the pooled ensemble states unless pinned.
    mmdrb::PointList pooled;
    for (const auto& slot : ensemble.states) pooled.insert(pooled.end(), slot.begin(), slot.end());
    CommonOpts kopts;
    kopts.kernel_family = cfg.get_string("kernel", "gaussian");
    kopts.sigma = cfg.get_double("sigma", 0.0);
    kopts.poly_degree = static_cast<int>(cfg.get_long("kernel_degree", 2));
    kopts.sum_scales = cfg.get_doubles("kernel_scales", kopts.sum_scales);
    const mmdrb::KernelSpec kernel = resolve_kernel(kopts, pooled);

    const std::vector<double> lower = cfg.get_doubles("grid_lower", {-0.5, -0.5});
    const std::vector<double> upper = cfg.get_doubles("grid_upper", {2.0, 2.0});
    const std::vector<double> counts = cfg.get_doubles("grid_counts", {20, 20});
    if (lower.size() != 2 || upper.size() != 2 || counts.size() != 2)
        throw std::runtime_error("config: grid_lower/grid_upper/grid_counts need two entries");
    std::vector<Range> ranges;
    for (std::size_t d = 0; d < 2; ++d) {
        Range r{lower[d], upper[d], static_cast<int>(counts[d])};
        if (r.count < 1) throw std::runtime_error("config: grid_counts must be positive");
        if (!(r.lo <= r.hi)) throw std::runtime_error("config: grid_lower exceeds grid_upper");
        ranges.push_back(r);
    }
    const bool include_data = cfg.get_long("include_data", 1) != 0;
    const mmdrb::ExpansionPlan plan = plan_from_ranges(ranges, include_data);

    const std::vector<mmdrb::WorstCaseResult> series =
        mmdrb::per_step_worst_case(ensemble, kernel, epsilon, violates, plan, solver);

    std::vector<double> values, empirical;
    for (std::size_t t = 0; t < series.size(); ++t) {
        values.push_back(series[t].value);
        empirical.push_back(mmdrb::empirical_violation_frequency(ensemble.states[t], violates));
    }

    std::string out = out_flag;
    if (out.empty()) out = cfg.get_string("out", "control_run");
    mmdrb::write_string_atomic(out + "_ensemble.csv", mmdrb::ensemble_csv(ensemble));
    mmdrb::write_string_atomic(out + "_control.csv", mmdrb::control_csv(control));
    mmdrb::write_string_atomic(out + "_series.csv",
                               mmdrb::series_csv(ensemble.times, values, empirical));
    for (std::size_t t = 0; t < series.size(); ++t)
        mmdrb::write_string_atomic(out + "_transport_step" + std::to_string(t) + ".csv",
                                   mmdrb::transport_csv(series[t].transport_table));

    json grids = json::array();
    for (const auto& r : ranges) grids.push_back(range_json(r));
    json echo{{"command", "control"},
              {"config",
               {{"constraint", constraint_kind},
                {"limit", limit},
                {"eps", epsilon},
                {"kernel", kernel_json(kopts)},
                {"scenarios", scenario.scenario_count},
                {"steps", scenario.control_steps},
                {"horizon", scenario.horizon},
                {"substeps", scenario.substeps},
                {"mean", mean},
                {"variance", variance},
                {"damping", params.damping},
                {"seed", scenario.seed},
                {"grid", grids},
                {"include_data", include_data},
                {"policy", control_file.empty()
                               ? json{{"type", "proportional"}, {"gain", gain}, {"x1_ref", x1_ref}}
                               : json{{"type", "file"}, {"path", control_file}}}}},
              {"results",
               {{"final_worst_case", values.back()},
                {"final_empirical", empirical.back()},
                {"max_worst_case", *std::max_element(values.begin(), values.end())}}}};
    write_json(out + ".json", echo);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Worst-case risk over MMD ambiguity sets"};
    app.require_subcommand(1);
    app.failure_message(
        [](const CLI::App*, const CLI::Error& e) { return std::string("mmdrb: ") + e.what() + "\n"; });

    CommonOpts opts;
    std::string eps_grid_text = "0:0.5:20";
    double epsilon = 0.0;
    std::string config_path;
    std::string seed_text;
    std::vector<std::string> grid_texts;
    bool no_include_data = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_data) {
        if (needs_data)
            cmd->add_option("data", opts.data_path, "CSV of sample points, one row per point")
                ->required();
        cmd->add_option("--kernel", opts.kernel_family, "Kernel family: gaussian|poly|sum")
            ->check(CLI::IsMember({"gaussian", "poly", "sum"}));
        cmd->add_option("--sigma", opts.sigma, "Gaussian bandwidth (overrides the median heuristic)");
        cmd->add_flag("--median-heuristic", opts.median_requested,
                      "Set the bandwidth from the data (default when --sigma is absent)");
        cmd->add_option("--threshold", opts.threshold, "Constraint threshold c");
        cmd->add_option("--grid", grid_texts, "Expansion grid lo:hi:n (repeat per dimension)");
        cmd->add_flag("--no-include-data", no_include_data,
                      "Exclude the sample points from the expansion set");
        cmd->add_option("--seed", seed_text, "Random seed");
        cmd->add_option("--out", opts.out, "Output path prefix")->required();
        cmd->add_option("--config", config_path, "Key-value config file (flags win)");
    };

    CLI::App* sweep = app.add_subcommand("sweep", "Worst-case violation probability over an eps grid");
    add_common(sweep, true);
    sweep->add_option("--eps-grid", eps_grid_text, "Ambiguity radii lo:hi:n");

    CLI::App* transport = app.add_subcommand("transport", "Worst-case transport table at one radius");
    add_common(transport, true);
    transport->add_option("--eps", epsilon, "Ambiguity radius")->required();

    CLI::App* control = app.add_subcommand("control", "Scenario ensemble worst-case time series");
    control->add_option("--config", config_path, "Control run config file")->required();
    control->add_option("--out", opts.out, "Output path prefix (overrides config)");
    control->add_option("--seed", seed_text, "Random seed (overrides config)");

    CLI::App* bounds = app.add_subcommand("bounds", "Cantelli and Gaussian Chernoff baselines");
    bounds->add_option("--threshold", opts.threshold, "Tail threshold c")->required();
    bounds->add_option("--out", opts.out, "Output path prefix (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        mmdrb::SolverConfig solver;
        CLI::App* cmd = app.get_subcommands().front();
        if (cmd != control && cmd != bounds) {
            // Merge config-file values under the flags for the data commands.
            if (!config_path.empty()) {
                const mmdrb::KeyValueConfig cfg = mmdrb::KeyValueConfig::load(config_path);
                if (cmd->count("--kernel") == 0)
                    opts.kernel_family = cfg.get_string("kernel", opts.kernel_family);
                if (cmd->count("--sigma") == 0) opts.sigma = cfg.get_double("sigma", opts.sigma);
                if (cmd->count("--threshold") == 0)
                    opts.threshold = cfg.get_double("threshold", opts.threshold);
                if (cmd->count("--seed") == 0 && cfg.has("seed"))
                    seed_text = cfg.get_string("seed", seed_text);
                if (cmd == sweep && cmd->count("--eps-grid") == 0)
                    eps_grid_text = cfg.get_string("eps_grid", eps_grid_text);
                if (cmd == transport && cmd->count("--eps") == 0)
                    epsilon = cfg.get_double("eps", epsilon);
                if (grid_texts.empty() && cfg.has("grid")) {
                    std::stringstream ranges(cfg.get_string("grid", ""));
                    std::string cell;
                    while (std::getline(ranges, cell, ',')) {
                        const auto from = cell.find_first_not_of(" \t");
                        const auto to = cell.find_last_not_of(" \t");
                        if (from != std::string::npos)
                            grid_texts.push_back(cell.substr(from, to - from + 1));
                    }
                }
                opts.poly_degree = static_cast<int>(cfg.get_long("kernel_degree", opts.poly_degree));
                opts.sum_scales = cfg.get_doubles("kernel_scales", opts.sum_scales);
            }
            if (opts.median_requested && cmd->count("--sigma") > 0)
                throw std::runtime_error("--sigma and --median-heuristic are mutually exclusive");
            opts.include_data = !no_include_data;
            if (!seed_text.empty()) opts.seed = std::stoul(seed_text);
            for (const auto& text : grid_texts) opts.grid.push_back(parse_range(text, "--grid"));
            if (!(opts.threshold > 0.0)) throw std::runtime_error("threshold must be positive");
        }

        if (cmd == sweep) return run_sweep(opts, parse_range(eps_grid_text, "--eps-grid"), solver);
        if (cmd == transport) {
            if (epsilon < 0.0) throw std::runtime_error("eps must be nonnegative");
            return run_transport(opts, epsilon, solver);
        }
        if (cmd == control) return run_control(config_path, opts.out, seed_text, solver);
        if (cmd == bounds) return run_bounds(opts.threshold, opts.out);
        throw std::runtime_error("no command selected");
    } catch (const std::exception& e) {
        std::cerr << "mmdrb: " << e.what() << "\n";
        return 1;
    }
}
