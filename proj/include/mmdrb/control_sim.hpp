#pragma once

#include "mmdrb/moment_problem.hpp"
#include "mmdrb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmdrb {

/// Control inputs outside [-kControlBound, kControlBound] are rejected.
inline constexpr double kControlBound = 40.0;

struct VdpParams {
    double damping = 0.1;
};

/// Controlled Van der Pol dynamics:
///   x1' = x2,  x2' = -damping (1 - x1^2) x2 - x1 + u.
inline Point vdp_derivative(const Point& state, double u, const VdpParams& params = {}) {
    if (state.size() != 2) throw std::invalid_argument("vdp_derivative: state must be 2-dimensional");
    Point d(2);
    d[0] = state[1];
    d[1] = -params.damping * (1.0 - state[0] * state[0]) * state[1] - state[0] + u;
    return d;
}

struct ScenarioConfig {
    Point initial_mean = (Point(2) << 0.5, 0.0).finished();
    Point initial_variance = (Point(2) << 1e-4, 1e-2).finished();  // diagonal covariance entries
    int scenario_count = 50;
    double horizon = 1.0;
    int control_steps = 10;
    int substeps = 10;
    unsigned long seed = 0;

    void validate() const {
        if (initial_mean.size() != 2 || initial_variance.size() != 2)
            throw std::invalid_argument("ScenarioConfig: mean and variance must be 2-dimensional");
        if (initial_variance.minCoeff() < 0.0)
            throw std::invalid_argument("ScenarioConfig: variances must be nonnegative");
        if (scenario_count < 1) throw std::invalid_argument("ScenarioConfig: need at least one scenario");
        if (!(horizon > 0.0)) throw std::invalid_argument("ScenarioConfig: horizon must be positive");
        if (control_steps < 1 || substeps < 1)
            throw std::invalid_argument("ScenarioConfig: step counts must be positive");
    }
};

namespace detail {

inline Point rk4_step(const Point& x, double u, double dt, const VdpParams& params) {
    const Point k1 = vdp_derivative(x, u, params);
    const Point k2 = vdp_derivative(x + 0.5 * dt * k1, u, params);
    const Point k3 = vdp_derivative(x + 0.5 * dt * k2, u, params);
    const Point k4 = vdp_derivative(x + dt * k3, u, params);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/**
 * Classical fixed-substep RK4 under a piecewise-constant control sequence.
 * Returns the states at the control-step boundaries (control_steps + 1
 * entries, the initial state first).
 */
inline std::vector<Point> rk4_propagate(const Point& initial, const std::vector<double>& control,
                                        const ScenarioConfig& config, const VdpParams& params = {}) {
    config.validate();
    if (initial.size() != 2) throw std::invalid_argument("rk4_propagate: state must be 2-dimensional");
    if (static_cast<int>(control.size()) != config.control_steps)
        throw std::invalid_argument("rk4_propagate: control length does not match the step count");
    const double dt = config.horizon / config.control_steps / config.substeps;
    std::vector<Point> trajectory;
    trajectory.reserve(static_cast<std::size_t>(config.control_steps) + 1);
    Point x = initial;
    trajectory.push_back(x);
    for (int k = 0; k < config.control_steps; ++k) {
        const double u = control[static_cast<std::size_t>(k)];
        for (int s = 0; s < config.substeps; ++s) {
            x = detail::rk4_step(x, u, dt, params);
            if (!x.allFinite())
                throw std::runtime_error("rk4_propagate: non-finite state at control step " +
                                         std::to_string(k));
        }
        trajectory.push_back(x);
    }
    return trajectory;
}

/// States of all scenarios organized per timestep, plus the shared control.
struct ScenarioEnsemble {
    std::vector<double> times;                 // control_steps + 1 timestamps
    std::vector<PointList> states;             // states[t] holds scenario_count points
    std::vector<double> control;
};

/**
 * Sample scenario_count initial states from the diagonal Gaussian and
 * propagate each one under the shared control sequence. The same seed and
 * config reproduce the ensemble exactly.
 */
inline ScenarioEnsemble simulate_ensemble(const ScenarioConfig& config,
                                          const std::vector<double>& control,
                                          const VdpParams& params = {}) {
    config.validate();
    for (double u : control)
        if (!(std::abs(u) <= kControlBound))
            throw std::invalid_argument("simulate_ensemble: control input exceeds the +/-40 bound");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s1 = std::sqrt(config.initial_variance[0]);
    const double s2 = std::sqrt(config.initial_variance[1]);

    ScenarioEnsemble e;
    e.control = control;
    e.times.reserve(static_cast<std::size_t>(config.control_steps) + 1);
    for (int k = 0; k <= config.control_steps; ++k)
        e.times.push_back(config.horizon * k / config.control_steps);
    e.states.assign(static_cast<std::size_t>(config.control_steps) + 1, PointList());
    for (auto& slot : e.states) slot.reserve(static_cast<std::size_t>(config.scenario_count));

    for (int m = 0; m < config.scenario_count; ++m) {
        Point x0(2);
        x0[0] = config.initial_mean[0] + s1 * normal(rng);
        x0[1] = config.initial_mean[1] + s2 * normal(rng);
        const std::vector<Point> traj = rk4_propagate(x0, control, config, params);
        for (std::size_t t = 0; t < traj.size(); ++t) e.states[t].push_back(traj[t]);
    }
    return e;
}

/**
 * Saturated proportional setpoint policy evaluated along the nominal (mean)
 * trajectory: u_k = clamp(gain (x1_ref - x1), +/-40), recomputed at each
 * control-step boundary. The resulting open-loop sequence is shared by every
 * scenario.
 */
inline std::vector<double> proportional_policy_controls(const ScenarioConfig& config,
                                                        const VdpParams& params = {},
                                                        double gain = 3.0, double x1_ref = 1.4) {
    config.validate();
    const double dt = config.horizon / config.control_steps / config.substeps;
    std::vector<double> controls;
    controls.reserve(static_cast<std::size_t>(config.control_steps));
    Point x = config.initial_mean;
    for (int k = 0; k < config.control_steps; ++k) {
        const double u = std::clamp(gain * (x1_ref - x[0]), -kControlBound, kControlBound);
        controls.push_back(u);
        for (int s = 0; s < config.substeps; ++s) x = detail::rk4_step(x, u, dt, params);
    }
    return controls;
}

/**
 * Worst-case violation probability at every timestep of an ensemble, treating
 * the scenario states at each time as the data sample. Timesteps solve in
 * parallel with deterministic ordering.
 */
inline std::vector<WorstCaseResult> per_step_worst_case(
    const ScenarioEnsemble& ensemble, const KernelSpec& kernel, double epsilon,
    const std::function<bool(const Point&)>& violates, const ExpansionPlan& plan,
    const SolverConfig& config = {}) {
    if (ensemble.states.empty())
        throw std::invalid_argument("per_step_worst_case: empty ensemble");
    if (plan.dimension() != 2)
        throw std::invalid_argument("per_step_worst_case: expansion plan must be 2-dimensional");
    std::vector<WorstCaseResult> results(ensemble.states.size());
    parallel_for(ensemble.states.size(), [&](std::size_t t) {
        results[t] = worst_case_violation_probability(ensemble.states[t], kernel, epsilon,
                                                      violates, plan, config);
    });
    return results;
}

}  // namespace mmdrb
