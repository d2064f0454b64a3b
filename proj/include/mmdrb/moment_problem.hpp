#pragma once

#include "mmdrb/parallel.hpp"
#include "mmdrb/solver.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mmdrb {

/**
 * Recipe for the discrete expansion set: an axis-aligned grid, optionally the
 * data points themselves, and arbitrary extra points. Including the data
 * guarantees a strictly feasible weight vector for any positive radius.
 */
struct ExpansionPlan {
    Vector grid_lower;
    Vector grid_upper;
    std::vector<int> grid_counts;
    bool include_data = true;
    PointList extra_points;

    Eigen::Index dimension() const { return grid_lower.size(); }

    void validate() const {
        const Eigen::Index d = grid_lower.size();
        if (d < 1 || grid_upper.size() != d ||
            static_cast<Eigen::Index>(grid_counts.size()) != d)
            throw std::invalid_argument("ExpansionPlan: bounds and counts must share one dimension");
        for (Eigen::Index i = 0; i < d; ++i) {
            if (!(grid_lower[i] < grid_upper[i]))
                throw std::invalid_argument("ExpansionPlan: grid lower bound must be below upper bound");
            if (grid_counts[static_cast<std::size_t>(i)] < 1)
                throw std::invalid_argument("ExpansionPlan: grid counts must be at least 1");
        }
    }
};

/**
 * Expansion points: the Cartesian grid (last coordinate varies fastest),
 * then the data when included, then the extra points, deduplicated within
 * 1e-10 keeping first occurrences. A one-count axis uses the interval
 * midpoint.
 */
inline PointList build_expansion_points(const PointList& data, const ExpansionPlan& plan) {
    plan.validate();
    const Eigen::Index d = plan.dimension();
    if (plan.include_data) {
        if (data.empty())
            throw std::invalid_argument("build_expansion_points: include_data with empty data");
        detail::check_dims(data, d, "build_expansion_points");
    }
    detail::check_dims(plan.extra_points, d, "build_expansion_points");

    PointList out;
    long total = 1;
    for (int c : plan.grid_counts) total *= c;
    Point p(d);
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        for (Eigen::Index axis = d - 1; axis >= 0; --axis) {
            const int count = plan.grid_counts[static_cast<std::size_t>(axis)];
            const int idx = static_cast<int>(rem % count);
            rem /= count;
            const double lo = plan.grid_lower[axis];
            const double hi = plan.grid_upper[axis];
            p[axis] = (count == 1) ? 0.5 * (lo + hi)
                                   : lo + static_cast<double>(idx) * (hi - lo) / (count - 1);
        }
        if (find_point(out, p, kDuplicatePointTol) < 0) out.push_back(p);
    }
    if (plan.include_data)
        for (const auto& x : data)
            if (find_point(out, x, kDuplicatePointTol) < 0) out.push_back(x);
    for (const auto& x : plan.extra_points)
        if (find_point(out, x, kDuplicatePointTol) < 0) out.push_back(x);
    return out;
}

/**
 * Loss to maximize over the ambiguity set: either values tabulated against a
 * fixed point list (aligned by index) or a violation indicator evaluated
 * pointwise.
 */
class CostFunction {
  public:
    static CostFunction tabulated(std::vector<double> values) {
        if (values.empty())
            throw std::invalid_argument("CostFunction: empty value table");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("CostFunction: tabulated values must be finite");
        CostFunction c;
        c.values_ = std::move(values);
        return c;
    }

    static CostFunction indicator(std::function<bool(const Point&)> violates) {
        if (!violates) throw std::invalid_argument("CostFunction: null predicate");
        CostFunction c;
        c.violates_ = std::move(violates);
        return c;
    }

    bool is_indicator() const { return static_cast<bool>(violates_); }

    Vector evaluate(const PointList& pts) const {
        if (pts.empty()) throw std::invalid_argument("CostFunction: empty point list");
        Vector out(static_cast<Eigen::Index>(pts.size()));
        if (violates_) {
            for (std::size_t i = 0; i < pts.size(); ++i)
                out[static_cast<Eigen::Index>(i)] = violates_(pts[i]) ? 1.0 : 0.0;
        } else {
            if (pts.size() != values_.size())
                throw std::invalid_argument("CostFunction: tabulated values are aligned to a fixed point list");
            for (std::size_t i = 0; i < pts.size(); ++i)
                out[static_cast<Eigen::Index>(i)] = values_[i];
        }
        return out;
    }

  private:
    CostFunction() = default;
    std::vector<double> values_;
    std::function<bool(const Point&)> violates_;
};

struct WorstCaseResult {
    double value = 0.0;
    Vector weights;
    PointList expansion_points;
    double epsilon = 0.0;
    Solution solution_diagnostics;
    std::vector<std::pair<Point, double>> transport_table;  // sorted by weight, descending
};

inline double empirical_violation_frequency(const PointList& data,
                                            const std::function<bool(const Point&)>& violates) {
    if (data.empty()) throw std::invalid_argument("empirical_violation_frequency: empty data");
    std::size_t hits = 0;
    for (const auto& x : data)
        if (violates(x)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace detail {

inline std::vector<std::pair<Point, double>> make_transport_table(const PointList& z,
                                                                  const Vector& w) {
    std::vector<std::pair<Point, double>> table;
    table.reserve(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        table.emplace_back(z[i], w[static_cast<Eigen::Index>(i)]);
    std::stable_sort(table.begin(), table.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return table;
}

/// Empirical weights expressed on the expansion set, or an empty vector when
/// some data point is missing from it.
inline Vector empirical_weights_on(const PointList& z, const PointList& data) {
    Vector w = Vector::Zero(static_cast<Eigen::Index>(z.size()));
    const double share = 1.0 / static_cast<double>(data.size());
    for (const auto& x : data) {
        const std::ptrdiff_t at = find_point(z, x, kDuplicatePointTol);
        if (at < 0) return Vector();
        w[static_cast<Eigen::Index>(at)] += share;
    }
    return w;
}

inline WorstCaseResult package_result(PointList z, double epsilon, Solution sol,
                                      const Vector& weights, double value) {
    WorstCaseResult r;
    r.value = value;
    r.weights = weights;
    r.epsilon = epsilon;
    r.solution_diagnostics = std::move(sol);
    r.transport_table = make_transport_table(z, weights);
    r.expansion_points = std::move(z);
    return r;
}

}  // namespace detail

/**
 * Worst-case expected cost over all probability measures on the expansion set
 * whose embedding lies within `epsilon` of the empirical embedding of `data`.
 * The reported value is a certified lower bound on the population worst case:
 * the returned weights are feasible, and richer expansion sets only increase
 * it. When the data are part of the expansion set their empirical weights are
 * feasible too and are kept if the solver iterate scores below them.
 */
inline WorstCaseResult worst_case_risk(const PointList& data, const KernelSpec& kernel,
                                       double epsilon, const CostFunction& cost,
                                       const ExpansionPlan& plan,
                                       const SolverConfig& config = {}) {
    if (data.empty()) throw std::invalid_argument("worst_case_risk: empty data");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("worst_case_risk: radius must be nonnegative");
    PointList z = build_expansion_points(data, plan);
    const Vector c = cost.evaluate(z);
    SimplexQcqp prob{c, quad_coeffs(z, data, kernel, epsilon)};
    Solution sol = solve(prob, config);
    if (sol.status == SolveStatus::Infeasible)
        throw InfeasibleError("worst_case_risk: no measure on the expansion set lies within the ambiguity ball");

    Vector weights = sol.alpha;
    double value = sol.value;
    const Vector emp = detail::empirical_weights_on(z, data);
    if (emp.size() > 0) {
        if (epsilon <= 0.0) {
            // At radius zero the ball is the singleton empirical measure (the
            // kernel embedding is injective on discrete measures), so report
            // it exactly rather than the penalty iterate.
            value = c.dot(emp);
            weights = emp;
        } else if (prob.quad.evaluate(emp) <= prob.quad.radius_sq + 1e-9) {
            const double emp_value = c.dot(emp);
            if (emp_value > value) {
                value = emp_value;
                weights = emp;
            }
        }
    }
    return detail::package_result(std::move(z), epsilon, std::move(sol), weights, value);
}

/// Worst-case probability of constraint violation: the indicator special case.
inline WorstCaseResult worst_case_violation_probability(
    const PointList& data, const KernelSpec& kernel, double epsilon,
    const std::function<bool(const Point&)>& violates, const ExpansionPlan& plan,
    const SolverConfig& config = {}) {
    return worst_case_risk(data, kernel, epsilon, CostFunction::indicator(violates), plan, config);
}

/**
 * Worst-case expected cost over measures on `z` matching the given first and
 * second moments exactly (polynomial-kernel embedding, zero radius).
 */
inline WorstCaseResult worst_case_risk_known_moments(const MomentData& moments,
                                                     const CostFunction& cost, const PointList& z,
                                                     const SolverConfig& config = {}) {
    const Vector c = cost.evaluate(z);
    SimplexQcqp prob{c, poly_moment_quad(z, moments)};
    Solution sol = solve(prob, config);
    if (sol.status == SolveStatus::Infeasible)
        throw InfeasibleError("worst_case_risk_known_moments: no measure on the expansion set matches the moments");
    const Vector weights = sol.alpha;
    const double value = sol.value;
    return detail::package_result(PointList(z), 0.0, std::move(sol), weights, value);
}

/// Dual witness y(.) = sum_i beta_i k(t_i, .).
struct DualCertificate {
    Vector beta;
    PointList points;
    KernelSpec kernel;

    void validate() const {
        if (points.empty() || static_cast<Eigen::Index>(points.size()) != beta.size())
            throw std::invalid_argument("DualCertificate: beta and points must be nonempty and equal length");
    }
};

/**
 * Lagrangian dual objective <y, empirical embedding> - epsilon |y|_H. For any
 * certificate with y <= cost on the support of a feasible measure this is a
 * lower bound on that measure's expected cost, hence at most the worst case.
 */
inline double dual_value(const DualCertificate& cert, const PointList& data, double epsilon) {
    cert.validate();
    if (data.empty()) throw std::invalid_argument("dual_value: empty data");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("dual_value: radius must be nonnegative");
    const Matrix ktx = gram(cert.kernel, cert.points, data);
    const double mean_term = cert.beta.dot(ktx.rowwise().sum()) / static_cast<double>(data.size());
    const Matrix kt = gram(cert.kernel, cert.points);
    const double norm_sq = std::max(cert.beta.dot(kt * cert.beta), 0.0);
    return mean_term - epsilon * std::sqrt(norm_sq);
}

struct DualFeasibility {
    bool feasible = false;
    double worst_margin = 0.0;  // min over test points of cost - y
};

/// Check y <= cost on the test points within 1e-9.
inline DualFeasibility dual_feasible(const DualCertificate& cert, const CostFunction& cost,
                                     const PointList& test_points) {
    cert.validate();
    if (test_points.empty()) throw std::invalid_argument("dual_feasible: empty test point list");
    const Vector c = cost.evaluate(test_points);
    const Matrix k = gram(cert.kernel, test_points, cert.points);
    const Vector y = k * cert.beta;
    const double margin = (c - y).minCoeff();
    return {margin >= -1e-9, margin};
}

/**
 * Worst-case violation probability across a radius grid, sharing one
 * expansion set and one set of constraint coefficients. Solves run in
 * parallel (deterministically); since any feasible weight vector for a
 * smaller radius stays feasible for a larger one, the best solution seen so
 * far is carried forward, which keeps the reported curve nondecreasing.
 */
inline std::vector<WorstCaseResult> violation_sweep(
    const PointList& data, const KernelSpec& kernel, const std::vector<double>& eps_grid,
    const std::function<bool(const Point&)>& violates, const ExpansionPlan& plan,
    const SolverConfig& config = {}) {
    if (data.empty()) throw std::invalid_argument("violation_sweep: empty data");
    if (eps_grid.empty()) throw std::invalid_argument("violation_sweep: empty radius grid");
    for (double e : eps_grid)
        if (!(e >= 0.0)) throw std::invalid_argument("violation_sweep: radii must be nonnegative");

    PointList z = build_expansion_points(data, plan);
    const Vector c = CostFunction::indicator(violates).evaluate(z);
    const QuadConstraintCoeffs base = quad_coeffs(z, data, kernel, 0.0);
    const Vector emp = detail::empirical_weights_on(z, data);

    std::vector<WorstCaseResult> results(eps_grid.size());
    std::vector<int> failed(eps_grid.size(), 0);
    parallel_for(eps_grid.size(), [&](std::size_t i) {
        SimplexQcqp prob{c, base};
        prob.quad.radius_sq = eps_grid[i] * eps_grid[i];
        Solution sol = solve(prob, config);
        if (sol.status == SolveStatus::Infeasible) {
            failed[i] = 1;
            return;
        }
        Vector weights = sol.alpha;
        double value = sol.value;
        if (emp.size() > 0) {
            if (eps_grid[i] <= 0.0) {
                value = c.dot(emp);  // singleton ball, as in worst_case_risk
                weights = emp;
            } else if (prob.quad.evaluate(emp) <= prob.quad.radius_sq + 1e-9) {
                const double emp_value = c.dot(emp);
                if (emp_value > value) {
                    value = emp_value;
                    weights = emp;
                }
            }
        }
        results[i] = detail::package_result(PointList(z), eps_grid[i], std::move(sol), weights, value);
    });
    for (int f : failed)
        if (f) throw InfeasibleError("violation_sweep: no measure on the expansion set lies within the ambiguity ball");

    for (std::size_t i = 1; i < results.size(); ++i) {
        if (eps_grid[i] >= eps_grid[i - 1] && results[i].value < results[i - 1].value) {
            results[i].value = results[i - 1].value;
            results[i].weights = results[i - 1].weights;
            results[i].transport_table = results[i - 1].transport_table;
        }
    }
    return results;
}

}  // namespace mmdrb
