#include "mmdrb/moment_problem.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace mmdrb;

namespace {

Point pt(std::initializer_list<double> coords) {
    Point p(static_cast<Eigen::Index>(coords.size()));
    Eigen::Index i = 0;
    for (double c : coords) p[i++] = c;
    return p;
}

Vector vec(std::initializer_list<double> vals) {
    Vector v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

ExpansionPlan line_plan(double lo, double hi, int count, bool include_data = true) {
    ExpansionPlan plan;
    plan.grid_lower = vec({lo});
    plan.grid_upper = vec({hi});
    plan.grid_counts = {count};
    plan.include_data = include_data;
    return plan;
}

}  // namespace

TEST_CASE("expansion grid covers the box in row-major order", "[momentproblem]") {
    ExpansionPlan plan;
    plan.grid_lower = vec({0.0, 0.0});
    plan.grid_upper = vec({1.0, 10.0});
    plan.grid_counts = {2, 3};
    plan.include_data = false;
    const auto z = build_expansion_points(PointList{}, plan);
    REQUIRE(z.size() == 6);
    // the last coordinate varies fastest
    CHECK((z[0] - pt({0.0, 0.0})).norm() <= 1e-15);
    CHECK((z[1] - pt({0.0, 5.0})).norm() <= 1e-15);
    CHECK((z[2] - pt({0.0, 10.0})).norm() <= 1e-15);
    CHECK((z[3] - pt({1.0, 0.0})).norm() <= 1e-15);
    CHECK((z[5] - pt({1.0, 10.0})).norm() <= 1e-15);
}

TEST_CASE("one-count axes use the interval midpoint", "[momentproblem]") {
    ExpansionPlan plan;
    plan.grid_lower = vec({0.0, -1.0});
    plan.grid_upper = vec({4.0, 1.0});
    plan.grid_counts = {1, 2};
    plan.include_data = false;
    const auto z = build_expansion_points(PointList{}, plan);
    REQUIRE(z.size() == 2);
    CHECK(z[0][0] == 2.0);
    CHECK(z[1][0] == 2.0);
}

TEST_CASE("expansion set appends data and extras without duplicates", "[momentproblem]") {
    auto plan = line_plan(0.0, 1.0, 3);
    plan.extra_points = {pt({0.5}), pt({7.0}), pt({7.0})};
    const PointList data = {pt({0.25}), pt({1.0})};  // 1.0 is already a grid point
    const auto z = build_expansion_points(data, plan);
    // grid {0, 0.5, 1} + data {0.25} + extras {7}
    REQUIRE(z.size() == 5);
    CHECK(z[3][0] == 0.25);
    CHECK(z[4][0] == 7.0);

    plan.include_data = false;
    const auto z2 = build_expansion_points(PointList{}, plan);
    CHECK(z2.size() == 4);
}

TEST_CASE("expansion plan validation", "[momentproblem]") {
    ExpansionPlan plan;
    plan.grid_lower = vec({0.0});
    plan.grid_upper = vec({1.0, 2.0});
    plan.grid_counts = {2};
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);

    plan = line_plan(1.0, 0.0, 2);
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);

    plan = line_plan(0.0, 1.0, 0);
    CHECK_THROWS_AS(plan.validate(), std::invalid_argument);

    plan = line_plan(0.0, 1.0, 2);
    CHECK_THROWS_AS(build_expansion_points(PointList{}, plan), std::invalid_argument);
    CHECK_THROWS_AS(build_expansion_points({pt({0.0, 0.0})}, plan), std::invalid_argument);
}

TEST_CASE("cost functions evaluate and validate", "[momentproblem]") {
    const auto tab = CostFunction::tabulated({1.0, 2.0, 3.0});
    CHECK_FALSE(tab.is_indicator());
    const PointList pts = {pt({0.0}), pt({1.0}), pt({2.0})};
    CHECK((tab.evaluate(pts) - vec({1.0, 2.0, 3.0})).norm() == 0.0);
    CHECK_THROWS_AS(tab.evaluate({pt({0.0})}), std::invalid_argument);
    CHECK_THROWS_AS(tab.evaluate(PointList{}), std::invalid_argument);
    CHECK_THROWS_AS(CostFunction::tabulated({}), std::invalid_argument);
    CHECK_THROWS_AS(CostFunction::tabulated({1.0, std::nan("")}), std::invalid_argument);

    const auto ind = CostFunction::indicator([](const Point& x) { return x[0] > 1.5; });
    CHECK(ind.is_indicator());
    CHECK((ind.evaluate(pts) - vec({0.0, 0.0, 1.0})).norm() == 0.0);
    CHECK_THROWS_AS(CostFunction::indicator(nullptr), std::invalid_argument);
}

TEST_CASE("empirical violation frequency", "[momentproblem]") {
    const PointList data = {pt({0.0}), pt({1.0}), pt({2.0}), pt({3.0})};
    const auto above = [](const Point& x) { return x[0] > 1.5; };
    CHECK(empirical_violation_frequency(data, above) == 0.5);
    CHECK(empirical_violation_frequency({pt({0.0})}, above) == 0.0);
    CHECK_THROWS_AS(empirical_violation_frequency(PointList{}, above), std::invalid_argument);
}

TEST_CASE("worst case matches the two-atom closed form", "[momentproblem]") {
    // grid {0, 2} with the data at 0: the adversary moves mass to the far
    // atom, paying sqrt(2 (1 - rho)) per unit
    const auto kernel = KernelSpec::gaussian(1.0);
    const PointList data = {pt({0.0})};
    const auto plan = line_plan(0.0, 2.0, 2);
    const auto violates = [](const Point& x) { return x[0] > 1.0; };
    const double rho = kernel.eval(pt({0.0}), pt({2.0}));
    for (double eps : {0.1, 0.465, 0.9}) {
        const auto r = worst_case_violation_probability(data, kernel, eps, violates, plan);
        const double expected = std::min(1.0, eps / std::sqrt(2.0 * (1.0 - rho)));
        INFO("eps = " << eps);
        CHECK_THAT(r.value, Catch::Matchers::WithinAbs(expected, 1e-6));
        CHECK(r.epsilon == eps);
        CHECK_THAT(r.weights.sum(), Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("zero radius recovers the empirical cost", "[momentproblem]") {
    const auto kernel = KernelSpec::gaussian(0.7);
    const PointList data = {pt({0.2}), pt({0.8}), pt({1.7}), pt({2.6})};
    const auto plan = line_plan(0.0, 3.0, 7);
    const auto violates = [](const Point& x) { return x[0] > 1.5; };
    const auto r = worst_case_violation_probability(data, kernel, 0.0, violates, plan);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(0.5, 1e-6));

    // tabulated costs are aligned to the expansion set built from the plan
    const auto z = build_expansion_points(data, plan);
    std::vector<double> costs;
    for (const auto& p : z) costs.push_back(p[0]);
    const auto rt = worst_case_risk(data, kernel, 0.0, CostFunction::tabulated(costs), plan);
    CHECK_THAT(rt.value, Catch::Matchers::WithinAbs((0.2 + 0.8 + 1.7 + 2.6) / 4.0, 1e-6));
}

TEST_CASE("worst case never drops below the empirical cost", "[momentproblem]") {
    std::mt19937 rng(3317);
    std::uniform_real_distribution<double> u(-1.0, 3.0);
    const auto kernel = KernelSpec::gaussian(1.0);
    const auto violates = [](const Point& x) { return x[0] > 1.2; };
    for (int trial = 0; trial < 5; ++trial) {
        PointList data;
        for (int i = 0; i < 8; ++i) data.push_back(pt({u(rng)}));
        const double freq = empirical_violation_frequency(data, violates);
        for (double eps : {0.0, 0.05, 0.3}) {
            const auto r =
                worst_case_violation_probability(data, kernel, eps, violates, line_plan(-1.0, 3.0, 9));
            CHECK(r.value >= freq - 1e-9);
            CHECK(r.value <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("transport table is sorted and conserves mass", "[momentproblem]") {
    const auto kernel = KernelSpec::gaussian(1.0);
    const PointList data = {pt({0.0}), pt({0.5})};
    const auto r = worst_case_violation_probability(
        data, kernel, 0.3, [](const Point& x) { return x[0] > 1.5; }, line_plan(0.0, 2.0, 5));
    REQUIRE(r.transport_table.size() == r.expansion_points.size());
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < r.transport_table.size(); ++i)
        CHECK(r.transport_table[i].second >= r.transport_table[i + 1].second);
    for (const auto& [point, weight] : r.transport_table) mass += weight;
    CHECK_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("unreachable data raises the infeasibility error", "[momentproblem]") {
    const auto kernel = KernelSpec::gaussian(1.0);
    const PointList data = {pt({50.0})};
    auto plan = line_plan(0.0, 1.0, 3, /*include_data=*/false);
    CHECK_THROWS_AS(worst_case_violation_probability(
                        data, kernel, 0.01, [](const Point& x) { return x[0] > 0.5; }, plan),
                    InfeasibleError);
}

TEST_CASE("input validation on the risk interface", "[momentproblem]") {
    const auto kernel = KernelSpec::gaussian(1.0);
    const auto cost = CostFunction::tabulated({1.0});
    CHECK_THROWS_AS(worst_case_risk(PointList{}, kernel, 0.1, cost, line_plan(0.0, 1.0, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        worst_case_risk({pt({0.0})}, kernel, -0.1, cost, line_plan(0.0, 1.0, 1)),
        std::invalid_argument);
}

TEST_CASE("radius sweep is nondecreasing and anchored at the empirical frequency",
          "[momentproblem]") {
    std::mt19937 rng(808);
    std::normal_distribution<double> normal(0.0, 1.0);
    PointList data;
    for (int i = 0; i < 25; ++i) data.push_back(pt({normal(rng)}));
    const auto kernel = KernelSpec::gaussian(median_heuristic(data));
    const auto violates = [](const Point& x) { return x[0] > 1.8; };
    const std::vector<double> eps = {0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5};
    const auto rows = violation_sweep(data, kernel, eps, violates, line_plan(-3.0, 4.0, 40));
    REQUIRE(rows.size() == eps.size());
    const double freq = empirical_violation_frequency(data, violates);
    CHECK_THAT(rows.front().value, Catch::Matchers::WithinAbs(freq, 1e-6));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].value >= rows[i - 1].value - 1e-9);
    CHECK(rows.back().value > freq);
    CHECK(rows.back().value <= 1.0 + 1e-9);

    CHECK_THROWS_AS(violation_sweep(data, kernel, {}, violates, line_plan(-3.0, 4.0, 4)),
                    std::invalid_argument);
    CHECK_THROWS_AS(violation_sweep(data, kernel, {-0.1}, violates, line_plan(-3.0, 4.0, 4)),
                    std::invalid_argument);
}

TEST_CASE("known moments on a minimal support are uniquely determined", "[momentproblem]") {
    // three distinct atoms in one dimension: mass, mean, and second moment pin
    // the weights exactly, so every cost integrates to its empirical mean
    const PointList z = {pt({-1.0}), pt({0.0}), pt({2.0})};
    const auto m = MomentData::from_data(z);
    const auto cost = CostFunction::tabulated({5.0, 7.0, 11.0});
    const auto r = worst_case_risk_known_moments(m, cost, z);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(23.0 / 3.0, 1e-4));
    for (Eigen::Index i = 0; i < 3; ++i)
        CHECK_THAT(r.weights[i], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-3));
}

TEST_CASE("known moments widen the support to hedge", "[momentproblem]") {
    // with a richer support the adversary can do at least as well
    const PointList data = {pt({-1.0}), pt({0.0}), pt({2.0})};
    const auto m = MomentData::from_data(data);
    PointList z = data;
    z.push_back(pt({3.0}));
    z.push_back(pt({-2.0}));
    const auto violates = [](const Point& x) { return x[0] > 1.5; };
    const auto narrow =
        worst_case_risk_known_moments(m, CostFunction::indicator(violates), data);
    const auto wide = worst_case_risk_known_moments(m, CostFunction::indicator(violates), z);
    CHECK(wide.value >= narrow.value - 1e-7);
    CHECK(wide.value <= 1.0 + 1e-9);
}

TEST_CASE("impossible moment targets raise the infeasibility error", "[momentproblem]") {
    // supported on {0, 1} the mean and second moment must coincide
    MomentData m;
    m.mean = vec({1.0 / 3.0});
    m.second_moment = Matrix::Constant(1, 1, 5.0 / 3.0);
    const PointList z = {pt({0.0}), pt({1.0})};
    CHECK_THROWS_AS(worst_case_risk_known_moments(m, CostFunction::tabulated({0.0, 1.0}), z),
                    InfeasibleError);
}

TEST_CASE("dual certificate bookkeeping", "[momentproblem]") {
    const auto kernel = KernelSpec::gaussian(1.0);
    DualCertificate empty{Vector(), PointList{}, kernel};
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    DualCertificate mismatched{vec({0.5}), {pt({0.0}), pt({1.0})}, kernel};
    CHECK_THROWS_AS(mismatched.validate(), std::invalid_argument);
    DualCertificate cert{vec({0.5, -0.25}), {pt({0.0}), pt({1.0})}, kernel};
    CHECK_NOTHROW(cert.validate());

    CHECK_THROWS_AS(dual_value(cert, PointList{}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(dual_value(cert, {pt({0.0})}, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(dual_feasible(cert, CostFunction::tabulated({1.0}), PointList{}),
                    std::invalid_argument);
}

TEST_CASE("dual certificate value on a single atom", "[momentproblem]") {
    // y = beta k(0, .): <y, embedding of delta_0> = beta, |y|_H = |beta|
    DualCertificate cert{vec({0.8}), {pt({0.0})}, KernelSpec::gaussian(1.0)};
    const PointList data = {pt({0.0})};
    CHECK_THAT(dual_value(cert, data, 0.0), Catch::Matchers::WithinAbs(0.8, 1e-12));
    CHECK_THAT(dual_value(cert, data, 0.5), Catch::Matchers::WithinAbs(0.8 - 0.5 * 0.8, 1e-12));
}

TEST_CASE("feasible certificates stay below the primal value", "[momentproblem]") {
    std::mt19937 rng(5812);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto kernel = KernelSpec::gaussian(1.0);
    const PointList data = {pt({0.0}), pt({0.6}), pt({1.1})};
    const auto plan = line_plan(-0.5, 2.5, 13);
    const auto violates = [](const Point& x) { return x[0] > 1.5; };
    const auto cost = CostFunction::indicator(violates);
    const double eps = 0.25;
    const auto primal = worst_case_violation_probability(data, kernel, eps, violates, plan);

    const PointList support = build_expansion_points(data, plan);
    int feasible_seen = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Vector beta(static_cast<Eigen::Index>(support.size()));
        for (Eigen::Index i = 0; i < beta.size(); ++i) beta[i] = 0.2 * u(rng);
        DualCertificate cert{beta, support, kernel};
        const auto check = dual_feasible(cert, cost, cert.points);
        if (!check.feasible) continue;
        ++feasible_seen;
        CHECK(dual_value(cert, data, eps) <= primal.value + 1e-6);
    }
    // the zero certificate is always feasible, so the loop cannot be vacuous
    DualCertificate zero{vec({0.0}), {pt({0.0})}, kernel};
    REQUIRE(dual_feasible(zero, cost, support).feasible);
    CHECK(dual_value(zero, data, eps) == 0.0);
    INFO("random feasible certificates seen: " << feasible_seen);
    CHECK(feasible_seen > 0);
}
