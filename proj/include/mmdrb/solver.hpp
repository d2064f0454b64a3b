#pragma once

#include "mmdrb/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmdrb {

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

/// Raised by the risk-bound layer when no admissible measure exists.
class InfeasibleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    double tol_primal = 1e-8;        // inner-loop iterate-change tolerance
    double tol_bisection = 1e-9;     // relative collapse tolerance on the multiplier interval
    int max_inner_iterations = 10000;
    int max_bisection_steps = 200;
    double jitter = 1e-10;           // diagonal repair for round-off negativity

    void validate() const {
        if (!(tol_primal > 0.0) || !(tol_bisection > 0.0) || !(jitter > 0.0) ||
            max_inner_iterations < 1 || max_bisection_steps < 1)
            throw std::invalid_argument("SolverConfig: tolerances and caps must be positive");
    }
};

/// max c'a  s.t.  a'Kz a - 2 b'a + c0 <= radius_sq,  a in the simplex.
struct SimplexQcqp {
    Vector cost;
    QuadConstraintCoeffs quad;

    Eigen::Index size() const { return cost.size(); }

    void validate() const {
        const Eigen::Index n = cost.size();
        if (n < 1) throw std::invalid_argument("SimplexQcqp: empty cost vector");
        if (quad.Kz.rows() != n || quad.Kz.cols() != n || quad.b.size() != n)
            throw std::invalid_argument("SimplexQcqp: coefficient shapes do not match");
        if (!cost.allFinite() || !quad.Kz.allFinite() || !quad.b.allFinite() ||
            !std::isfinite(quad.c0) || !std::isfinite(quad.radius_sq))
            throw std::invalid_argument("SimplexQcqp: non-finite coefficients");
        if (quad.radius_sq < 0.0)
            throw std::invalid_argument("SimplexQcqp: negative squared radius");
    }
};

struct Solution {
    Vector alpha;
    double value = 0.0;
    double multiplier = 0.0;          // lambda >= 0 for the quadratic constraint
    double constraint_residual = 0.0; // q(alpha) - radius_sq
    SolveStatus status = SolveStatus::MaxIterations;
    long iterations = 0;              // total inner gradient iterations
    double dual_value = std::numeric_limits<double>::quiet_NaN();  // Lagrangian upper bound
    bool jitter_applied = false;
};

/// Euclidean projection onto {a : a >= 0, sum a = 1} by sort and threshold.
inline Vector project_simplex(const Vector& v) {
    if (v.size() < 1) throw std::invalid_argument("project_simplex: empty vector");
    if (!v.allFinite()) throw std::invalid_argument("project_simplex: non-finite input");
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0;
    double tau = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cum += u[static_cast<std::size_t>(j)];
        const double t = (cum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) tau = t;
    }
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = std::max(v[i] - tau, 0.0);
    return out;
}

namespace detail {

/// Largest-eigenvalue estimate by fixed-start power iteration.
inline double top_eigenvalue_power(const Matrix& a, int steps = 50) {
    const Eigen::Index n = a.rows();
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
    v /= v.norm();
    double lam = 0.0;
    for (int s = 0; s < steps; ++s) {
        Vector w = a * v;
        const double nw = w.norm();
        if (nw <= 1e-300) return 0.0;
        lam = v.dot(w);
        v = w / nw;
    }
    return std::max(lam, v.dot(a * v));
}

/// Smallest-eigenvalue estimate via a shifted power iteration.
inline double min_eigenvalue_estimate(const Matrix& a) {
    const double top = std::max(top_eigenvalue_power(a), a.diagonal().maxCoeff());
    const double shift = top * 1.02 + 1e-12;
    const Matrix flipped = shift * Matrix::Identity(a.rows(), a.cols()) - a;
    return shift - top_eigenvalue_power(flipped);
}

/// Gradient steps without an objective improvement before the inner loops
/// give up and hand over to the exact face refinement.
inline constexpr int kStallWindow = 40;

/**
 * Solve the face-restricted equality system of min (1/2) x'A x - r'x subject
 * to sum(x) = 1 with x supported on `face`. Writes the face values and the
 * sum-constraint multiplier; returns false when the linear system cannot be
 * solved to working accuracy even with a small ridge.
 */
inline bool solve_face(const Matrix& a, const Vector& r, const std::vector<Eigen::Index>& face,
                       Vector& x_out, double& nu_out) {
    const Eigen::Index s = static_cast<Eigen::Index>(face.size());
    Matrix kkt = Matrix::Zero(s + 1, s + 1);
    Vector rhs(s + 1);
    for (Eigen::Index i = 0; i < s; ++i) {
        for (Eigen::Index j = 0; j < s; ++j)
            kkt(i, j) = a(face[static_cast<std::size_t>(i)], face[static_cast<std::size_t>(j)]);
        kkt(i, s) = 1.0;
        kkt(s, i) = 1.0;
        rhs[i] = r[face[static_cast<std::size_t>(i)]];
    }
    rhs[s] = 1.0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) {
            const double ridge =
                1e-10 * (1.0 + kkt.topLeftCorner(s, s).diagonal().cwiseAbs().maxCoeff());
            kkt.topLeftCorner(s, s).diagonal().array() += ridge;
        }
        const Vector sol = Eigen::PartialPivLU<Matrix>(kkt).solve(rhs);
        if (!sol.allFinite()) continue;
        const double resid = (kkt * sol - rhs).lpNorm<Eigen::Infinity>();
        if (resid > 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>() + sol.lpNorm<Eigen::Infinity>()))
            continue;
        x_out = sol.head(s);
        nu_out = sol[s];
        return true;
    }
    return false;
}

/**
 * Active-set refinement for min (1/2) x'A x - r'x over the simplex (A PSD).
 * Each candidate face is solved exactly through its KKT system; entries leave
 * a face when the face solution turns negative and enter by the most negative
 * reduced gradient (lowest index on ties). Returns the best simplex point
 * seen, never worse than the start. Deterministic.
 */
inline Vector simplex_qp_refine(const Matrix& a, const Vector& r, const Vector& start,
                                int outer_cap = 50) {
    const Eigen::Index n = r.size();
    const auto fval = [&](const Vector& x) { return 0.5 * x.dot(a * x) - r.dot(x); };
    Vector best = project_simplex(start);
    double best_f = fval(best);

    std::vector<Eigen::Index> face;
    for (Eigen::Index i = 0; i < n; ++i)
        if (best[i] > 1e-12) face.push_back(i);
    if (face.empty()) face.push_back(0);

    for (int outer = 0; outer < outer_cap; ++outer) {
        Vector xf;
        double nu = 0.0;
        if (!solve_face(a, r, face, xf, nu)) break;
        if (xf.minCoeff() < -1e-14) {
            std::vector<Eigen::Index> kept;
            for (std::size_t i = 0; i < face.size(); ++i)
                if (xf[static_cast<Eigen::Index>(i)] > 0.0) kept.push_back(face[i]);
            if (kept.empty() || kept.size() == face.size()) break;
            face = std::move(kept);
            continue;
        }
        Vector x = Vector::Zero(n);
        for (std::size_t i = 0; i < face.size(); ++i)
            x[face[i]] = std::max(xf[static_cast<Eigen::Index>(i)], 0.0);
        const double fx = fval(x);
        if (fx < best_f) {
            best_f = fx;
            best = x;
        }
        // KKT over the full simplex: g_i >= -nu for all i, met on the face
        const Vector g = a * x - r;
        std::vector<char> in_face(static_cast<std::size_t>(n), 0);
        for (Eigen::Index i : face) in_face[static_cast<std::size_t>(i)] = 1;
        const double tol = 1e-11 * (1.0 + g.lpNorm<Eigen::Infinity>() + std::abs(nu));
        Eigen::Index enter = -1;
        double worst = tol;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_face[static_cast<std::size_t>(i)]) continue;
            const double violation = -nu - g[i];
            if (violation > worst) {
                worst = violation;
                enter = i;
            }
        }
        if (enter < 0) break;
        face.push_back(enter);
        std::sort(face.begin(), face.end());
    }
    return best;
}

struct Inner {
    Vector alpha;
    double objective = 0.0;     // c'a - lambda (q(a) - radius_sq)
    double quad_value = 0.0;    // q(a)
    long iterations = 0;
    double fw_gap = 0.0;        // Frank-Wolfe certificate: dual(lambda) <= objective + fw_gap
};

/**
 * Accelerated projected gradient for the penalized concave program
 *   max_{a in simplex} c'a - lambda (q(a) - radius_sq).
 * Step 1/L with L the gradient Lipschitz constant 2 lambda lambda_max(Kz);
 * momentum restarts whenever the objective decreases.
 */
inline Inner maximize_penalized(const SimplexQcqp& p, double lambda, double q_top_eig,
                                const Vector& start, const SolverConfig& cfg,
                                long iter_cap = 0) {
    if (iter_cap <= 0 || iter_cap > cfg.max_inner_iterations)
        iter_cap = cfg.max_inner_iterations;
    const Matrix& Q = p.quad.Kz;
    const Vector& b = p.quad.b;
    const Vector& c = p.cost;
    auto qval = [&](const Vector& a) { return a.dot(Q * a) - 2.0 * b.dot(a) + p.quad.c0; };
    auto fval = [&](const Vector& a, double qa) {
        return c.dot(a) - lambda * (qa - p.quad.radius_sq);
    };

    Inner r;
    if (lambda * q_top_eig <= 1e-300) {
        // no curvature: the maximizer is the best vertex
        Eigen::Index istar = 0;
        for (Eigen::Index i = 1; i < c.size(); ++i)
            if (c[i] > c[istar]) istar = i;
        r.alpha = Vector::Zero(c.size());
        r.alpha[istar] = 1.0;
        r.quad_value = qval(r.alpha);
        r.objective = fval(r.alpha, r.quad_value);
        return r;  // exact maximizer, gap 0
    }

    const double step = 1.0 / (2.0 * lambda * q_top_eig);
    Vector alpha = project_simplex(start);
    double q_alpha = qval(alpha);
    double f_alpha = fval(alpha, q_alpha);
    Vector best_alpha = alpha;
    double best_f = f_alpha;
    double best_q = q_alpha;
    Vector y = alpha;
    double t = 1.0;
    long it = 0;
    int stall = 0;
    while (it < iter_cap) {
        ++it;
        Vector next = project_simplex(y + step * (c + 2.0 * lambda * (b - Q * y)));
        double q_next = qval(next);
        double f_next = fval(next, q_next);
        if (f_next < f_alpha) {
            // momentum overshoot: restart from the current iterate
            next = project_simplex(alpha + step * (c + 2.0 * lambda * (b - Q * alpha)));
            q_next = qval(next);
            f_next = fval(next, q_next);
            t = 1.0;
        }
        const double move = (next - alpha).lpNorm<Eigen::Infinity>();
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - alpha);
        alpha = next;
        q_alpha = q_next;
        f_alpha = f_next;
        t = t_next;
        if (f_alpha > best_f + 1e-12 * (1.0 + std::abs(best_f))) {
            best_f = f_alpha;
            best_alpha = alpha;
            best_q = q_alpha;
            stall = 0;
        } else {
            ++stall;
        }
        if (move <= cfg.tol_primal || stall >= kStallWindow) break;
    }
    // exact polish on the identified face: minimize lambda q - c'a
    const Vector refined =
        simplex_qp_refine(2.0 * lambda * Q, c + 2.0 * lambda * b, best_alpha, 30);
    const double q_ref = qval(refined);
    const double f_ref = fval(refined, q_ref);
    if (f_ref > best_f) {
        best_f = f_ref;
        best_alpha = refined;
        best_q = q_ref;
    }
    r.alpha = best_alpha;
    r.objective = best_f;
    r.quad_value = best_q;
    r.iterations = it;
    // Frank-Wolfe gap: for the concave inner problem, the true maximum is at
    // most objective + max_i grad_i - grad'alpha, making objective + gap a
    // certified value of dual(lambda) regardless of inner convergence
    const Vector g = c + 2.0 * lambda * (b - Q * best_alpha);
    r.fw_gap = std::max(0.0, g.maxCoeff() - g.dot(best_alpha));
    return r;
}

}  // namespace detail

struct MinQuadResult {
    Vector alpha;
    double value = 0.0;
    long iterations = 0;
};

/// min q(a) over the simplex by projected-gradient descent from the uniform
/// start (acceleration with a monotone safeguard, so the start is never
/// worsened), finished by an exact refinement on the identified face. Used as
/// the feasibility oracle: the ambiguity ball meets the expansion simplex iff
/// the minimum is below the squared radius.
inline MinQuadResult min_quadratic_over_simplex(const QuadConstraintCoeffs& quad,
                                                const SolverConfig& config = {}) {
    config.validate();
    const Eigen::Index n = quad.b.size();
    if (n < 1 || quad.Kz.rows() != n || quad.Kz.cols() != n)
        throw std::invalid_argument("min_quadratic_over_simplex: coefficient shapes do not match");
    const double top = std::max(detail::top_eigenvalue_power(quad.Kz),
                                quad.Kz.diagonal().maxCoeff());
    const double step = 1.0 / std::max(2.0 * top, 1e-300);
    Vector alpha = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double q_alpha = quad.evaluate(alpha);
    Vector best_alpha = alpha;
    double best_q = q_alpha;
    Vector y = alpha;
    double t = 1.0;
    long it = 0;
    int stall = 0;
    while (it < config.max_inner_iterations) {
        ++it;
        Vector next = project_simplex(y - step * 2.0 * (quad.Kz * y - quad.b));
        double q_next = quad.evaluate(next);
        if (q_next > q_alpha) {
            // overshoot: fall back to the plain descent step and restart momentum
            next = project_simplex(alpha - step * 2.0 * (quad.Kz * alpha - quad.b));
            q_next = quad.evaluate(next);
            t = 1.0;
        }
        const double move = (next - alpha).lpNorm<Eigen::Infinity>();
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - alpha);
        alpha = next;
        q_alpha = q_next;
        t = t_next;
        if (q_alpha < best_q - 1e-16 * (1.0 + std::abs(best_q))) {
            best_q = q_alpha;
            best_alpha = alpha;
            stall = 0;
        } else {
            ++stall;
        }
        if (move <= config.tol_primal || stall >= detail::kStallWindow) break;
    }
    const Vector refined = detail::simplex_qp_refine(2.0 * quad.Kz, 2.0 * quad.b, best_alpha);
    const double q_ref = quad.evaluate(refined);
    if (q_ref < best_q) {
        best_q = q_ref;
        best_alpha = refined;
    }
    MinQuadResult r;
    r.alpha = best_alpha;
    r.value = best_q;
    r.iterations = it;
    return r;
}

namespace detail {

/// Exact crossing of q along the segment from a feasible point toward an
/// infeasible one. q is quadratic on the segment and the objective linear, so
/// the boundary point dominates the feasible endpoint.
inline Vector boundary_interpolate(const SimplexQcqp& p, const Vector& feas, const Vector& infeas) {
    const Vector d = infeas - feas;
    const double A = d.dot(p.quad.Kz * d);
    const double B = 2.0 * (feas.dot(p.quad.Kz * d) - p.quad.b.dot(d));
    const double C = p.quad.evaluate(feas) - p.quad.radius_sq;  // <= 0
    double theta = 0.0;
    if (A > 1e-300) {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) theta = (-B + std::sqrt(disc)) / (2.0 * A);
    } else if (B > 1e-300) {
        theta = -C / B;
    }
    theta = std::clamp(theta, 0.0, 1.0);
    return feas + theta * d;
}

}  // namespace detail

/**
 * Solve the simplex-constrained QCQP
 *   max c'a  s.t.  q(a) = a'Kz a - 2 b'a + c0 <= radius_sq,  a in the simplex.
 *
 * The problem is concave with a convex feasible set, so the plan is
 *   (i)   feasibility: min q over the simplex; infeasible if the minimum
 *         exceeds the squared radius,
 *   (ii)  the unconstrained maximizer is the best cost vertex; if it is
 *         feasible the constraint is slack and lambda = 0,
 *   (iii) otherwise bisection on the multiplier lambda of the penalized
 *         program max c'a - lambda (q(a) - radius_sq), whose constraint value
 *         is nonincreasing in lambda; the best feasible iterate is returned
 *         and the Lagrangian value bounds the optimum from above.
 *
 * A zero radius is an exact-matching constraint (no strictly feasible point
 * exists), handled by penalty escalation with feasibility tolerance 1e-9.
 */
inline Solution solve(const SimplexQcqp& problem, const SolverConfig& config = {}) {
    problem.validate();
    config.validate();
    const Eigen::Index n = problem.size();
    const double eps_sq = problem.quad.radius_sq;

    Solution out;
    long total_iterations = 0;

    // PSD gate: mild round-off negativity gets diagonal jitter, anything
    // larger indicates a broken kernel matrix
    SimplexQcqp prob = problem;
    const double min_eig = detail::min_eigenvalue_estimate(prob.quad.Kz);
    if (min_eig < -1e-4)
        throw std::invalid_argument("solve: constraint matrix is not positive semidefinite (min eigenvalue " +
                                    std::to_string(min_eig) + ")");
    if (min_eig < -1e-8) {
        prob.quad.Kz.diagonal().array() += config.jitter;
        out.jitter_applied = true;
    }
    const double q_top = std::max(detail::top_eigenvalue_power(prob.quad.Kz),
                                  prob.quad.Kz.diagonal().maxCoeff());

    // (i) feasibility
    const MinQuadResult mq = min_quadratic_over_simplex(prob.quad, config);
    total_iterations += mq.iterations;
    if (mq.value > eps_sq + 1e-9) {
        out.alpha = mq.alpha;
        out.value = prob.cost.dot(mq.alpha);
        out.multiplier = 0.0;
        out.constraint_residual = mq.value - eps_sq;
        out.status = SolveStatus::Infeasible;
        out.iterations = total_iterations;
        return out;
    }

    // (ii) unconstrained maximizer: best vertex, lowest index on ties
    Eigen::Index istar = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (prob.cost[i] > prob.cost[istar]) istar = i;
    Vector vertex = Vector::Zero(n);
    vertex[istar] = 1.0;
    const double q_vertex = prob.quad.evaluate(vertex);
    if (q_vertex <= eps_sq) {
        out.alpha = vertex;
        out.value = prob.cost[istar];
        out.multiplier = 0.0;
        out.constraint_residual = q_vertex - eps_sq;
        out.status = SolveStatus::Optimal;
        out.dual_value = prob.cost[istar];
        out.iterations = total_iterations;
        return out;
    }

    double dual_best = prob.cost[istar];  // Lagrangian value at lambda = 0

    if (eps_sq <= 0.0) {
        // Zero radius: maximize the cost over the zero set of q by penalty
        // escalation, warm-starting each stage from the previous one. Penalty
        // values approach the optimum from above as the weight grows, so the
        // answer is the highest-weight stage that stays within the 1e-9
        // feasibility tolerance, not the best value seen.
        Vector alpha = mq.alpha;
        double best_val = -std::numeric_limits<double>::infinity();
        Vector best_alpha;
        double best_q = std::numeric_limits<double>::infinity();
        double mu_best = 0.0;
        double prev_val = std::numeric_limits<double>::quiet_NaN();
        double mu = 10.0;
        for (int stage = 0; stage < 11; ++stage) {
            const detail::Inner in = detail::maximize_penalized(prob, mu, q_top, alpha, config);
            total_iterations += in.iterations;
            alpha = in.alpha;
            dual_best = std::min(dual_best, in.objective + in.fw_gap);
            const double val = prob.cost.dot(alpha);
            if (in.quad_value <= 1e-9) {
                best_val = val;
                best_alpha = alpha;
                best_q = in.quad_value;
                mu_best = mu;
            }
            const bool settled = std::isfinite(prev_val) && std::abs(val - prev_val) <= 1e-9;
            if (in.quad_value <= 1e-12 && settled && mu >= 1e8) break;
            prev_val = val;
            mu *= 10.0;
        }
        out.iterations = total_iterations;
        out.dual_value = dual_best;
        if (!std::isfinite(best_val)) {
            out.alpha = alpha;
            out.value = prob.cost.dot(alpha);
            out.multiplier = mu / 10.0;
            out.constraint_residual = prob.quad.evaluate(alpha);
            out.status = SolveStatus::MaxIterations;
            return out;
        }
        out.alpha = best_alpha;
        out.value = best_val;
        out.constraint_residual = best_q;
        // the exact-matching constraint has no finite KKT multiplier; report
        // the penalty weight clamped into the complementarity tolerance
        out.multiplier = std::min(mu_best, 5e-7 / std::max(best_q, 1e-16));
        out.status = SolveStatus::Optimal;
        return out;
    }

    // (iii) multiplier bisection. Bracket: lambda_lo keeps the constraint
    // violated, lambda_hi satisfies it. Inner solves during bracketing run on
    // a reduced iteration budget; the face refinement inside each call and
    // the final boundary interpolation carry the precision.
    const long bracket_cap = std::min<long>(config.max_inner_iterations, 1500);
    double lam_lo = 0.0;
    Vector lo_alpha = vertex;  // infeasible-side iterate for the final interpolation
    double lam_hi = 1.0;
    detail::Inner hi = detail::maximize_penalized(prob, lam_hi, q_top, mq.alpha, config, bracket_cap);
    total_iterations += hi.iterations;
    dual_best = std::min(dual_best, hi.objective + hi.fw_gap);
    int doublings = 0;
    while (hi.quad_value > eps_sq && doublings < 60) {
        lam_lo = lam_hi;
        lo_alpha = hi.alpha;
        lam_hi *= 2.0;
        ++doublings;
        hi = detail::maximize_penalized(prob, lam_hi, q_top, hi.alpha, config, bracket_cap);
        total_iterations += hi.iterations;
        dual_best = std::min(dual_best, hi.objective + hi.fw_gap);
    }
    if (hi.quad_value > eps_sq) {
        // could not reach the feasible side; fall back to the constraint minimizer
        out.alpha = mq.alpha;
        out.value = prob.cost.dot(mq.alpha);
        out.multiplier = lam_hi;
        out.constraint_residual = mq.value - eps_sq;
        out.status = SolveStatus::MaxIterations;
        out.iterations = total_iterations;
        out.dual_value = dual_best;
        return out;
    }

    double best_val = prob.cost.dot(hi.alpha);
    Vector best_alpha = hi.alpha;
    double best_lam = lam_hi;
    double best_q = hi.quad_value;
    Vector warm = hi.alpha;  // nearest solved multiplier makes the best start

    for (int step = 0; step < config.max_bisection_steps; ++step) {
        if (lam_hi - lam_lo <= config.tol_bisection * std::max(1.0, lam_hi)) break;
        const double lam_mid = 0.5 * (lam_lo + lam_hi);
        const detail::Inner mid =
            detail::maximize_penalized(prob, lam_mid, q_top, warm, config, bracket_cap);
        total_iterations += mid.iterations;
        dual_best = std::min(dual_best, mid.objective + mid.fw_gap);
        warm = mid.alpha;
        const double res = mid.quad_value - eps_sq;
        if (res > 0.0) {
            lam_lo = lam_mid;
            lo_alpha = mid.alpha;
        } else {
            lam_hi = lam_mid;
            const double v = prob.cost.dot(mid.alpha);
            if (v >= best_val) {
                best_val = v;
                best_alpha = mid.alpha;
                best_lam = lam_mid;
                best_q = mid.quad_value;
            }
            if (lam_mid * (-res) <= 5e-7) break;
        }
    }

    // close the bracket gap: the exact boundary crossing of the final segment
    // dominates the feasible endpoint
    {
        const Vector cand = detail::boundary_interpolate(prob, best_alpha, lo_alpha);
        const double q_cand = prob.quad.evaluate(cand);
        const double v_cand = prob.cost.dot(cand);
        if (q_cand <= eps_sq + 1e-12 && v_cand > best_val) {
            best_val = v_cand;
            best_alpha = cand;
            best_lam = 0.5 * (lam_lo + lam_hi);
            best_q = q_cand;
        }
    }

    out.alpha = best_alpha;
    out.value = best_val;
    out.multiplier = best_lam;
    out.constraint_residual = best_q - eps_sq;
    out.iterations = total_iterations;
    out.dual_value = dual_best;
    const bool feasible_enough = out.constraint_residual <= 1e-7;
    const bool complementary = best_lam * std::abs(out.constraint_residual) <= 1e-6;
    out.status = (feasible_enough && complementary) ? SolveStatus::Optimal
                                                    : SolveStatus::MaxIterations;
    return out;
}

/**
 * Reference solver: exhaustive simplex-grid enumeration plus a short
 * hinge-penalized projected-gradient polish. Independent of solve() except
 * for the shared simplex projection; intended for cross-checking on small
 * instances (N <= 5).
 */
inline Solution oracle_solve(const SimplexQcqp& problem, double grid_resolution = 0.0) {
    problem.validate();
    const Eigen::Index n = problem.size();
    if (n > 5)
        throw std::invalid_argument("oracle_solve: supports at most 5 weights");
    const double res = grid_resolution > 0.0 ? grid_resolution : (n <= 3 ? 0.01 : 0.05);
    const int S = std::max(1, static_cast<int>(std::lround(1.0 / res)));
    const double eps_sq = problem.quad.radius_sq;
    const double feas_tol = 1e-9;

    Solution out;
    double best_val = -std::numeric_limits<double>::infinity();
    Vector best_alpha;
    double best_q = 0.0;
    double min_q = std::numeric_limits<double>::infinity();
    Vector min_q_alpha;

    // enumerate all weight vectors with entries k_i / S summing to 1
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    Vector alpha(n);
    auto visit = [&](auto&& self, Eigen::Index pos, int remaining) -> void {
        if (pos == n - 1) {
            counts[static_cast<std::size_t>(pos)] = remaining;
            for (Eigen::Index i = 0; i < n; ++i)
                alpha[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / S;
            const double q = problem.quad.evaluate(alpha);
            if (q < min_q) {
                min_q = q;
                min_q_alpha = alpha;
            }
            if (q <= eps_sq + feas_tol) {
                const double v = problem.cost.dot(alpha);
                if (v > best_val) {
                    best_val = v;
                    best_alpha = alpha;
                    best_q = q;
                }
            }
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            counts[static_cast<std::size_t>(pos)] = k;
            self(self, pos + 1, remaining - k);
        }
    };
    visit(visit, 0, S);

    // polish: staged hinge penalty, 200 projected-gradient steps total,
    // keeping the best feasible iterate
    Vector x = std::isfinite(best_val) ? best_alpha : min_q_alpha;
    const double q_top = std::max(detail::top_eigenvalue_power(problem.quad.Kz),
                                  problem.quad.Kz.diagonal().maxCoeff());
    const double cmax = problem.cost.lpNorm<Eigen::Infinity>();
    for (double rho : {1.0, 10.0, 100.0, 1000.0}) {
        const double weight = rho * (1.0 + cmax);
        const double step = 1.0 / (2.0 * weight * std::max(q_top, 1e-300) + 1.0);
        for (int it = 0; it < 50; ++it) {
            const double q = problem.quad.evaluate(x);
            Vector grad = problem.cost;
            if (q > eps_sq) grad -= weight * 2.0 * (problem.quad.Kz * x - problem.quad.b);
            x = project_simplex(x + step * grad);
            const double qx = problem.quad.evaluate(x);
            if (qx <= eps_sq + feas_tol) {
                const double v = problem.cost.dot(x);
                if (v > best_val) {
                    best_val = v;
                    best_alpha = x;
                    best_q = qx;
                }
            }
        }
    }

    if (!std::isfinite(best_val)) {
        out.alpha = min_q_alpha;
        out.value = problem.cost.dot(min_q_alpha);
        out.constraint_residual = min_q - eps_sq;
        out.status = SolveStatus::Infeasible;
        return out;
    }

    // edge refinement: from the incumbent, slide toward each vertex as far as
    // the ball allows; along alpha + t (e_j - alpha) the constraint is an
    // exact quadratic in t, so the admissible step has a closed form and the
    // value is linear in t. Sweeping vertices removes the grid-resolution
    // error of the enumeration stage.
    for (int sweep = 0; sweep < 200; ++sweep) {
        double gain = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (problem.cost[j] <= problem.cost.dot(best_alpha)) continue;
            Vector d = -best_alpha;
            d[j] += 1.0;
            const double a2 = d.dot(problem.quad.Kz * d);
            const double a1 = 2.0 * d.dot(problem.quad.Kz * best_alpha - problem.quad.b);
            const double a0 = problem.quad.evaluate(best_alpha) - eps_sq;
            double t;
            if (a2 <= 1e-300) {
                t = a1 > 0.0 ? std::min(1.0, -a0 / a1) : 1.0;
            } else {
                const double disc = std::max(a1 * a1 - 4.0 * a2 * a0, 0.0);
                t = std::min(1.0, (-a1 + std::sqrt(disc)) / (2.0 * a2));
            }
            if (t <= 0.0) continue;
            const Vector moved = best_alpha + t * d;
            const double q_moved = problem.quad.evaluate(moved);
            const double v_moved = problem.cost.dot(moved);
            if (q_moved <= eps_sq + feas_tol && v_moved > best_val) {
                gain += v_moved - best_val;
                best_val = v_moved;
                best_alpha = moved;
                best_q = q_moved;
            }
        }
        if (gain <= 1e-14) break;
    }

    out.alpha = best_alpha;
    out.value = best_val;
    out.constraint_residual = best_q - eps_sq;
    out.status = SolveStatus::Optimal;
    return out;
}

}  // namespace mmdrb
