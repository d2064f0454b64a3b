#pragma once

#include "mmdrb/kernel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mmdrb {

/// Points closer than this (Euclidean) are treated as the same atom.
inline constexpr double kDuplicatePointTol = 1e-10;

/**
 * Finite kernel mean embedding sum_i w_i phi(z_i). Duplicate atoms are merged
 * at construction (weights summed); duplicate columns would make the Gram
 * matrix singular without changing the embedded element.
 */
class EmpiricalEmbedding {
  public:
    EmpiricalEmbedding(const PointList& points, const Vector& weights, KernelSpec kernel)
        : kernel_(std::move(kernel)) {
        if (points.empty())
            throw std::invalid_argument("EmpiricalEmbedding: empty point list");
        if (static_cast<Eigen::Index>(points.size()) != weights.size())
            throw std::invalid_argument("EmpiricalEmbedding: weight count does not match point count");
        detail::check_dims(points, points.front().size(), "EmpiricalEmbedding");
        std::vector<double> merged;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::ptrdiff_t at = find_point(points_, points[i], kDuplicatePointTol);
            if (at < 0) {
                points_.push_back(points[i]);
                merged.push_back(weights[static_cast<Eigen::Index>(i)]);
            } else {
                merged[static_cast<std::size_t>(at)] += weights[static_cast<Eigen::Index>(i)];
            }
        }
        weights_ = Eigen::Map<const Vector>(merged.data(), static_cast<Eigen::Index>(merged.size()));
    }

    const PointList& points() const { return points_; }
    const Vector& weights() const { return weights_; }
    const KernelSpec& kernel() const { return kernel_; }

    /// Weights sum to 1 within 1e-9 and each is >= -1e-12.
    bool is_probability() const {
        return std::abs(weights_.sum() - 1.0) <= 1e-9 && weights_.minCoeff() >= -1e-12;
    }

  private:
    PointList points_;
    Vector weights_;
    KernelSpec kernel_;
};

/// Embedding of the empirical measure (1/M) sum_j phi(x_j).
inline EmpiricalEmbedding embed_uniform(const PointList& data, const KernelSpec& kernel) {
    if (data.empty()) throw std::invalid_argument("embed_uniform: empty data");
    const Vector w = Vector::Constant(static_cast<Eigen::Index>(data.size()),
                                      1.0 / static_cast<double>(data.size()));
    return EmpiricalEmbedding(data, w, kernel);
}

/**
 * Squared MMD between two embeddings via the kernel trick:
 *   a'K_a a - 2 a'K_ab b + b'K_b b.
 * Tiny negative round-off is clamped to 0; anything below -1e-9 indicates an
 * inconsistency upstream and raises.
 */
inline double mmd_sq(const EmpiricalEmbedding& p, const EmpiricalEmbedding& q) {
    if (p.kernel() != q.kernel())
        throw std::invalid_argument("mmd_sq: embeddings use different kernels");
    if (p.points().front().size() != q.points().front().size())
        throw std::invalid_argument("mmd_sq: embeddings have different point dimensions");
    const Matrix kp = gram(p.kernel(), p.points());
    const Matrix kq = gram(q.kernel(), q.points());
    const Matrix kpq = gram(p.kernel(), p.points(), q.points());
    const double v = p.weights().dot(kp * p.weights()) - 2.0 * p.weights().dot(kpq * q.weights()) +
                     q.weights().dot(kq * q.weights());
    if (v < -1e-9)
        throw std::runtime_error("mmd_sq: negative value beyond round-off; kernel is not positive definite");
    return v < 0.0 ? 0.0 : v;
}

/**
 * Coefficients of the ambiguity constraint as a quadratic in the weights:
 *   q(a) = a'Kz a - 2 b'a + c0 <= radius_sq,
 * where q(a) is the squared MMD between sum_i a_i phi(z_i) and the empirical
 * embedding of the data.
 */
struct QuadConstraintCoeffs {
    Matrix Kz;
    Vector b;
    double c0 = 0.0;
    double radius_sq = 0.0;

    double evaluate(const Vector& alpha) const {
        return alpha.dot(Kz * alpha) - 2.0 * b.dot(alpha) + c0;
    }
};

inline QuadConstraintCoeffs quad_coeffs(const PointList& z, const PointList& data,
                                        const KernelSpec& kernel, double epsilon) {
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("quad_coeffs: radius must be nonnegative");
    QuadConstraintCoeffs q;
    q.Kz = gram(kernel, z);
    const Matrix kzx = gram(kernel, z, data);
    const double m = static_cast<double>(data.size());
    q.b = kzx.rowwise().sum() / m;
    q.c0 = gram(kernel, data).sum() / (m * m);
    q.radius_sq = epsilon * epsilon;
    return q;
}

/// First and second moments E[x], E[xx'].
struct MomentData {
    Vector mean;
    Matrix second_moment;

    void validate() const {
        if (mean.size() == 0 || second_moment.rows() != mean.size() ||
            second_moment.cols() != mean.size())
            throw std::invalid_argument("MomentData: shape mismatch");
        const double asym = (second_moment - second_moment.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12)
            throw std::invalid_argument("MomentData: second moment is not symmetric");
        // covariance E[xx'] - E[x]E[x]' must be PSD up to round-off
        const Matrix cov = second_moment - mean * mean.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-8)
            throw std::invalid_argument("MomentData: covariance is not positive semidefinite");
    }

    static MomentData from_data(const PointList& data) {
        if (data.empty()) throw std::invalid_argument("MomentData: empty data");
        const Eigen::Index dim = data.front().size();
        detail::check_dims(data, dim, "MomentData");
        MomentData m;
        m.mean = Vector::Zero(dim);
        m.second_moment = Matrix::Zero(dim, dim);
        for (const auto& x : data) {
            m.mean += x;
            m.second_moment += x * x.transpose();
        }
        m.mean /= static_cast<double>(data.size());
        m.second_moment /= static_cast<double>(data.size());
        return m;
    }
};

/**
 * Constraint coefficients for exact moment matching under the polynomial
 * kernel (x'y + 1)^2. The embedding of a measure with moments (m, S) has
 *   <phi(z), mu> = z'Sz + 2 m'z + 1   and   |mu|^2 = tr(SS) + 2 m'm + 1,
 * so q(a) = 0 holds exactly when the weighted atoms match both moments.
 */
inline QuadConstraintCoeffs poly_moment_quad(const PointList& z, const MomentData& moments) {
    moments.validate();
    if (z.empty()) throw std::invalid_argument("poly_moment_quad: empty expansion set");
    detail::check_dims(z, moments.mean.size(), "poly_moment_quad");
    const KernelSpec kernel = KernelSpec::polynomial(2);
    QuadConstraintCoeffs q;
    q.Kz = gram(kernel, z);
    q.b = Vector(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        const Point& zi = z[i];
        q.b[static_cast<Eigen::Index>(i)] =
            zi.dot(moments.second_moment * zi) + 2.0 * moments.mean.dot(zi) + 1.0;
    }
    q.c0 = (moments.second_moment * moments.second_moment).trace() +
           2.0 * moments.mean.squaredNorm() + 1.0;
    q.radius_sq = 0.0;
    return q;
}

}  // namespace mmdrb
