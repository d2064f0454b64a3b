#pragma once

#include "mmdrb/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmdrb {

enum class KernelFamily { Gaussian, Polynomial, SumOfGaussians };

/**
 * Positive-definite kernel with value semantics.
 *
 * Variants:
 *   Gaussian          k(x,y) = exp(-|x-y|^2 / (2 sigma^2))
 *   Polynomial        k(x,y) = (x'y + 1)^p
 *   SumOfGaussians    k(x,y) = sum_i w_i exp(-|x-y|^2 / (2 (sigma s_i)^2)),
 *                     w on the simplex
 *
 * Evaluation runs the exact same floating-point operations for both argument
 * orders, so eval(x,y) == eval(y,x) bit for bit.
 */
class KernelSpec {
  public:
    static KernelSpec gaussian(double sigma) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("KernelSpec: bandwidth must be positive");
        KernelSpec k;
        k.family_ = KernelFamily::Gaussian;
        k.bandwidths_ = {sigma};
        k.weights_ = {1.0};
        return k;
    }

    static KernelSpec polynomial(int degree) {
        if (degree < 1)
            throw std::invalid_argument("KernelSpec: polynomial degree must be at least 1");
        KernelSpec k;
        k.family_ = KernelFamily::Polynomial;
        k.degree_ = degree;
        return k;
    }

    static KernelSpec sum_of_gaussians(double base_sigma, std::vector<double> scales,
                                       std::vector<double> weights) {
        if (!(base_sigma > 0.0))
            throw std::invalid_argument("KernelSpec: base bandwidth must be positive");
        if (scales.empty() || scales.size() != weights.size())
            throw std::invalid_argument("KernelSpec: scales and weights must be nonempty and equal length");
        double wsum = 0.0;
        for (std::size_t i = 0; i < scales.size(); ++i) {
            if (!(scales[i] > 0.0))
                throw std::invalid_argument("KernelSpec: scale factors must be positive");
            if (weights[i] < 0.0)
                throw std::invalid_argument("KernelSpec: component weights must be nonnegative");
            wsum += weights[i];
        }
        if (std::abs(wsum - 1.0) > 1e-12)
            throw std::invalid_argument("KernelSpec: component weights must sum to 1");
        KernelSpec k;
        k.family_ = KernelFamily::SumOfGaussians;
        k.bandwidths_.reserve(scales.size());
        for (double s : scales) k.bandwidths_.push_back(base_sigma * s);
        k.weights_ = std::move(weights);
        return k;
    }

    /// Sum of Gaussians at bandwidths sigma*s_i with uniform component weights.
    static KernelSpec sum_of_gaussians_from_scales(double base_sigma,
                                                   const std::vector<double>& scales) {
        if (scales.empty())
            throw std::invalid_argument("KernelSpec: scale list must be nonempty");
        std::vector<double> weights(scales.size(), 1.0 / static_cast<double>(scales.size()));
        return sum_of_gaussians(base_sigma, scales, std::move(weights));
    }

    KernelFamily family() const { return family_; }
    int degree() const { return degree_; }
    const std::vector<double>& bandwidths() const { return bandwidths_; }
    const std::vector<double>& component_weights() const { return weights_; }

    double eval(const Point& x, const Point& y) const {
        if (x.size() == 0 || x.size() != y.size())
            throw std::invalid_argument("KernelSpec::eval: dimension mismatch");
        switch (family_) {
            case KernelFamily::Gaussian: {
                const double d2 = (x - y).squaredNorm();
                return std::exp(-d2 / (2.0 * bandwidths_[0] * bandwidths_[0]));
            }
            case KernelFamily::Polynomial: {
                const double base = x.dot(y) + 1.0;
                double r = 1.0;
                for (int i = 0; i < degree_; ++i) r *= base;
                return r;
            }
            case KernelFamily::SumOfGaussians: {
                const double d2 = (x - y).squaredNorm();
                double r = 0.0;
                for (std::size_t i = 0; i < bandwidths_.size(); ++i)
                    r += weights_[i] * std::exp(-d2 / (2.0 * bandwidths_[i] * bandwidths_[i]));
                return r;
            }
        }
        throw std::logic_error("KernelSpec: unknown family");
    }

    bool operator==(const KernelSpec& o) const {
        return family_ == o.family_ && degree_ == o.degree_ &&
               bandwidths_ == o.bandwidths_ && weights_ == o.weights_;
    }
    bool operator!=(const KernelSpec& o) const { return !(*this == o); }

  private:
    KernelSpec() = default;
    KernelFamily family_ = KernelFamily::Gaussian;
    int degree_ = 0;
    std::vector<double> bandwidths_;
    std::vector<double> weights_;
};

namespace detail {
inline void check_dims(const PointList& pts, Eigen::Index dim, const char* who) {
    for (const auto& p : pts)
        if (p.size() != dim) throw std::invalid_argument(std::string(who) + ": inconsistent point dimensions");
}
}  // namespace detail

/// Gram matrix G(i,j) = k(a_i, b_j).
inline Matrix gram(const KernelSpec& kernel, const PointList& a, const PointList& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("gram: empty point list");
    const Eigen::Index dim = a.front().size();
    detail::check_dims(a, dim, "gram");
    detail::check_dims(b, dim, "gram");
    Matrix g(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel.eval(a[i], b[j]);
    return g;
}

/// Symmetric Gram matrix of one point list. The mirrored entries are
/// bit-identical to evaluating both orders since eval is exactly symmetric.
inline Matrix gram(const KernelSpec& kernel, const PointList& pts) {
    if (pts.empty()) throw std::invalid_argument("gram: empty point list");
    const Eigen::Index dim = pts.front().size();
    detail::check_dims(pts, dim, "gram");
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = kernel.eval(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

/**
 * Median-heuristic bandwidth: median over unordered pairs i<j of
 * |x_i - x_j| / sqrt(2). Self-pairs are excluded; an even pair count takes
 * the midpoint of the two central order statistics.
 */
inline double median_heuristic(const PointList& x) {
    if (x.size() < 2)
        throw std::invalid_argument("median_heuristic: need at least 2 points");
    const Eigen::Index dim = x.front().size();
    detail::check_dims(x, dim, "median_heuristic");
    std::vector<double> d;
    d.reserve(x.size() * (x.size() - 1) / 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            d.push_back((x[i] - x[j]).norm() / std::sqrt(2.0));
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    const double med = (n % 2 == 1) ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
    if (!(med > 0.0))
        throw std::invalid_argument("median_heuristic: degenerate data, median pairwise distance is zero");
    return med;
}

}  // namespace mmdrb
