#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mmdrb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point = Eigen::VectorXd;
using PointList = std::vector<Point>;

/// Index of the first point within `tol` (Euclidean) of `p`, or -1 if none.
inline std::ptrdiff_t find_point(const PointList& pts, const Point& p, double tol) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].size() == p.size() && (pts[i] - p).norm() <= tol)
            return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
}

}  // namespace mmdrb
