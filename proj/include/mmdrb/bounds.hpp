#pragma once

#include <cmath>
#include <stdexcept>

namespace mmdrb {

/// Cantelli tail bound for a standardized threshold c > 0: P(X >= m + c s) <= 1/(1+c^2).
inline double cantelli(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("cantelli: threshold must be positive");
    return 1.0 / (1.0 + c * c);
}

/// Gaussian Chernoff tail bound: P(X >= m + c s) <= exp(-c^2/2) for c > 0.
inline double chernoff_gaussian(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("chernoff_gaussian: threshold must be positive");
    return std::exp(-c * c / 2.0);
}

struct TailBoundReport {
    double threshold = 0.0;
    double cantelli_bound = 0.0;
    double chernoff_bound = 0.0;
};

inline TailBoundReport tail_bounds(double c) {
    return {c, cantelli(c), chernoff_gaussian(c)};
}

}  // namespace mmdrb
