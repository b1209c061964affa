#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace fixmann {

using Vec = std::vector<double>;

inline double sup_norm(const Vec& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline double sup_dist(const Vec& x, const Vec& y) {
    double m = 0.0;
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

// Componentwise x <= y + tol.
inline bool leq(const Vec& x, const Vec& y, double tol = 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > y[i] + tol) return false;
    return true;
}

inline bool all_finite_nonneg(const Vec& x) {
    for (double v : x)
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
    return true;
}

// Shortest round-trip decimal representation is not required; 17 significant
// digits are enough to reproduce every double exactly.
std::string format_double(double v);
std::string format_vec(const Vec& x);

}  // namespace fixmann
