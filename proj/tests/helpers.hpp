#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cournot/rng.hpp"

namespace testutil {

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

// Kolmogorov-Smirnov statistic of cdf-transformed draws against U(0,1).
inline double ks_uniform(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const auto n = u.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max(d, std::max(std::abs(u[i] - lo), std::abs(u[i] - hi)));
    }
    return d;
}

// 99.9% critical value for the one-sample KS test, asymptotic.
inline double ks_crit(std::size_t n) {
    return 1.949 / std::sqrt(static_cast<double>(n));
}

inline std::vector<double> draw_many(const std::function<double(cournot::Stream&)>& gen,
                                     std::size_t n, std::uint64_t seed) {
    cournot::Stream rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = gen(rng);
    return out;
}

// Least squares slope of y on x (with intercept).
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace testutil
