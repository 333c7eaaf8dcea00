#pragma once

// Gauss-Legendre rules (Newton on Legendre polynomials, cached per order)
// plus small helpers for mapped integration.

#include <cmath>
#include <map>
#include <vector>

#include "cournot/common.hpp"

namespace cournot {

struct QuadRule {
    std::vector<double> x;  // nodes on (-1, 1)
    std::vector<double> w;
};

inline const QuadRule& gauss_legendre(int n) {
    require(n >= 1, "gauss_legendre: order must be >= 1");
    static std::map<int, QuadRule> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Integrate f over [a, b] with an n-node Gauss-Legendre rule.
template <typename F>
double integrate(F&& f, double a, double b, int n) {
    const QuadRule& r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.w[i] * f(mid + half * r.x[i]);
    return s * half;
}

// Expectation against a quantile function: E[g(X)] = int_0^1 g(Q(alpha)) dalpha.
// Robust to density singularities at the support edges.
template <typename G, typename Q>
double expect_by_quantile(G&& g, Q&& quantile, int n) {
    return integrate([&](double alpha) { return g(quantile(alpha)); }, 0.0, 1.0, n);
}

}  // namespace cournot
