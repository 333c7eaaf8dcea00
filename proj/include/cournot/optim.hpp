#pragma once

// Derivative-free optimizers: Nelder-Mead simplex (with an optional restart
// from the incumbent) and golden-section line search. Box constraints are
// handled by a logistic reparameterization, so the simplex itself runs
// unconstrained.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cournot/common.hpp"

namespace cournot {

struct NMOptions {
    double obj_tol = 1e-8;      // spread of simplex values at convergence
    double simplex_tol = 1e-6;  // spread of simplex vertices at convergence
    int max_evals = 40000;
    double init_step = 0.15;    // initial simplex edge, per coordinate
    int restarts = 1;           // rebuild the simplex at the incumbent this many times

    static NMOptions from(const NumericConfig& cfg) {
        NMOptions o;
        o.obj_tol = cfg.nm_obj_tol;
        o.simplex_tol = cfg.nm_simplex_tol;
        o.max_evals = cfg.nm_max_evals;
        return o;
    }
};

struct NMResult {
    std::vector<double> x;
    double value = 0.0;
    int evals = 0;
    bool converged = false;
};

namespace detail {

template <typename F>
NMResult nelder_mead_once(F& f, const std::vector<double>& x0, const NMOptions& opt,
                          int& evals_budget) {
    const std::size_t n = x0.size();
    require(n >= 1, "nelder_mead: empty start point");

    std::vector<std::vector<double>> vx(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double step = opt.init_step * std::max(1.0, std::fabs(x0[i]));
        vx[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= n; ++i) {
        fv[i] = f(vx[i]);
        --evals_budget;
    }

    NMResult res;
    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> vx2(n + 1);
        std::vector<double> fv2(n + 1);
        for (std::size_t i = 0; i <= n; ++i) { vx2[i] = vx[idx[i]]; fv2[i] = fv[idx[i]]; }
        vx.swap(vx2);
        fv.swap(fv2);
    };

    while (evals_budget > 0) {
        order();
        double fspread = std::fabs(fv[n] - fv[0]);
        double xspread = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                xspread = std::max(xspread, std::fabs(vx[i][j] - vx[0][j]));
        if (fspread < opt.obj_tol && xspread < opt.simplex_tol) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += vx[i][j] / double(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + coef * (centroid[j] - vx[n][j]);
            return p;
        };

        auto xr = blend(1.0);
        double fr = f(xr);
        --evals_budget;
        if (fr < fv[0]) {
            auto xe = blend(2.0);
            double fe = f(xe);
            --evals_budget;
            if (fe < fr) { vx[n] = xe; fv[n] = fe; }
            else { vx[n] = xr; fv[n] = fr; }
        } else if (fr < fv[n - 1]) {
            vx[n] = xr;
            fv[n] = fr;
        } else {
            bool outside = fr < fv[n];
            auto xc = blend(outside ? 0.5 : -0.5);
            double fc = f(xc);
            --evals_budget;
            if (fc < std::min(fr, fv[n])) {
                vx[n] = xc;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        vx[i][j] = vx[0][j] + 0.5 * (vx[i][j] - vx[0][j]);
                    fv[i] = f(vx[i]);
                    --evals_budget;
                }
            }
        }
    }
    order();
    res.x = vx[0];
    res.value = fv[0];
    return res;
}

}  // namespace detail

template <typename F>
NMResult nelder_mead(F f, const std::vector<double>& x0, const NMOptions& opt = {}) {
    int budget = opt.max_evals;
    NMResult best = detail::nelder_mead_once(f, x0, opt, budget);
    best.evals = opt.max_evals - budget;
    for (int r = 0; r < opt.restarts && budget > 0; ++r) {
        NMResult again = detail::nelder_mead_once(f, best.x, opt, budget);
        again.evals = opt.max_evals - budget;
        bool improved = again.value < best.value - opt.obj_tol;
        again.converged = again.converged || best.converged;
        best = again;
        if (!improved) break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Box reparameterization: x = lo + (hi - lo) * sigmoid(y).

struct BoxTransform {
    std::vector<double> lo, hi;

    void validate() const {
        require(lo.size() == hi.size() && !lo.empty(), "BoxTransform: bad bounds");
        for (std::size_t i = 0; i < lo.size(); ++i)
            require(lo[i] < hi[i], "BoxTransform: need lo < hi");
    }

    std::vector<double> to_unbounded(const std::vector<double>& x) const {
        require(x.size() == lo.size(), "BoxTransform: dimension mismatch");
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double t = (x[i] - lo[i]) / (hi[i] - lo[i]);
            t = std::min(1.0 - 1e-9, std::max(1e-9, t));
            y[i] = std::log(t / (1.0 - t));
        }
        return y;
    }

    std::vector<double> to_bounded(const std::vector<double>& y) const {
        std::vector<double> x(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-y[i]));
            x[i] = lo[i] + (hi[i] - lo[i]) * s;
        }
        return x;
    }
};

// Minimize f over the box [lo, hi] starting from x0 (interior).
template <typename F>
NMResult minimize_box(F f, const std::vector<double>& x0, const std::vector<double>& lo,
                      const std::vector<double>& hi, const NMOptions& opt = {}) {
    BoxTransform box{lo, hi};
    box.validate();
    auto wrapped = [&](const std::vector<double>& y) { return f(box.to_bounded(y)); };
    NMResult r = nelder_mead(wrapped, box.to_unbounded(x0), opt);
    r.x = box.to_bounded(r.x);
    return r;
}

// Golden-section minimum of a unimodal f on [a, b].
template <typename F>
double golden_section_min(F f, double a, double b, double tol = 1e-10, int max_iter = 200) {
    require(a < b, "golden_section_min: need a < b");
    const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::fabs(a) + std::fabs(b));
         ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace cournot
