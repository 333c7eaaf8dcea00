#pragma once

// Core market model: linear inverse demand p = u - beta * Q, quadratic cost
// (v + w) q + lambda q^2 / 2, n firms with privately known cost components v_i.
// Provides the Bayesian equilibrium strategy in closed form, the
// complete-information benchmark with nonnegativity handled by iterative
// removal, and a conduct-parameter generalization of the first-order
// conditions.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cournot/common.hpp"
#include "cournot/linalg.hpp"

namespace cournot {

struct ModelPrimitives {
    std::size_t n = 0;      // number of firms
    double beta = 1.0;      // demand slope
    double lambda = 0.0;    // cost curvature
    std::vector<double> mu_v;  // means of the private cost components
    std::vector<double> v_lo, v_hi;  // support bounds of V_i
    double w_lo = 0.0, w_hi = 0.0;   // support bounds of the common cost shock
    double u_lo = 0.0;               // lower bound of the demand shock

    void validate() const {
        require(n >= 2, "ModelPrimitives: need at least two firms");
        require(beta > 0.0, "ModelPrimitives: beta must be positive");
        require(lambda >= 0.0, "ModelPrimitives: lambda must be nonnegative");
        require(mu_v.size() == n && v_lo.size() == n && v_hi.size() == n,
                "ModelPrimitives: per-firm vectors must have length n");
        for (std::size_t i = 0; i < n; ++i) {
            require(v_lo[i] <= mu_v[i] && mu_v[i] <= v_hi[i],
                    "ModelPrimitives: need v_lo <= mu_v <= v_hi");
        }
        require(w_lo <= 0.0 && 0.0 <= w_hi, "ModelPrimitives: W support must contain 0");
        require(u_lo > 0.0, "ModelPrimitives: u_lo must be positive");
    }

    // slope of the equilibrium strategy in (u - w)
    double gamma1() const { return 1.0 / (lambda + (n + 1) * beta); }

    // location term G_i / (lambda + beta) entering the strategy intercept
    double g(std::size_t i) const {
        double sum_rivals = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sum_rivals += mu_v[j];
        double G = (lambda + n * beta) * mu_v[i] - beta * sum_rivals;
        return G / (lambda + beta);
    }
};

// Equilibrium output of firm i at private cost v, common shock w, demand u.
inline double equilibrium_quantity(const ModelPrimitives& m, std::size_t i, double v,
                                   double w, double u) {
    return m.gamma1() * (u - w - m.g(i)) - (v - m.mu_v[i]) / (m.lambda + 2.0 * m.beta);
}

// Expected rival output sum E[Q+_{-i} | w, u]: rivals evaluated at their means.
inline double interim_rival_expectation(const ModelPrimitives& m, std::size_t i, double w,
                                        double u) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.n; ++j)
        if (j != i) s += equilibrium_quantity(m, j, m.mu_v[j], w, u);
    return s;
}

// First-order-condition residual of a candidate output q for firm i.
inline double foc_residual(const ModelPrimitives& m, std::size_t i, double v, double w,
                           double u, double q) {
    double rivals = interim_rival_expectation(m, i, w, u);
    double implied = (u - m.beta * rivals - w - v) / (m.lambda + 2.0 * m.beta);
    return q - implied;
}

// ---------------------------------------------------------------------------
// Admissibility: the two worst-case conditions that keep the closed form an
// equilibrium. (1) price stays nonnegative when demand is lowest and every
// firm produces the most; (2) every firm still wants to produce at its worst
// draw (highest own and common cost, lowest demand).

struct AdmissibilityReport {
    bool ok = false;
    double worst_case_price = 0.0;            // condition (1) slack
    std::vector<double> min_quantities;       // condition (2) slack per firm
};

inline AdmissibilityReport check_admissibility(const ModelPrimitives& m) {
    m.validate();
    AdmissibilityReport r;
    double qsum = 0.0;
    for (std::size_t i = 0; i < m.n; ++i)
        qsum += equilibrium_quantity(m, i, m.v_lo[i], m.w_lo, m.u_lo);
    r.worst_case_price = m.u_lo - m.beta * qsum;

    r.min_quantities.resize(m.n);
    bool all_nonneg = r.worst_case_price >= 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
        r.min_quantities[i] = equilibrium_quantity(m, i, m.v_hi[i], m.w_hi, m.u_lo);
        all_nonneg = all_nonneg && r.min_quantities[i] >= 0.0;
    }
    r.ok = all_nonneg;
    return r;
}

// Lowest equilibrium output of firm i (attained at v_hi, w_hi, u_lo).
inline double min_quantity(const ModelPrimitives& m, std::size_t i) {
    return equilibrium_quantity(m, i, m.v_hi[i], m.w_hi, m.u_lo);
}

// ---------------------------------------------------------------------------
// Complete-information benchmark. Costs are commonly known; candidate outputs
// can be negative, in which case the highest-cost violating firm exits and the
// subgame is re-solved until the remaining outputs are nonnegative and every
// inactive firm has nonpositive marginal profit at zero.

inline std::vector<double> complete_info_quantities(const ModelPrimitives& m,
                                                    const std::vector<double>& v, double w,
                                                    double u) {
    require(v.size() == m.n, "complete_info_quantities: cost vector length mismatch");
    const double lb = m.lambda + m.beta;
    std::vector<bool> active(m.n, true);
    std::vector<double> q(m.n, 0.0);

    for (std::size_t round = 0; round <= 2 * m.n; ++round) {
        std::size_t na = 0;
        double vbar = 0.0;
        for (std::size_t i = 0; i < m.n; ++i)
            if (active[i]) { vbar += v[i]; ++na; }
        if (na == 0) break;
        vbar /= double(na);

        double common = (u - w - vbar) / (m.lambda + (na + 1) * m.beta);
        std::fill(q.begin(), q.end(), 0.0);
        std::size_t worst = m.n;
        double worst_q = 0.0;
        for (std::size_t i = 0; i < m.n; ++i) {
            if (!active[i]) continue;
            q[i] = -(v[i] - vbar) / lb + common;
            if (q[i] < worst_q) { worst_q = q[i]; worst = i; }
        }
        if (worst == m.n) {
            // all active outputs nonnegative; verify exit optimality
            double qtot = std::accumulate(q.begin(), q.end(), 0.0);
            bool reentry = false;
            for (std::size_t i = 0; i < m.n; ++i) {
                if (active[i]) continue;
                if (u - w - m.beta * qtot - v[i] > 0.0) { active[i] = true; reentry = true; }
            }
            if (!reentry) return q;
        } else {
            active[worst] = false;
        }
    }
    throw numeric_error("complete_info_quantities: removal did not settle");
}

// ---------------------------------------------------------------------------
// Conduct generalization: firm i conjectures rivals respond with slope
// kappa_i, so its first-order condition divides by
// lambda + beta (n-1) kappa_i + 2 beta instead of lambda + 2 beta.

struct ConductProfile {
    std::vector<double> kappa;

    void validate(std::size_t n) const {
        require(kappa.size() == n, "ConductProfile: kappa length mismatch");
    }
    double denom(const ModelPrimitives& m, std::size_t i) const {
        return m.lambda + m.beta * (double(m.n) - 1.0) * kappa[i] + 2.0 * m.beta;
    }
};

// Interim expected outputs m_i(w, u) under the conduct profile: the linear
// system d_i m_i + beta sum_{j != i} m_j = u - w - mu_i.
inline std::vector<double> solve_conduct_equilibrium(const ModelPrimitives& m,
                                                     const ConductProfile& c, double w,
                                                     double u) {
    c.validate(m.n);
    Matrix A(m.n);
    std::vector<double> rhs(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
        double di = c.denom(m, i);
        require(di > 0.0, "solve_conduct_equilibrium: nonpositive effective slope");
        for (std::size_t j = 0; j < m.n; ++j) A(i, j) = (i == j) ? di : m.beta;
        rhs[i] = u - w - m.mu_v[i];
    }
    return solve(std::move(A), std::move(rhs));
}

// Output of firm i under the conduct profile given the solved interim means.
inline double conduct_quantity(const ModelPrimitives& m, const ConductProfile& c,
                               const std::vector<double>& interim, std::size_t i, double v,
                               double w, double u) {
    require(interim.size() == m.n, "conduct_quantity: interim vector length mismatch");
    double rivals = 0.0;
    for (std::size_t j = 0; j < m.n; ++j)
        if (j != i) rivals += interim[j];
    return (u - m.beta * rivals - w - v) / c.denom(m, i);
}

}  // namespace cournot
