#pragma once

// Model variants: conduct-parameter identification from two-point conditional
// means, nonlinear (log-linear) inverse demand with a grid fixed-point solver
// and closed-form identifiers, selective entry outcomes, and recovery of the
// signal-conditional cost distribution from its entry-truncated counterpart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cournot/identification.hpp"
#include "cournot/model.hpp"
#include "cournot/quadrature.hpp"
#include "cournot/rng.hpp"

namespace cournot {

// ---------------------------------------------------------------------------
// Conduct parameters. Each firm's first-order condition divides by its own
// effective slope d_i = lambda + beta (n-1) kappa_i + 2 beta, so two distinct
// demand levels pin each d_i from conditional means:
//   d_i = [(u - u') - beta (m_{-i}(u) - m_{-i}(u'))] / (m_i(u) - m_i(u')),
// with m_i the conditional mean output and m_{-i} the rival-sum mean. With
// kappa_1 known, d_1 releases lambda, and the remaining d_i release kappa_i.

struct ConductMoments {
    double u = 0.0, u_prime = 0.0;     // two conditioning demand levels
    std::vector<double> mean_q;        // E[Q_i | U = u] per firm
    std::vector<double> mean_q_prime;  // E[Q_i | U = u'] per firm
};

// Analytic moments from the conduct fixed point with the conditional mean of
// the common shock pinned at zero.
inline ConductMoments conduct_moments(const ModelPrimitives& m, const ConductProfile& c,
                                      double u, double u_prime) {
    ConductMoments out;
    out.u = u;
    out.u_prime = u_prime;
    out.mean_q = solve_conduct_equilibrium(m, c, 0.0, u);
    out.mean_q_prime = solve_conduct_equilibrium(m, c, 0.0, u_prime);
    return out;
}

struct ConductIdentification {
    double lambda = 0.0;
    std::vector<double> kappa;
};

inline ConductIdentification identify_conduct(const ConductMoments& mom, double beta,
                                              double kappa1) {
    const std::size_t n = mom.mean_q.size();
    require(n >= 2 && mom.mean_q_prime.size() == n,
            "identify_conduct: need matched means for at least two firms");
    if (mom.u == mom.u_prime)
        throw invalid_input("identify_conduct: need two distinct demand levels");

    double sum_u = 0.0, sum_up = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sum_u += mom.mean_q[j];
        sum_up += mom.mean_q_prime[j];
    }
    auto effective_slope = [&](std::size_t i) {
        double rival_gap = (sum_u - mom.mean_q[i]) - (sum_up - mom.mean_q_prime[i]);
        double own_gap = mom.mean_q[i] - mom.mean_q_prime[i];
        if (std::fabs(own_gap) < 1e-12 * (1.0 + std::fabs(mom.mean_q[i])))
            throw invalid_input("identify_conduct: conditional means coincide");
        return ((mom.u - mom.u_prime) - beta * rival_gap) / own_gap;
    };

    ConductIdentification out;
    out.kappa.assign(n, kappa1);
    out.lambda = effective_slope(0) - beta * double(n - 1) * kappa1 - 2.0 * beta;
    for (std::size_t i = 1; i < n; ++i)
        out.kappa[i] =
            (effective_slope(i) - out.lambda - 2.0 * beta) / (beta * double(n - 1));
    return out;
}

// ---------------------------------------------------------------------------
// Nonlinear inverse demand. The evaluator is generic so the linear form can be
// driven through the same interface for oracle checks, but only the log-linear
// form p = exp(u - b c) is exercised beyond that.

struct NonlinearDemandSpec {
    std::string form = "log-linear";
    double beta = 1.0;
    std::function<double(double, double, double)> price;      // (c, u, b)
    std::function<double(double, double, double)> dprice_dc;  // partial in c

    double p(double c, double u) const { return price(c, u, beta); }
    double dp(double c, double u) const { return dprice_dc(c, u, beta); }

    static NonlinearDemandSpec log_linear(double beta) {
        NonlinearDemandSpec d;
        d.form = "log-linear";
        d.beta = beta;
        d.price = [](double c, double u, double b) { return std::exp(u - b * c); };
        d.dprice_dc = [](double c, double u, double b) {
            return -b * std::exp(u - b * c);
        };
        return d;
    }

    static NonlinearDemandSpec linear(double beta) {
        NonlinearDemandSpec d;
        d.form = "linear";
        d.beta = beta;
        d.price = [](double c, double u, double b) { return u - b * c; };
        d.dprice_dc = [](double, double, double b) { return -b; };
        return d;
    }
};

// Shape requirements on a consumption/demand-shock window: positive price,
// decreasing in consumption, increasing in the shock. Checked pointwise and by
// finite differences; throws on the first violation.
inline void check_demand_shape(const NonlinearDemandSpec& d, double c_lo, double c_hi,
                               double u_lo, double u_hi, int n = 21) {
    require(c_lo < c_hi && u_lo < u_hi && n >= 2, "check_demand_shape: bad window");
    double hc = (c_hi - c_lo) / double(n - 1), hu = (u_hi - u_lo) / double(n - 1);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            double c = c_lo + hc * a, u = u_lo + hu * b;
            if (!(d.p(c, u) > 0.0))
                throw invalid_input("check_demand_shape: nonpositive price");
            if (!(d.dp(c, u) < 0.0))
                throw invalid_input("check_demand_shape: price not decreasing in c");
            if (a + 1 < n && !(d.p(c + hc, u) < d.p(c, u)))
                throw invalid_input("check_demand_shape: price not decreasing in c");
            if (b + 1 < n && !(d.p(c, u + hu) > d.p(c, u)))
                throw invalid_input("check_demand_shape: price not increasing in u");
        }
    }
}

struct StrategyGrid {
    std::vector<double> v, q;  // cost nodes and best replies, q nonincreasing
    double w = 0.0, u = 0.0;   // conditioning shocks

    double at(double x) const {
        require(v.size() >= 2 && v.size() == q.size(), "StrategyGrid: malformed grid");
        if (x <= v.front()) return q.front();
        if (x >= v.back()) return q.back();
        auto it = std::upper_bound(v.begin(), v.end(), x);
        std::size_t k = std::size_t(it - v.begin());
        double t = (x - v[k - 1]) / (v[k] - v[k - 1]);
        return q[k - 1] + t * (q[k] - q[k - 1]);
    }
};

struct NonlinearPrimitives {
    double lambda = 0.0;
    std::vector<double> v_lo, v_hi;                          // per-firm cost supports
    std::vector<std::function<double(double)>> v_quantile;   // per-firm F^-1_{V_i}
    std::size_t nodes = 101;

    std::size_t n_firms() const { return v_lo.size(); }
    void validate() const {
        const std::size_t n = v_lo.size();
        require(n >= 2, "NonlinearPrimitives: need at least two firms");
        require(v_hi.size() == n && v_quantile.size() == n,
                "NonlinearPrimitives: per-firm vectors must match");
        require(lambda >= 0.0, "NonlinearPrimitives: lambda must be nonnegative");
        require(nodes >= 2, "NonlinearPrimitives: need at least two grid nodes");
        for (std::size_t i = 0; i < n; ++i) {
            require(v_lo[i] < v_hi[i], "NonlinearPrimitives: empty cost support");
            require(bool(v_quantile[i]), "NonlinearPrimitives: missing quantile");
        }
    }
};

struct NonlinearSolveOptions {
    double tol = 1e-8;           // sup-norm change between sweeps
    int max_sweeps = 500;
    int gl_nodes = 32;           // per-rival quadrature, tensorized up to 4 firms
    std::size_t mc_draws = 10000;  // rival expectation fallback for larger markets
    std::uint64_t mc_seed = 20260417;
};

namespace detail {

// Gauss-Legendre nodes/weights mapped to the unit interval.
inline std::vector<std::pair<double, double>> unit_gl(int n) {
    const QuadRule& r = gauss_legendre(n);
    std::vector<std::pair<double, double>> out(n);
    for (int k = 0; k < n; ++k) out[k] = {0.5 + 0.5 * r.x[k], 0.5 * r.w[k]};
    return out;
}

// Weighted sample of the rival aggregate sum_{j != skip} q_j(V_j): a full
// tensor rule for up to three rivals, otherwise fixed-seed Monte Carlo.
inline std::vector<std::pair<double, double>> rival_sum_points(
    const std::vector<StrategyGrid>& grids, const NonlinearPrimitives& prim,
    std::size_t skip, const NonlinearSolveOptions& opt) {
    std::vector<std::size_t> rivals;
    for (std::size_t j = 0; j < grids.size(); ++j)
        if (j != skip) rivals.push_back(j);
    if (rivals.empty()) return {{0.0, 1.0}};

    if (rivals.size() <= 3) {
        auto gl = unit_gl(opt.gl_nodes);
        std::vector<std::vector<double>> qv(rivals.size(),
                                            std::vector<double>(gl.size()));
        for (std::size_t r = 0; r < rivals.size(); ++r)
            for (std::size_t k = 0; k < gl.size(); ++k)
                qv[r][k] = grids[rivals[r]].at(prim.v_quantile[rivals[r]](gl[k].first));

        std::vector<std::pair<double, double>> pts;
        std::size_t total = 1;
        for (std::size_t r = 0; r < rivals.size(); ++r) total *= gl.size();
        pts.reserve(total);
        std::vector<std::size_t> idx(rivals.size(), 0);
        while (true) {
            double s = 0.0, wt = 1.0;
            for (std::size_t r = 0; r < rivals.size(); ++r) {
                s += qv[r][idx[r]];
                wt *= gl[idx[r]].second;
            }
            pts.push_back({s, wt});
            std::size_t d = 0;
            while (d < idx.size() && ++idx[d] == gl.size()) idx[d++] = 0;
            if (d == idx.size()) break;
        }
        return pts;
    }

    Stream rng(opt.mc_seed, {0x9e1du, std::uint64_t(skip)});
    std::vector<std::pair<double, double>> pts(opt.mc_draws);
    double wt = 1.0 / double(opt.mc_draws);
    for (auto& pt : pts) {
        double s = 0.0;
        for (std::size_t r : rivals)
            s += grids[r].at(prim.v_quantile[r](rng.uniform()));
        pt = {s, wt};
    }
    return pts;
}

// One-dimensional best reply against a fixed weighted rival sample. The
// first-order condition is bisected rather than the profit maximized: value
// comparisons cannot localize an argmin past the square root of machine
// precision, while the sign change of the marginal is sharp to full precision.
inline double best_reply(const NonlinearDemandSpec& d, double lambda, double v, double w,
                         double u, const std::vector<std::pair<double, double>>& pts) {
    auto marginal = [&](double q) {
        double ep = 0.0, edp = 0.0;
        for (const auto& pt : pts) {
            ep += pt.second * d.p(q + pt.first, u);
            edp += pt.second * d.dp(q + pt.first, u);
        }
        return ep + q * edp - (v + w) - lambda * q;
    };

    if (marginal(0.0) <= 0.0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (marginal(hi) > 0.0) {
        hi *= 2.0;
        if (++guard > 60)
            throw numeric_error("best reply: marginal profit never turns negative");
    }
    double lo = (hi > 1.0) ? 0.5 * hi : 0.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (marginal(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Gauss-Seidel iterated best response on per-firm cost grids. Each firm's new
// grid is the best reply to rivals' current grids, with the expectation taken
// over rivals' costs mapped through those grids. Best replies are projected
// onto the nonincreasing class (the truth is nonincreasing; the projection
// only strips quadrature-level wiggle), so emitted grids satisfy the
// monotonicity invariant exactly.
inline std::vector<StrategyGrid> solve_nonlinear_equilibrium(
    const NonlinearDemandSpec& d, const NonlinearPrimitives& prim, double w, double u,
    const NonlinearSolveOptions& opt = {}) {
    prim.validate();
    const std::size_t n = prim.n_firms();

    std::vector<StrategyGrid> grids(n);
    for (std::size_t i = 0; i < n; ++i) {
        grids[i].w = w;
        grids[i].u = u;
        grids[i].v.resize(prim.nodes);
        grids[i].q.assign(prim.nodes, 0.0);
        for (std::size_t k = 0; k < prim.nodes; ++k)
            grids[i].v[k] = prim.v_lo[i] + (prim.v_hi[i] - prim.v_lo[i]) * double(k) /
                                               double(prim.nodes - 1);
    }

    double resid = 0.0;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto pts = detail::rival_sum_points(grids, prim, i, opt);
            double prev = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < prim.nodes; ++k) {
                double q = detail::best_reply(d, prim.lambda, grids[i].v[k], w, u, pts);
                q = std::min(q, prev);
                resid = std::max(resid, std::fabs(q - grids[i].q[k]));
                grids[i].q[k] = q;
                prev = q;
            }
        }
        if (resid < opt.tol) return grids;
    }
    throw numeric_error("solve_nonlinear_equilibrium: no convergence, residual " +
                        std::to_string(resid));
}

// ---------------------------------------------------------------------------
// Log-linear identification from boundary-conditioned quantiles: with firm i
// pinned at its lowest output, log F^-1_P gaps against rival-sum quantile gaps
// release beta, and the level of one such pair releases the demand-shock
// floor.

struct BoundaryQuantiles {
    double q_boundary = 0.0;                      // firm i's infimum output
    std::function<double(double)> p_quantile;     // alpha -> F^-1_{P|Q_i}(alpha)
    std::function<double(double)> qsum_quantile;  // tau -> F^-1_{Q+_{-i}|Q_i}(tau)
};

struct LogLinearId {
    double beta = 0.0, u_lo = 0.0;
    std::vector<double> beta_by_pair;  // one estimate per quantile pair
    double dispersion = 0.0;           // spread across pairs, specification probe
};

inline LogLinearId identify_loglinear(const BoundaryQuantiles& src,
                                      const std::vector<std::pair<double, double>>& pairs) {
    require(!pairs.empty(), "identify_loglinear: need at least one quantile pair");
    LogLinearId out;
    for (const auto& pr : pairs) {
        require(pr.first != pr.second, "identify_loglinear: quantile levels must differ");
        double p1 = src.p_quantile(pr.first), p2 = src.p_quantile(pr.second);
        if (!(p1 > 0.0) || !(p2 > 0.0))
            throw invalid_input("identify_loglinear: nonpositive price in logs");
        double den = src.qsum_quantile(1.0 - pr.first) - src.qsum_quantile(1.0 - pr.second);
        if (std::fabs(den) < 1e-14)
            throw invalid_input("identify_loglinear: zero quantile spread");
        out.beta_by_pair.push_back((std::log(p2) - std::log(p1)) / den);
    }
    for (double b : out.beta_by_pair) out.beta += b;
    out.beta /= double(out.beta_by_pair.size());
    auto mm = std::minmax_element(out.beta_by_pair.begin(), out.beta_by_pair.end());
    out.dispersion = *mm.second - *mm.first;

    // the shock floor pairs one quantile level with itself: log price at alpha
    // plus beta times the total output behind that same price quantile
    double a0 = pairs.front().first;
    out.u_lo = std::log(src.p_quantile(a0)) +
               out.beta * (src.q_boundary + src.qsum_quantile(1.0 - a0));
    return out;
}

// Demand shock implied by one observation under log-linear demand.
inline double loglinear_shock(double p, double q_plus, double beta) {
    if (!(p > 0.0)) throw invalid_input("loglinear_shock: nonpositive price");
    return std::log(p) + beta * q_plus;
}

// ---------------------------------------------------------------------------
// Cost curvature under nonlinear demand: expected marginal revenue equals
// expected marginal cost mu_V + lambda E[Q_i | U = u], so differencing two
// demand levels isolates lambda and the unconditional display releases mu_V.

struct MarginalRevenueSource {
    double u = 0.0, u_prime = 0.0;
    double emr = 0.0, emr_prime = 0.0;          // E[Q_i D1p + p | U = .]
    double mean_qi = 0.0, mean_qi_prime = 0.0;  // E[Q_i | U = .]
    double emr_uncond = 0.0, mean_qi_uncond = 0.0;
};

struct LambdaNonlinear {
    double lambda = 0.0, mu_v = 0.0;
};

inline LambdaNonlinear identify_lambda_nonlinear(const MarginalRevenueSource& s) {
    if (s.u == s.u_prime)
        throw invalid_input("identify_lambda_nonlinear: need two distinct demand levels");
    double den = s.mean_qi_prime - s.mean_qi;
    if (std::fabs(den) < 1e-14 * (1.0 + std::fabs(s.mean_qi)))
        throw invalid_input("identify_lambda_nonlinear: conditional means coincide");
    LambdaNonlinear out;
    out.lambda = (s.emr_prime - s.emr) / den;
    out.mu_v = s.emr_uncond - out.lambda * s.mean_qi_uncond;
    return out;
}

// Analytic source for firm i: equilibrium grids at two demand levels with the
// common shock pinned at its zero conditional mean; unconditional moments take
// the demand shock as an equally weighted two-point mixture, which is all the
// mean-recovery identity needs. Tensor quadrature over every firm's cost.
inline MarginalRevenueSource marginal_revenue_source(const NonlinearDemandSpec& d,
                                                     const NonlinearPrimitives& prim,
                                                     std::size_t i, double u,
                                                     double u_prime,
                                                     const NonlinearSolveOptions& opt = {}) {
    prim.validate();
    const std::size_t n = prim.n_firms();
    require(i < n, "marginal_revenue_source: firm out of range");
    require(n <= 4, "marginal_revenue_source: tensor rule supports up to four firms");

    auto moments = [&](double level, double& emr, double& mean_qi) {
        auto grids = solve_nonlinear_equilibrium(d, prim, 0.0, level, opt);
        auto gl = detail::unit_gl(opt.gl_nodes);
        std::vector<std::vector<double>> qv(n, std::vector<double>(gl.size()));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < gl.size(); ++k)
                qv[j][k] = grids[j].at(prim.v_quantile[j](gl[k].first));

        emr = 0.0;
        mean_qi = 0.0;
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            double qsum = 0.0, wt = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                qsum += qv[j][idx[j]];
                wt *= gl[idx[j]].second;
            }
            double qi = qv[i][idx[i]];
            emr += wt * (qi * d.dp(qsum, level) + d.p(qsum, level));
            mean_qi += wt * qi;
            std::size_t dd = 0;
            while (dd < idx.size() && ++idx[dd] == gl.size()) idx[dd++] = 0;
            if (dd == idx.size()) break;
        }
    };

    MarginalRevenueSource src;
    src.u = u;
    src.u_prime = u_prime;
    moments(u, src.emr, src.mean_qi);
    moments(u_prime, src.emr_prime, src.mean_qi_prime);
    src.emr_uncond = 0.5 * (src.emr + src.emr_prime);
    src.mean_qi_uncond = 0.5 * (src.mean_qi + src.mean_qi_prime);
    return src;
}

// ---------------------------------------------------------------------------
// Cost quantiles under nonlinear demand. Two boundary events (common shock at
// its ceiling with demand at its floor, and vice versa) each turn the firm's
// first-order condition into a linear equation in (quantile, w_lo, w_hi);
// support symmetry w_hi = -w_lo closes a 3x3 system per quantile level.

struct BoundaryEventSource {
    std::vector<StrategyGrid> low;   // equilibrium at (w_hi, u_lo): output floor event
    std::vector<StrategyGrid> high;  // equilibrium at (w_lo, u_hi): output ceiling event
    double u_lo = 0.0, u_hi = 0.0;
};

struct FvNonlinearResult {
    QuantileTable quantiles;
    double w_lo = 0.0, w_hi = 0.0;    // averaged across quantile levels
    std::vector<double> w_hi_by_alpha;
};

inline FvNonlinearResult identify_fv_nonlinear(const NonlinearDemandSpec& d,
                                               const NonlinearPrimitives& prim,
                                               const BoundaryEventSource& src,
                                               std::size_t i, double lambda,
                                               const std::vector<double>& alpha_grid,
                                               const NonlinearSolveOptions& opt = {}) {
    prim.validate();
    const std::size_t n = prim.n_firms();
    require(i < n, "identify_fv_nonlinear: firm out of range");
    require(src.low.size() == n && src.high.size() == n,
            "identify_fv_nonlinear: boundary grids must cover every firm");
    require(!alpha_grid.empty(), "identify_fv_nonlinear: empty quantile grid");

    auto pts_lo = detail::rival_sum_points(src.low, prim, i, opt);
    auto pts_hi = detail::rival_sum_points(src.high, prim, i, opt);
    auto foc_value = [&](double r, const std::vector<std::pair<double, double>>& pts,
                         double level) {
        double ep = 0.0, edp = 0.0;
        for (const auto& pt : pts) {
            ep += pt.second * d.p(r + pt.first, level);
            edp += pt.second * d.dp(r + pt.first, level);
        }
        return r * edp + ep - lambda * r;
    };

    FvNonlinearResult out;
    out.quantiles.alpha = alpha_grid;
    out.quantiles.value.resize(alpha_grid.size());
    out.w_hi_by_alpha.resize(alpha_grid.size());
    double acc_lo = 0.0, acc_hi = 0.0;
    for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
        double a = alpha_grid[k];
        // observable conditional quantiles of Q_i under each boundary event,
        // computed here from the population strategies (analytic conditioning)
        double r1 = src.low[i].at(prim.v_quantile[i](a));
        double r2 = src.high[i].at(prim.v_quantile[i](a));
        double c1 = foc_value(r1, pts_lo, src.u_lo);
        double c2 = foc_value(r2, pts_hi, src.u_hi);

        // rows: quantile + w_hi = c1; quantile + w_lo = c2; w_lo + w_hi = 0.
        // The matrix is constant with determinant 2; the solver reports if a
        // degenerate edit ever makes it singular.
        Matrix A(3);
        A(0, 0) = 1.0; A(0, 1) = 0.0; A(0, 2) = 1.0;
        A(1, 0) = 1.0; A(1, 1) = 1.0; A(1, 2) = 0.0;
        A(2, 0) = 0.0; A(2, 1) = 1.0; A(2, 2) = 1.0;
        auto x = solve(std::move(A), {c1, c2, 0.0});
        out.quantiles.value[k] = x[0];
        acc_lo += x[1];
        acc_hi += x[2];
        out.w_hi_by_alpha[k] = x[2];
    }
    out.w_lo = acc_lo / double(alpha_grid.size());
    out.w_hi = acc_hi / double(alpha_grid.size());
    out.quantiles.monotonize();
    return out;
}

// ---------------------------------------------------------------------------
// Selective entry. Firms see a uniform signal of their cost, enter when the
// signal clears a threshold in the market's entry cost, and entrants play the
// linear strategies with the entrant count and the entry-truncated cost mean.

struct EntrySpec {
    std::function<double(double)> threshold;  // s(c), nonincreasing on [c_lo, c_hi]
    double c_lo = 0.0, c_hi = 1.0;
    std::function<double(double, double)> v_quantile_given_s;  // (alpha, s)
    int gl_nodes = 32;

    void validate() const {
        require(bool(threshold) && bool(v_quantile_given_s),
                "EntrySpec: missing threshold or conditional quantile");
        require(c_lo <= c_hi, "EntrySpec: empty cost support");
    }

    // E[V | S <= s(c)]: signals are uniform, so average the conditional means
    double mu_tilde(double c) const {
        double sbar = threshold(c);
        require(sbar > 0.0 && sbar <= 1.0, "EntrySpec: threshold outside (0, 1]");
        double mass = integrate(
            [&](double xi) {
                return integrate([&](double a) { return v_quantile_given_s(a, xi); },
                                 0.0, 1.0, gl_nodes);
            },
            0.0, sbar, gl_nodes);
        return mass / sbar;
    }
};

struct EntryMarket {
    double beta = 1.0, lambda = 0.0;
    std::size_t n_firms = 2;
    TruncNormalSpec u_spec;
    WGivenUSpec w_spec;
};

struct SelectiveEntryOutput {
    Panel panel;                            // q zero for firms that stay out
    std::vector<std::vector<int>> entered;  // [market][firm]
    std::vector<double> cost, u, w;         // per-market realizations
    std::vector<std::vector<double>> v;     // realized private costs, all firms
};

inline SelectiveEntryOutput selective_entry_outcomes(const EntrySpec& es,
                                                     const EntryMarket& mk, std::size_t T,
                                                     std::uint64_t seed = 2026) {
    es.validate();
    require(mk.n_firms >= 1 && T >= 1, "selective_entry_outcomes: empty design");
    const std::size_t n = mk.n_firms;

    SelectiveEntryOutput out;
    out.panel.p.resize(T);
    out.panel.q.assign(T, std::vector<double>(n, 0.0));
    out.entered.assign(T, std::vector<int>(n, 0));
    out.cost.resize(T);
    out.u.resize(T);
    out.w.resize(T);
    out.v.assign(T, std::vector<double>(n));

    for (std::size_t t = 0; t < T; ++t) {
        Stream rng(seed, {0x5e1fu, t});
        double u = draw(mk.u_spec, rng);
        double w = draw(mk.w_spec.at(u), rng);
        double c = es.c_lo + (es.c_hi - es.c_lo) * rng.uniform();  // uniform entry cost
        double sbar = es.threshold(c);

        std::size_t entrants = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = rng.uniform();
            out.v[t][i] = es.v_quantile_given_s(rng.uniform(), s);
            if (sbar > 0.0 && s <= sbar) {
                out.entered[t][i] = 1;
                ++entrants;
            }
        }

        double qsum = 0.0;
        if (entrants > 0) {
            double mu = es.mu_tilde(c);
            double common = (u - w - mu) / (mk.lambda + double(entrants + 1) * mk.beta);
            for (std::size_t i = 0; i < n; ++i) {
                if (!out.entered[t][i]) continue;
                double q = common - (out.v[t][i] - mu) / (mk.lambda + 2.0 * mk.beta);
                out.panel.q[t][i] = q;
                qsum += q;
            }
        }
        out.panel.p[t] = u - mk.beta * qsum;
        out.cost[t] = c;
        out.u[t] = u;
        out.w[t] = w;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Signal-conditional cost CDF from its entry-truncated counterpart: with
// F*(v; s) = P(V <= v | S <= s), the product rule gives
// F_{V|S}(v | s) = d/ds [s F*(v; s)], taken by central differences on the
// s grid and projected back onto the CDF class.

struct ConditionalCdfTable {
    std::vector<double> s, v;
    std::vector<std::vector<double>> F;  // [s index][v index]
};

namespace detail {

// derivative at x of the quadratic through (xa, fa), (xb, fb), (xc, fc)
inline double lagrange3_deriv(double xa, double xb, double xc, double fa, double fb,
                              double fc, double x) {
    return fa * (2.0 * x - xb - xc) / ((xa - xb) * (xa - xc)) +
           fb * (2.0 * x - xa - xc) / ((xb - xa) * (xb - xc)) +
           fc * (2.0 * x - xa - xb) / ((xc - xa) * (xc - xb));
}

// pool-adjacent-violators projection onto nondecreasing sequences
inline void isotonic_nondecreasing(std::vector<double>& y) {
    std::vector<double> level;
    std::vector<std::size_t> count;
    level.reserve(y.size());
    count.reserve(y.size());
    for (double val : y) {
        level.push_back(val);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            double merged = (level[level.size() - 2] * double(count[count.size() - 2]) +
                             level.back() * double(count.back())) /
                            double(count[count.size() - 2] + count.back());
            count[count.size() - 2] += count.back();
            level[level.size() - 2] = merged;
            level.pop_back();
            count.pop_back();
        }
    }
    y.clear();
    for (std::size_t b = 0; b < level.size(); ++b)
        y.insert(y.end(), count[b], level[b]);
}

}  // namespace detail

inline ConditionalCdfTable recover_fv_given_s(
    const std::function<double(double, double)>& trunc_cdf,  // (v, s)
    const std::vector<double>& s_grid, const std::vector<double>& v_grid,
    double h_max = 0.05) {
    require(bool(trunc_cdf), "recover_fv_given_s: missing truncated CDF");
    require(s_grid.size() >= 3 && v_grid.size() >= 2,
            "recover_fv_given_s: grids too small");
    for (std::size_t k = 0; k + 1 < s_grid.size(); ++k) {
        require(s_grid[k] < s_grid[k + 1], "recover_fv_given_s: s grid not ascending");
        if (s_grid[k + 1] - s_grid[k] > h_max)
            throw invalid_input("recover_fv_given_s: s grid too coarse");
    }
    for (std::size_t l = 0; l + 1 < v_grid.size(); ++l)
        require(v_grid[l] < v_grid[l + 1], "recover_fv_given_s: v grid not ascending");

    auto g = [&](std::size_t k, std::size_t l) {
        return s_grid[k] * trunc_cdf(v_grid[l], s_grid[k]);
    };

    ConditionalCdfTable out;
    out.s = s_grid;
    out.v = v_grid;
    out.F.assign(s_grid.size(), std::vector<double>(v_grid.size()));
    const std::size_t K = s_grid.size();
    for (std::size_t k = 0; k < K; ++k) {
        // three-point stencil centered where possible, shifted at the ends
        std::size_t a = (k == 0) ? 0 : (k == K - 1 ? K - 3 : k - 1);
        for (std::size_t l = 0; l < v_grid.size(); ++l)
            out.F[k][l] =
                detail::lagrange3_deriv(s_grid[a], s_grid[a + 1], s_grid[a + 2],
                                        g(a, l), g(a + 1, l), g(a + 2, l), s_grid[k]);
        detail::isotonic_nondecreasing(out.F[k]);
        for (double& val : out.F[k]) val = std::min(1.0, std::max(0.0, val));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV emitters for the plot-facing outputs.

inline std::string strategy_grids_csv(const std::vector<StrategyGrid>& grids) {
    std::ostringstream os;
    os.precision(10);
    os << "firm,v,q\n";
    for (std::size_t i = 0; i < grids.size(); ++i)
        for (std::size_t k = 0; k < grids[i].v.size(); ++k)
            os << (i + 1) << "," << grids[i].v[k] << "," << grids[i].q[k] << "\n";
    return os.str();
}

inline std::string conditional_cdf_csv(const ConditionalCdfTable& t) {
    std::ostringstream os;
    os.precision(10);
    os << "s,v,F\n";
    for (std::size_t k = 0; k < t.s.size(); ++k)
        for (std::size_t l = 0; l < t.v.size(); ++l)
            os << t.s[k] << "," << t.v[l] << "," << t.F[k][l] << "\n";
    return os.str();
}

}  // namespace cournot
