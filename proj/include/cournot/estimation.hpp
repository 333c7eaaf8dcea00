#pragma once

// Parametric pipeline: exponential detrending by profiled least squares, the
// linear observation transform with its closed-form inverse, the
// change-of-variables likelihood (demand-shock density times an inner integral
// over the common cost shock), multistart box-constrained maximum likelihood,
// and subsampling confidence intervals on contiguous blocks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cournot/linalg.hpp"
#include "cournot/optim.hpp"
#include "cournot/panel.hpp"
#include "cournot/quadrature.hpp"
#include "cournot/rng.hpp"
#include "cournot/theta.hpp"

namespace cournot {

// ---------------------------------------------------------------------------
// Observation transform. Stacked observables (p, q_1..q_n) are an affine map
// of the latent vector (u, s_1..s_n), where s_i = w/(lambda+(n+1)beta) +
// v_i/(lambda+2beta) is firm i's composite cost index:
//
//   (p, q)' = H1 (u, s)' + H2,   H1 = [ (lambda+beta)*gamma1   beta * 1'
//                                        gamma1 * 1            -I      ]
//
// with gamma1 = 1/(lambda+(n+1)beta). H2's quantity entries absorb the
// strategy intercepts, and its price entry is -beta times their sum. The
// inverse is closed form: u = p + beta * sum(q), s_i = gamma1 u - q_i + H2_i.
// |det H1| = 1 (the signed determinant is (-1)^n), so the change of variables
// carries no Jacobian factor.

struct ObservationTransform {
    double beta = 1.0;
    double lambda = 0.0;
    std::vector<double> mu_v;  // detrended private-cost means

    static ObservationTransform from_theta(const ThetaParam& th) {
        th.validate();
        ObservationTransform tr;
        tr.beta = th.beta;
        tr.lambda = th.lambda;
        tr.mu_v.resize(th.n_firms());
        std::vector<double> group_mean(th.n_groups());
        for (std::size_t g = 0; g < th.n_groups(); ++g)
            group_mean[g] = mean(BetaSpec{th.group_a[g], th.group_b[g], th.t_lo, th.t_hi,
                                          th.w_bar, th.w_bar});
        for (std::size_t i = 0; i < th.n_firms(); ++i)
            tr.mu_v[i] = group_mean[th.group_of[i]];
        return tr;
    }

    std::size_t n() const { return mu_v.size(); }
    double gamma1() const { return 1.0 / (lambda + (double(n()) + 1.0) * beta); }
    double c2() const { return lambda + 2.0 * beta; }

    // quantity-row intercept, i in [0, n)
    double h2(std::size_t i) const {
        double sum_rivals = 0.0;
        for (std::size_t j = 0; j < n(); ++j)
            if (j != i) sum_rivals += mu_v[j];
        double g = ((lambda + double(n()) * beta) * mu_v[i] - beta * sum_rivals) /
                   (lambda + beta);
        return -gamma1() * g + mu_v[i] / c2();
    }

    double h2_price() const {
        double s = 0.0;
        for (std::size_t i = 0; i < n(); ++i) s += h2(i);
        return -beta * s;
    }

    std::vector<double> h2_vector() const {
        std::vector<double> v(n() + 1);
        v[0] = h2_price();
        for (std::size_t i = 0; i < n(); ++i) v[i + 1] = h2(i);
        return v;
    }

    Matrix h1_matrix() const {
        Matrix m(n() + 1);
        double g1 = gamma1();
        m(0, 0) = (lambda + beta) * g1;
        for (std::size_t i = 0; i < n(); ++i) {
            m(0, i + 1) = beta;
            m(i + 1, 0) = g1;
            m(i + 1, i + 1) = -1.0;
        }
        return m;
    }

    struct Latent {
        double u = 0.0;
        std::vector<double> s;
    };

    // forward map (price first, then quantities)
    std::vector<double> observed_from_latent(double u, const std::vector<double>& s) const {
        require(s.size() == n(), "ObservationTransform: latent length mismatch");
        std::vector<double> out(n() + 1);
        double g1 = gamma1();
        double ssum = 0.0;
        for (double x : s) ssum += x;
        out[0] = (lambda + beta) * g1 * u + beta * ssum + h2_price();
        for (std::size_t i = 0; i < n(); ++i) out[i + 1] = g1 * u - s[i] + h2(i);
        return out;
    }

    Latent latent_from_observed(double p, const std::vector<double>& q) const {
        require(q.size() == n(), "ObservationTransform: quantity length mismatch");
        Latent lat;
        double qsum = 0.0;
        for (double x : q) qsum += x;
        lat.u = p + beta * qsum;
        lat.s.resize(n());
        double g1 = gamma1();
        for (std::size_t i = 0; i < n(); ++i) lat.s[i] = g1 * lat.u - q[i] + h2(i);
        return lat;
    }
};

// ---------------------------------------------------------------------------
// Detrending. Quantities carry a common exponential decay with per-firm
// loadings: Q_it = c2_i - c1_i e^{-tau t}. The decay rate is profiled over a
// log-spaced grid (each candidate reduces to per-firm OLS on e^{-tau t} and a
// constant) and refined by golden section; a BIC comparison against the
// constant-only fit breaks the tie to tau = 0 when the trend is absent, since
// tau is unidentified there.

struct DetrendResult {
    double tau = 0.0;
    std::vector<double> c1, c2;
    Panel detrended;   // q + c1 e^{-tau t}; prices unchanged
    double rss = 0.0;
    bool flat = false;  // constant-only model preferred; tau tie-broken to 0
};

namespace detail {

// Sum over firms of OLS residual sums of squares for Q_it on (1, e^{-tau t}),
// with the fitted slope and intercept mapped to (c1, c2) when requested.
inline double detrend_rss(const Panel& panel, double tau, std::vector<double>* c1,
                          std::vector<double>* c2) {
    const std::size_t T = panel.T(), n = panel.n_firms();
    double sx = 0.0, sxx = 0.0;
    std::vector<double> x(T);
    for (std::size_t t = 0; t < T; ++t) {
        x[t] = std::exp(-tau * double(t + 1));
        sx += x[t];
        sxx += x[t] * x[t];
    }
    double vxx = sxx - sx * sx / double(T);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0, sqq = 0.0, sqx = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double q = panel.q[t][i];
            sq += q;
            sqq += q * q;
            sqx += q * x[t];
        }
        double vqq = sqq - sq * sq / double(T);
        double vqx = sqx - sq * sx / double(T);
        double slope = vxx > 0.0 ? vqx / vxx : 0.0;
        rss += std::max(0.0, vqq - slope * vqx);
        if (c1) (*c1)[i] = -slope;
        if (c2) (*c2)[i] = (sq - slope * sx) / double(T);
    }
    return rss;
}

}  // namespace detail

inline DetrendResult detrend(const Panel& panel, const NumericConfig& = default_config()) {
    panel.validate();
    const std::size_t T = panel.T(), n = panel.n_firms();
    require(T >= n + 2, "detrend: need T >= n_firms + 2");

    DetrendResult res;
    res.c1.assign(n, 0.0);
    res.c2.assign(n, 0.0);

    // constant-only reference fit
    double rss_flat = 0.0;
    std::vector<double> means(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0, sqq = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            sq += panel.q[t][i];
            sqq += panel.q[t][i] * panel.q[t][i];
        }
        means[i] = sq / double(T);
        rss_flat += std::max(0.0, sqq - sq * sq / double(T));
    }

    // profile tau over a log-spaced grid, then refine between the neighbors
    const int grid_n = 49;
    const double tau_min = 1e-4, tau_max = 2.0;
    double best_tau = tau_min, best_rss = std::numeric_limits<double>::infinity();
    std::vector<double> taus(grid_n);
    for (int k = 0; k < grid_n; ++k) {
        double f = double(k) / double(grid_n - 1);
        taus[k] = tau_min * std::pow(tau_max / tau_min, f);
        double r = detail::detrend_rss(panel, taus[k], nullptr, nullptr);
        if (r < best_rss) { best_rss = r; best_tau = taus[k]; }
    }
    const double ratio = std::pow(tau_max / tau_min, 1.0 / (grid_n - 1));
    double refined = golden_section_min(
        [&](double tau) { return detail::detrend_rss(panel, tau, nullptr, nullptr); },
        std::max(best_tau / ratio, tau_min * 0.5), std::min(best_tau * ratio, tau_max * 2.0),
        1e-10);
    double refined_rss = detail::detrend_rss(panel, refined, nullptr, nullptr);
    if (refined_rss < best_rss) { best_tau = refined; best_rss = refined_rss; }
    best_rss = detail::detrend_rss(panel, best_tau, &res.c1, &res.c2);

    // BIC tie-break: the trend model spends one slope per firm plus tau
    const double N = double(T * n);
    const double floor_rss = 1e-300;
    double bic_trend = N * std::log(std::max(best_rss, floor_rss) / N) +
                       double(2 * n + 1) * std::log(N);
    double bic_flat = N * std::log(std::max(rss_flat, floor_rss) / N) +
                      double(n) * std::log(N);

    res.detrended = panel;
    if (bic_trend < bic_flat) {
        res.tau = best_tau;
        res.rss = best_rss;
        for (std::size_t t = 0; t < T; ++t) {
            double decay = std::exp(-best_tau * double(t + 1));
            for (std::size_t i = 0; i < n; ++i) res.detrended.q[t][i] += res.c1[i] * decay;
        }
    } else {
        res.flat = true;
        res.tau = 0.0;
        res.rss = rss_flat;
        res.c1.assign(n, 0.0);
        res.c2 = means;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Log-likelihood. Each row maps to latent (u, s) through the transform. The
// row density is f_U(u) times the integral over the rescaled common shock
// wt = w * gamma1 of
//
//   prod_i [ f_{V_i}((s_i - wt) c2) * c2 ] * f_W(wt / gamma1) / gamma1 ,
//
// where every rescaled density carries its own Jacobian exactly once, so the
// joint integrates to one. The integral runs over the intersection of the
// supports, by fixed Gauss-Legendre quadrature, accumulated in log space.
// Rows whose latent coordinates fall outside the supports contribute a large
// negative penalty proportional to the violation, which keeps the direct
// search informed near the boundary; `value` stays -inf in that case and
// reports the unpenalized likelihood otherwise.

struct LogLikelihood {
    double value = -std::numeric_limits<double>::infinity();
    double penalized = 0.0;
    std::size_t violations = 0;
};

namespace detail {

struct LikRow {
    double u = 0.0;          // recovered demand shock
    std::vector<double> s;   // composite cost indices
};

// per-theta constants shared across rows
struct LikContext {
    double gamma1 = 0.0, c2 = 0.0, w_bar = 0.0;
    double s_lo_off = 0.0, s_hi_off = 0.0;  // w window from each firm's support
    double wt_bound = 0.0;                  // common-shock window half width
    std::vector<double> ga, gb, glog;       // per group: shapes, log-normalizer
    std::vector<std::size_t> group;
    double t_lo = 0.0, t_hi = 1.0;
};

inline LikContext make_lik_context(const ThetaParam& th) {
    LikContext c;
    double nb = double(th.n_firms());
    c.gamma1 = 1.0 / (th.lambda + (nb + 1.0) * th.beta);
    c.c2 = th.lambda + 2.0 * th.beta;
    c.w_bar = th.w_bar;
    c.t_lo = th.t_lo;
    c.t_hi = th.t_hi;
    // V_i = w_bar (1 + B_i) with B_i in [t_lo, t_hi]
    c.s_lo_off = th.w_bar * (1.0 + th.t_lo) / c.c2;
    c.s_hi_off = th.w_bar * (1.0 + th.t_hi) / c.c2;
    c.wt_bound = th.w_bar * (2.0 * th.t_hi - 1.0) * c.gamma1;
    c.ga = th.group_a;
    c.gb = th.group_b;
    c.group = th.group_of;
    c.glog.resize(th.n_groups());
    for (std::size_t g = 0; g < th.n_groups(); ++g) {
        double mass = inc_beta(c.ga[g], c.gb[g], th.t_hi) - inc_beta(c.ga[g], c.gb[g], th.t_lo);
        require(mass > 1e-300, "log_likelihood: empty cost truncation window");
        // Beta normalizer, truncation mass, and the s_i -> B_i Jacobian c2/w_bar
        c.glog[g] = -log_beta_fn(c.ga[g], c.gb[g]) - std::log(mass) +
                    std::log(c.c2 / th.w_bar);
    }
    return c;
}

// log of the inner integral for one row; expects a nonempty feasible window
inline double row_log_integral(const LikContext& c, const LikRow& row, double a_w,
                               double log_w_norm, double w_lo, double w_hi, int nodes) {
    const QuadRule& rule = gauss_legendre(nodes);
    const double mid = 0.5 * (w_lo + w_hi), half = 0.5 * (w_hi - w_lo);
    const std::size_t n = row.s.size();
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(nodes);
    for (int k = 0; k < nodes; ++k) {
        double wt = mid + half * rule.x[k];
        double acc = log_w_norm;
        // symmetric Beta density of the rescaled common shock at wt
        double xw = (wt / c.gamma1 + c.w_bar) / (2.0 * c.w_bar);
        acc += (a_w - 1.0) * (std::log(xw) + std::log1p(-xw));
        for (std::size_t i = 0; i < n; ++i) {
            double x = (row.s[i] - wt) * c.c2 / c.w_bar - 1.0;
            std::size_t g = c.group[i];
            acc += (c.ga[g] - 1.0) * std::log(x) + (c.gb[g] - 1.0) * std::log1p(-x) +
                   c.glog[g];
        }
        logs[k] = acc;
        if (acc > max_log) max_log = acc;
    }
    if (!std::isfinite(max_log)) return -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int k = 0; k < nodes; ++k) sum += rule.w[k] * std::exp(logs[k] - max_log);
    return max_log + std::log(sum * half);
}

}  // namespace detail

inline LogLikelihood log_likelihood(const ThetaParam& th, const Panel& panel, int nodes = 0,
                                    const NumericConfig& cfg = default_config()) {
    th.validate();
    panel.validate();
    require(panel.n_firms() == th.n_firms(), "log_likelihood: firm count mismatch");
    if (nodes <= 0) nodes = cfg.likelihood_nodes;

    const ObservationTransform tr = ObservationTransform::from_theta(th);
    const detail::LikContext c = detail::make_lik_context(th);
    const TruncNormalSpec u_spec = th.u_spec();

    // penalty scale: large enough that one infeasible row outweighs any
    // feasible-fit improvement, sloped so the optimizer can descend back in
    const double penalty_base = 1e4, penalty_slope = 1e4;

    // a truncation point many sigmas above the mean leaves no mass for the
    // data; penalize by the standardized gap instead of overflowing the log
    const double u_tail = u_spec.tail_mass();
    if (u_tail < cfg.min_trunc_mass) {
        LogLikelihood out;
        out.violations = panel.T();
        double z = (th.u_lo - th.mu_u) / u_spec.sigma();
        out.penalized = -double(panel.T()) * (penalty_base + penalty_slope * z);
        return out;
    }
    const double log_u_norm =
        -0.5 * std::log(2.0 * M_PI * th.sigma2_u) - std::log(u_tail);

    LogLikelihood out;
    double feasible_sum = 0.0, penalty_sum = 0.0;

    detail::LikRow row;
    for (std::size_t t = 0; t < panel.T(); ++t) {
        auto lat = tr.latent_from_observed(panel.p[t], panel.q[t]);
        row.u = lat.u;
        row.s = std::move(lat.s);

        double violation = 0.0;
        if (row.u < th.u_lo) violation += th.u_lo - row.u;

        // feasible window for the rescaled common shock
        double w_lo = -c.wt_bound, w_hi = c.wt_bound;
        for (double s : row.s) {
            w_lo = std::max(w_lo, s - c.s_hi_off);
            w_hi = std::min(w_hi, s - c.s_lo_off);
        }
        if (w_lo >= w_hi) violation += w_lo - w_hi;

        if (violation > 0.0) {
            ++out.violations;
            penalty_sum -= penalty_base + penalty_slope * violation;
            continue;
        }

        double a_w = th.w_spec().shape(row.u);
        double w_mass = inc_beta(a_w, a_w, th.t_hi) - inc_beta(a_w, a_w, th.t_lo);
        if (w_mass < 1e-300) {
            ++out.violations;
            penalty_sum -= penalty_base;
            continue;
        }
        double log_w_norm = -log_beta_fn(a_w, a_w) - std::log(w_mass) -
                            std::log(2.0 * c.w_bar * c.gamma1);

        double zu = (row.u - th.mu_u) / u_spec.sigma();
        double log_fu = log_u_norm - 0.5 * zu * zu;
        double log_fs = detail::row_log_integral(c, row, a_w, log_w_norm, w_lo, w_hi, nodes);
        if (!std::isfinite(log_fs)) {
            ++out.violations;
            penalty_sum -= penalty_base;
            continue;
        }
        feasible_sum += log_fu + log_fs;
    }

    out.penalized = feasible_sum + penalty_sum;
    out.value = out.violations == 0 ? feasible_sum
                                    : -std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------------------
// Maximum likelihood over a compact box. Parameters are logit-transformed to
// the box interior so Nelder-Mead runs unconstrained; the truncation bound
// u_lo is profiled out exactly (the likelihood is increasing in u_lo up to the
// smallest recovered demand shock, so its inner argmax is min_t u_t clamped to
// the box).

struct ThetaBox {
    std::vector<double> lo, hi;

    static ThetaBox around(const ThetaParam& center, double frac = 0.5) {
        center.validate();
        std::vector<double> x = center.to_vector();
        ThetaBox box;
        box.lo.resize(x.size());
        box.hi.resize(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            double span = frac * std::fabs(x[k]);
            if (span == 0.0) span = 0.2 * frac;  // parameters starting at zero
            box.lo[k] = x[k] - span;
            box.hi[k] = x[k] + span;
        }
        // positivity where the family requires it; lambda may sit at zero
        const double tiny = 1e-8;
        box.lo[0] = std::max(box.lo[0], tiny);
        box.lo[1] = std::max(box.lo[1], 0.0);
        for (std::size_t k : {std::size_t(2), std::size_t(4), std::size_t(5)})
            box.lo[k] = std::max(box.lo[k], tiny);
        for (std::size_t k = 8; k < x.size(); ++k) box.lo[k] = std::max(box.lo[k], tiny);
        return box;
    }

    void validate(std::size_t dim) const {
        require(lo.size() == dim && hi.size() == dim, "ThetaBox: dimension mismatch");
        for (std::size_t k = 0; k < dim; ++k)
            require(lo[k] < hi[k], "ThetaBox: need lo < hi");
    }
};

struct EstimateOptions {
    int nodes = 0;            // 0: config default
    int n_starts = 0;         // 0: config multistart for estimate, 1 for blocks
    std::uint64_t seed = 2026;
    bool profile_u_lo = true;
    NMOptions nm{};           // per-start budget; defaults below

    EstimateOptions() {
        nm.max_evals = 6000;
        nm.restarts = 1;
    }
};

struct EstimateResult {
    ThetaParam theta;
    double loglik = -std::numeric_limits<double>::infinity();     // unpenalized
    double penalized = -std::numeric_limits<double>::infinity();  // optimizer objective
    std::size_t violations = 0;
    bool converged = false;
    int evals = 0;
    std::vector<double> start_values;  // best objective per start
    DetrendResult trend;
};

namespace detail {

// indices of the free (non-profiled) coordinates
inline std::vector<std::size_t> free_indices(std::size_t dim, bool profile_u_lo) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < dim; ++k)
        if (!(profile_u_lo && k == 2)) idx.push_back(k);
    return idx;
}

inline EstimateResult estimate_core(const Panel& detrended, const ThetaParam& start,
                                    const ThetaBox& box, const EstimateOptions& opt,
                                    const NumericConfig& cfg, int n_starts) {
    start.validate();
    const std::size_t dim = start.dim();
    box.validate(dim);
    const int nodes = opt.nodes > 0 ? opt.nodes : cfg.likelihood_nodes;

    std::vector<double> sumq(detrended.T());
    for (std::size_t t = 0; t < detrended.T(); ++t) sumq[t] = detrended.q_plus(t);

    const auto free_idx = free_indices(dim, opt.profile_u_lo);
    std::vector<double> x0_full = start.to_vector();

    auto assemble = [&](const std::vector<double>& xfree) {
        std::vector<double> x = x0_full;
        for (std::size_t k = 0; k < free_idx.size(); ++k) x[free_idx[k]] = xfree[k];
        if (opt.profile_u_lo) {
            double min_u = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < detrended.T(); ++t)
                min_u = std::min(min_u, detrended.p[t] + x[0] * sumq[t]);
            x[2] = std::min(std::max(min_u, box.lo[2]), box.hi[2]);
        }
        return ThetaParam::from_vector(x, start);
    };

    auto objective = [&](const std::vector<double>& xfree) {
        return -log_likelihood(assemble(xfree), detrended, nodes, cfg).penalized;
    };

    std::vector<double> lo_f, hi_f, x0_f;
    for (std::size_t k : free_idx) {
        lo_f.push_back(box.lo[k]);
        hi_f.push_back(box.hi[k]);
        x0_f.push_back(std::min(std::max(x0_full[k], box.lo[k] + 1e-12 * (box.hi[k] - box.lo[k])),
                                box.hi[k] - 1e-12 * (box.hi[k] - box.lo[k])));
    }

    NMOptions nm = opt.nm;
    if (nm.max_evals <= 0) nm.max_evals = cfg.nm_max_evals;

    EstimateResult res;
    res.penalized = std::numeric_limits<double>::infinity();  // tracking -objective
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    bool best_converged = false;

    for (int s = 0; s < n_starts; ++s) {
        std::vector<double> xs = x0_f;
        if (s > 0) {
            Stream rng(opt.seed, {0xe57au, std::uint64_t(s)});
            for (std::size_t k = 0; k < xs.size(); ++k)
                xs[k] = lo_f[k] + (hi_f[k] - lo_f[k]) * rng.uniform(0.25, 0.75);
        }
        NMResult r = minimize_box(objective, xs, lo_f, hi_f, nm);
        res.evals += r.evals;
        res.start_values.push_back(-r.value);
        if (r.value < best_obj) {
            best_obj = r.value;
            best_x = r.x;
            best_converged = r.converged;
        }
    }
    if (!std::isfinite(best_obj))
        throw numeric_error("estimate: no start produced a finite objective");

    res.theta = assemble(best_x);
    LogLikelihood ll = log_likelihood(res.theta, detrended, nodes, cfg);
    res.loglik = ll.value;
    res.penalized = ll.penalized;
    res.violations = ll.violations;
    res.converged = best_converged;
    return res;
}

}  // namespace detail

inline EstimateResult estimate(const Panel& panel, const ThetaParam& start,
                               const ThetaBox& box, const EstimateOptions& opt = {},
                               const NumericConfig& cfg = default_config()) {
    int n_starts = opt.n_starts > 0 ? opt.n_starts : cfg.multistart;
    DetrendResult dt = detrend(panel, cfg);
    EstimateResult res = detail::estimate_core(dt.detrended, start, box, opt, cfg, n_starts);
    res.trend = std::move(dt);
    return res;
}

// ---------------------------------------------------------------------------
// Subsampling confidence intervals on contiguous blocks of the detrended
// panel. Block size defaults to floor(T^0.9); when more contiguous blocks
// exist than max_blocks, a seeded random subset of distinct starts is used.
// Intervals follow the quantile method for stationary series: with
// L_j = sqrt(b) (theta_b_j - theta_hat), the level-alpha interval is
// [theta_hat - q_{1-alpha/2}(L)/sqrt(T), theta_hat - q_{alpha/2}(L)/sqrt(T)].

struct SubsampleCI {
    std::size_t block_size = 0;
    std::size_t n_blocks_total = 0;
    std::size_t n_blocks_used = 0;
    double level = 0.95;
    std::vector<std::string> names;
    std::vector<double> estimate, lo, hi;
    std::vector<std::vector<double>> block_estimates;  // [block][param]
};

inline std::size_t default_block_size(std::size_t T) {
    return std::size_t(std::floor(std::pow(double(T), 0.9)));
}

// Deterministic choice of block starting offsets (0-based, sorted).
inline std::vector<std::size_t> subsample_blocks(std::size_t T, std::size_t b,
                                                 std::size_t max_blocks,
                                                 std::uint64_t seed = 2026) {
    require(b >= 1, "subsample_blocks: block size must be positive");
    if (b > T) throw invalid_input("subsample_blocks: block longer than sample");
    std::size_t total = T - b + 1;
    std::vector<std::size_t> starts(total);
    for (std::size_t j = 0; j < total; ++j) starts[j] = j;
    if (total <= max_blocks) return starts;
    Stream rng(seed, {0x5ab5u});
    for (std::size_t j = 0; j < max_blocks; ++j) {
        std::size_t pick = j + std::size_t(rng.uniform() * double(total - j));
        if (pick >= total) pick = total - 1;
        std::swap(starts[j], starts[pick]);
    }
    starts.resize(max_blocks);
    std::sort(starts.begin(), starts.end());
    return starts;
}

namespace detail {

inline double sorted_quantile(std::vector<double> v, double p) {
    require(!v.empty(), "sorted_quantile: empty sample");
    std::sort(v.begin(), v.end());
    double h = (double(v.size()) - 1.0) * p;
    std::size_t k = std::size_t(std::floor(h));
    if (k + 1 >= v.size()) return v.back();
    return v[k] + (h - double(k)) * (v[k + 1] - v[k]);
}

}  // namespace detail

inline SubsampleCI subsample_ci(const Panel& panel, const ThetaParam& theta_hat,
                                const ThetaBox& box, std::size_t block_size = 0,
                                double level = 0.95, const EstimateOptions& opt = {},
                                std::size_t max_blocks = 150,
                                const NumericConfig& cfg = default_config()) {
    theta_hat.validate();
    require(level > 0.0 && level < 1.0, "subsample_ci: level must be in (0,1)");
    const std::size_t T = panel.T();
    std::size_t b = block_size > 0 ? block_size : default_block_size(T);
    if (b > T) throw invalid_input("subsample_ci: block longer than sample");

    DetrendResult dt = detrend(panel, cfg);
    auto starts = subsample_blocks(T, b, max_blocks, opt.seed);

    SubsampleCI out;
    out.block_size = b;
    out.n_blocks_total = T - b + 1;
    out.n_blocks_used = starts.size();
    out.level = level;
    out.names = theta_hat.names();
    out.estimate = theta_hat.to_vector();

    int block_starts = opt.n_starts > 0 ? opt.n_starts : 1;
    for (std::size_t j : starts) {
        Panel blk;
        blk.p.assign(dt.detrended.p.begin() + j, dt.detrended.p.begin() + j + b);
        blk.q.assign(dt.detrended.q.begin() + j, dt.detrended.q.begin() + j + b);
        EstimateResult r = detail::estimate_core(blk, theta_hat, box, opt, cfg, block_starts);
        out.block_estimates.push_back(r.theta.to_vector());
    }

    const std::size_t dim = theta_hat.dim();
    out.lo.resize(dim);
    out.hi.resize(dim);
    const double alpha = 1.0 - level;
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<double> L;
        L.reserve(out.block_estimates.size());
        for (const auto& est : out.block_estimates)
            L.push_back(std::sqrt(double(b)) * (est[k] - out.estimate[k]));
        // zero displacement (the full-sample fit itself) is always admissible,
        // so the band contains theta_hat by construction even when block
        // refits drift one-sided off a support-pinned coordinate
        double q_lo = std::min(0.0, detail::sorted_quantile(L, alpha / 2.0));
        double q_hi = std::max(0.0, detail::sorted_quantile(L, 1.0 - alpha / 2.0));
        out.lo[k] = out.estimate[k] - q_hi / std::sqrt(double(T));
        out.hi[k] = out.estimate[k] - q_lo / std::sqrt(double(T));
    }
    return out;
}

}  // namespace cournot
