#pragma once

// Nonparametric identification pipeline plus the testable-implication
// diagnostics. Every object has two modes:
//   analytic: population quantities computed from a PopulationDesign, used as
//     truth-by-construction round trips;
//   sample: plug-in estimates from a Panel, conditioning on zero-probability
//     boundary events via epsilon-bands.
//
// Chain of recovery: beta from conditional quantile differences at a firm's
// lowest-output event, then U = P + beta Q+ and its CDF, lambda from the
// output-on-U regression slope, cost means from the averaged first-order
// condition, each F_{V_i} from conditional quantiles of Q_i given a rival's
// boundary event, and finally F_{W|U} by characteristic-function
// deconvolution inverted with Gil-Pelaez.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include "cournot/design.hpp"
#include "cournot/distributions.hpp"
#include "cournot/model.hpp"
#include "cournot/panel.hpp"

namespace cournot {

// ---------------------------------------------------------------------------
// Small sample-statistics helpers (population versions live on the specs).

namespace detail {

inline double vec_mean(const std::vector<double>& x) {
    require(!x.empty(), "mean of empty vector");
    return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

inline double vec_var(const std::vector<double>& x) {
    double m = vec_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / double(x.size());
}

inline double vec_cov(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && !x.empty(), "cov: size mismatch");
    double mx = vec_mean(x), my = vec_mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / double(x.size());
}

}  // namespace detail

// Linear-interpolation (type-7) quantile of a sorted sample.
inline double quantile_type7(const std::vector<double>& sorted, double alpha) {
    require(!sorted.empty(), "quantile_type7: empty sample");
    require(alpha >= 0.0 && alpha <= 1.0, "quantile_type7: alpha must be in [0,1]");
    if (sorted.size() == 1) return sorted.front();
    double h = alpha * double(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = h - double(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// ---------------------------------------------------------------------------
// Boundary events and epsilon-bands

// Conditioning event {Q_i = q_floor}; epsilon = 0 means exact (analytic) mode,
// epsilon > 0 selects the sample band {Q_i <= q_floor + epsilon}.
struct BoundaryEvent {
    std::size_t firm = 0;
    double q_floor = 0.0;
    double epsilon = 0.0;

    void validate() const { require(epsilon >= 0.0, "BoundaryEvent: epsilon must be >= 0"); }
};

// Default band rule: epsilon = max(first-percentile width, width that admits
// n_min observations). Input must be sorted ascending.
inline double default_band_epsilon(const std::vector<double>& sorted,
                                   const NumericConfig& cfg = default_config()) {
    require(!sorted.empty(), "default_band_epsilon: empty sample");
    double lo = sorted.front();
    double by_quantile = quantile_type7(sorted, cfg.band_quantile) - lo;
    std::size_t k = std::min(sorted.size(), cfg.band_n_min) - 1;
    double by_count = sorted[k] - lo;
    return std::max(by_quantile, by_count);
}

// Rows of the panel falling in the lower band of firm i's output.
inline std::vector<std::size_t> band_rows(const Panel& panel, const BoundaryEvent& ev,
                                          const NumericConfig& cfg = default_config()) {
    ev.validate();
    // epsilon = 0 still selects exact ties, which is the right band when the
    // sample has a mass point at the floor
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < panel.T(); ++t)
        if (panel.q[t][ev.firm] <= ev.q_floor + ev.epsilon) rows.push_back(t);
    if (rows.size() < std::min(cfg.band_n_min, panel.T()))
        throw numeric_error("band_rows: insufficient observations in boundary band");
    return rows;
}

// Build the event for firm i from the sample itself (auto epsilon if <= 0).
inline BoundaryEvent sample_boundary_event(const Panel& panel, std::size_t firm,
                                           double epsilon = 0.0,
                                           const NumericConfig& cfg = default_config()) {
    require(firm < panel.n_firms(), "sample_boundary_event: firm out of range");
    std::vector<double> qi(panel.T());
    for (std::size_t t = 0; t < panel.T(); ++t) qi[t] = panel.q[t][firm];
    std::sort(qi.begin(), qi.end());
    BoundaryEvent ev;
    ev.firm = firm;
    ev.q_floor = qi.front();
    ev.epsilon = epsilon > 0.0 ? epsilon : default_band_epsilon(qi, cfg);
    return ev;
}

// ---------------------------------------------------------------------------
// Recovered-object containers

struct QuantileTable {
    std::vector<double> alpha;  // increasing in [0, 1]
    std::vector<double> value;  // nondecreasing after post-processing

    void validate() const {
        require(alpha.size() == value.size() && alpha.size() >= 2, "QuantileTable: bad sizes");
        for (std::size_t k = 0; k + 1 < alpha.size(); ++k)
            require(alpha[k] < alpha[k + 1], "QuantileTable: alpha must increase");
        require(alpha.front() >= 0.0 && alpha.back() <= 1.0, "QuantileTable: alpha range");
    }

    void monotonize() {
        for (std::size_t k = 1; k < value.size(); ++k)
            value[k] = std::max(value[k], value[k - 1]);
    }
};

struct CdfGrid {
    std::vector<double> x;
    std::vector<double> cdf;
};

// Default quantile levels for recovered distributions. Endpoints included so
// characteristic functions built from the table carry the full mass.
inline std::vector<double> default_alpha_grid(std::size_t n = 101) {
    require(n >= 3, "default_alpha_grid: need at least 3 levels");
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = double(k) / double(n - 1);
    return a;
}

// ---------------------------------------------------------------------------
// Rival-sum law S = sum_{j != i} (V_j - mu_j), needed for analytic conditional
// quantiles. Densities are tabulated on a shared step and convolved directly;
// the sizes involved (a few thousand points) keep this exact enough for
// reporting, and the beta ratio below is invariant to its error anyway.

namespace detail {

struct GridDensity {
    double x0 = 0.0, dx = 1.0;
    std::vector<double> f;
};

inline GridDensity tabulate_centered(const BetaSpec& spec, double dx) {
    double c = mean(spec);
    double lo = spec.support_lo() - c, hi = spec.support_hi() - c;
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / dx)) + 1;
    GridDensity g;
    g.x0 = lo;
    g.dx = dx;
    g.f.resize(n);
    for (std::size_t k = 0; k < n; ++k) g.f[k] = density(spec, lo + double(k) * dx + c);
    return g;
}

inline GridDensity convolve(const GridDensity& a, const GridDensity& b) {
    GridDensity c;
    c.x0 = a.x0 + b.x0;
    c.dx = a.dx;
    c.f.assign(a.f.size() + b.f.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.f.size(); ++i) {
        if (a.f[i] == 0.0) continue;
        double ai = a.f[i] * a.dx;
        for (std::size_t j = 0; j < b.f.size(); ++j) c.f[i + j] += ai * b.f[j];
    }
    return c;
}

}  // namespace detail

// CDF/quantile of the centered rival cost sum, by grid convolution.
struct SumLaw {
    std::vector<double> x, cdf;

    double quantile(double alpha) const {
        require(!x.empty(), "SumLaw: empty");
        if (alpha <= cdf.front()) return x.front();
        if (alpha >= cdf.back()) return x.back();
        auto it = std::lower_bound(cdf.begin(), cdf.end(), alpha);
        std::size_t k = std::size_t(it - cdf.begin());
        double c0 = cdf[k - 1], c1 = cdf[k];
        if (c1 <= c0) return x[k];
        return x[k - 1] + (alpha - c0) / (c1 - c0) * (x[k] - x[k - 1]);
    }
};

inline SumLaw rival_sum_law(const PopulationDesign& d, std::size_t i,
                            std::size_t grid_n = 4096) {
    require(i < d.prim.n, "rival_sum_law: firm out of range");
    double total_range = 0.0;
    for (std::size_t j = 0; j < d.prim.n; ++j)
        if (j != i) total_range += d.v_specs[j].support_hi() - d.v_specs[j].support_lo();
    require(total_range > 0.0, "rival_sum_law: degenerate rivals");
    double dx = total_range / double(grid_n);

    detail::GridDensity acc;
    bool first = true;
    for (std::size_t j = 0; j < d.prim.n; ++j) {
        if (j == i) continue;
        auto gj = detail::tabulate_centered(d.v_specs[j], dx);
        acc = first ? std::move(gj) : detail::convolve(acc, gj);
        first = false;
    }

    SumLaw law;
    law.x.resize(acc.f.size());
    law.cdf.resize(acc.f.size());
    double run = 0.0;
    for (std::size_t k = 0; k < acc.f.size(); ++k) {
        law.x[k] = acc.x0 + double(k) * acc.dx;
        if (k > 0) run += 0.5 * (acc.f[k] + acc.f[k - 1]) * acc.dx;
        law.cdf[k] = run;
    }
    require(run > 0.0, "rival_sum_law: zero mass");
    for (auto& c : law.cdf) c /= run;
    return law;
}

// ---------------------------------------------------------------------------
// beta via the conditional quantile-difference ratio at firm i's lowest-output
// event, F^-1_P differences over F^-1_{Q+_{-i}} differences.

inline double identify_beta(const PopulationDesign& d, std::size_t i, double alpha,
                            double alpha_prime) {
    d.validate();
    require(i < d.prim.n, "identify_beta: firm out of range");
    require(alpha != alpha_prime, "identify_beta: quantile levels must differ");
    const auto& m = d.prim;
    double q_floor = min_quantity(m, i);

    // at the event, rivals' outputs are affine in their centered costs:
    // Q+_{-i} = A - S / (lambda + 2 beta)
    double A = 0.0;
    for (std::size_t j = 0; j < m.n; ++j)
        if (j != i) A += equilibrium_quantity(m, j, m.mu_v[j], m.w_hi, m.u_lo);
    SumLaw s = rival_sum_law(d, i);
    double c2 = m.lambda + 2.0 * m.beta;

    auto q_rivals_quantile = [&](double g) { return A - s.quantile(1.0 - g) / c2; };
    auto p_quantile = [&](double g) {
        return m.u_lo - m.beta * (q_floor + q_rivals_quantile(1.0 - g));
    };

    double num = p_quantile(alpha_prime) - p_quantile(alpha);
    double den = q_rivals_quantile(1.0 - alpha) - q_rivals_quantile(1.0 - alpha_prime);
    require(std::fabs(den) > 0.0, "identify_beta: zero quantile spread in denominator");
    return num / den;
}

inline double identify_beta(const Panel& panel, std::size_t i, double alpha,
                            double alpha_prime, double epsilon = 0.0,
                            const NumericConfig& cfg = default_config()) {
    panel.validate();
    require(alpha != alpha_prime, "identify_beta: quantile levels must differ");
    auto ev = sample_boundary_event(panel, i, epsilon, cfg);
    auto rows = band_rows(panel, ev, cfg);

    std::vector<double> p_band, rivals_band;
    p_band.reserve(rows.size());
    rivals_band.reserve(rows.size());
    for (std::size_t t : rows) {
        p_band.push_back(panel.p[t]);
        rivals_band.push_back(panel.q_rivals(t, i));
    }
    std::sort(p_band.begin(), p_band.end());
    std::sort(rivals_band.begin(), rivals_band.end());

    double num = quantile_type7(p_band, alpha_prime) - quantile_type7(p_band, alpha);
    double den = quantile_type7(rivals_band, 1.0 - alpha) -
                 quantile_type7(rivals_band, 1.0 - alpha_prime);
    if (std::fabs(den) <= 0.0)
        throw numeric_error("identify_beta: zero quantile spread in denominator");
    return num / den;
}

// Over-identification: average across all firms and a fixed set of quantile
// pairs; dispersion reported as a specification diagnostic.
struct PooledEstimate {
    double value = 0.0;
    double dispersion = 0.0;  // max absolute deviation from the mean
    std::vector<double> contributions;
};

inline const std::vector<std::pair<double, double>>& default_quantile_pairs() {
    static const std::vector<std::pair<double, double>> pairs{
        {0.2, 0.8}, {0.25, 0.75}, {0.3, 0.7}};
    return pairs;
}

template <typename Source>
PooledEstimate identify_beta_pooled(const Source& src, std::size_t n_firms) {
    PooledEstimate out;
    for (std::size_t i = 0; i < n_firms; ++i)
        for (const auto& pr : default_quantile_pairs())
            out.contributions.push_back(identify_beta(src, i, pr.first, pr.second));
    out.value = detail::vec_mean(out.contributions);
    for (double b : out.contributions)
        out.dispersion = std::max(out.dispersion, std::fabs(b - out.value));
    return out;
}

// ---------------------------------------------------------------------------
// Demand shock recovery: U = P + beta Q+, F_U empirical.

struct DemandShockRecovery {
    std::vector<double> u;  // per panel row
    CdfGrid f_u;            // empirical CDF on sorted values
};

inline DemandShockRecovery recover_demand_shock(const Panel& panel, double beta) {
    panel.validate();
    DemandShockRecovery r;
    r.u.resize(panel.T());
    for (std::size_t t = 0; t < panel.T(); ++t) r.u[t] = panel.p[t] + beta * panel.q_plus(t);
    r.f_u.x = r.u;
    std::sort(r.f_u.x.begin(), r.f_u.x.end());
    r.f_u.cdf.resize(r.f_u.x.size());
    for (std::size_t k = 0; k < r.f_u.x.size(); ++k)
        r.f_u.cdf[k] = double(k + 1) / double(r.f_u.x.size());
    return r;
}

// ---------------------------------------------------------------------------
// lambda from the regression slope of Q_i on U = P + beta Q+.

inline double identify_lambda(const PopulationDesign& d, double beta) {
    d.validate();
    // population slope: cov(Q_i, U)/var(U) = gamma1 for every firm
    double gamma1 = d.prim.gamma1();
    return 1.0 / gamma1 - double(d.prim.n + 1) * beta;
}

inline double identify_lambda(const Panel& panel, double beta) {
    panel.validate();
    auto rec = recover_demand_shock(panel, beta);
    double var_u = detail::vec_var(rec.u);
    if (var_u <= 0.0) throw numeric_error("identify_lambda: nonpositive variance of P + beta Q+");
    const std::size_t n = panel.n_firms();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> qi(panel.T());
        for (std::size_t t = 0; t < panel.T(); ++t) qi[t] = panel.q[t][i];
        double gamma1 = detail::vec_cov(qi, rec.u) / var_u;
        if (gamma1 <= 0.0)
            throw numeric_error("identify_lambda: nonpositive regression slope");
        acc += 1.0 / gamma1 - double(n + 1) * beta;
    }
    return acc / double(n);
}

// ---------------------------------------------------------------------------
// Cost means from the averaged first-order condition.

inline std::vector<double> identify_mu_v(const PopulationDesign& d, double beta,
                                         double lambda) {
    d.validate();
    const auto& m = d.prim;
    double mu_u = mean(d.u_spec);
    std::vector<double> mu_q(m.n);
    for (std::size_t i = 0; i < m.n; ++i)
        mu_q[i] = m.gamma1() * (mu_u - m.g(i));  // E[W] = 0
    double q_all = std::accumulate(mu_q.begin(), mu_q.end(), 0.0);
    std::vector<double> out(m.n);
    for (std::size_t i = 0; i < m.n; ++i)
        out[i] = mu_u - beta * (q_all - mu_q[i]) - (lambda + 2.0 * beta) * mu_q[i];
    return out;
}

inline std::vector<double> identify_mu_v(const Panel& panel, double beta, double lambda) {
    panel.validate();
    auto rec = recover_demand_shock(panel, beta);
    double mu_u = detail::vec_mean(rec.u);
    const std::size_t n = panel.n_firms();
    std::vector<double> mu_q(n, 0.0);
    for (std::size_t t = 0; t < panel.T(); ++t)
        for (std::size_t i = 0; i < n; ++i) mu_q[i] += panel.q[t][i];
    for (auto& v : mu_q) v /= double(panel.T());
    double q_all = std::accumulate(mu_q.begin(), mu_q.end(), 0.0);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = mu_u - beta * (q_all - mu_q[i]) - (lambda + 2.0 * beta) * mu_q[i];
    return out;
}

// ---------------------------------------------------------------------------
// F_{V_i} from conditional quantiles of Q_i at rival j's boundary event:
// F^-1_{V_i}(alpha) = mu_i - (lambda + 2 beta) [F^-1_{Q_i|Q_j}(1 - alpha) - mean_{Q_i|Q_j}].

inline QuantileTable identify_fv(const PopulationDesign& d, std::size_t i, std::size_t j,
                                 const std::vector<double>& alpha_grid, double beta,
                                 double lambda, double mu_v_i) {
    d.validate();
    require(i < d.prim.n && j < d.prim.n && i != j, "identify_fv: need distinct firms");
    const auto& m = d.prim;
    // population conditional law of Q_i at (v_bar_j, w_bar, u_lo)
    double cond_mean = equilibrium_quantity(m, i, m.mu_v[i], m.w_hi, m.u_lo);
    double c2_true = m.lambda + 2.0 * m.beta;

    QuantileTable tab;
    tab.alpha = alpha_grid;
    tab.value.resize(alpha_grid.size());
    double c2 = lambda + 2.0 * beta;
    for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
        double a = alpha_grid[k];
        double q_quant =
            cond_mean - (quantile(d.v_specs[i], a) - m.mu_v[i]) / c2_true;  // level 1 - a
        tab.value[k] = mu_v_i - c2 * (q_quant - cond_mean);
    }
    tab.monotonize();
    tab.validate();
    return tab;
}

inline QuantileTable identify_fv(const Panel& panel, std::size_t i, std::size_t j,
                                 const std::vector<double>& alpha_grid, double beta,
                                 double lambda, double mu_v_i, double epsilon = 0.0,
                                 const NumericConfig& cfg = default_config()) {
    panel.validate();
    require(i < panel.n_firms() && j < panel.n_firms() && i != j,
            "identify_fv: need distinct firms");
    auto ev = sample_boundary_event(panel, j, epsilon, cfg);
    auto rows = band_rows(panel, ev, cfg);
    std::vector<double> qi;
    qi.reserve(rows.size());
    for (std::size_t t : rows) qi.push_back(panel.q[t][i]);
    double cond_mean = detail::vec_mean(qi);
    std::sort(qi.begin(), qi.end());

    QuantileTable tab;
    tab.alpha = alpha_grid;
    tab.value.resize(alpha_grid.size());
    double c2 = lambda + 2.0 * beta;
    for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
        double q_quant = quantile_type7(qi, 1.0 - alpha_grid[k]);
        tab.value[k] = mu_v_i - c2 * (q_quant - cond_mean);
    }
    tab.monotonize();
    tab.validate();
    return tab;
}

// ---------------------------------------------------------------------------
// W | U deconvolution. phi_{W|U}(z|u) = exp(iz (u - g_i)) * numerator / denominator
// with numerator = E[exp(-iz c Q_i) | U = u], c = lambda + (I+1) beta, and
// denominator = E[exp(iz c (V_i - mu_i)/(lambda + 2 beta))] computed from the
// recovered F_{V_i} quantile table. The z grid stops where |denominator| drops
// below the regularization floor.

struct WDeconvolution {
    std::size_t firm = 0;
    double beta = 0.0, lambda = 0.0;
    std::vector<double> mu_v;
    QuantileTable fv;  // recovered quantiles of V_firm

    std::vector<double> z;                      // grid, truncated at the floor
    std::vector<std::complex<double>> denom;    // phi of c (V - mu)/(lambda+2beta)
    bool floor_hit = false;

    double c() const { return lambda + double(mu_v.size() + 1) * beta; }
    double c2() const { return lambda + 2.0 * beta; }
    double g_i() const {
        double sum_rivals = 0.0;
        for (std::size_t j = 0; j < mu_v.size(); ++j)
            if (j != firm) sum_rivals += mu_v[j];
        double G = (lambda + double(mu_v.size()) * beta) * mu_v[firm] - beta * sum_rivals;
        return G / (lambda + beta);
    }
};

inline WDeconvolution make_w_deconvolution(std::size_t firm, double beta, double lambda,
                                           std::vector<double> mu_v, QuantileTable fv,
                                           const NumericConfig& cfg = default_config()) {
    WDeconvolution d;
    d.firm = firm;
    d.beta = beta;
    d.lambda = lambda;
    d.mu_v = std::move(mu_v);
    d.fv = std::move(fv);
    d.fv.validate();
    require(firm < d.mu_v.size(), "make_w_deconvolution: firm out of range");

    // quantile table of c (V - mu_i)/(lambda + 2 beta)
    double scale = d.c() / d.c2();
    std::vector<double> qv(d.fv.value.size());
    for (std::size_t k = 0; k < qv.size(); ++k)
        qv[k] = scale * (d.fv.value[k] - d.mu_v[d.firm]);

    // compact-support laws have oscillation nulls in |phi|, so isolated dips
    // below the floor are skipped (the inversion bridges the gap) and the grid
    // only stops on a sustained below-floor run, i.e. genuine decay
    std::size_t nz = static_cast<std::size_t>(std::floor(cfg.gp_zmax / cfg.gp_dz + 0.5));
    d.z.reserve(nz + 1);
    d.denom.reserve(nz + 1);
    d.z.push_back(0.0);
    d.denom.push_back({1.0, 0.0});
    std::size_t below_run = 0;
    for (std::size_t k = 1; k <= nz; ++k) {
        double zk = double(k) * cfg.gp_dz;
        auto phi = char_fn_from_quantiles(d.fv.alpha, qv, zk);
        if (std::abs(phi) < cfg.phi_floor) {
            double span = std::max(2.0, 0.05 * zk);
            if (double(++below_run) * cfg.gp_dz >= span) {
                d.floor_hit = true;
                break;
            }
            continue;
        }
        below_run = 0;
        d.z.push_back(zk);
        d.denom.push_back(phi);
    }
    require(d.z.size() >= 2, "make_w_deconvolution: denominator vanishes immediately");
    return d;
}

namespace detail {

// Assemble phi_{W|U} from the numerator values E[exp(-i z c Q_i)|u] on ctx.z.
inline CharFnGrid assemble_phi_w(const WDeconvolution& ctx, double u,
                                 const std::vector<std::complex<double>>& numerator) {
    CharFnGrid g;
    g.z = ctx.z;
    g.phi.resize(ctx.z.size());
    const std::complex<double> I(0.0, 1.0);
    double shift = u - ctx.g_i();
    for (std::size_t k = 0; k < ctx.z.size(); ++k) {
        std::complex<double> pre = std::exp(I * (ctx.z[k] * shift));
        g.phi[k] = pre * numerator[k] / ctx.denom[k];
    }
    g.phi[0] = {1.0, 0.0};  // z = 0 is exact by construction
    g.validate();
    return g;
}

}  // namespace detail

// Analytic numerator: the population law of Q_i | U = u factorizes into the
// independent W|u and V_i components, each evaluated from its quantile table.
inline CharFnGrid identify_phi_w(const WDeconvolution& ctx, const PopulationDesign& d,
                                 double u, int table_n = 256) {
    d.validate();
    require(ctx.firm < d.prim.n, "identify_phi_w: firm out of range");
    const auto& m = d.prim;
    double cc = ctx.c();
    double interim = equilibrium_quantity(m, ctx.firm, m.mu_v[ctx.firm], 0.0, u);

    // tabulate the true W|u quantiles once; the V component sits on the same
    // levels as the recovered table so its factor cancels the denominator
    // instead of compounding error near the regularization floor
    BetaSpec w_spec = d.w_spec.at(u);
    std::vector<double> a_grid(table_n + 1), qw(table_n + 1);
    for (int k = 0; k <= table_n; ++k) {
        a_grid[k] = double(k) / table_n;
        qw[k] = quantile(w_spec, a_grid[k]);
    }
    std::vector<double> qv(ctx.fv.alpha.size());
    for (std::size_t k = 0; k < qv.size(); ++k)
        qv[k] = quantile(d.v_specs[ctx.firm], ctx.fv.alpha[k]) - m.mu_v[ctx.firm];

    const std::complex<double> I(0.0, 1.0);
    double g1 = m.gamma1();
    double c2t = m.lambda + 2.0 * m.beta;
    std::vector<std::complex<double>> num(ctx.z.size());
    for (std::size_t k = 0; k < ctx.z.size(); ++k) {
        double z = ctx.z[k];
        // exp(-izc Q_i) with Q_i = interim - gamma1 W - (V - mu)/c2
        auto phi_w_part = char_fn_from_quantiles(a_grid, qw, z * cc * g1);
        auto phi_v_part = char_fn_from_quantiles(ctx.fv.alpha, qv, z * cc / c2t);
        num[k] = std::exp(-I * (z * cc * interim)) * phi_w_part * phi_v_part;
    }
    return detail::assemble_phi_w(ctx, u, num);
}

// Sample numerator: band average of exp(-i z c Q_i) over rows with recovered
// U near u.
inline CharFnGrid identify_phi_w(const WDeconvolution& ctx, const Panel& panel,
                                 const std::vector<double>& u_recovered, double u,
                                 double epsilon_u = 0.0,
                                 const NumericConfig& cfg = default_config()) {
    panel.validate();
    require(u_recovered.size() == panel.T(), "identify_phi_w: u vector length mismatch");

    double radius = 0.5 * epsilon_u;
    if (epsilon_u <= 0.0) {
        std::vector<double> dist(u_recovered.size());
        for (std::size_t t = 0; t < dist.size(); ++t) dist[t] = std::fabs(u_recovered[t] - u);
        std::sort(dist.begin(), dist.end());
        std::vector<double> su = u_recovered;
        std::sort(su.begin(), su.end());
        double width = quantile_type7(su, cfg.band_quantile) - su.front();
        std::size_t k = std::min(dist.size(), cfg.band_n_min) - 1;
        radius = std::max(0.5 * width, dist[k]);
    }
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < panel.T(); ++t)
        if (std::fabs(u_recovered[t] - u) <= radius) rows.push_back(t);
    if (rows.size() < std::min(cfg.band_n_min, panel.T()))
        throw numeric_error("identify_phi_w: insufficient observations near u");

    const std::complex<double> I(0.0, 1.0);
    double cc = ctx.c();
    std::vector<std::complex<double>> num(ctx.z.size());
    for (std::size_t k = 0; k < ctx.z.size(); ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t : rows) acc += std::exp(-I * (ctx.z[k] * cc * panel.q[t][ctx.firm]));
        num[k] = acc / double(rows.size());
    }
    return detail::assemble_phi_w(ctx, u, num);
}

// Invert a recovered phi grid into F_{W|U}(. | u) on a w grid.
inline GilPelaezResult recover_fw_given_u(const CharFnGrid& phi,
                                          const std::vector<double>& w_grid,
                                          const NumericConfig& cfg = default_config()) {
    return gil_pelaez_invert(phi, w_grid, cfg);
}

// Joint CDF assembly: F_{W,U}(w, u) = int_{u_lo}^{u} F_{W|U}(w|z) f_U(z) dz.
// fw(w, z) supplies the recovered conditional CDF, fu the demand-shock density.
template <typename FwFn, typename FuDensity>
std::vector<std::vector<double>> joint_fwu(const std::vector<double>& w_grid,
                                           const std::vector<double>& u_grid, double u_lo,
                                           FwFn&& fw, FuDensity&& fu, int nodes = 32) {
    std::vector<std::vector<double>> out(w_grid.size(),
                                         std::vector<double>(u_grid.size(), 0.0));
    for (std::size_t ju = 0; ju < u_grid.size(); ++ju) {
        double u = u_grid[ju];
        if (u <= u_lo) continue;
        // one quadrature pass per u; all w values share the conditional CDF at
        // each node, so evaluate fw per (node, w)
        const QuadRule& r = gauss_legendre(nodes);
        double mid = 0.5 * (u_lo + u), half = 0.5 * (u - u_lo);
        for (int kn = 0; kn < nodes; ++kn) {
            double z = mid + half * r.x[kn];
            double weight = r.w[kn] * half * fu(z);
            for (std::size_t jw = 0; jw < w_grid.size(); ++jw)
                out[jw][ju] += weight * fw(w_grid[jw], z);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Testable-implication diagnostics: at each firm's lowest-output band the
// rival total and the price must remain genuinely random (private
// information); a collapse flags the complete-information signature. A mass
// point at zero output flags entry/exit behavior foreign to the model.

struct FirmDiagnostic {
    std::size_t firm = 0;
    double q_floor = 0.0;
    double epsilon = 0.0;
    std::size_t band_count = 0;
    double rivals_variance_ratio = 0.0;  // band variance / unconditional variance
    double price_variance_ratio = 0.0;
    bool pass = false;
    double zero_share = 0.0;
    bool mass_point = false;
};

struct PrivateInfoDiagnostics {
    std::vector<FirmDiagnostic> firms;
    double density_floor = 0.0;
    bool all_pass = false;       // non-degenerate conditional laws for every firm
    bool any_mass_point = false;
};

inline PrivateInfoDiagnostics test_private_information(
    const Panel& panel, double epsilon = 0.0, double density_floor = 0.2,
    const NumericConfig& cfg = default_config()) {
    panel.validate();
    require(density_floor > 0.0 && density_floor < 1.0,
            "test_private_information: density_floor must be in (0,1)");
    const std::size_t n = panel.n_firms();

    std::vector<double> price = panel.p;
    double var_p = detail::vec_var(price);

    PrivateInfoDiagnostics out;
    out.density_floor = density_floor;
    out.all_pass = true;
    double q_scale = 0.0;
    for (std::size_t t = 0; t < panel.T(); ++t)
        for (std::size_t i = 0; i < n; ++i) q_scale = std::max(q_scale, panel.q[t][i]);

    for (std::size_t i = 0; i < n; ++i) {
        FirmDiagnostic d;
        d.firm = i;
        auto ev = sample_boundary_event(panel, i, epsilon, cfg);
        if (epsilon > 0.0) {
            // widen any firm whose explicit band is thinner than the count
            // rule; this keeps the shared width usable across firms with
            // different lower tails
            auto fallback = sample_boundary_event(panel, i, 0.0, cfg);
            ev.epsilon = std::max(ev.epsilon, fallback.epsilon);
        }
        d.q_floor = ev.q_floor;
        d.epsilon = ev.epsilon;
        auto rows = band_rows(panel, ev, cfg);
        d.band_count = rows.size();

        std::vector<double> rivals_band, price_band, rivals_all(panel.T());
        rivals_band.reserve(rows.size());
        price_band.reserve(rows.size());
        for (std::size_t t = 0; t < panel.T(); ++t) rivals_all[t] = panel.q_rivals(t, i);
        for (std::size_t t : rows) {
            rivals_band.push_back(rivals_all[t]);
            price_band.push_back(panel.p[t]);
        }
        double var_rb = detail::vec_var(rivals_band);
        double var_pb = detail::vec_var(price_band);
        double var_r = detail::vec_var(rivals_all);
        d.rivals_variance_ratio = var_r > 0.0 ? var_rb / var_r : 0.0;
        d.price_variance_ratio = var_p > 0.0 ? var_pb / var_p : 0.0;
        d.pass = d.rivals_variance_ratio >= density_floor &&
                 d.price_variance_ratio >= density_floor;

        std::size_t zeros = 0;
        for (std::size_t t = 0; t < panel.T(); ++t)
            if (panel.q[t][i] <= 1e-12 * std::max(1.0, q_scale)) ++zeros;
        d.zero_share = double(zeros) / double(panel.T());
        d.mass_point = d.zero_share > 0.05;

        out.all_pass = out.all_pass && d.pass;
        out.any_mass_point = out.any_mass_point || d.mass_point;
        out.firms.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full-pipeline report

struct IdentificationReport {
    PooledEstimate beta;
    CdfGrid u_cdf;
    double lambda = 0.0;
    std::vector<double> mu_v;
    std::vector<QuantileTable> fv;        // one per firm
    std::vector<double> fv_dispersion;    // sup gap across rival choices
    std::vector<double> phi_u_values;     // conditioning points for W | U
    std::vector<CharFnGrid> phi_w;
    std::vector<double> fw_w_grid;
    std::vector<GilPelaezResult> fw_given_u;
    PrivateInfoDiagnostics diagnostics;
    bool diagnostics_run = false;
};

struct IdentificationOptions {
    std::vector<double> alpha_grid = default_alpha_grid();
    std::vector<double> u_values;   // conditioning points; empty = median of U
    std::vector<double> w_grid;     // empty = auto from recovered scale
    double epsilon = 0.0;           // sample band width (0 = auto rule)
    bool run_diagnostics = true;    // sample mode only
    double density_floor = 0.2;
};

namespace detail {

template <typename FvSource>
void fill_fv_tables(IdentificationReport& rep, const FvSource& fv_at, std::size_t n) {
    rep.fv.resize(n);
    rep.fv_dispersion.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j1 = (i + 1) % n;
        std::size_t j2 = (i + 2) % n;
        rep.fv[i] = fv_at(i, j1);
        if (n > 2 && j2 != i) {
            QuantileTable alt = fv_at(i, j2);
            for (std::size_t k = 0; k < alt.value.size(); ++k)
                rep.fv_dispersion[i] = std::max(
                    rep.fv_dispersion[i], std::fabs(alt.value[k] - rep.fv[i].value[k]));
        }
    }
}

}  // namespace detail

inline IdentificationReport run_identification(const PopulationDesign& d,
                                               const IdentificationOptions& opt = {},
                                               const NumericConfig& cfg = default_config()) {
    d.validate();
    const std::size_t n = d.prim.n;
    IdentificationReport rep;
    rep.beta = identify_beta_pooled(d, n);
    rep.lambda = identify_lambda(d, rep.beta.value);
    rep.mu_v = identify_mu_v(d, rep.beta.value, rep.lambda);

    // population F_U on a quantile-spaced grid
    rep.u_cdf.x.resize(199);
    rep.u_cdf.cdf.resize(199);
    for (std::size_t k = 0; k < 199; ++k) {
        double a = double(k + 1) / 200.0;
        rep.u_cdf.x[k] = quantile(d.u_spec, a);
        rep.u_cdf.cdf[k] = a;
    }

    detail::fill_fv_tables(
        rep,
        [&](std::size_t i, std::size_t j) {
            return identify_fv(d, i, j, opt.alpha_grid, rep.beta.value, rep.lambda,
                               rep.mu_v[i]);
        },
        n);

    rep.phi_u_values = opt.u_values;
    if (rep.phi_u_values.empty()) rep.phi_u_values = {quantile(d.u_spec, 0.5)};
    rep.fw_w_grid = opt.w_grid;
    if (rep.fw_w_grid.empty()) {
        double wb = d.w_spec.support_hi();
        for (double x = -1.1 * wb; x <= 1.1 * wb + 1e-12; x += 0.05 * wb)
            rep.fw_w_grid.push_back(x);
    }
    auto ctx = make_w_deconvolution(0, rep.beta.value, rep.lambda, rep.mu_v, rep.fv[0], cfg);
    for (double u : rep.phi_u_values) {
        auto phi = identify_phi_w(ctx, d, u);
        rep.fw_given_u.push_back(recover_fw_given_u(phi, rep.fw_w_grid, cfg));
        rep.phi_w.push_back(std::move(phi));
    }
    return rep;
}

inline IdentificationReport run_identification(const Panel& panel,
                                               const IdentificationOptions& opt = {},
                                               const NumericConfig& cfg = default_config()) {
    panel.validate();
    const std::size_t n = panel.n_firms();
    IdentificationReport rep;
    rep.beta = [&] {
        PooledEstimate out;
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& pr : default_quantile_pairs())
                out.contributions.push_back(
                    identify_beta(panel, i, pr.first, pr.second, opt.epsilon, cfg));
        out.value = detail::vec_mean(out.contributions);
        for (double b : out.contributions)
            out.dispersion = std::max(out.dispersion, std::fabs(b - out.value));
        return out;
    }();
    auto shock = recover_demand_shock(panel, rep.beta.value);
    rep.u_cdf = shock.f_u;
    rep.lambda = identify_lambda(panel, rep.beta.value);
    rep.mu_v = identify_mu_v(panel, rep.beta.value, rep.lambda);

    detail::fill_fv_tables(
        rep,
        [&](std::size_t i, std::size_t j) {
            return identify_fv(panel, i, j, opt.alpha_grid, rep.beta.value, rep.lambda,
                               rep.mu_v[i], opt.epsilon, cfg);
        },
        n);

    rep.phi_u_values = opt.u_values;
    if (rep.phi_u_values.empty()) {
        std::vector<double> su = shock.u;
        std::sort(su.begin(), su.end());
        rep.phi_u_values = {quantile_type7(su, 0.5)};
    }
    rep.fw_w_grid = opt.w_grid;
    if (rep.fw_w_grid.empty()) {
        // recovered V spread sets the natural w scale
        double span = rep.fv[0].value.back() - rep.fv[0].value.front();
        double wb = std::max(span, 1e-6);
        for (double x = -1.1 * wb; x <= 1.1 * wb + 1e-12; x += 0.05 * wb)
            rep.fw_w_grid.push_back(x);
    }
    auto ctx = make_w_deconvolution(0, rep.beta.value, rep.lambda, rep.mu_v, rep.fv[0], cfg);
    for (double u : rep.phi_u_values) {
        auto phi = identify_phi_w(ctx, panel, shock.u, u, 0.0, cfg);
        rep.fw_given_u.push_back(recover_fw_given_u(phi, rep.fw_w_grid, cfg));
        rep.phi_w.push_back(std::move(phi));
    }

    if (opt.run_diagnostics) {
        rep.diagnostics = test_private_information(panel, opt.epsilon, opt.density_floor, cfg);
        rep.diagnostics_run = true;
    }
    return rep;
}

}  // namespace cournot
