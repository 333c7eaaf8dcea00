#pragma once

// Shock distribution families and characteristic-function inversion.
//
// BetaSpec is a Beta(a,b) law truncated to [t_lo, t_hi] and then mapped
// affinely: X = shift + scale * B. The truncated law is renormalized on the
// truncation window. TruncNormalSpec is a normal left-truncated at `lower`.
// Sampling is by quantile inversion so draws, cdf and quantile are mutually
// consistent by construction.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "cournot/common.hpp"
#include "cournot/quadrature.hpp"
#include "cournot/rng.hpp"
#include "cournot/special.hpp"

namespace cournot {

// ---------------------------------------------------------------------------
// Truncated, affinely mapped Beta

struct BetaSpec {
    double a = 1.0, b = 1.0;
    double t_lo = 0.0, t_hi = 1.0;  // truncation window in Beta coordinates
    double scale = 1.0, shift = 0.0;

    void validate(const NumericConfig& cfg = default_config()) const {
        require(a > 0.0 && b > 0.0, "BetaSpec: shapes must be positive");
        require(0.0 <= t_lo && t_lo < t_hi && t_hi <= 1.0,
                "BetaSpec: need 0 <= t_lo < t_hi <= 1");
        require(scale > 0.0, "BetaSpec: scale must be positive");
        double mass = inc_beta(a, b, t_hi) - inc_beta(a, b, t_lo);
        if (mass < cfg.min_trunc_mass)
            throw invalid_input("BetaSpec: truncation window mass below minimum");
    }

    double mass() const { return inc_beta(a, b, t_hi) - inc_beta(a, b, t_lo); }
    double support_lo() const { return shift + scale * t_lo; }
    double support_hi() const { return shift + scale * t_hi; }
};

inline double density(const BetaSpec& s, double x) {
    double u = (x - s.shift) / s.scale;
    if (u < s.t_lo || u > s.t_hi) return 0.0;
    double logpdf = (s.a - 1.0) * std::log(u) + (s.b - 1.0) * std::log1p(-u) -
                    log_beta_fn(s.a, s.b);
    return std::exp(logpdf) / (s.mass() * s.scale);
}

inline double cdf(const BetaSpec& s, double x) {
    double u = (x - s.shift) / s.scale;
    if (u <= s.t_lo) return 0.0;
    if (u >= s.t_hi) return 1.0;
    double flo = inc_beta(s.a, s.b, s.t_lo);
    return (inc_beta(s.a, s.b, u) - flo) / s.mass();
}

inline double quantile(const BetaSpec& s, double p) {
    require(p >= 0.0 && p <= 1.0, "quantile: p must be in [0,1]");
    double flo = inc_beta(s.a, s.b, s.t_lo);
    double u = inc_beta_inv(s.a, s.b, flo + p * s.mass());
    if (u < s.t_lo) u = s.t_lo;
    if (u > s.t_hi) u = s.t_hi;
    return s.shift + s.scale * u;
}

inline double draw(const BetaSpec& s, Stream& rng) { return quantile(s, rng.uniform()); }

// Mean of the truncated Beta via the incomplete-beta ratio
// E[B | window] = a/(a+b) * (I_hi(a+1,b) - I_lo(a+1,b)) / window mass,
// then affinely mapped. Exact for the truncated family.
inline double mean(const BetaSpec& s) {
    double num = inc_beta(s.a + 1.0, s.b, s.t_hi) - inc_beta(s.a + 1.0, s.b, s.t_lo);
    double m = (s.a / (s.a + s.b)) * num / s.mass();
    return s.shift + s.scale * m;
}

inline double variance(const BetaSpec& s) {
    double m = mean(s);
    double second = integrate(
        [&](double alpha) {
            double v = quantile(s, alpha) - m;
            return v * v;
        },
        0.0, 1.0, 128);
    return second;
}

// ---------------------------------------------------------------------------
// Left-truncated normal

struct TruncNormalSpec {
    double mu = 0.0;
    double sigma2 = 1.0;
    double lower = 0.0;

    void validate() const {
        require(sigma2 > 0.0, "TruncNormalSpec: sigma2 must be positive");
        require(std::isfinite(mu) && std::isfinite(lower), "TruncNormalSpec: non-finite");
    }
    double sigma() const { return std::sqrt(sigma2); }
    double tail_mass() const { return 1.0 - normal_cdf((lower - mu) / sigma()); }
};

inline double density(const TruncNormalSpec& s, double x) {
    if (x < s.lower) return 0.0;
    double sd = s.sigma();
    return normal_pdf((x - s.mu) / sd) / (sd * s.tail_mass());
}

inline double cdf(const TruncNormalSpec& s, double x) {
    if (x <= s.lower) return 0.0;
    double sd = s.sigma();
    double f0 = normal_cdf((s.lower - s.mu) / sd);
    return (normal_cdf((x - s.mu) / sd) - f0) / (1.0 - f0);
}

inline double quantile(const TruncNormalSpec& s, double p) {
    require(p >= 0.0 && p <= 1.0, "quantile: p must be in [0,1]");
    double sd = s.sigma();
    double f0 = normal_cdf((s.lower - s.mu) / sd);
    double q = f0 + p * (1.0 - f0);
    if (q <= 0.0) return s.lower;
    if (q >= 1.0) q = 1.0 - 1e-16;
    return s.mu + sd * normal_quantile(q);
}

inline double draw(const TruncNormalSpec& s, Stream& rng) { return quantile(s, rng.uniform()); }

inline double mean(const TruncNormalSpec& s) {
    double sd = s.sigma();
    double alpha = (s.lower - s.mu) / sd;
    return s.mu + sd * normal_pdf(alpha) / (1.0 - normal_cdf(alpha));
}

inline double variance(const TruncNormalSpec& s) {
    double sd = s.sigma();
    double alpha = (s.lower - s.mu) / sd;
    double lam = normal_pdf(alpha) / (1.0 - normal_cdf(alpha));
    return s.sigma2 * (1.0 + alpha * lam - lam * lam);
}

// ---------------------------------------------------------------------------
// Common-shock family: W | U = u is a symmetric scaled Beta on [-w_bar, w_bar]
// with shape a(u) = exp(a1 + a2 * u). Symmetric truncation keeps E[W|u] = 0.

struct WGivenUSpec {
    double w_bar = 1.0;
    double a1 = 0.0, a2 = 0.0;
    double t_lo = 0.0, t_hi = 1.0;

    void validate() const {
        require(w_bar > 0.0, "WGivenUSpec: w_bar must be positive");
        require(0.0 <= t_lo && t_lo < t_hi && t_hi <= 1.0, "WGivenUSpec: bad truncation");
        require(std::fabs((t_lo + t_hi) - 1.0) < 1e-12,
                "WGivenUSpec: truncation must be symmetric so E[W|u] stays 0");
    }

    double shape(double u) const { return std::exp(a1 + a2 * u); }

    BetaSpec at(double u) const {
        double a = shape(u);
        return BetaSpec{a, a, t_lo, t_hi, 2.0 * w_bar, -w_bar};
    }

    double support_lo() const { return -w_bar * (2.0 * t_hi - 1.0); }
    double support_hi() const { return w_bar * (2.0 * t_hi - 1.0); }
};

// ---------------------------------------------------------------------------
// Characteristic functions

// phi_X(z) for a law given by a quantile function tabulated on an alpha grid.
// Each segment is integrated in closed form, which stays accurate for large z
// where plain quadrature would alias the oscillation.
inline std::complex<double> char_fn_from_quantiles(const std::vector<double>& alpha,
                                                   const std::vector<double>& q, double z) {
    require(alpha.size() == q.size() && alpha.size() >= 2, "char_fn: bad quantile table");
    std::complex<double> acc(0.0, 0.0);
    const std::complex<double> I(0.0, 1.0);
    for (std::size_t k = 0; k + 1 < alpha.size(); ++k) {
        double da = alpha[k + 1] - alpha[k];
        if (da <= 0.0) continue;
        double m = (q[k + 1] - q[k]);
        double zm = z * m;
        std::complex<double> seg;
        if (std::fabs(zm) < 1e-8) {
            seg = std::exp(I * (z * 0.5 * (q[k] + q[k + 1]))) * da;
        } else {
            seg = std::exp(I * (z * q[k])) * (std::exp(I * zm) - 1.0) / (I * z * m) * da;
        }
        acc += seg;
    }
    return acc;
}

template <typename Spec>
std::complex<double> char_fn(const Spec& s, double z, int table_n = 512) {
    std::vector<double> alpha(table_n + 1), q(table_n + 1);
    for (int i = 0; i <= table_n; ++i) {
        alpha[i] = double(i) / table_n;
        q[i] = quantile(s, alpha[i]);
    }
    return char_fn_from_quantiles(alpha, q, z);
}

// Characteristic function samples on a uniform z grid starting at 0.
struct CharFnGrid {
    std::vector<double> z;
    std::vector<std::complex<double>> phi;

    void validate() const {
        require(z.size() == phi.size() && z.size() >= 2, "CharFnGrid: size mismatch");
        require(z.front() == 0.0, "CharFnGrid: grid must start at z = 0");
        require(std::abs(phi.front() - std::complex<double>(1.0, 0.0)) < 1e-8,
                "CharFnGrid: phi(0) must equal 1");
    }
};

template <typename PhiFn>
CharFnGrid make_char_fn_grid(PhiFn&& phi, double dz, double zmax) {
    require(dz > 0.0 && zmax > dz, "make_char_fn_grid: bad grid parameters");
    CharFnGrid g;
    std::size_t n = static_cast<std::size_t>(std::floor(zmax / dz + 0.5));
    g.z.reserve(n + 1);
    g.phi.reserve(n + 1);
    g.z.push_back(0.0);
    g.phi.push_back({1.0, 0.0});
    for (std::size_t k = 1; k <= n; ++k) {
        double zk = k * dz;
        g.z.push_back(zk);
        g.phi.push_back(phi(zk));
    }
    return g;
}

struct GilPelaezResult {
    std::vector<double> x;
    std::vector<double> cdf;
    bool tail_warning = false;  // |phi(z_max)| above tail tolerance
};

// CDF recovery F(x) = 1/2 - (1/pi) int_0^inf Im[phi(z) e^{-izx}] / z dz,
// trapezoid on (0, z_max], values clipped to [0,1] and monotonized.
inline GilPelaezResult gil_pelaez_invert(const CharFnGrid& grid, const std::vector<double>& x,
                                         const NumericConfig& cfg = default_config()) {
    grid.validate();
    GilPelaezResult out;
    out.x = x;
    out.cdf.resize(x.size());
    out.tail_warning = std::abs(grid.phi.back()) > cfg.gp_tail_tol;

    const std::size_t nz = grid.z.size();
    for (std::size_t j = 0; j < x.size(); ++j) {
        // integrand Im[phi(z) e^{-izx}]/z has finite limit E[X]-x at z -> 0;
        // cover [0, z1] with a rectangle at z1 (O(dz^2) error), trapezoid after.
        double acc = 0.0;
        double prev = 0.0;
        for (std::size_t k = 1; k < nz; ++k) {
            double z = grid.z[k];
            std::complex<double> e = std::exp(std::complex<double>(0.0, -z * x[j]));
            double val = (grid.phi[k] * e).imag() / z;
            if (k == 1)
                acc += val * (grid.z[1] - grid.z[0]);
            else
                acc += 0.5 * (prev + val) * (grid.z[k] - grid.z[k - 1]);
            prev = val;
        }
        double f = 0.5 - acc / M_PI;
        out.cdf[j] = std::min(1.0, std::max(0.0, f));
    }
    for (std::size_t j = 1; j < out.cdf.size(); ++j)
        out.cdf[j] = std::max(out.cdf[j], out.cdf[j - 1]);
    return out;
}

}  // namespace cournot
