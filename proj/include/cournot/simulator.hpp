#pragma once

// Panel simulation. Draws are stationary shocks plus optional deterministic
// exponential trends: V_it = tau_s_i e^{-tau t} + V^dt_it and
// U_t = tau_d e^{-tau t} + U^dt_t with tau_d = -beta/(lambda+beta) sum tau_s,
// the coupling that keeps prices trend-free. Each period gets its own
// counter-derived RNG stream, so panels are reproducible independent of
// evaluation order.

#include <cmath>
#include <vector>

#include "cournot/design.hpp"
#include "cournot/panel.hpp"
#include "cournot/rng.hpp"

namespace cournot {

struct TrendSpec {
    double tau = 0.0;                // decay rate; 0 disables the trend
    std::vector<double> tau_s;       // per-firm supply trend loadings

    void validate(std::size_t n) const {
        require(tau >= 0.0, "TrendSpec: tau must be nonnegative");
        if (tau > 0.0)
            require(tau_s.size() == n, "TrendSpec: tau_s must have one entry per firm");
    }
    bool active() const { return tau > 0.0; }

    double tau_d(double beta, double lambda) const {
        if (!active()) return 0.0;
        double s = 0.0;
        for (double x : tau_s) s += x;
        return -beta / (lambda + beta) * s;
    }
};

struct SimOutput {
    Panel panel;
    LatentPanel latents;  // trended shock values actually entering the market
};

// Simulate T markets. Within period t, draw order is u, w, v_1..v_n.
inline SimOutput simulate_panel(const PopulationDesign& design, const TrendSpec& trend,
                                std::size_t T, std::uint64_t seed) {
    design.validate();
    trend.validate(design.prim.n);
    require(T >= 1, "simulate_panel: T must be positive");

    const std::size_t n = design.prim.n;
    const double tau_d = trend.tau_d(design.prim.beta, design.prim.lambda);

    SimOutput out;
    out.panel.p.resize(T);
    out.panel.q.assign(T, std::vector<double>(n));
    out.latents.u.resize(T);
    out.latents.w.resize(T);
    out.latents.v.assign(T, std::vector<double>(n));

    for (std::size_t t = 0; t < T; ++t) {
        Stream rng(seed, {0x5a17u, t});
        double decay = trend.active() ? std::exp(-trend.tau * double(t + 1)) : 0.0;

        double u_dt = draw(design.u_spec, rng);
        double w = draw(design.w_spec.at(u_dt), rng);
        double u = u_dt + tau_d * decay;

        ModelPrimitives prim_t = design.prim;  // period means shift with the trend
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v_dt = draw(design.v_specs[i], rng);
            double shift = trend.active() ? trend.tau_s[i] * decay : 0.0;
            v[i] = v_dt + shift;
            prim_t.mu_v[i] += shift;
        }

        double qsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double q = equilibrium_quantity(prim_t, i, v[i], w, u);
            out.panel.q[t][i] = q;
            qsum += q;
        }
        out.panel.p[t] = u - design.prim.beta * qsum;
        out.latents.u[t] = u;
        out.latents.w[t] = w;
        out.latents.v[t] = v;
    }
    return out;
}

}  // namespace cournot
