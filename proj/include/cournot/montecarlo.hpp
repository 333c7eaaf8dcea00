#pragma once

// Monte Carlo harness: simulate panels at a true parameter point, run the full
// detrend-and-estimate pipeline on each replication, and summarize bias, SD,
// and RMSE per parameter as fractions of the true values.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cournot/estimation.hpp"
#include "cournot/simulator.hpp"

namespace cournot {

struct MCOptions {
    std::size_t T = 350;
    std::size_t n_reps = 50;
    std::uint64_t seed = 20260401;
    TrendSpec trend{};          // default: no trend
    double box_frac = 0.5;      // estimation box half width around truth
    EstimateOptions est{};      // est.n_starts 0 keeps the config default
};

struct MCResult {
    std::vector<std::string> names;
    std::vector<double> truth;
    std::vector<std::vector<double>> estimates;  // [replication][parameter]
    std::vector<double> rel_bias, rel_sd, rel_rmse;
    std::size_t n_reps_requested = 0;
    std::size_t n_failed = 0;  // replications excluded after optimizer failure
};

inline MCResult run_monte_carlo(const ThetaParam& truth, const MCOptions& opt,
                                const NumericConfig& cfg = default_config()) {
    truth.validate();
    require(opt.n_reps >= 1, "run_monte_carlo: need at least one replication");

    const PopulationDesign design = truth.to_design();
    const ThetaBox box = ThetaBox::around(truth, opt.box_frac);

    MCResult res;
    res.names = truth.names();
    res.truth = truth.to_vector();
    res.n_reps_requested = opt.n_reps;

    for (std::size_t r = 0; r < opt.n_reps; ++r) {
        std::uint64_t panel_seed = Stream(opt.seed, {0x4d43u, r}).next_u64();
        SimOutput sim = simulate_panel(design, opt.trend, opt.T, panel_seed);
        try {
            EstimateResult est = estimate(sim.panel, truth, box, opt.est, cfg);
            if (!std::isfinite(est.penalized)) throw numeric_error("non-finite objective");
            res.estimates.push_back(est.theta.to_vector());
        } catch (const std::exception&) {
            ++res.n_failed;
        }
    }
    require(!res.estimates.empty(), "run_monte_carlo: every replication failed");

    const std::size_t dim = res.truth.size();
    const double R = double(res.estimates.size());
    res.rel_bias.resize(dim);
    res.rel_sd.resize(dim);
    res.rel_rmse.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        double m = 0.0;
        for (const auto& e : res.estimates) m += e[k];
        m /= R;
        double var = 0.0;
        for (const auto& e : res.estimates) var += (e[k] - m) * (e[k] - m);
        var /= R;  // population variance so rmse^2 = bias^2 + sd^2 holds exactly
        double bias = m - res.truth[k];
        double denom = res.truth[k] != 0.0 ? std::fabs(res.truth[k]) : 1.0;
        res.rel_bias[k] = bias / denom;
        res.rel_sd[k] = std::sqrt(var) / denom;
        res.rel_rmse[k] = std::sqrt(bias * bias + var) / denom;
    }
    return res;
}

// CSV mirror of the simulation-results table: one row per parameter with the
// true value and the relative bias / SD / RMSE columns.
inline std::string mc_table_csv(const MCResult& r) {
    std::ostringstream os;
    os << "parameter,true,bias,sd,rmse\n";
    os.setf(std::ios::fmtflags(0), std::ios::floatfield);
    os.precision(10);
    for (std::size_t k = 0; k < r.names.size(); ++k) {
        os << r.names[k] << ',' << r.truth[k] << ',' << r.rel_bias[k] << ',' << r.rel_sd[k]
           << ',' << r.rel_rmse[k] << '\n';
    }
    return os.str();
}

}  // namespace cournot
