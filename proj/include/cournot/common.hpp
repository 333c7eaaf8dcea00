#pragma once

// Shared numeric configuration and error types. All tolerances used by the
// library and its tests live in one record so they cannot drift apart.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cournot {

struct NumericConfig {
    // residual tolerances
    double foc_tol = 1e-10;      // first-order-condition residuals
    double algebra_tol = 1e-12;  // exact algebraic identities

    // characteristic-function inversion grid
    double gp_dz = 0.01;
    double gp_zmax = 400.0;
    double gp_tail_tol = 1e-2;   // warn when |phi(z_max)| exceeds this

    // quadrature
    int likelihood_nodes = 64;   // Gauss-Legendre nodes for the cost integral
    int moment_nodes = 64;       // generic expectation quadrature

    // identification
    std::size_t band_n_min = 200;    // minimum observations in a boundary band
    double band_quantile = 0.01;     // default band width: 1st percentile
    double phi_floor = 1e-3;         // denominator floor in deconvolution

    // optimizer
    double nm_obj_tol = 1e-8;
    double nm_simplex_tol = 1e-6;
    int nm_max_evals = 40000;
    int multistart = 5;

    // distribution safety
    double min_trunc_mass = 1e-12;
};

inline const NumericConfig& default_config() {
    static const NumericConfig cfg{};
    return cfg;
}

// Invalid inputs (bad parameters, malformed specs, schema violations).
struct invalid_input : std::invalid_argument {
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures (non-convergence, degenerate systems, empty bands).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw invalid_input(what);
}

}  // namespace cournot
