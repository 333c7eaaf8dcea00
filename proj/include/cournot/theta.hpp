#pragma once

// Parametric model family used by the likelihood. Firms fall into groups
// sharing Beta cost shapes; the cost scale is tied to the common-shock bound:
// V_i ~ w_bar (Beta(a_g, b_g) + 1) truncated, W | U = u symmetric on
// [-w_bar, w_bar] with shape exp(a_w1 + a_w2 u), U left-truncated normal.
//
// Vector layout (fixed order, used by the optimizer and reports):
//   [beta, lambda, u_lo, mu_u, sigma2_u, w_bar, a_w1, a_w2,
//    a_1, b_1, ..., a_G, b_G]

#include <string>
#include <vector>

#include "cournot/design.hpp"

namespace cournot {

struct ThetaParam {
    double beta = 0.5;
    double lambda = 0.0;
    double u_lo = 1.0;
    double mu_u = 1.0;
    double sigma2_u = 1.0;
    double w_bar = 1.0;
    double a_w1 = 0.0, a_w2 = 0.0;
    std::vector<double> group_a, group_b;    // Beta shapes per group
    std::vector<std::size_t> group_of;       // firm -> group
    double t_lo = 0.025, t_hi = 0.975;       // Beta truncation window

    std::size_t n_firms() const { return group_of.size(); }
    std::size_t n_groups() const { return group_a.size(); }
    std::size_t dim() const { return 8 + 2 * n_groups(); }

    void validate() const {
        require(n_groups() >= 1 && group_b.size() == n_groups(),
                "ThetaParam: group shape vectors mismatch");
        require(n_firms() >= 2, "ThetaParam: need at least two firms");
        for (std::size_t g : group_of)
            require(g < n_groups(), "ThetaParam: firm mapped to missing group");
        require(beta > 0.0, "ThetaParam: beta must be positive");
        require(lambda >= 0.0, "ThetaParam: lambda must be nonnegative");
        require(u_lo > 0.0 && sigma2_u > 0.0 && w_bar > 0.0,
                "ThetaParam: scale parameters must be positive");
        for (std::size_t g = 0; g < n_groups(); ++g)
            require(group_a[g] > 0.0 && group_b[g] > 0.0,
                    "ThetaParam: Beta shapes must be positive");
        require(0.0 <= t_lo && t_lo < t_hi && t_hi <= 1.0, "ThetaParam: bad truncation");
    }

    std::vector<double> to_vector() const {
        std::vector<double> x{beta, lambda, u_lo, mu_u, sigma2_u, w_bar, a_w1, a_w2};
        for (std::size_t g = 0; g < n_groups(); ++g) {
            x.push_back(group_a[g]);
            x.push_back(group_b[g]);
        }
        return x;
    }

    static ThetaParam from_vector(const std::vector<double>& x, const ThetaParam& like) {
        require(x.size() == like.dim(), "ThetaParam::from_vector: wrong length");
        ThetaParam t = like;
        t.beta = x[0];
        t.lambda = x[1];
        t.u_lo = x[2];
        t.mu_u = x[3];
        t.sigma2_u = x[4];
        t.w_bar = x[5];
        t.a_w1 = x[6];
        t.a_w2 = x[7];
        for (std::size_t g = 0; g < like.n_groups(); ++g) {
            t.group_a[g] = x[8 + 2 * g];
            t.group_b[g] = x[9 + 2 * g];
        }
        return t;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> nm{"beta", "lambda", "u_lo",  "mu_u",
                                    "sigma2_u", "w_bar",  "a_w1", "a_w2"};
        for (std::size_t g = 1; g <= n_groups(); ++g) {
            nm.push_back("a_" + std::to_string(g));
            nm.push_back("b_" + std::to_string(g));
        }
        return nm;
    }

    BetaSpec v_spec(std::size_t firm) const {
        std::size_t g = group_of[firm];
        return BetaSpec{group_a[g], group_b[g], t_lo, t_hi, w_bar, w_bar};
    }

    WGivenUSpec w_spec() const { return WGivenUSpec{w_bar, a_w1, a_w2, t_lo, t_hi}; }
    TruncNormalSpec u_spec() const { return TruncNormalSpec{mu_u, sigma2_u, u_lo}; }

    PopulationDesign to_design() const {
        validate();
        std::vector<BetaSpec> vs;
        vs.reserve(n_firms());
        for (std::size_t i = 0; i < n_firms(); ++i) vs.push_back(v_spec(i));
        return make_design(beta, lambda, std::move(vs), u_spec(), w_spec());
    }
};

}  // namespace cournot
