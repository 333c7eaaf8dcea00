#pragma once

// A population design bundles the market primitives with the shock laws that
// generate them. Primitives (means, supports) are derived from the laws so the
// two cannot disagree.

#include <vector>

#include "cournot/distributions.hpp"
#include "cournot/model.hpp"

namespace cournot {

struct PopulationDesign {
    ModelPrimitives prim;
    std::vector<BetaSpec> v_specs;  // private cost law per firm
    TruncNormalSpec u_spec;         // demand shock law
    WGivenUSpec w_spec;             // common cost shock law given u

    void validate() const {
        prim.validate();
        require(v_specs.size() == prim.n, "PopulationDesign: one cost law per firm");
        for (const auto& s : v_specs) s.validate();
        u_spec.validate();
        w_spec.validate();
    }
};

inline PopulationDesign make_design(double beta, double lambda,
                                    std::vector<BetaSpec> v_specs, TruncNormalSpec u_spec,
                                    WGivenUSpec w_spec) {
    PopulationDesign d;
    d.v_specs = std::move(v_specs);
    d.u_spec = u_spec;
    d.w_spec = w_spec;
    d.prim.n = d.v_specs.size();
    d.prim.beta = beta;
    d.prim.lambda = lambda;
    d.prim.mu_v.resize(d.prim.n);
    d.prim.v_lo.resize(d.prim.n);
    d.prim.v_hi.resize(d.prim.n);
    for (std::size_t i = 0; i < d.prim.n; ++i) {
        d.prim.mu_v[i] = mean(d.v_specs[i]);
        d.prim.v_lo[i] = d.v_specs[i].support_lo();
        d.prim.v_hi[i] = d.v_specs[i].support_hi();
    }
    d.prim.w_lo = d.w_spec.support_lo();
    d.prim.w_hi = d.w_spec.support_hi();
    d.prim.u_lo = u_spec.lower;
    d.validate();
    return d;
}

}  // namespace cournot
