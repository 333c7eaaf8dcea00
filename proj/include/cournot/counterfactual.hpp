#pragma once

// Information-regime machinery: k-means grouping of firms on their output
// profiles, simulation of the same markets under private and publicly shared
// costs with common random numbers, consumer-surplus accounting, and the CSV
// emitter backing the regime-comparison figures.

#include <array>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cournot/model.hpp"
#include "cournot/panel.hpp"
#include "cournot/rng.hpp"
#include "cournot/theta.hpp"

namespace cournot {

// ---------------------------------------------------------------------------
// Firm grouping. Each firm is a point (mean output, SD of output) over the
// detrended sample; clusters come from Lloyd iteration with k-means++ seeding
// and a fixed number of restarts, keeping the best within-cluster sum of
// squares. Deterministic given the seed.

struct GroupingResult {
    std::size_t k = 0;
    std::vector<std::array<double, 2>> centroids;  // (mean, sd) per cluster
    std::vector<std::size_t> assignment;           // firm -> cluster
    double within_ss = 0.0;
};

inline std::vector<std::array<double, 2>> firm_features(const Panel& panel) {
    panel.validate();
    const std::size_t T = panel.T(), n = panel.n_firms();
    require(T >= 2, "firm_features: need at least two periods for a spread");
    std::vector<std::array<double, 2>> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0, ss = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            s += panel.q[t][i];
            ss += panel.q[t][i] * panel.q[t][i];
        }
        double m = s / double(T);
        double var = std::max(0.0, (ss - s * m) / double(T - 1));
        pts[i] = {m, std::sqrt(var)};
    }
    return pts;
}

namespace detail {

inline double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

}  // namespace detail

inline GroupingResult kmeans_firms(const Panel& panel, std::size_t k,
                                   std::uint64_t seed = 2026) {
    auto pts = firm_features(panel);
    const std::size_t n = pts.size();
    require(k >= 1, "kmeans_firms: need at least one cluster");
    if (k > n) throw invalid_input("kmeans_firms: more clusters than firms");

    GroupingResult best;
    best.within_ss = std::numeric_limits<double>::infinity();

    const int restarts = 20, max_iter = 200;
    for (int r = 0; r < restarts; ++r) {
        Stream rng(seed, {0x4b6du, std::uint64_t(r)});

        // k-means++ seeding: each next center drawn with probability
        // proportional to squared distance from the nearest chosen one
        std::vector<std::array<double, 2>> centers;
        centers.push_back(pts[std::size_t(rng.uniform() * double(n)) % n]);
        std::vector<double> d2(n);
        while (centers.size() < k) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d2[i] = detail::dist2(pts[i], centers[0]);
                for (std::size_t c = 1; c < centers.size(); ++c)
                    d2[i] = std::min(d2[i], detail::dist2(pts[i], centers[c]));
                total += d2[i];
            }
            if (total <= 0.0) {
                centers.push_back(pts[std::size_t(rng.uniform() * double(n)) % n]);
                continue;
            }
            double pick = rng.uniform() * total, acc = 0.0;
            std::size_t chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (pick <= acc) { chosen = i; break; }
            }
            centers.push_back(pts[chosen]);
        }

        std::vector<std::size_t> assign(n, 0);
        for (int it = 0; it < max_iter; ++it) {
            bool moved = false;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t arg = 0;
                double bestd = detail::dist2(pts[i], centers[0]);
                for (std::size_t c = 1; c < k; ++c) {
                    double d = detail::dist2(pts[i], centers[c]);
                    if (d < bestd) { bestd = d; arg = c; }
                }
                if (arg != assign[i]) { assign[i] = arg; moved = true; }
            }
            if (!moved && it > 0) break;

            for (std::size_t c = 0; c < k; ++c) {
                std::array<double, 2> m = {0.0, 0.0};
                std::size_t cnt = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (assign[i] == c) { m[0] += pts[i][0]; m[1] += pts[i][1]; ++cnt; }
                if (cnt == 0) {
                    // revive an empty cluster at the point farthest from its center
                    std::size_t far = 0;
                    double fd = -1.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        double d = detail::dist2(pts[i], centers[assign[i]]);
                        if (d > fd) { fd = d; far = i; }
                    }
                    centers[c] = pts[far];
                } else {
                    centers[c] = {m[0] / double(cnt), m[1] / double(cnt)};
                }
            }
        }

        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += detail::dist2(pts[i], centers[assign[i]]);
        if (ss < best.within_ss) {
            best.k = k;
            best.centroids = centers;
            best.assignment = assign;
            best.within_ss = ss;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Regime comparison. For each simulated period the same latent draws (common
// random numbers) feed both the private-information strategies and the
// shared-cost benchmark, so differences are informational, not sampling noise.
// Consumer surplus under linear inverse demand is the quadratic wedge
// beta (Q+)^2 / 2. Averaging is across simulation draws first, then across
// firms within a group when emitting figures.

inline double consumer_surplus(double beta, double q_plus) {
    return 0.5 * beta * q_plus * q_plus;
}

struct RegimePath {
    std::vector<double> p, cs;           // per period, averaged across draws
    std::vector<std::vector<double>> q;  // [period][firm], averaged across draws
};

struct RegimeComparison {
    RegimePath incomplete, complete;
    double cs_ratio = 1.0;  // total complete-info CS over total private-info CS
    std::size_t n_sims = 0;
};

inline RegimeComparison compare_regimes(const ThetaParam& th, std::size_t T_sim,
                                        std::size_t n_sims, std::uint64_t seed = 2026) {
    require(T_sim >= 1 && n_sims >= 1, "compare_regimes: need positive sim sizes");
    PopulationDesign design = th.to_design();
    const ModelPrimitives& prim = design.prim;
    const std::size_t n = prim.n;

    RegimeComparison out;
    out.n_sims = n_sims;
    auto init = [&](RegimePath& path) {
        path.p.assign(T_sim, 0.0);
        path.cs.assign(T_sim, 0.0);
        path.q.assign(T_sim, std::vector<double>(n, 0.0));
    };
    init(out.incomplete);
    init(out.complete);

    std::vector<double> v(n);
    double total_inc = 0.0, total_comp = 0.0;
    for (std::size_t t = 0; t < T_sim; ++t) {
        for (std::size_t m = 0; m < n_sims; ++m) {
            Stream rng(seed, {0xc0f7u, t, m});
            double u = draw(design.u_spec, rng);
            double w = draw(design.w_spec.at(u), rng);
            for (std::size_t i = 0; i < n; ++i) v[i] = draw(design.v_specs[i], rng);

            double qsum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double qi = equilibrium_quantity(prim, i, v[i], w, u);
                out.incomplete.q[t][i] += qi;
                qsum += qi;
            }
            out.incomplete.p[t] += u - prim.beta * qsum;
            out.incomplete.cs[t] += consumer_surplus(prim.beta, qsum);

            auto qc = complete_info_quantities(prim, v, w, u);
            double csum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                out.complete.q[t][i] += qc[i];
                csum += qc[i];
            }
            out.complete.p[t] += u - prim.beta * csum;
            out.complete.cs[t] += consumer_surplus(prim.beta, csum);
        }
        auto scale = [&](RegimePath& path) {
            path.p[t] /= double(n_sims);
            path.cs[t] /= double(n_sims);
            for (std::size_t i = 0; i < n; ++i) path.q[t][i] /= double(n_sims);
        };
        scale(out.incomplete);
        scale(out.complete);
        total_inc += out.incomplete.cs[t];
        total_comp += out.complete.cs[t];
    }
    out.cs_ratio = total_inc > 0.0 ? total_comp / total_inc
                                   : std::numeric_limits<double>::quiet_NaN();
    return out;
}

// Time series for plotting: one row per period and regime, quantities averaged
// across the firms of each group.
inline std::string regime_csv(const RegimeComparison& rc,
                              const std::vector<std::size_t>& group_of,
                              std::size_t n_groups = 0) {
    const std::size_t T = rc.incomplete.p.size();
    require(T == rc.complete.p.size(), "regime_csv: regime lengths differ");
    const std::size_t n = group_of.size();
    require(T == 0 || rc.incomplete.q[0].size() == n,
            "regime_csv: grouping length mismatch");
    std::size_t G = n_groups;
    if (G == 0)
        for (std::size_t g : group_of) G = std::max(G, g + 1);
    std::vector<std::size_t> count(G, 0);
    for (std::size_t g : group_of) {
        require(g < G, "regime_csv: group index out of range");
        ++count[g];
    }

    std::ostringstream os;
    os.precision(10);
    os << "period,regime";
    for (std::size_t g = 0; g < G; ++g) os << ",q_g" << (g + 1);
    os << ",p,cs\n";
    auto emit = [&](const RegimePath& path, const char* tag) {
        for (std::size_t t = 0; t < T; ++t) {
            os << (t + 1) << "," << tag;
            for (std::size_t g = 0; g < G; ++g) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    if (group_of[i] == g) s += path.q[t][i];
                os << "," << (count[g] > 0 ? s / double(count[g]) : 0.0);
            }
            os << "," << path.p[t] << "," << path.cs[t] << "\n";
        }
    };
    emit(rc.incomplete, "incomplete");
    emit(rc.complete, "complete");
    return os.str();
}

}  // namespace cournot
