// Command-line front end: drives the pipeline over CSV panels and JSON
// configs. Exit codes: 0 success, 1 validation problem (config, schema,
// arguments, unreadable input), 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cournot/counterfactual.hpp"
#include "cournot/estimation.hpp"
#include "cournot/extensions.hpp"
#include "cournot/identification.hpp"
#include "cournot/montecarlo.hpp"
#include "cournot/simulator.hpp"
#include "cournot/theta.hpp"

using nlohmann::json;
using namespace cournot;

namespace {

// ---------------------------------------------------------------------------
// Config plumbing: strict schema, unknown keys rejected.

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw invalid_input(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw invalid_input(where + ": unknown key '" + it.key() + "'");
    }
}

double get_num(const json& o, const std::string& where, const char* key) {
    if (!o.contains(key)) throw invalid_input(where + ": missing key '" + key + "'");
    if (!o.at(key).is_number())
        throw invalid_input(where + ": key '" + key + "' must be a number");
    return o.at(key).get<double>();
}

double num_or(const json& o, const char* key, double fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_number())
        throw invalid_input(std::string("config: key '") + key + "' must be a number");
    return o.at(key).get<double>();
}

std::uint64_t u64_or(const json& o, const char* key, std::uint64_t fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_number_unsigned())
        throw invalid_input(std::string("config: key '") + key +
                            "' must be a nonnegative integer");
    return o.at(key).get<std::uint64_t>();
}

std::size_t size_or(const json& o, const char* key, std::size_t fallback) {
    return std::size_t(u64_or(o, key, fallback));
}

bool bool_or(const json& o, const char* key, bool fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_boolean())
        throw invalid_input(std::string("config: key '") + key + "' must be a boolean");
    return o.at(key).get<bool>();
}

json load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f.good()) throw invalid_input("config: cannot open " + path);
    json cfg;
    try {
        cfg = json::parse(f);
    } catch (const json::parse_error& e) {
        throw invalid_input(std::string("config: ") + e.what());
    }
    reject_unknown(cfg, "config",
                   {"theta", "trend", "simulate", "check", "identify", "estimate", "ci",
                    "counterfactual", "montecarlo", "cluster", "extensions"});
    return cfg;
}

json block_or_empty(const json& cfg, const char* name) {
    return cfg.contains(name) ? cfg.at(name) : json::object();
}

ThetaParam theta_from_config(const json& cfg) {
    if (!cfg.contains("theta")) throw invalid_input("config: missing 'theta' block");
    const json& t = cfg.at("theta");
    reject_unknown(t, "theta",
                   {"beta", "lambda", "u_lo", "mu_u", "sigma2_u", "w_bar", "a_w1", "a_w2",
                    "t_lo", "t_hi", "groups"});

    ThetaParam th;
    th.beta = get_num(t, "theta", "beta");
    th.lambda = get_num(t, "theta", "lambda");
    th.u_lo = get_num(t, "theta", "u_lo");
    th.mu_u = get_num(t, "theta", "mu_u");
    th.sigma2_u = get_num(t, "theta", "sigma2_u");
    th.w_bar = get_num(t, "theta", "w_bar");
    th.a_w1 = get_num(t, "theta", "a_w1");
    th.a_w2 = get_num(t, "theta", "a_w2");
    th.t_lo = num_or(t, "t_lo", th.t_lo);
    th.t_hi = num_or(t, "t_hi", th.t_hi);

    if (!t.contains("groups") || !t.at("groups").is_array() || t.at("groups").empty())
        throw invalid_input("theta: 'groups' must be a non-empty array");

    std::vector<std::pair<std::size_t, std::size_t>> firm_group;  // (firm, group)
    std::size_t g = 0;
    for (const json& grp : t.at("groups")) {
        reject_unknown(grp, "theta.groups[]", {"a", "b", "firms"});
        th.group_a.push_back(get_num(grp, "theta.groups[]", "a"));
        th.group_b.push_back(get_num(grp, "theta.groups[]", "b"));
        if (!grp.contains("firms") || !grp.at("firms").is_array() ||
            grp.at("firms").empty())
            throw invalid_input("theta.groups[]: 'firms' must be a non-empty array");
        for (const json& f : grp.at("firms")) {
            if (!f.is_number_unsigned())
                throw invalid_input("theta.groups[].firms: entries must be firm indices");
            firm_group.push_back({f.get<std::size_t>(), g});
        }
        ++g;
    }

    // firm lists must partition 0..n-1
    const std::size_t n = firm_group.size();
    th.group_of.assign(n, g);
    for (const auto& fg : firm_group) {
        if (fg.first >= n)
            throw invalid_input("theta.groups: firm index out of range (expect 0..n-1)");
        if (th.group_of[fg.first] != g)
            throw invalid_input("theta.groups: firm listed twice");
        th.group_of[fg.first] = fg.second;
    }
    th.validate();
    return th;
}

json theta_to_json(const ThetaParam& th) {
    json t;
    t["beta"] = th.beta;
    t["lambda"] = th.lambda;
    t["u_lo"] = th.u_lo;
    t["mu_u"] = th.mu_u;
    t["sigma2_u"] = th.sigma2_u;
    t["w_bar"] = th.w_bar;
    t["a_w1"] = th.a_w1;
    t["a_w2"] = th.a_w2;
    t["t_lo"] = th.t_lo;
    t["t_hi"] = th.t_hi;
    json groups = json::array();
    for (std::size_t gi = 0; gi < th.n_groups(); ++gi) {
        json grp;
        grp["a"] = th.group_a[gi];
        grp["b"] = th.group_b[gi];
        json firms = json::array();
        for (std::size_t i = 0; i < th.n_firms(); ++i)
            if (th.group_of[i] == gi) firms.push_back(i);
        grp["firms"] = firms;
        groups.push_back(grp);
    }
    t["groups"] = groups;
    return t;
}

TrendSpec trend_from_config(const json& cfg) {
    TrendSpec tr;
    if (!cfg.contains("trend")) return tr;
    const json& t = cfg.at("trend");
    reject_unknown(t, "trend", {"tau", "tau_s"});
    tr.tau = num_or(t, "tau", 0.0);
    if (t.contains("tau_s")) {
        if (!t.at("tau_s").is_array())
            throw invalid_input("trend: 'tau_s' must be an array");
        for (const json& x : t.at("tau_s")) {
            if (!x.is_number()) throw invalid_input("trend: 'tau_s' entries must be numbers");
            tr.tau_s.push_back(x.get<double>());
        }
    }
    return tr;
}

EstimateOptions estimate_options_from(const json& block) {
    EstimateOptions opt;
    opt.nodes = int(size_or(block, "nodes", 0));
    opt.n_starts = int(size_or(block, "n_starts", 0));
    opt.seed = u64_or(block, "seed", opt.seed);
    opt.profile_u_lo = bool_or(block, "profile_u_lo", true);
    opt.nm.max_evals = int(size_or(block, "max_evals", std::size_t(opt.nm.max_evals)));
    return opt;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f.good()) throw invalid_input("cannot open output file " + path);
    f << content;
    if (!f.good()) throw numeric_error("failed writing " + path);
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Commands.

struct CommonArgs {
    std::string config, panel, out, out_dir;
    std::optional<std::size_t> T, reps, k;
    std::optional<std::uint64_t> seed;
    std::string latent_out, summary_out;
};

int cmd_simulate(const CommonArgs& a) {
    json cfg = load_config(a.config);
    ThetaParam th = theta_from_config(cfg);
    TrendSpec tr = trend_from_config(cfg);
    json blk = block_or_empty(cfg, "simulate");
    reject_unknown(blk, "simulate", {"T", "seed"});
    std::size_t T = a.T ? *a.T : size_or(blk, "T", 350);
    std::uint64_t seed = a.seed ? *a.seed : u64_or(blk, "seed", 20260401);

    SimOutput sim = simulate_panel(th.to_design(), tr, T, seed);
    write_panel_csv(sim.panel, a.out);
    if (!a.latent_out.empty()) write_latent_csv(sim.latents, a.latent_out);
    std::cout << "simulate: wrote " << a.out << " (" << T << " markets, "
              << th.n_firms() << " firms, seed " << seed << ")\n";
    return 0;
}

int cmd_check(const CommonArgs& a) {
    Panel panel = read_panel_csv(a.panel);
    double eps = 0.0, floor = 0.2;
    if (!a.config.empty()) {
        json cfg = load_config(a.config);
        json blk = block_or_empty(cfg, "check");
        reject_unknown(blk, "check", {"epsilon", "density_floor"});
        eps = num_or(blk, "epsilon", 0.0);
        floor = num_or(blk, "density_floor", 0.2);
    }
    PrivateInfoDiagnostics diag = test_private_information(panel, eps, floor);

    json j;
    j["verdict"] = diag.all_pass ? "PASS" : "FAIL";
    j["all_pass"] = diag.all_pass;
    j["any_mass_point"] = diag.any_mass_point;
    j["density_floor"] = diag.density_floor;
    json firms = json::array();
    for (const FirmDiagnostic& fd : diag.firms) {
        json f;
        f["firm"] = fd.firm + 1;
        f["pass"] = fd.pass;
        f["q_floor"] = fd.q_floor;
        f["epsilon"] = fd.epsilon;
        f["band_count"] = fd.band_count;
        f["rivals_variance_ratio"] = fd.rivals_variance_ratio;
        f["price_variance_ratio"] = fd.price_variance_ratio;
        f["zero_share"] = fd.zero_share;
        f["mass_point"] = fd.mass_point;
        firms.push_back(f);
    }
    j["firms"] = firms;
    if (!a.out.empty()) write_json(a.out, j);
    std::cout << "check: private-information diagnostics "
              << (diag.all_pass ? "PASS" : "FAIL") << " (" << diag.firms.size()
              << " firms)\n";
    return 0;
}

int cmd_identify(const CommonArgs& a) {
    Panel panel = read_panel_csv(a.panel);
    IdentificationOptions opt;
    if (!a.config.empty()) {
        json cfg = load_config(a.config);
        json blk = block_or_empty(cfg, "identify");
        reject_unknown(blk, "identify", {"epsilon", "density_floor", "diagnostics"});
        opt.epsilon = num_or(blk, "epsilon", 0.0);
        opt.density_floor = num_or(blk, "density_floor", 0.2);
        opt.run_diagnostics = bool_or(blk, "diagnostics", true);
    }
    IdentificationReport rep = run_identification(panel, opt);

    json j;
    j["beta"] = {{"value", rep.beta.value}, {"dispersion", rep.beta.dispersion}};
    j["lambda"] = rep.lambda;
    j["mu_v"] = rep.mu_v;
    json fv = json::array();
    for (std::size_t i = 0; i < rep.fv.size(); ++i) {
        json f;
        f["firm"] = i + 1;
        f["alpha"] = rep.fv[i].alpha;
        f["value"] = rep.fv[i].value;
        f["dispersion"] = rep.fv_dispersion[i];
        fv.push_back(f);
    }
    j["fv_quantiles"] = fv;
    j["u_cdf"] = {{"x", rep.u_cdf.x}, {"cdf", rep.u_cdf.cdf}};
    json fw = json::array();
    for (std::size_t k = 0; k < rep.fw_given_u.size(); ++k) {
        json f;
        f["u"] = rep.phi_u_values[k];
        f["w"] = rep.fw_given_u[k].x;
        f["cdf"] = rep.fw_given_u[k].cdf;
        f["tail_warning"] = rep.fw_given_u[k].tail_warning;
        fw.push_back(f);
    }
    j["fw_given_u"] = fw;
    if (rep.diagnostics_run) {
        j["diagnostics"] = {{"all_pass", rep.diagnostics.all_pass},
                            {"any_mass_point", rep.diagnostics.any_mass_point}};
    }
    write_json(a.out, j);
    std::cout << "identify: beta " << rep.beta.value << ", lambda " << rep.lambda
              << ", wrote " << a.out << "\n";
    return 0;
}

int cmd_estimate(const CommonArgs& a) {
    Panel panel = read_panel_csv(a.panel);
    json cfg = load_config(a.config);
    ThetaParam start = theta_from_config(cfg);
    json blk = block_or_empty(cfg, "estimate");
    reject_unknown(blk, "estimate",
                   {"nodes", "n_starts", "max_evals", "seed", "profile_u_lo", "box_frac"});
    EstimateOptions opt = estimate_options_from(blk);
    double box_frac = num_or(blk, "box_frac", 0.5);
    ThetaBox box = ThetaBox::around(start, box_frac);

    EstimateResult res = estimate(panel, start, box, opt);

    json j;
    j["theta"] = theta_to_json(res.theta);
    j["names"] = res.theta.names();
    j["values"] = res.theta.to_vector();
    j["loglik"] = res.loglik;
    j["penalized"] = res.penalized;
    j["converged"] = res.converged;
    j["evals"] = res.evals;
    j["violations"] = res.violations;
    j["start_values"] = res.start_values;
    j["trend"] = {{"tau", res.trend.tau},
                  {"c1", res.trend.c1},
                  {"c2", res.trend.c2},
                  {"flat", res.trend.flat}};
    write_json(a.out, j);
    std::cout << "estimate: loglik " << res.loglik << " after " << res.evals
              << " evaluations, wrote " << a.out << "\n";
    return 0;
}

int cmd_ci(const CommonArgs& a) {
    Panel panel = read_panel_csv(a.panel);
    json cfg = load_config(a.config);
    ThetaParam start = theta_from_config(cfg);
    json eblk = block_or_empty(cfg, "estimate");
    reject_unknown(eblk, "estimate",
                   {"nodes", "n_starts", "max_evals", "seed", "profile_u_lo", "box_frac"});
    EstimateOptions eopt = estimate_options_from(eblk);
    double box_frac = num_or(eblk, "box_frac", 0.5);
    ThetaBox box = ThetaBox::around(start, box_frac);

    json cblk = block_or_empty(cfg, "ci");
    reject_unknown(cblk, "ci",
                   {"block_size", "level", "max_blocks", "n_starts", "max_evals", "seed",
                    "nodes"});
    std::size_t block_size = size_or(cblk, "block_size", 0);
    double level = num_or(cblk, "level", 0.95);
    std::size_t max_blocks = size_or(cblk, "max_blocks", 150);
    EstimateOptions bopt = estimate_options_from(cblk);
    if (bopt.n_starts == 0) bopt.n_starts = 1;

    EstimateResult res = estimate(panel, start, box, eopt);
    SubsampleCI ci =
        subsample_ci(panel, res.theta, box, block_size, level, bopt, max_blocks);

    json j;
    j["block_size"] = ci.block_size;
    j["n_blocks_total"] = ci.n_blocks_total;
    j["n_blocks_used"] = ci.n_blocks_used;
    j["level"] = ci.level;
    json params = json::array();
    for (std::size_t k = 0; k < ci.names.size(); ++k) {
        json p;
        p["name"] = ci.names[k];
        p["estimate"] = ci.estimate[k];
        p["lo"] = ci.lo[k];
        p["hi"] = ci.hi[k];
        p["covers_estimate"] = ci.lo[k] <= ci.estimate[k] && ci.estimate[k] <= ci.hi[k];
        params.push_back(p);
    }
    j["parameters"] = params;
    write_json(a.out, j);
    std::cout << "ci: block size " << ci.block_size << ", " << ci.n_blocks_used
              << " blocks, wrote " << a.out << "\n";
    return 0;
}

int cmd_counterfactual(const CommonArgs& a) {
    json cfg = load_config(a.config);
    ThetaParam th = theta_from_config(cfg);
    json blk = block_or_empty(cfg, "counterfactual");
    reject_unknown(blk, "counterfactual", {"T", "n_sims", "seed", "k_groups"});
    std::size_t T = a.T ? *a.T : size_or(blk, "T", 40);
    std::size_t n_sims = size_or(blk, "n_sims", 100);
    std::uint64_t seed = a.seed ? *a.seed : u64_or(blk, "seed", 2026);

    // group labels for the emitted columns: panel clustering when a panel is
    // supplied, the parametric group map otherwise
    std::vector<std::size_t> group_of = th.group_of;
    std::size_t n_groups = th.n_groups();
    if (!a.panel.empty()) {
        Panel panel = read_panel_csv(a.panel);
        std::size_t k = a.k ? *a.k : size_or(blk, "k_groups", th.n_groups());
        GroupingResult gr = kmeans_firms(panel, k, seed);
        group_of = gr.assignment;
        n_groups = gr.k;
    }

    RegimeComparison rc = compare_regimes(th, T, n_sims, seed);
    write_text(a.out, regime_csv(rc, group_of, n_groups));

    double cs_inc = 0.0, cs_comp = 0.0;
    for (double c : rc.incomplete.cs) cs_inc += c;
    for (double c : rc.complete.cs) cs_comp += c;
    if (!a.summary_out.empty()) {
        json j;
        j["cs_ratio"] = rc.cs_ratio;
        j["cs_total_incomplete"] = cs_inc;
        j["cs_total_complete"] = cs_comp;
        j["n_sims"] = rc.n_sims;
        j["T"] = T;
        j["seed"] = seed;
        write_json(a.summary_out, j);
    }
    std::cout << "counterfactual: cs ratio (complete/incomplete) " << rc.cs_ratio
              << " over " << n_sims << " simulations, wrote " << a.out << "\n";
    return 0;
}

int cmd_montecarlo(const CommonArgs& a) {
    json cfg = load_config(a.config);
    ThetaParam truth = theta_from_config(cfg);
    json blk = block_or_empty(cfg, "montecarlo");
    reject_unknown(blk, "montecarlo",
                   {"reps", "T", "seed", "box_frac", "n_starts", "max_evals", "nodes"});
    MCOptions mo;
    mo.n_reps = a.reps ? *a.reps : size_or(blk, "reps", 50);
    mo.T = a.T ? *a.T : size_or(blk, "T", 350);
    mo.seed = a.seed ? *a.seed : u64_or(blk, "seed", 20260401);
    mo.box_frac = num_or(blk, "box_frac", 0.5);
    mo.trend = trend_from_config(cfg);
    mo.est = estimate_options_from(blk);
    if (mo.est.n_starts == 0) mo.est.n_starts = 1;

    MCResult res = run_monte_carlo(truth, mo);
    write_text(a.out, mc_table_csv(res));
    std::size_t b = 0;  // beta row index for the headline
    for (std::size_t k = 0; k < res.names.size(); ++k)
        if (res.names[k] == "beta") b = k;
    std::cout << "montecarlo: " << (res.n_reps_requested - res.n_failed) << "/"
              << res.n_reps_requested << " replications, beta rel bias "
              << res.rel_bias[b] << ", rel rmse " << res.rel_rmse[b] << ", wrote "
              << a.out << "\n";
    return 0;
}

int cmd_cluster(const CommonArgs& a) {
    Panel panel = read_panel_csv(a.panel);
    std::size_t k = a.k ? *a.k : 2;
    std::uint64_t seed = a.seed ? *a.seed : 2026;
    GroupingResult gr = kmeans_firms(panel, k, seed);

    json j;
    j["k"] = gr.k;
    j["within_ss"] = gr.within_ss;
    j["assignment"] = gr.assignment;
    json cents = json::array();
    for (const auto& c : gr.centroids)
        cents.push_back({{"mean", c[0]}, {"sd", c[1]}});
    j["centroids"] = cents;
    write_json(a.out, j);
    std::cout << "cluster: k " << gr.k << ", within-group ss " << gr.within_ss
              << ", wrote " << a.out << "\n";
    return 0;
}

int cmd_extensions(const CommonArgs& a) {
    std::uint64_t seed = 2026;
    std::size_t T = 2000;
    if (!a.config.empty()) {
        json cfg = load_config(a.config);
        json blk = block_or_empty(cfg, "extensions");
        reject_unknown(blk, "extensions", {"seed", "T"});
        seed = u64_or(blk, "seed", seed);
        T = size_or(blk, "T", T);
    }
    if (a.seed) seed = *a.seed;
    if (a.T) T = *a.T;
    std::filesystem::create_directories(a.out_dir);
    auto path = [&](const char* f) {
        return (std::filesystem::path(a.out_dir) / f).string();
    };
    json j;

    {   // conduct identification on a three-firm market with known profile
        ModelPrimitives m;
        m.n = 3;
        m.beta = 0.5;
        m.lambda = 0.1;
        m.mu_v = {2.0, 3.5, 2.75};
        m.v_lo = {1.0, 2.0, 1.5};
        m.v_hi = {3.0, 5.0, 4.0};
        m.w_lo = -0.5;
        m.w_hi = 0.5;
        m.u_lo = 10.0;
        ConductProfile truth{{0.0, -0.1, -0.2}};
        auto mom = conduct_moments(m, truth, 12.0, 18.0);
        auto id = identify_conduct(mom, m.beta, truth.kappa[0]);
        double kerr = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            kerr = std::max(kerr, std::fabs(id.kappa[i] - truth.kappa[i]));
        j["conduct"] = {{"lambda", id.lambda},
                        {"kappa", id.kappa},
                        {"lambda_abs_error", std::fabs(id.lambda - m.lambda)},
                        {"kappa_abs_error", kerr}};
    }

    {   // log-linear demand: equilibrium grids and every identifier
        double beta = 0.4, lambda = 0.2, u_floor = 1.1, u_ceil = 1.4, w_bar = 0.1;
        auto d = NonlinearDemandSpec::log_linear(beta);
        check_demand_shape(d, 0.2, 3.0, u_floor - 0.2, u_ceil + 0.2);
        NonlinearPrimitives prim;
        prim.lambda = lambda;
        prim.v_lo = {0.5, 0.5};
        prim.v_hi = {1.5, 1.5};
        prim.nodes = 61;
        for (int i = 0; i < 2; ++i)
            prim.v_quantile.push_back([](double al) { return 0.5 + al; });
        NonlinearSolveOptions opt;
        opt.gl_nodes = 24;

        auto grids = solve_nonlinear_equilibrium(d, prim, 0.0, 1.2, opt);
        write_text(path("strategy_grids.csv"), strategy_grids_csv(grids));

        const StrategyGrid& rival = grids[1];
        BoundaryQuantiles bq;
        bq.q_boundary = grids[0].q.back();
        bq.p_quantile = [&](double al) {
            return d.p(bq.q_boundary + rival.at(0.5 + al), 1.2);
        };
        bq.qsum_quantile = [&](double tau) { return rival.at(0.5 + (1.0 - tau)); };
        auto ll = identify_loglinear(bq, {{0.1, 0.5}, {0.25, 0.75}, {0.4, 0.9}});

        auto mrs = marginal_revenue_source(d, prim, 0, u_floor, u_ceil, opt);
        auto lam = identify_lambda_nonlinear(mrs);

        BoundaryEventSource ev;
        ev.low = solve_nonlinear_equilibrium(d, prim, w_bar, u_floor, opt);
        ev.high = solve_nonlinear_equilibrium(d, prim, -w_bar, u_ceil, opt);
        ev.u_lo = u_floor;
        ev.u_hi = u_ceil;
        std::vector<double> alphas = {0.1, 0.25, 0.5, 0.75, 0.9};
        auto fv = identify_fv_nonlinear(d, prim, ev, 0, lambda, alphas, opt);

        j["log_linear"] = {{"beta", ll.beta},
                           {"beta_dispersion", ll.dispersion},
                           {"u_at_conditioning", ll.u_lo},
                           {"lambda", lam.lambda},
                           {"mu_v", lam.mu_v},
                           {"w_hi", fv.w_hi},
                           {"w_lo", fv.w_lo},
                           {"v_quantile_alphas", alphas},
                           {"v_quantiles", fv.quantiles.value}};
    }

    {   // selective entry with cost equal to signal and a flat threshold
        EntrySpec es;
        es.threshold = [](double) { return 0.5; };
        es.c_lo = 0.0;
        es.c_hi = 1.0;
        es.v_quantile_given_s = [](double, double s) { return s; };
        EntryMarket mk;
        mk.beta = 0.4;
        mk.lambda = 0.2;
        mk.n_firms = 3;
        mk.u_spec = TruncNormalSpec{8.0, 1.0, 5.0};
        mk.w_spec = WGivenUSpec{0.2, 0.0, 0.0, 0.0, 1.0};
        auto out = selective_entry_outcomes(es, mk, T, seed);

        double in_cost = 0.0, out_cost = 0.0;
        std::size_t in_n = 0, out_n = 0;
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < mk.n_firms; ++i) {
                if (out.entered[t][i]) {
                    in_cost += out.v[t][i];
                    ++in_n;
                } else {
                    out_cost += out.v[t][i];
                    ++out_n;
                }
            }
        j["selective_entry"] = {
            {"markets", T},
            {"entry_rate", double(in_n) / double(T * mk.n_firms)},
            {"mean_entrant_cost", in_n ? in_cost / double(in_n) : 0.0},
            {"mean_nonentrant_cost", out_n ? out_cost / double(out_n) : 0.0},
            {"truncated_pool_mean", es.mu_tilde(0.5)}};
    }

    {   // entry-truncated CDF peeled back to the signal-conditional law
        auto trunc = [](double v, double s) { return (v / s) * std::log(1.0 + 2.0 * s); };
        std::vector<double> s_grid, v_grid;
        for (int k = 0; k <= 40; ++k) s_grid.push_back(0.1 + 0.01 * k);
        for (int l = 0; l <= 8; ++l) v_grid.push_back(0.05 * l);
        auto tab = recover_fv_given_s(trunc, s_grid, v_grid);
        write_text(path("conditional_cdf.csv"), conditional_cdf_csv(tab));
        double sup = 0.0;
        for (std::size_t k = 0; k < tab.s.size(); ++k)
            for (std::size_t l = 0; l < tab.v.size(); ++l)
                sup = std::max(sup,
                               std::fabs(tab.F[k][l] - v_grid[l] / (s_grid[k] + 0.5)));
        j["cdf_recovery"] = {{"sup_error", sup}};
    }

    write_json(path("extensions.json"), j);
    std::cout << "extensions: wrote " << path("extensions.json")
              << " plus strategy_grids.csv, conditional_cdf.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cournot markets with private cost information"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads (0 = all cores); results are thread-count invariant");

    CommonArgs a;
    std::size_t T_opt = 0, reps_opt = 0, k_opt = 0;
    std::uint64_t seed_opt = 0;

    auto* sim = app.add_subcommand("simulate", "draw a synthetic panel");
    sim->add_option("--config", a.config, "JSON config with a theta block")->required();
    sim->add_option("--out", a.out, "output panel CSV")->required();
    sim->add_option("--latent-out", a.latent_out, "optional latent-draw CSV");
    sim->add_option("--T", T_opt, "markets to simulate (overrides config)");
    sim->add_option("--seed", seed_opt, "RNG seed (overrides config)");

    auto* chk = app.add_subcommand("check", "testable-restriction diagnostics");
    chk->add_option("--panel", a.panel, "input panel CSV")->required();
    chk->add_option("--config", a.config, "optional JSON config");
    chk->add_option("--out", a.out, "optional diagnostics JSON");

    auto* idn = app.add_subcommand("identify", "nonparametric identification");
    idn->add_option("--panel", a.panel, "input panel CSV")->required();
    idn->add_option("--config", a.config, "optional JSON config");
    idn->add_option("--out", a.out, "identification report JSON")->required();

    auto* est = app.add_subcommand("estimate", "maximum likelihood estimation");
    est->add_option("--panel", a.panel, "input panel CSV")->required();
    est->add_option("--config", a.config, "JSON config with theta start values")
        ->required();
    est->add_option("--out", a.out, "estimates JSON")->required();

    auto* ci = app.add_subcommand("ci", "subsampling confidence intervals");
    ci->add_option("--panel", a.panel, "input panel CSV")->required();
    ci->add_option("--config", a.config, "JSON config")->required();
    ci->add_option("--out", a.out, "intervals JSON")->required();

    auto* cf = app.add_subcommand("counterfactual", "information-sharing comparison");
    cf->add_option("--config", a.config, "JSON config")->required();
    cf->add_option("--out", a.out, "regime comparison CSV")->required();
    cf->add_option("--summary", a.summary_out, "optional summary JSON");
    cf->add_option("--panel", a.panel, "optional panel CSV for group clustering");
    cf->add_option("--T", T_opt, "periods per simulation (overrides config)");
    cf->add_option("--seed", seed_opt, "RNG seed (overrides config)");

    auto* mc = app.add_subcommand("montecarlo", "replication study");
    mc->add_option("--config", a.config, "JSON config with true theta")->required();
    mc->add_option("--out", a.out, "bias/sd/rmse table CSV")->required();
    mc->add_option("--reps", reps_opt, "replications (overrides config)");
    mc->add_option("--T", T_opt, "markets per replication (overrides config)");
    mc->add_option("--seed", seed_opt, "RNG seed (overrides config)");

    auto* cl = app.add_subcommand("cluster", "k-means firm grouping");
    cl->add_option("--panel", a.panel, "input panel CSV")->required();
    cl->add_option("--k", k_opt, "number of groups")->required();
    cl->add_option("--seed", seed_opt, "RNG seed");
    cl->add_option("--out", a.out, "grouping JSON")->required();

    auto* ext = app.add_subcommand("extensions", "model-variant showcase");
    ext->add_option("--config", a.config, "optional JSON config");
    ext->add_option("--out-dir", a.out_dir, "output directory")->required();
    ext->add_option("--seed", seed_opt, "RNG seed (overrides config)");
    ext->add_option("--T", T_opt, "selective-entry markets (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 1;
    }

    if (sim->count("--T") || cf->count("--T") || mc->count("--T") || ext->count("--T"))
        a.T = T_opt;
    if (mc->count("--reps")) a.reps = reps_opt;
    if (cl->count("--k")) a.k = k_opt;
    if (sim->count("--seed") || cf->count("--seed") || mc->count("--seed") ||
        cl->count("--seed") || ext->count("--seed"))
        a.seed = seed_opt;

    try {
        if (sim->parsed()) return cmd_simulate(a);
        if (chk->parsed()) return cmd_check(a);
        if (idn->parsed()) return cmd_identify(a);
        if (est->parsed()) return cmd_estimate(a);
        if (ci->parsed()) return cmd_ci(a);
        if (cf->parsed()) return cmd_counterfactual(a);
        if (mc->parsed()) return cmd_montecarlo(a);
        if (cl->parsed()) return cmd_cluster(a);
        if (ext->parsed()) return cmd_extensions(a);
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
