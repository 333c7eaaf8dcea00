// End-to-end checks for the command-line tool: every case shells out to the
// built binary against fixtures written into a scratch directory.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cournot/counterfactual.hpp"
#include "cournot/identification.hpp"
#include "cournot/model.hpp"
#include "cournot/simulator.hpp"
#include "helpers.hpp"

using namespace cournot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), int(buf.size()), pipe)) r.output += buf.data();
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("cournot_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string scratch(const std::string& name) { return (scratch_dir() / name).string(); }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    REQUIRE(f.good());
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const char* duo_config = R"({
  "theta": {
    "beta": 0.5, "lambda": 0.03, "u_lo": 24.0, "mu_u": 30.0, "sigma2_u": 9.0,
    "w_bar": 0.5, "a_w1": 0.4, "a_w2": 0.2,
    "groups": [
      {"a": 1.0, "b": 2.0, "firms": [0, 1]},
      {"a": 1.5, "b": 2.5, "firms": [2, 3]}
    ]
  },
  "simulate": {"T": 300, "seed": 7},
  "estimate": {"max_evals": 40, "n_starts": 1},
  "ci": {"block_size": 200, "max_blocks": 3, "max_evals": 25},
  "counterfactual": {"T": 4, "n_sims": 6, "seed": 3},
  "montecarlo": {"reps": 2, "T": 50, "max_evals": 30}
})";

std::string config_path() {
    static std::string path = [] {
        std::string p = scratch("config.json");
        write_file(p, duo_config);
        return p;
    }();
    return path;
}

std::string panel_path() {
    static std::string path = [] {
        std::string p = scratch("panel.csv");
        auto r = run_cli("simulate --config " + config_path() + " --out " + p +
                         " --latent-out " + scratch("latents.csv"));
        REQUIRE(r.exit_code == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("cli simulate writes a well-formed reproducible panel") {
    std::string first = read_file(panel_path());
    std::istringstream ss(first);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "t,p,q1,q2,q3,q4");
    std::size_t rows = 0;
    for (std::string line; std::getline(ss, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 300);

    Panel p = read_panel_csv(panel_path());
    CHECK(p.T() == 300);
    CHECK(p.n_firms() == 4);

    auto again = run_cli("simulate --config " + config_path() + " --out " +
                         scratch("panel2.csv"));
    REQUIRE(again.exit_code == 0);
    CHECK(read_file(scratch("panel2.csv")) == first);

    std::string latents = read_file(scratch("latents.csv"));
    CHECK(latents.compare(0, 2, "t,") == 0);

    auto reseeded = run_cli("simulate --config " + config_path() + " --out " +
                            scratch("panel3.csv") + " --seed 8");
    REQUIRE(reseeded.exit_code == 0);
    CHECK(read_file(scratch("panel3.csv")) != first);
}

TEST_CASE("cli check passes private information and flags complete information") {
    auto ok = run_cli("check --panel " + panel_path() + " --out " + scratch("chk.json"));
    REQUIRE(ok.exit_code == 0);
    CHECK(ok.output.find("PASS") != std::string::npos);
    json j = json::parse(read_file(scratch("chk.json")));
    CHECK(j.at("verdict") == "PASS");
    CHECK(j.at("all_pass").get<bool>());
    CHECK(j.at("firms").size() == 4);

    // matched complete-information counterpart built from the same latent draws
    std::vector<BetaSpec> v(3, BetaSpec{2.0, 2.0, 0.025, 0.975, 8.0, 1.0});
    auto d = make_design(0.5, 0.0, std::move(v), {30.0, 0.04, 25.0},
                         {0.1, 0.0, 0.0, 0.025, 0.975});
    auto sim = simulate_panel(d, {}, 5000, 555);
    Panel flat;
    flat.p.resize(5000);
    flat.q.resize(5000);
    for (std::size_t t = 0; t < 5000; ++t) {
        flat.q[t] = complete_info_quantities(d.prim, sim.latents.v[t], sim.latents.w[t],
                                             sim.latents.u[t]);
        double qp = 0.0;
        for (double q : flat.q[t]) qp += q;
        flat.p[t] = sim.latents.u[t] - d.prim.beta * qp;
    }
    write_panel_csv(sim.panel, scratch("trio_private.csv"));
    write_panel_csv(flat, scratch("trio_complete.csv"));
    write_file(scratch("check_cfg.json"), R"({"check": {"density_floor": 0.45}})");

    auto priv = run_cli("check --panel " + scratch("trio_private.csv") + " --config " +
                        scratch("check_cfg.json") + " --out " + scratch("priv.json"));
    REQUIRE(priv.exit_code == 0);
    CHECK(json::parse(read_file(scratch("priv.json"))).at("verdict") == "PASS");

    auto comp = run_cli("check --panel " + scratch("trio_complete.csv") + " --config " +
                        scratch("check_cfg.json") + " --out " + scratch("comp.json"));
    REQUIRE(comp.exit_code == 0);  // a FAIL verdict is data, not a tool error
    json cj = json::parse(read_file(scratch("comp.json")));
    CHECK(cj.at("verdict") == "FAIL");
    CHECK(comp.output.find("FAIL") != std::string::npos);
}

TEST_CASE("cli identify emits a full report") {
    auto r = run_cli("identify --panel " + panel_path() + " --out " +
                     scratch("ident.json"));
    REQUIRE(r.exit_code == 0);
    json j = json::parse(read_file(scratch("ident.json")));
    CHECK(j.at("beta").at("value").get<double>() > 0.0);
    CHECK(j.at("fv_quantiles").size() == 4);
    for (const auto& f : j.at("fv_quantiles")) {
        CHECK(f.at("alpha").size() == f.at("value").size());
        CHECK(!f.at("alpha").empty());
    }
    CHECK(!j.at("u_cdf").at("x").empty());
    CHECK(!j.at("fw_given_u").empty());
    CHECK(j.at("diagnostics").at("all_pass").get<bool>());
}

TEST_CASE("cli estimate emits a config-compatible theta block") {
    auto r = run_cli("estimate --panel " + panel_path() + " --config " + config_path() +
                     " --out " + scratch("est.json"));
    REQUIRE(r.exit_code == 0);
    json j = json::parse(read_file(scratch("est.json")));
    CHECK(j.at("names").size() == 12);  // 8 market-level + 2 per group
    CHECK(j.at("values").size() == 12);
    CHECK(std::isfinite(j.at("loglik").get<double>()));
    CHECK(j.at("evals").get<int>() >= 40);
    CHECK(j.at("trend").contains("tau"));

    // the emitted theta block must itself drive the simulator
    json cfg;
    cfg["theta"] = j.at("theta");
    cfg["simulate"] = {{"T", 10}, {"seed", 1}};
    write_file(scratch("roundtrip.json"), cfg.dump());
    auto sim = run_cli("simulate --config " + scratch("roundtrip.json") + " --out " +
                       scratch("roundtrip.csv"));
    CHECK(sim.exit_code == 0);

    auto rerun = run_cli("estimate --panel " + panel_path() + " --config " +
                         config_path() + " --out " + scratch("est2.json"));
    REQUIRE(rerun.exit_code == 0);
    CHECK(read_file(scratch("est2.json")) == read_file(scratch("est.json")));
}

TEST_CASE("cli ci reports intervals around the point estimate") {
    auto r = run_cli("ci --panel " + panel_path() + " --config " + config_path() +
                     " --out " + scratch("ci.json"));
    REQUIRE(r.exit_code == 0);
    json j = json::parse(read_file(scratch("ci.json")));
    CHECK(j.at("block_size").get<std::size_t>() == 200);
    CHECK(j.at("n_blocks_used").get<std::size_t>() == 3);
    CHECK(j.at("parameters").size() == 12);
    for (const auto& p : j.at("parameters")) {
        CHECK(p.at("lo").get<double>() <= p.at("hi").get<double>());
        CHECK(p.at("covers_estimate").get<bool>());
    }
}

TEST_CASE("cli counterfactual writes regime paths and a summary") {
    auto r = run_cli("counterfactual --config " + config_path() + " --out " +
                     scratch("regimes.csv") + " --summary " + scratch("cf.json") +
                     " --panel " + panel_path());
    REQUIRE(r.exit_code == 0);
    std::istringstream ss(read_file(scratch("regimes.csv")));
    std::string header;
    std::getline(ss, header);
    CHECK(header == "period,regime,q_g1,q_g2,p,cs");
    std::size_t rows = 0;
    bool saw_complete = false, saw_incomplete = false;
    for (std::string line; std::getline(ss, line);) {
        if (line.empty()) continue;
        ++rows;
        if (line.find(",complete,") != std::string::npos) saw_complete = true;
        if (line.find(",incomplete,") != std::string::npos) saw_incomplete = true;
    }
    CHECK(rows == 8);  // 4 periods x 2 regimes
    CHECK(saw_complete);
    CHECK(saw_incomplete);

    json j = json::parse(read_file(scratch("cf.json")));
    CHECK(j.at("cs_ratio").get<double>() > 0.0);
    CHECK(j.at("n_sims").get<std::size_t>() == 6);
}

TEST_CASE("cli montecarlo writes the replication table") {
    auto r = run_cli("montecarlo --config " + config_path() + " --out " +
                     scratch("mc.csv"));
    REQUIRE(r.exit_code == 0);
    std::istringstream ss(read_file(scratch("mc.csv")));
    std::string header;
    std::getline(ss, header);
    CHECK(header == "parameter,true,bias,sd,rmse");
    std::size_t rows = 0;
    bool saw_beta = false;
    for (std::string line; std::getline(ss, line);) {
        if (line.empty()) continue;
        ++rows;
        if (line.compare(0, 5, "beta,") == 0) saw_beta = true;
    }
    CHECK(rows == 12);
    CHECK(saw_beta);
    CHECK(r.output.find("2/2 replications") != std::string::npos);
}

TEST_CASE("cli cluster groups firms by observed behaviour") {
    auto r = run_cli("cluster --panel " + panel_path() + " --k 2 --out " +
                     scratch("clus.json"));
    REQUIRE(r.exit_code == 0);
    json j = json::parse(read_file(scratch("clus.json")));
    CHECK(j.at("k").get<std::size_t>() == 2);
    CHECK(j.at("assignment").size() == 4);
    CHECK(j.at("centroids").size() == 2);
    // firms 0,1 share a cost group and 2,3 the other; clustering must agree
    auto a = j.at("assignment");
    CHECK(a[0] == a[1]);
    CHECK(a[2] == a[3]);
    CHECK(a[0] != a[2]);
}

TEST_CASE("cli extensions runs the model-variant showcase") {
    auto r = run_cli("extensions --out-dir " + scratch("ext") + " --T 400 --seed 11");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(read_file(scratch("ext/extensions.json")));
    CHECK(j.at("conduct").at("lambda_abs_error").get<double>() < 1e-10);
    CHECK(j.at("conduct").at("kappa_abs_error").get<double>() < 1e-10);
    CHECK(std::fabs(j.at("log_linear").at("beta").get<double>() - 0.4) < 1e-6);
    CHECK(std::fabs(j.at("log_linear").at("lambda").get<double>() - 0.2) < 1e-3);
    CHECK(j.at("selective_entry").at("entry_rate").get<double>() > 0.3);
    CHECK(j.at("selective_entry").at("entry_rate").get<double>() < 0.7);
    CHECK(j.at("cdf_recovery").at("sup_error").get<double>() < 1e-3);

    std::string grids = read_file(scratch("ext/strategy_grids.csv"));
    CHECK(grids.compare(0, 9, "firm,v,q\n") == 0);
    std::string cdf = read_file(scratch("ext/conditional_cdf.csv"));
    CHECK(cdf.compare(0, 6, "s,v,F\n") == 0);
}

TEST_CASE("cli rejects bad invocations with exit code 1") {
    write_file(scratch("unknown.json"), R"({"theta": {"beta": 0.5}, "bogus": 1})");
    auto unknown = run_cli("simulate --config " + scratch("unknown.json") + " --out " +
                           scratch("x.csv"));
    CHECK(unknown.exit_code == 1);
    CHECK(unknown.output.find("unknown key 'bogus'") != std::string::npos);

    write_file(scratch("broken.json"), "{ not json");
    auto broken = run_cli("simulate --config " + scratch("broken.json") + " --out " +
                          scratch("x.csv"));
    CHECK(broken.exit_code == 1);

    write_file(scratch("badgroups.json"),
               R"({"theta": {"beta": 0.5, "lambda": 0.03, "u_lo": 24.0, "mu_u": 30.0,
                   "sigma2_u": 9.0, "w_bar": 0.5, "a_w1": 0.4, "a_w2": 0.2,
                   "groups": [{"a": 1.0, "b": 2.0, "firms": [0, 0]}]}})");
    auto dupe = run_cli("simulate --config " + scratch("badgroups.json") + " --out " +
                        scratch("x.csv"));
    CHECK(dupe.exit_code == 1);
    CHECK(dupe.output.find("firm") != std::string::npos);

    auto missing = run_cli("check --panel " + scratch("no_such_file.csv"));
    CHECK(missing.exit_code == 1);

    auto noargs = run_cli("estimate");
    CHECK(noargs.exit_code == 1);

    auto help = run_cli("--help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("simulate") != std::string::npos);
}
