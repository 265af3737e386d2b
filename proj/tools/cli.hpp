#pragma once

// Command-line front end: config ingestion, subcommand dispatch, seeding and
// file emission. Every run writes a manifest next to its outputs with the
// effective merged configuration, so results are reproducible from the
// manifest alone.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sysrisk/analytic.hpp"
#include "sysrisk/experiments.hpp"
#include "sysrisk/finance.hpp"
#include "sysrisk/graph.hpp"
#include "sysrisk/model.hpp"
#include "sysrisk/version.hpp"

namespace sysrisk::cli {

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;
};

inline GridSpec parse_grid(const std::string& spec) {
    GridSpec g;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &g.start, &g.stop, &g.step) != 3)
        throw Error(ErrorCode::InvalidConfig, "grid spec must be start:stop:step, got '" + spec + "'");
    if (!(g.step > 0.0) || g.stop < g.start)
        throw Error(ErrorCode::InvalidConfig, "grid spec must satisfy step > 0 and stop >= start");
    return g;
}

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunContext {
    std::string config_path;
    std::string subcommand;
    std::uint64_t root_seed = 0;
    std::string out_dir;
    std::string started_at;
    nlohmann::json effective_config;
};

inline void write_manifest(const RunContext& ctx) {
    nlohmann::json manifest{
        {"tool_version", kVersion},
        {"subcommand", ctx.subcommand},
        {"config_path", ctx.config_path},
        {"root_seed", ctx.root_seed},
        {"output_dir", ctx.out_dir},
        {"started_at", ctx.started_at},
        {"finished_at", iso_timestamp()},
        {"effective_config", ctx.effective_config},
    };
    std::ofstream(std::filesystem::path(ctx.out_dir) / "run_manifest.json") << manifest.dump(2) << '\n';
}

inline nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream(path) << j.dump(2) << '\n';
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Clearing-vector solver for one-big/many-small bank networks"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "./out";
    double zc = 0.0, zb = 0.0;
    bool zc_set = false, zb_set = false;
    double pbs = 0.0;
    bool pbs_set = false;

    app.add_option("--config", config_path, "economy configuration (JSON)")->required();
    app.add_option("--seed", seed, "root seed for sampled realizations");
    app.add_option("--out", out_dir, "output directory");
    auto* zc_opt = app.add_option("--zc", zc, "common shock override");
    auto* zb_opt = app.add_option("--zb", zb, "big-bank shock override");
    auto* pbs_opt = app.add_option("--pbs", pbs, "connectivity E[eta] for analytic/sweep runs");

    auto* cmd_solve_finite = app.add_subcommand("solve-finite", "sample one network and solve its clearing vector");
    bool dump_network = false;
    cmd_solve_finite->add_flag("--dump-network", dump_network, "also write the sampled edge list");

    auto* cmd_solve_limit = app.add_subcommand("solve-limit", "solve the limit system for one scenario");
    auto* cmd_analytic = app.add_subcommand("analytic", "closed-form regime solution at --pbs");
    auto* cmd_surplus = app.add_subcommand("surplus", "limit solve plus expected-surplus report");

    auto* cmd_converge = app.add_subcommand("converge", "finite-vs-limit convergence experiment");
    std::vector<long> n_list{250, 500, 1000, 2000, 4000};
    long n_seeds = 20;
    cmd_converge->add_option("--n-list", n_list, "bank counts to sample");
    cmd_converge->add_option("--seeds", n_seeds, "seeds per bank count");

    auto* cmd_sweep_pbs = app.add_subcommand("sweep-pbs", "limit default fraction along connectivity");
    std::string grid_spec = "0.005:0.995:0.001";
    cmd_sweep_pbs->add_option("--grid", grid_spec, "connectivity grid start:stop:step");

    auto* cmd_sweep_shocks = app.add_subcommand("sweep-shocks", "limit default metrics over a shock grid");
    std::string zb_grid_spec = "0:100:1";
    std::string zc_grid_spec = "0:100:1";
    cmd_sweep_shocks->add_option("--zb-grid", zb_grid_spec, "z_b grid start:stop:step");
    cmd_sweep_shocks->add_option("--zc-grid", zc_grid_spec, "z_c grid start:stop:step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    zc_set = zc_opt->count() > 0;
    zb_set = zb_opt->count() > 0;
    pbs_set = pbs_opt->count() > 0;

    try {
        nlohmann::json config = load_config(config_path);
        const ModelParams raw = params_from_json(config);
        const ValidatedParams params = validate_params(raw);

        Scenario scenario;
        if (config.contains("scenario")) {
            scenario.z_c = config["scenario"].value("z_c", 0.0);
            scenario.z_b = config["scenario"].value("z_b", 0.0);
        }
        if (zc_set) scenario.z_c = zc;
        if (zb_set) scenario.z_b = zb;
        if (scenario.z_c < 0.0 || scenario.z_b < 0.0)
            throw Error(ErrorCode::InvalidConfig, "shocks must be non-negative");
        const double effective_pbs = pbs_set ? pbs : params.p_bs_mean();

        std::filesystem::create_directories(out_dir);
        RunContext ctx;
        ctx.config_path = config_path;
        ctx.root_seed = seed;
        ctx.out_dir = out_dir;
        ctx.started_at = iso_timestamp();
        ctx.effective_config = to_json(params.raw());
        ctx.effective_config["scenario"] = {{"z_c", scenario.z_c}, {"z_b", scenario.z_b}};
        const std::filesystem::path out(out_dir);

        if (cmd_solve_finite->parsed()) {
            ctx.subcommand = "solve-finite";
            const auto net = sample_network(params, seed);
            const auto cv = solve_clearing(net, params, scenario);
            nlohmann::json j{
                {"n", net.n()},
                {"seed", seed},
                {"x_big", cv.x_big},
                {"agg_big", cv.agg_big},
                {"default_fraction", cv.default_fraction},
                {"iterations", cv.iterations},
                {"residual", cv.residual},
                {"resamples", net.resamples()},
            };
            write_json(out / "clearing.json", j);
            std::string csv = "bank,x,aggregate,defaulted\n";
            for (std::size_t i = 0; i < cv.x_small.size(); ++i)
                csv += std::to_string(i) + ',' + detail::fmt_double(cv.x_small[i]) + ',' +
                       detail::fmt_double(cv.agg_small[i]) + ',' + (cv.defaults[i] ? '1' : '0') + '\n';
            write_file((out / "clearing.csv").string(), csv);
            if (dump_network)
                dump_realization(net, (out / "network.csv").string(), (out / "network.json").string());
            std::cout << "n = " << net.n() << ", default fraction = " << cv.default_fraction
                      << ", X_b = " << cv.x_big << " (" << cv.iterations << " iterations)\n";
        } else if (cmd_solve_limit->parsed() || cmd_surplus->parsed()) {
            ctx.subcommand = cmd_surplus->parsed() ? "surplus" : "solve-limit";
            const auto sol = solve_limit_clearing(params, scenario);
            const auto dm = default_metrics(sol, params, scenario);
            const bool want_es2 = params.recovery().has_value();
            const auto surplus = expected_surplus(sol, params, scenario, want_es2);
            nlohmann::json j = scenario_record(scenario, sol, dm, surplus);
            j["iterations"] = sol.iterations;
            j["residual"] = sol.residual;
            if (cmd_surplus->parsed()) {
                nlohmann::json psi = nlohmann::json::array();
                for (const auto& a : surplus.psi_small_dist.atoms()) psi.push_back({a.value, a.prob});
                j["psi_small_dist"] = psi;
                j["psi_big"] = surplus.psi_big;
            }
            write_json(out / "limit.json", j);
            std::cout << "xbar_s = " << sol.xbar_s << ", x_big = " << sol.x_big
                      << ", p_d_small = " << dm.p_d_small << (dm.big_defaults ? " (big bank defaults)\n" : "\n");
        } else if (cmd_analytic->parsed()) {
            ctx.subcommand = "analytic";
            ctx.effective_config["p_bs"] = effective_pbs;
            const auto regime = binary_regime_solve(params, scenario, effective_pbs);
            write_json(out / "regime.json", to_json(regime));
            std::cout << "regime " << regime.regime << ", p_d_small = " << regime.p_d_small
                      << ", xbar = " << regime.xbar << (regime.applicable() ? "\n" : " (not applicable)\n");
        } else if (cmd_converge->parsed()) {
            ctx.subcommand = "converge";
            std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
            for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = derive_seed(seed, i);
            ctx.effective_config["n_list"] = n_list;
            ctx.effective_config["cell_seeds"] = seeds;
            const auto report = run_convergence(params, scenario, n_list, seeds);
            write_file((out / "convergence.csv").string(), report.to_csv());
            write_json(out / "convergence_summary.json", report.summary_json());
            for (const auto& s : report.summary)
                std::cout << "n = " << s.n << ": median sup aggregate error = " << s.median_sup_error_agg
                          << ", median default fraction = " << s.median_default_frac << '\n';
        } else if (cmd_sweep_pbs->parsed()) {
            ctx.subcommand = "sweep-pbs";
            const GridSpec g = parse_grid(grid_spec);
            ctx.effective_config["grid"] = {{"start", g.start}, {"stop", g.stop}, {"step", g.step}};
            const auto curve = sweep_pbs(params, scenario, make_grid(g.start, g.stop, g.step));
            write_file((out / "curve.csv").string(), curve.to_csv());
            write_json(out / "jumps.json", curve.jumps_json());
            std::cout << curve.points.size() << " grid points, " << curve.jumps.size() << " jumps detected\n";
            for (const auto& jmp : curve.jumps)
                std::cout << "  jump at p_bs = " << jmp.location << " of size " << jmp.size << '\n';
        } else if (cmd_sweep_shocks->parsed()) {
            ctx.subcommand = "sweep-shocks";
            const GridSpec gb = parse_grid(zb_grid_spec);
            const GridSpec gc = parse_grid(zc_grid_spec);
            ctx.effective_config["p_bs"] = effective_pbs;
            ctx.effective_config["zb_grid"] = {{"start", gb.start}, {"stop", gb.stop}, {"step", gb.step}};
            ctx.effective_config["zc_grid"] = {{"start", gc.start}, {"stop", gc.stop}, {"step", gc.step}};
            const auto surface = sweep_shocks(params, effective_pbs, make_grid(gb.start, gb.stop, gb.step),
                                              make_grid(gc.start, gc.stop, gc.step));
            write_file((out / "surface.csv").string(), surface.to_csv());
            write_json(out / "transitions.json", surface.transitions_json());
            std::cout << surface.points.size() << " grid points written\n";
        }

        write_manifest(ctx);
        return 0;
    } catch (const NoConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace sysrisk::cli
