#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include <json.hpp>

#include "sysrisk/core_fp.hpp"
#include "sysrisk/graph.hpp"
#include "sysrisk/model.hpp"

namespace sysrisk {

// Ties at the liability cap count as full payment, not default.
inline constexpr double kDefaultTieTol = 1e-12;
// Gap below Y_i that flags a finite-n bank as defaulted.
inline constexpr double kFiniteDefaultTol = 1e-9;

/// Pre-cap payment capacity of a small bank.
[[nodiscard]] inline double phi_small(double k, double z_c, double z_i, double xbar, double eta_bs_i,
                                      double x_big, double v_s) noexcept {
    const double ret = std::max(k - z_c - z_i, 0.0);
    return std::max(ret + xbar + eta_bs_i * x_big - v_s, 0.0);
}

/// Pre-cap payment capacity of the big bank, per small bank.
[[nodiscard]] inline double phi_big(double k_b, double delta, double z_c, double z_b, double xbar_b,
                                    double v_b) noexcept {
    const double ret = std::max(k_b - delta * z_c - z_b, 0.0);
    return std::max(ret - v_b + xbar_b, 0.0);
}

/// The financial instance of the generic system: payments are capacities
/// capped at liabilities. The big bank's total payment n*min{Phi_b, Y_b} is
/// split over claims, giving the 1/eta_bar scaling.
[[nodiscard]] inline SystemMaps clearing_maps(const NetworkRealization& net, const ValidatedParams& params,
                                              const Scenario& scenario) {
    SystemMaps maps;
    const double v_s = params.v_small();
    const double z_c = scenario.z_c;
    maps.f_small = [v_s, z_c](const BankDraw& g, double xbar, double b_in) {
        return std::min(phi_small(g.k, z_c, g.z, xbar, 1.0, b_in, v_s), g.y);
    };
    const double k_b = params.k_big();
    const double v_b = params.v_big();
    const double delta = params.delta();
    const double z_b = scenario.z_b;
    const double y_b = params.y_big();
    const double scale = static_cast<double>(net.n()) / net.eta_bar();
    maps.f_big = [k_b, v_b, delta, z_c, z_b, y_b, scale](double xbar_b) {
        return scale * std::min(phi_big(k_b, delta, z_c, z_b, xbar_b, v_b), y_b);
    };
    maps.bound_small = params.y_max();
    maps.bound_big = scale * y_b;
    return maps;
}

/// Realization-wise clearing vector (greatest fixed point by default), with
/// per-bank default flags.
[[nodiscard]] inline ClearingVector solve_clearing(const NetworkRealization& net, const ValidatedParams& params,
                                                   const Scenario& scenario, const InitPolicy& init = FromUpper{},
                                                   double tol = 1e-12, long max_iter = 100000) {
    ClearingVector cv = solve_finite(net, clearing_maps(net, params, scenario), init, tol, max_iter);
    const auto n = static_cast<std::size_t>(net.n());
    cv.defaults.assign(n, false);
    long count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (cv.x_small[i] < net.y_draws()[i] - kFiniteDefaultTol) {
            cv.defaults[i] = true;
            ++count;
        }
    }
    cv.default_fraction = static_cast<double>(count) / static_cast<double>(n);
    return cv;
}

/// Limit maps of the clearing system. The small-bank mean is an exact
/// nested sum over the (Z, K, Y, eta_bs) atoms; nothing is sampled.
[[nodiscard]] inline LimitMaps limit_clearing_maps(const ValidatedParams& params, const Scenario& scenario) {
    LimitMaps maps;
    const double v_s = params.v_small();
    const double z_c = scenario.z_c;
    const DiscreteDist shock = params.shock_small();
    const DiscreteDist k_dist = params.k_small();
    const DiscreteDist y_dist = params.y_small();
    const DiscreteDist eta_bs = params.eta_bs();
    maps.xi_mean = [=](double xbar, double x_big) {
        double m = 0.0;
        for (const auto& z : shock.atoms())
            for (const auto& k : k_dist.atoms())
                for (const auto& y : y_dist.atoms())
                    for (const auto& eta : eta_bs.atoms()) {
                        const double phi = phi_small(k.value, z_c, z.value, xbar, eta.value, x_big, v_s);
                        m += std::min(phi, y.value) * z.prob * k.prob * y.prob * eta.prob;
                    }
        return m;
    };
    const double k_b = params.k_big();
    const double v_b = params.v_big();
    const double delta = params.delta();
    const double z_b = scenario.z_b;
    const double y_b = params.y_big();
    const double p_bs = params.p_bs_mean();
    maps.big_map = [k_b, v_b, delta, z_c, z_b, y_b, p_bs](double xbar_b) {
        return std::min(phi_big(k_b, delta, z_c, z_b, xbar_b, v_b), y_b) / p_bs;
    };
    maps.bound = params.y_max();
    return maps;
}

/// Deterministic limit of the clearing aggregates for one shock scenario.
[[nodiscard]] inline LimitSolution solve_limit_clearing(const ValidatedParams& params, const Scenario& scenario,
                                                        double tol = 1e-12, long max_iter = 200000) {
    return solve_limit(limit_clearing_maps(params, scenario), params.p_sb(), tol, max_iter);
}

/// Limit default metrics at a solved scenario.
struct DefaultMetrics {
    double p_d_small = 0.0;  // limit fraction of defaulted small banks
    bool big_defaults = false;
};

/// Evaluates the default probabilities exactly over the atom grid at the
/// limit solution. A capacity exactly at the liability cap is solvent.
[[nodiscard]] inline DefaultMetrics default_metrics(const LimitSolution& sol, const ValidatedParams& params,
                                                    const Scenario& scenario) {
    DefaultMetrics dm;
    const double v_s = params.v_small();
    for (const auto& z : params.shock_small().atoms())
        for (const auto& k : params.k_small().atoms())
            for (const auto& y : params.y_small().atoms())
                for (const auto& eta : params.eta_bs().atoms()) {
                    const double phi = phi_small(k.value, scenario.z_c, z.value, sol.xbar_s, eta.value,
                                                 sol.x_big, v_s);
                    if (phi < y.value - kDefaultTieTol) dm.p_d_small += z.prob * k.prob * y.prob * eta.prob;
                }
    const double phi_b = phi_big(params.k_big(), params.delta(), scenario.z_c, scenario.z_b, sol.xbar_b,
                                 params.v_big());
    dm.big_defaults = phi_b < params.y_big() - kDefaultTieTol;
    return dm;
}

/// Per-scenario surplus report. es2 is only defined with recovery params.
struct SurplusReport {
    double es1 = 0.0;
    std::optional<double> es2;
    DiscreteDist psi_small_dist;  // post-clearing net position of a small bank
    double psi_big = 0.0;
};

/// Expected surplus per small bank at the limit solution, conditioned on
/// the scenario. Defaulted banks keep the recovered part of their broken
/// bonds; survivors keep the maturity payout (second-period term).
[[nodiscard]] inline SurplusReport expected_surplus(const LimitSolution& sol, const ValidatedParams& params,
                                                    const Scenario& scenario, bool want_es2 = false) {
    if (want_es2 && !params.recovery())
        throw Error(ErrorCode::MissingRecoveryParams, "es2 needs recovery parameters");
    const double rho_s_a = params.recovery() ? params.recovery()->rho_s * params.recovery()->a_s : 0.0;
    const double rho_b_a = params.recovery() ? params.recovery()->rho_b * params.recovery()->a_b : 0.0;

    SurplusReport report;
    std::vector<DiscreteDist::Atom> psi_atoms;
    double small_part = 0.0;
    const double v_s = params.v_small();
    for (const auto& z : params.shock_small().atoms())
        for (const auto& k : params.k_small().atoms())
            for (const auto& y : params.y_small().atoms())
                for (const auto& eta : params.eta_bs().atoms()) {
                    const double prob = z.prob * k.prob * y.prob * eta.prob;
                    const double psi = std::max(k.value - scenario.z_c - z.value, 0.0) + sol.xbar_s +
                                       sol.x_big * eta.value - v_s - y.value;
                    psi_atoms.push_back({psi, prob});
                    small_part += prob * std::max(psi, 0.0);
                    if (psi < 0.0) small_part += prob * std::max(psi + rho_s_a, 0.0);
                }
    report.psi_small_dist = DiscreteDist(std::move(psi_atoms));

    const double psi_b = std::max(params.k_big() - scenario.z_c * params.delta() - scenario.z_b, 0.0) +
                         sol.xbar_b - params.v_big() - params.y_big();
    report.psi_big = psi_b;
    double big_part = std::max(psi_b, 0.0);
    if (psi_b < 0.0) big_part += std::max(psi_b + rho_b_a, 0.0);

    report.es1 = small_part + big_part;
    if (want_es2) {
        const DefaultMetrics dm = default_metrics(sol, params, scenario);
        report.es2 = report.es1 + (1.0 - dm.p_d_small) * params.recovery()->a_s +
                     (dm.big_defaults ? 0.0 : params.recovery()->a_b);
    }
    return report;
}

/// JSON record for one solved scenario.
[[nodiscard]] inline nlohmann::json scenario_record(const Scenario& scenario, const LimitSolution& sol,
                                                    const DefaultMetrics& dm, const SurplusReport& surplus) {
    nlohmann::json j{
        {"scenario", {{"z_c", scenario.z_c}, {"z_b", scenario.z_b}}},
        {"xbar_s", sol.xbar_s},
        {"xbar_b", sol.xbar_b},
        {"x_big", sol.x_big},
        {"p_d_small", dm.p_d_small},
        {"big_defaults", dm.big_defaults},
        {"es1", surplus.es1},
        {"es2", nullptr},
    };
    if (surplus.es2) j["es2"] = *surplus.es2;
    return j;
}

}  // namespace sysrisk
