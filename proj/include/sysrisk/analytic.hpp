#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <json.hpp>

#include "sysrisk/errors.hpp"
#include "sysrisk/model.hpp"

namespace sysrisk {

enum class Classification { NoDefaults, AllDefaults, Indeterminate };

[[nodiscard]] constexpr const char* to_string(Classification c) noexcept {
    switch (c) {
        case Classification::NoDefaults: return "NoDefaults";
        case Classification::AllDefaults: return "AllDefaults";
        case Classification::Indeterminate: return "Indeterminate";
    }
    return "Unknown";
}

namespace detail {

/// Binary-shock economy slice used by the closed forms.
struct BinaryEconomy {
    double y = 0.0;       // deterministic small-bank liability
    double k_s = 0.0;     // deterministic anticipated return
    double w = 0.0;       // probability of the shock atom
    double epsilon = 0.0; // shock size
    double v_s = 0.0;
};

inline BinaryEconomy extract_binary_economy(const ValidatedParams& params) {
    BinaryEconomy e;
    if (!params.y_small().is_point_mass())
        throw Error(ErrorCode::RequiresDeterministicY, "closed forms need a point-mass y_small");
    if (!params.k_small().is_point_mass())
        throw Error(ErrorCode::HypothesisViolated, "closed forms need a point-mass k_small");
    e.y = params.y_small().max_value();
    e.k_s = params.k_small().max_value();
    e.v_s = params.v_small();
    const auto& atoms = params.shock_small().atoms();
    if (atoms.size() != 2)
        throw Error(ErrorCode::HypothesisViolated, "closed forms need a two-atom shock law {0, epsilon}");
    const auto& lo = atoms[0].value <= atoms[1].value ? atoms[0] : atoms[1];
    const auto& hi = atoms[0].value <= atoms[1].value ? atoms[1] : atoms[0];
    if (lo.value != 0.0 || hi.value <= 0.0)
        throw Error(ErrorCode::HypothesisViolated, "shock atoms must be {0, epsilon} with epsilon > 0");
    if (hi.prob <= 0.0 || hi.prob >= 1.0)
        throw Error(ErrorCode::HypothesisViolated, "shock weight w must lie in (0, 1)");
    e.w = hi.prob;
    e.epsilon = hi.value;
    if (e.epsilon >= e.y)
        throw Error(ErrorCode::EpsilonExceedsY, "shock size must be smaller than the liability y");
    return e;
}

}  // namespace detail

/// Quick solvency classification from the two extreme per-bank returns.
/// x_b_bound is an upper bound on the limit big-bank payment (y suffices).
[[nodiscard]] inline Classification classify_solvency(const ValidatedParams& params, const Scenario& scenario,
                                                         double x_b_bound) {
    if (!params.eta_bs().is_indicator())
        throw Error(ErrorCode::RequiresIndicatorEta, "classification needs indicator eta_bs");
    if (!params.y_small().is_point_mass())
        throw Error(ErrorCode::RequiresDeterministicY, "classification needs a point-mass y_small");
    const double y = params.y_small().max_value();
    const double p_bs = params.p_bs_mean();
    double k_lower = 0.0, k_upper = 0.0;
    bool first = true;
    for (const auto& k : params.k_small().atoms())
        for (const auto& z : params.shock_small().atoms()) {
            const double ret = std::max(k.value - scenario.z_c - z.value, 0.0);
            k_lower = first ? ret : std::min(k_lower, ret);
            k_upper = first ? ret : std::max(k_upper, ret);
            first = false;
        }
    if (y * p_bs <= k_lower - params.v_small()) return Classification::NoDefaults;
    if (y * p_bs > k_upper + x_b_bound - params.v_small()) return Classification::AllDefaults;
    return Classification::Indeterminate;
}

/// Closed-form solution of the binary-shock economy in one of five default
/// regimes, valid while the big bank does not default.
struct RegimeResult {
    int regime = 0;                      // 1..5
    double p_d_small = 0.0;
    double xbar = 0.0;
    std::array<double, 5> barriers{};    // b1..b5 on the y*p_bs axis
    std::array<double, 5> c{};           // c1..c5
    std::array<double, 4> d{};           // d1..d4
    bool big_bank_solvent_check = false; // closed forms valid only when true
    bool clamp_free = false;             // worst-case capacity stays non-negative
    double k_lower = 0.0;
    double k_upper = 0.0;
    double k_bar_z = 0.0;

    /// Both validity flags hold: closed forms reproduce the exact limit.
    [[nodiscard]] bool applicable() const noexcept { return big_bank_solvent_check && clamp_free; }
};

/// Solves the binary-shock economy in closed form at connectivity p_bs.
/// The active regime is found by case consistency: each candidate aggregate
/// is plugged back into the four capped payment terms and the unique
/// pattern of binding caps picks the regime (ties resolve to the lower
/// index). Barriers are reported for diagnostics and switch-point tests.
[[nodiscard]] inline RegimeResult binary_regime_solve(const ValidatedParams& params, const Scenario& scenario,
                                                      double p_bs) {
    if (!(p_bs > 0.0) || !(p_bs < 1.0))
        throw Error(ErrorCode::HypothesisViolated, "p_bs must lie strictly in (0, 1)");
    const auto econ = detail::extract_binary_economy(params);
    const double y = econ.y;
    const double w = econ.w;
    const double v = econ.v_s;

    RegimeResult res;
    res.k_lower = std::max(econ.k_s - scenario.z_c - econ.epsilon, 0.0);
    res.k_upper = std::max(econ.k_s - scenario.z_c, 0.0);
    res.k_bar_z = w * res.k_lower + (1.0 - w) * res.k_upper;

    const double q = 1.0 - p_bs;
    const std::array<double, 5> p_d{0.0, w * q, q, 1.0 - p_bs * (1.0 - w), 1.0};
    res.c = {0.0,
             res.k_lower - v,
             res.k_bar_z - v,
             (res.k_bar_z * q + (res.k_lower + y) * w * p_bs) / (1.0 - p_bs * (1.0 - w)) - v,
             res.k_bar_z - v + y * p_bs};
    res.d = {res.k_lower - v, res.k_upper - v, res.k_lower - v + y, res.k_upper - v + y};
    for (int i = 0; i < 4; ++i) {
        const double qp = q * p_d[static_cast<std::size_t>(i)];
        res.barriers[static_cast<std::size_t>(i)] =
            res.c[static_cast<std::size_t>(i)] * qp + res.d[static_cast<std::size_t>(i)] * (1.0 - qp);
    }
    res.barriers[4] = y;

    auto xbar_for = [&](int regime) {
        const double pd = p_d[static_cast<std::size_t>(regime - 1)];
        const double qp = q * pd;
        return y * q - (y * p_bs - res.c[static_cast<std::size_t>(regime - 1)]) * qp / (1.0 - qp);
    };

    res.regime = 0;
    for (int regime = 1; regime <= 5; ++regime) {
        const double xbar = xbar_for(regime);
        const double t1 = res.k_lower - v + xbar;
        const double t2 = res.k_upper - v + xbar;
        const double t3 = t1 + y;
        const double t4 = t2 + y;
        bool consistent = false;
        switch (regime) {
            case 1: consistent = t1 >= y; break;
            case 2: consistent = t1 < y && t2 >= y; break;
            case 3: consistent = t2 < y && t3 >= y; break;
            case 4: consistent = t3 < y && t4 >= y; break;
            case 5: consistent = t4 < y; break;
        }
        if (consistent) {
            res.regime = regime;
            res.xbar = xbar;
            res.p_d_small = p_d[static_cast<std::size_t>(regime - 1)];
            res.clamp_free = t1 >= 0.0;
            break;
        }
    }
    if (res.regime == 0)
        throw Error(ErrorCode::NoConsistentRegime, "no case is self-consistent at p_bs = " + std::to_string(p_bs));

    const double big_ret = std::max(params.k_big() - params.delta() * scenario.z_c - scenario.z_b, 0.0);
    res.big_bank_solvent_check = big_ret - params.v_big() + res.xbar * p_bs / q > y * p_bs;
    return res;
}

[[nodiscard]] inline nlohmann::json to_json(const RegimeResult& r) {
    return nlohmann::json{
        {"regime", r.regime},
        {"p_d_small", r.p_d_small},
        {"xbar", r.xbar},
        {"barriers", {r.barriers[0], r.barriers[1], r.barriers[2], r.barriers[3], r.barriers[4]}},
        {"c", {r.c[0], r.c[1], r.c[2], r.c[3], r.c[4]}},
        {"d", {r.d[0], r.d[1], r.d[2], r.d[3]}},
        {"big_bank_solvent_check", r.big_bank_solvent_check},
        {"clamp_free", r.clamp_free},
        {"applicable", r.applicable()},
        {"k_lower", r.k_lower},
        {"k_upper", r.k_upper},
        {"k_bar_z", r.k_bar_z},
    };
}

/// Closed forms for the three-period variant: defaulted banks break their
/// bonds and the recovered fraction lets them clear in full.
struct RecoverySolution {
    double p_d_small = 0.0;
    double p_d_star = 0.0;  // minimum default fraction over connectivity
    double es2 = 0.0;       // expected surplus including maturity payouts
};

[[nodiscard]] inline RecoverySolution binary_recovery_solve(const ValidatedParams& params,
                                                            const Scenario& scenario, double p_bs) {
    if (!params.recovery())
        throw Error(ErrorCode::MissingRecoveryParams, "recovery closed forms need recovery parameters");
    if (!(p_bs > 0.0) || !(p_bs < 1.0))
        throw Error(ErrorCode::HypothesisViolated, "p_bs must lie strictly in (0, 1)");
    const auto econ = detail::extract_binary_economy(params);
    const auto& rec = *params.recovery();
    const double y = econ.y;
    const double w = econ.w;
    const double v = econ.v_s;
    const double k_lower = std::max(econ.k_s - scenario.z_c - econ.epsilon, 0.0);
    const double k_upper = std::max(econ.k_s - scenario.z_c, 0.0);

    if (!(params.k_big() > params.delta() * scenario.z_c + scenario.z_b + params.v_big()))
        throw Error(ErrorCode::HypothesisViolated, "k_big <= delta*z_c + z_b + v_big");
    if (!(k_lower + rec.rho_s * rec.a_s > v + y * p_bs))
        throw Error(ErrorCode::HypothesisViolated, "k_lower + rho_s*a_s <= v_small + y*p_bs");

    RecoverySolution sol;
    const double t0 = (k_lower - v) / y;
    const double t1 = (k_upper - v) / y;
    const double t2 = (k_lower + y - v) / y;
    const double t3 = (k_upper + y - v) / y;
    if (p_bs <= t0)
        sol.p_d_small = 0.0;
    else if (p_bs <= t1)
        sol.p_d_small = w * (1.0 - p_bs);
    else if (p_bs <= t2)
        sol.p_d_small = 1.0 - p_bs;
    else if (p_bs <= t3)
        sol.p_d_small = 1.0 - p_bs * (1.0 - w);
    else
        sol.p_d_small = 1.0;

    if (v <= k_upper) {
        sol.p_d_star = std::min(w * (1.0 - (k_upper - v) / y), std::max(v - k_lower, 0.0) / y);
    } else {
        sol.p_d_star = std::min({w + (1.0 - w) * (v - k_upper) / y, (v - k_lower) / y, 1.0});
    }

    const double k_bar_z = w * k_lower + (1.0 - w) * k_upper;
    const double psi_b = params.k_big() - params.delta() * scenario.z_c - scenario.z_b - params.v_big();
    // Survivors collect a_s at maturity, defaulted banks the recovered part;
    // the solvent big bank collects a_b on top of its running surplus.
    sol.es2 = k_bar_z - v + rec.a_s - (1.0 - rec.rho_s) * rec.a_s * sol.p_d_small + psi_b + rec.a_b;
    return sol;
}

}  // namespace sysrisk
