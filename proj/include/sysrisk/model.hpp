#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "sysrisk/discrete_dist.hpp"
#include "sysrisk/errors.hpp"

namespace sysrisk {

/// Three-period extension: recovered fraction and maturity payout per bank class.
struct RecoveryParams {
    double rho_s = 0.0;
    double rho_b = 0.0;
    double a_s = 0.0;
    double a_b = 0.0;
};

/// One realization of the system-wide shocks: common shock z_c hits every
/// small bank, z_b is the big bank's idiosyncratic shock.
struct Scenario {
    double z_c = 0.0;
    double z_b = 0.0;
};

/// Full parameterization of one economy. Distributions are finite and
/// discrete; fraction-valued ones must live on [0, 1].
struct ModelParams {
    long n = 0;                 // number of small banks
    double p_ss = 0.0;          // small-small link probability
    DiscreteDist eta_sb;        // liability fraction of a small bank toward the big bank
    DiscreteDist eta_bs;        // claim fraction of a small bank on the big bank
    DiscreteDist shock_small;   // idiosyncratic shock Z of a small bank
    DiscreteDist k_small;       // anticipated return K of a small bank
    DiscreteDist y_small;       // total liability Y of a small bank
    double y_big = 0.0;         // big-bank liability per small bank
    double k_big = 0.0;         // big-bank anticipated return per small bank
    double v_small = 0.0;       // small-bank operating cost / tax
    double v_big = 0.0;         // big-bank operating cost / tax per small bank
    double delta = 0.0;         // common-shock multiplier for the big bank
    std::optional<RecoveryParams> recovery;
};

/// ModelParams that passed validation, with the moments every solver needs
/// cached up front. Immutable after construction and safe to share across
/// worker threads.
class ValidatedParams {
public:
    [[nodiscard]] const ModelParams& raw() const noexcept { return params_; }

    [[nodiscard]] long n() const noexcept { return params_.n; }
    [[nodiscard]] double p_ss() const noexcept { return params_.p_ss; }
    [[nodiscard]] const DiscreteDist& eta_sb() const noexcept { return params_.eta_sb; }
    [[nodiscard]] const DiscreteDist& eta_bs() const noexcept { return params_.eta_bs; }
    [[nodiscard]] const DiscreteDist& shock_small() const noexcept { return params_.shock_small; }
    [[nodiscard]] const DiscreteDist& k_small() const noexcept { return params_.k_small; }
    [[nodiscard]] const DiscreteDist& y_small() const noexcept { return params_.y_small; }
    [[nodiscard]] double y_big() const noexcept { return params_.y_big; }
    [[nodiscard]] double k_big() const noexcept { return params_.k_big; }
    [[nodiscard]] double v_small() const noexcept { return params_.v_small; }
    [[nodiscard]] double v_big() const noexcept { return params_.v_big; }
    [[nodiscard]] double delta() const noexcept { return params_.delta; }
    [[nodiscard]] const std::optional<RecoveryParams>& recovery() const noexcept { return params_.recovery; }

    [[nodiscard]] double p_sb() const noexcept { return p_sb_; }
    [[nodiscard]] double p_bs_mean() const noexcept { return p_bs_mean_; }
    [[nodiscard]] double e_y() const noexcept { return e_y_; }
    [[nodiscard]] double y_max() const noexcept { return y_max_; }

    /// E[(K - z_c - Z)^+], the mean post-shock return of a small bank.
    [[nodiscard]] double mean_net_return(double z_c) const {
        double m = 0.0;
        for (const auto& k : params_.k_small.atoms())
            for (const auto& z : params_.shock_small.atoms())
                m += std::max(k.value - z_c - z.value, 0.0) * k.prob * z.prob;
        return m;
    }

    /// Same params with a different bank count (re-validated copy).
    [[nodiscard]] ValidatedParams with_n(long n) const {
        ModelParams p = params_;
        p.n = n;
        return ValidatedParams(p);
    }

    friend ValidatedParams validate_params(const ModelParams& params);

private:
    explicit ValidatedParams(const ModelParams& params) : params_(params) {
        if (params_.n < 0)
            throw Error(ErrorCode::InvalidConfig, "n must be non-negative");
        if (!(params_.p_ss > 0.0) || params_.p_ss > 1.0)
            throw Error(ErrorCode::InvalidConfig, "p_ss must lie in (0, 1]");
        if (!params_.eta_sb.support_in_unit_interval())
            throw Error(ErrorCode::InvalidDistribution, "eta_sb support must lie in [0, 1]");
        if (!params_.eta_bs.support_in_unit_interval())
            throw Error(ErrorCode::InvalidDistribution, "eta_bs support must lie in [0, 1]");
        if (params_.shock_small.min_value() < 0.0)
            throw Error(ErrorCode::InvalidDistribution, "shock_small must be non-negative");
        if (params_.k_small.min_value() < 0.0)
            throw Error(ErrorCode::InvalidDistribution, "k_small must be non-negative");
        if (params_.y_small.min_value() <= 0.0)
            throw Error(ErrorCode::NonPositiveLiability, "y_small has an atom <= 0");
        if (!(params_.y_big > 0.0))
            throw Error(ErrorCode::NonPositiveLiability, "y_big must be positive");
        if (params_.k_big < 0.0 || params_.v_small < 0.0 || params_.v_big < 0.0 || params_.delta < 0.0)
            throw Error(ErrorCode::InvalidConfig, "k_big, v_small, v_big, delta must be non-negative");
        if (params_.recovery) {
            const auto& r = *params_.recovery;
            if (r.rho_s < 0.0 || r.rho_b < 0.0 || r.a_s < 0.0 || r.a_b < 0.0)
                throw Error(ErrorCode::InvalidConfig, "recovery parameters must be non-negative");
        }
        p_sb_ = params_.eta_sb.mean();
        if (!(p_sb_ > 0.0) || !(p_sb_ < 1.0))
            throw Error(ErrorCode::DegenerateEtaSB,
                        "E[eta_sb] = " + std::to_string(p_sb_) + " must lie strictly in (0, 1)");
        p_bs_mean_ = params_.eta_bs.mean();
        e_y_ = params_.y_small.mean();
        y_max_ = params_.y_small.max_value();
    }

    ModelParams params_;
    double p_sb_ = 0.0;
    double p_bs_mean_ = 0.0;
    double e_y_ = 0.0;
    double y_max_ = 0.0;
};

/// Checks every invariant on the raw parameters and caches the moments the
/// solvers need. Rejects economies outside the solvable family.
[[nodiscard]] inline ValidatedParams validate_params(const ModelParams& params) {
    return ValidatedParams(params);
}

// --- JSON configuration format -------------------------------------------
//
// Distributions are arrays of [value, prob] pairs. Every field is mandatory
// except "recovery".

inline nlohmann::json to_json(const DiscreteDist& dist) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : dist.atoms()) arr.push_back({a.value, a.prob});
    return arr;
}

inline DiscreteDist dist_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw Error(ErrorCode::InvalidConfig, "field '" + field + "' must be a non-empty array of [value, prob] pairs");
    std::vector<DiscreteDist::Atom> atoms;
    atoms.reserve(j.size());
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2)
            throw Error(ErrorCode::InvalidConfig, "field '" + field + "' must contain [value, prob] pairs");
        atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    try {
        return DiscreteDist(std::move(atoms));
    } catch (const Error& e) {
        throw Error(e.code(), "field '" + field + "': " + e.what());
    }
}

inline nlohmann::json to_json(const ModelParams& p) {
    nlohmann::json j{
        {"n", p.n},
        {"p_ss", p.p_ss},
        {"eta_sb", to_json(p.eta_sb)},
        {"eta_bs", to_json(p.eta_bs)},
        {"shock_small", to_json(p.shock_small)},
        {"k_small", to_json(p.k_small)},
        {"y_small", to_json(p.y_small)},
        {"y_big", p.y_big},
        {"k_big", p.k_big},
        {"v_small", p.v_small},
        {"v_big", p.v_big},
        {"delta", p.delta},
    };
    if (p.recovery) {
        j["recovery"] = {{"rho_s", p.recovery->rho_s},
                         {"rho_b", p.recovery->rho_b},
                         {"a_s", p.recovery->a_s},
                         {"a_b", p.recovery->a_b}};
    }
    return j;
}

inline ModelParams params_from_json(const nlohmann::json& j) {
    auto require = [&](const char* field) -> const nlohmann::json& {
        auto it = j.find(field);
        if (it == j.end())
            throw Error(ErrorCode::InvalidConfig, std::string("missing required field '") + field + "'");
        return *it;
    };
    ModelParams p;
    p.n = require("n").get<long>();
    p.p_ss = require("p_ss").get<double>();
    p.eta_sb = dist_from_json(require("eta_sb"), "eta_sb");
    p.eta_bs = dist_from_json(require("eta_bs"), "eta_bs");
    p.shock_small = dist_from_json(require("shock_small"), "shock_small");
    p.k_small = dist_from_json(require("k_small"), "k_small");
    p.y_small = dist_from_json(require("y_small"), "y_small");
    p.y_big = require("y_big").get<double>();
    p.k_big = require("k_big").get<double>();
    p.v_small = require("v_small").get<double>();
    p.v_big = require("v_big").get<double>();
    p.delta = require("delta").get<double>();
    if (j.contains("recovery") && !j["recovery"].is_null()) {
        const auto& r = j["recovery"];
        RecoveryParams rec;
        rec.rho_s = r.at("rho_s").get<double>();
        rec.rho_b = r.at("rho_b").get<double>();
        rec.a_s = r.at("a_s").get<double>();
        rec.a_b = r.at("a_b").get<double>();
        p.recovery = rec;
    }
    return p;
}

}  // namespace sysrisk
