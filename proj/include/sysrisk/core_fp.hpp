#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "sysrisk/errors.hpp"
#include "sysrisk/graph.hpp"

namespace sysrisk {

/// Per-bank randomness seen by the small-bank map.
struct BankDraw {
    double z = 0.0;  // idiosyncratic shock
    double k = 0.0;  // anticipated return
    double y = 0.0;  // total liability
};

/// The pluggable pair (f_small, f_big) defining one fixed-point system.
/// Both maps must be non-negative, continuous and bounded by the supplied
/// bounds; f_small must be jointly 1-Lipschitz in (x_bar, b_in).
struct SystemMaps {
    // f_small(draws of bank i, in-aggregate from small banks, inflow from the big bank)
    std::function<double(const BankDraw&, double, double)> f_small;
    // f_big(per-bank aggregate flowing to the big bank)
    std::function<double(double)> f_big;
    double bound_small = 0.0;
    double bound_big = 0.0;
};

struct FromUpper {};
struct FromZero {};
struct Custom {
    std::vector<double> x;
    double x_big = 0.0;
};
using InitPolicy = std::variant<FromUpper, FromZero, Custom>;

/// Fixed point of the n+1 dimensional payment system plus its aggregates.
struct ClearingVector {
    std::vector<double> x_small;
    double x_big = 0.0;
    std::vector<double> agg_small;  // sum_j x_small[j] * W_{j,i}
    double agg_big = 0.0;           // (1/n) sum_j x_small[j] * W_{j,b}
    long iterations = 0;
    double residual = 0.0;
    std::vector<bool> defaults;     // filled by the financial instance
    double default_fraction = 0.0;

    [[nodiscard]] double empirical_default_fraction() const noexcept { return default_fraction; }
};

/// One synchronous application of the system operator: every new component
/// is computed from the previous iterate, so the result is independent of
/// index order.
[[nodiscard]] inline std::pair<std::vector<double>, double> apply_finite_operator(
    const std::vector<double>& x, double x_big, const NetworkRealization& net, const SystemMaps& maps) {
    const auto n = static_cast<std::size_t>(net.n());
    if (x.size() != n)
        throw Error(ErrorCode::DimensionMismatch,
                    "state has length " + std::to_string(x.size()) + ", network has n = " + std::to_string(n));
    std::vector<double> agg;
    net.accumulate_in_aggregates(x, agg);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
        const BankDraw g{net.shock_draws()[i], net.k_draws()[i], net.y_draws()[i]};
        next[i] = maps.f_small(g, agg[i], net.eta_bs_draws()[i] * x_big);
    }
    const double next_big = maps.f_big(net.big_aggregate(x));
    return {std::move(next), next_big};
}

/// Picard iteration on the finite system. For monotone maps, FromUpper
/// converges to the greatest fixed point and FromZero to the least; the
/// greatest one is the canonical selection reported by the financial layer.
[[nodiscard]] inline ClearingVector solve_finite(const NetworkRealization& net, const SystemMaps& maps,
                                                 const InitPolicy& init = FromUpper{}, double tol = 1e-12,
                                                 long max_iter = 100000) {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be positive");
    const auto n = static_cast<std::size_t>(net.n());

    std::vector<double> x(n, 0.0);
    double x_big = 0.0;
    if (std::holds_alternative<FromUpper>(init)) {
        x.assign(n, maps.bound_small);
        x_big = maps.bound_big;
    } else if (const auto* custom = std::get_if<Custom>(&init)) {
        if (custom->x.size() != n)
            throw Error(ErrorCode::DimensionMismatch, "custom init has wrong length");
        x = custom->x;
        x_big = custom->x_big;
    }

    double residual = 0.0;
    long iter = 0;
    std::vector<double> agg(n, 0.0);
    std::vector<double> next(n, 0.0);
    for (iter = 1; iter <= max_iter; ++iter) {
        net.accumulate_in_aggregates(x, agg);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const BankDraw g{net.shock_draws()[i], net.k_draws()[i], net.y_draws()[i]};
            next[i] = maps.f_small(g, agg[i], net.eta_bs_draws()[i] * x_big);
            residual = std::max(residual, std::abs(next[i] - x[i]));
        }
        const double next_big = maps.f_big(net.big_aggregate(x));
        residual = std::max(residual, std::abs(next_big - x_big));
        x.swap(next);
        x_big = next_big;
        if (residual <= tol) break;
    }
    if (residual > tol)
        throw NoConvergenceError("finite solver hit max_iter = " + std::to_string(max_iter), residual, max_iter);

    ClearingVector cv;
    cv.x_small = std::move(x);
    cv.x_big = x_big;
    net.accumulate_in_aggregates(cv.x_small, cv.agg_small);
    cv.agg_big = net.big_aggregate(cv.x_small);
    cv.iterations = iter;
    cv.residual = residual;
    return cv;
}

/// The two-dimensional system the aggregates collapse to as n grows. The
/// state is the pair (xbar, xbar_b); the big bank's payment is recovered
/// from xbar_b through big_map and the small-bank mean through xi_mean.
struct LimitMaps {
    // E[xi(xbar, x_big)], the exact atom-sum over the per-bank randomness
    std::function<double(double, double)> xi_mean;
    // x_big as a function of xbar_b
    std::function<double(double)> big_map;
    double bound = 0.0;  // uniform bound on xi
};

/// Solution of the limit system with its iteration trace.
struct LimitSolution {
    double xbar_s = 0.0;   // limit in-aggregate of a small bank
    double xbar_b = 0.0;   // limit per-bank aggregate flowing to the big bank
    double x_big = 0.0;    // limit big-bank payment per small bank
    long iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

/// Solves the limit pair system by iterating
///   (xbar, xbar_b) <- (m (1-p_sb), m p_sb),  m = xi_mean(xbar, big_map(xbar_b)).
/// At a fixed point xbar_b = xbar p_sb / (1 - p_sb) holds automatically.
/// Default start is the upper corner, the canonical greatest-solution pick.
[[nodiscard]] inline LimitSolution solve_limit(const LimitMaps& maps, double p_sb, double tol = 1e-12,
                                               long max_iter = 100000,
                                               std::optional<std::pair<double, double>> init = std::nullopt) {
    if (!(p_sb > 0.0) || !(p_sb < 1.0))
        throw Error(ErrorCode::DegenerateEtaSB, "limit solver needs 0 < p_sb < 1");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be positive");

    double xbar = maps.bound * (1.0 - p_sb);
    double xbar_b = maps.bound * p_sb;
    if (init) {
        xbar = init->first;
        xbar_b = init->second;
    }

    LimitSolution sol;
    sol.residual_history.reserve(64);
    double residual = 0.0;
    long iter = 0;
    for (iter = 1; iter <= max_iter; ++iter) {
        const double x_big = maps.big_map(xbar_b);
        const double m = maps.xi_mean(xbar, x_big);
        const double next_xbar = m * (1.0 - p_sb);
        const double next_xbar_b = m * p_sb;
        residual = std::max(std::abs(next_xbar - xbar), std::abs(next_xbar_b - xbar_b));
        xbar = next_xbar;
        xbar_b = next_xbar_b;
        sol.residual_history.push_back(residual);
        if (residual <= tol) break;
    }
    if (residual > tol)
        throw NoConvergenceError("limit solver hit max_iter = " + std::to_string(max_iter), residual, max_iter);

    sol.xbar_s = xbar;
    sol.xbar_b = xbar_b;
    sol.x_big = maps.big_map(xbar_b);
    sol.iterations = iter;
    sol.residual = residual;
    return sol;
}

}  // namespace sysrisk
