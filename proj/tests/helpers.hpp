#pragma once

// Shared test fixtures: reference economies, random economy generators and
// the independent oracles the numeric solvers are checked against. The
// oracles re-derive everything from the model definitions with plain loops
// and never call the solver paths they validate.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sysrisk/analytic.hpp"
#include "sysrisk/experiments.hpp"
#include "sysrisk/finance.hpp"
#include "sysrisk/graph.hpp"
#include "sysrisk/model.hpp"
#include "sysrisk/rng.hpp"

namespace testutil {

using namespace sysrisk;

// Economy behind the reference phase diagram: binary shocks Bin(0.4, 20),
// indicator connectivity 0.9, y = 80, k_s = 25, k_b = 55, v = 12, delta = 0.4.
inline ModelParams figure_params(long n = 100) {
    ModelParams p;
    p.n = n;
    p.p_ss = 0.1;
    p.eta_sb = DiscreteDist::indicator(0.9);
    p.eta_bs = DiscreteDist::indicator(0.9);
    p.shock_small = DiscreteDist::binary(0.4, 20.0);
    p.k_small = DiscreteDist::point(25.0);
    p.y_small = DiscreteDist::point(80.0);
    p.y_big = 72.0;
    p.k_big = 55.0;
    p.v_small = 12.0;
    p.v_big = 12.0;
    p.delta = 0.4;
    return p;
}

// Expected limit aggregate for the figure economy at (0, 0): regime 3 gives
// xbar = 8 - 67 * 0.01 / 0.99 = 725/99.
inline constexpr double kFigureXbar = 725.0 / 99.0;

// Symmetric two-bank network: mutual edges, eta_sb = 0.5, eta_bs = 1.
inline NetworkRealization hand_two_bank_network(double k = 20.0, double z = 0.0, double y = 10.0) {
    return NetworkRealization::from_draws({{1}, {0}}, {0.5, 0.5}, {1.0, 1.0}, {z, z}, {k, k}, {y, y});
}

// Two-bank economy matching hand_two_bank_network draws.
inline ModelParams hand_two_bank_params(double k_small, double v_small, double k_big, double v_big,
                                        double y = 10.0, double y_big = 5.0) {
    ModelParams p;
    p.n = 2;
    p.p_ss = 1.0;
    p.eta_sb = DiscreteDist::point(0.5);
    p.eta_bs = DiscreteDist::point(1.0);
    p.shock_small = DiscreteDist::point(0.0);
    p.k_small = DiscreteDist::point(k_small);
    p.y_small = DiscreteDist::point(y);
    p.y_big = y_big;
    p.k_big = k_big;
    p.v_small = v_small;
    p.v_big = v_big;
    p.delta = 0.0;
    return p;
}

inline DiscreteDist random_dist(SplitMix64& rng, int max_atoms, double lo, double hi) {
    const int count = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_atoms));
    std::vector<DiscreteDist::Atom> atoms;
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        const double weight = 0.1 + rng.next_double();
        atoms.push_back({lo + (hi - lo) * rng.next_double(), weight});
        total += weight;
    }
    for (auto& a : atoms) a.prob /= total;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) sum += atoms[i].prob;
    atoms.back().prob = 1.0 - sum;
    return DiscreteDist(std::move(atoms));
}

// Broad random economy for fuzzing: mixed discrete laws, indicator or
// general eta, shocks and returns on comparable scales.
inline ModelParams random_params(SplitMix64& rng, long n = 0) {
    ModelParams p;
    p.n = n ? n : 2 + static_cast<long>(rng.next() % 23);
    p.p_ss = 0.3 + 0.7 * rng.next_double();
    const double p_sb = 0.1 + 0.8 * rng.next_double();
    p.eta_sb = rng.bernoulli(0.5) ? DiscreteDist::indicator(p_sb) : DiscreteDist::point(p_sb);
    const double p_bs = 0.1 + 0.8 * rng.next_double();
    p.eta_bs = rng.bernoulli(0.5) ? DiscreteDist::indicator(p_bs) : random_dist(rng, 3, 0.0, 1.0);
    p.shock_small = random_dist(rng, 3, 0.0, 15.0);
    p.k_small = random_dist(rng, 3, 0.0, 30.0);
    p.y_small = rng.bernoulli(0.5) ? DiscreteDist::point(5.0 + 20.0 * rng.next_double())
                                   : random_dist(rng, 3, 1.0, 25.0);
    p.y_big = 1.0 + 10.0 * rng.next_double();
    p.k_big = 20.0 * rng.next_double();
    p.v_small = 5.0 * rng.next_double();
    p.v_big = 5.0 * rng.next_double();
    p.delta = rng.next_double();
    return p;
}

// Economy whose big bank pays its cap for every aggregate value: the
// big-bank map is constant, the composed small-bank mean is jointly
// 1-Lipschitz and the limit iteration contracts at max{p_sb, 1 - p_sb}.
inline ModelParams random_big_capped_params(SplitMix64& rng, const Scenario& scenario) {
    ModelParams p = random_params(rng);
    p.k_big = p.delta * scenario.z_c + scenario.z_b + p.v_big + p.y_big + 5.0 * rng.next_double();
    return p;
}

// Draws networks until one has a positive claim total; retains every other
// failure. Random indicator eta_bs at small n hits ZeroEtaBar routinely.
inline NetworkRealization sample_network_retry(const ValidatedParams& vp, SplitMix64& rng) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        try {
            return sample_network(vp, rng.next());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroEtaBar) throw;
        }
    }
    throw Error(ErrorCode::ZeroEtaBar, "no positive-claim draw in 200 attempts");
}

// --- Independent oracles ---------------------------------------------------

// Scalar reduction of the limit system evaluated with raw loops.
inline double oracle_limit_rhs(const ValidatedParams& vp, const Scenario& sc, double xbar) {
    const double p_sb = vp.eta_sb().mean();
    const double xbar_b = xbar * p_sb / (1.0 - p_sb);
    const double big_ret = std::max(vp.k_big() - vp.delta() * sc.z_c - sc.z_b, 0.0);
    const double phi_b = std::max(big_ret - vp.v_big() + xbar_b, 0.0);
    const double x_big = std::min(phi_b, vp.y_big()) / vp.eta_bs().mean();
    double mean = 0.0;
    for (const auto& z : vp.shock_small().atoms())
        for (const auto& k : vp.k_small().atoms())
            for (const auto& y : vp.y_small().atoms())
                for (const auto& eta : vp.eta_bs().atoms()) {
                    const double ret = std::max(k.value - sc.z_c - z.value, 0.0);
                    const double phi = std::max(ret + xbar + eta.value * x_big - vp.v_small(), 0.0);
                    mean += std::min(phi, y.value) * z.prob * k.prob * y.prob * eta.prob;
                }
    return mean * (1.0 - p_sb);
}

// Greatest root of xbar = rhs(xbar) by bisection. Valid when the reduction
// is a strict contraction (big bank pinned at its cap), where the root is
// unique; g(x) = rhs(x) - x then decreases through zero.
inline double oracle_limit_bisection(const ValidatedParams& vp, const Scenario& sc, double tol = 1e-11) {
    double lo = 0.0;
    double hi = vp.y_max() * (1.0 - vp.eta_sb().mean());
    if (oracle_limit_rhs(vp, sc, hi) >= hi) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (oracle_limit_rhs(vp, sc, mid) - mid >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Exhaustive Picard-from-above iteration on dense arrays, straight from the
// clearing definitions. Returns the vector and big payment after `iters`
// rounds or once successive changes drop below `tol`.
struct OracleClearing {
    std::vector<double> x;
    double x_big = 0.0;
};

inline OracleClearing oracle_clearing_from_above(const NetworkRealization& net, const ValidatedParams& vp,
                                                 const Scenario& sc, long iters = 1000000, double tol = 1e-13) {
    const auto n = static_cast<std::size_t>(net.n());
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j)
        net.for_each_neighbor(j, [&](std::uint32_t i) { w[j][i] = net.row_weight(j); });

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = net.y_draws()[i];
    double x_big = static_cast<double>(net.n()) * vp.y_big() / net.eta_bar();

    std::vector<double> next(n);
    for (long it = 0; it < iters; ++it) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double agg = 0.0;
            for (std::size_t j = 0; j < n; ++j) agg += x[j] * w[j][i];
            const double ret = std::max(net.k_draws()[i] - sc.z_c - net.shock_draws()[i], 0.0);
            const double phi = std::max(ret + agg + net.eta_bs_draws()[i] * x_big - vp.v_small(), 0.0);
            next[i] = std::min(phi, net.y_draws()[i]);
            change = std::max(change, std::abs(next[i] - x[i]));
        }
        double agg_b = 0.0;
        for (std::size_t j = 0; j < n; ++j) agg_b += x[j] * net.eta_sb_draws()[j];
        agg_b /= static_cast<double>(n);
        const double big_ret = std::max(vp.k_big() - vp.delta() * sc.z_c - sc.z_b, 0.0);
        const double phi_b = std::max(big_ret - vp.v_big() + agg_b, 0.0);
        const double next_big =
            std::min(phi_b * static_cast<double>(net.n()), static_cast<double>(net.n()) * vp.y_big()) /
            net.eta_bar();
        change = std::max(change, std::abs(next_big - x_big));
        x = next;
        x_big = next_big;
        if (change <= tol) break;
    }
    return {x, x_big};
}

// Sup-norm fixed-point residual of a candidate clearing vector, evaluated
// directly from the definitions.
inline double oracle_clearing_residual(const NetworkRealization& net, const ValidatedParams& vp,
                                       const Scenario& sc, const std::vector<double>& x, double x_big) {
    const auto n = static_cast<std::size_t>(net.n());
    std::vector<double> agg(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double xw = x[j] * net.row_weight(j);
        net.for_each_neighbor(j, [&](std::uint32_t i) { agg[i] += xw; });
    }
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ret = std::max(net.k_draws()[i] - sc.z_c - net.shock_draws()[i], 0.0);
        const double phi = std::max(ret + agg[i] + net.eta_bs_draws()[i] * x_big - vp.v_small(), 0.0);
        res = std::max(res, std::abs(std::min(phi, net.y_draws()[i]) - x[i]));
    }
    double agg_b = 0.0;
    for (std::size_t j = 0; j < n; ++j) agg_b += x[j] * net.eta_sb_draws()[j];
    agg_b /= static_cast<double>(n);
    const double big_ret = std::max(vp.k_big() - vp.delta() * sc.z_c - sc.z_b, 0.0);
    const double phi_b = std::max(big_ret - vp.v_big() + agg_b, 0.0);
    const double fb = std::min(phi_b * static_cast<double>(net.n()),
                               static_cast<double>(net.n()) * vp.y_big()) /
                      net.eta_bar();
    return std::max(res, std::abs(fb - x_big));
}

}  // namespace testutil
