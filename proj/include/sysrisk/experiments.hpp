#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sysrisk/analytic.hpp"
#include "sysrisk/finance.hpp"
#include "sysrisk/graph.hpp"
#include "sysrisk/rng.hpp"

namespace sysrisk {

/// Worker count: hardware concurrency capped by SYSRISK_THREADS.
[[nodiscard]] inline unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("SYSRISK_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return hw;
}

/// Runs fn(i) for i in [0, count) over a small shared-counter pool. Each
/// item writes only its own result slot, so assembly is order-independent
/// and outputs stay deterministic.
template <class F>
void parallel_for(std::size_t count, F&& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace detail

// --- Convergence of the finite system to its limit -------------------------

struct ConvergenceCell {
    long n = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double sup_error_agg = 0.0;   // max_i |agg_small[i] - xbar*|
    double err_agg_big = 0.0;     // |agg_big - xbar_b*|
    double err_big = 0.0;         // |x_big - x_big*|
    double default_frac = 0.0;
    double default_frac_err = 0.0;
};

struct ConvergenceSummary {
    long n = 0;
    double median_sup_error_agg = 0.0;
    double median_err_agg_big = 0.0;
    double median_err_big = 0.0;
    double median_default_frac = 0.0;
    double median_default_frac_err = 0.0;
};

struct ConvergenceReport {
    std::vector<long> n_values;
    std::vector<std::uint64_t> seeds;
    LimitSolution reference;
    double reference_p_d_small = 0.0;
    std::vector<ConvergenceCell> cells;     // n-major, then seed order
    std::vector<ConvergenceSummary> summary;

    [[nodiscard]] std::string to_csv() const {
        std::string out = "n,seed,ok,sup_error_agg,err_agg_big,err_big,default_frac,default_frac_err\n";
        for (const auto& c : cells) {
            out += std::to_string(c.n) + ',' + std::to_string(c.seed) + ',' + (c.ok ? '1' : '0') + ',' +
                   detail::fmt_double(c.sup_error_agg) + ',' + detail::fmt_double(c.err_agg_big) + ',' +
                   detail::fmt_double(c.err_big) + ',' + detail::fmt_double(c.default_frac) + ',' +
                   detail::fmt_double(c.default_frac_err) + '\n';
        }
        return out;
    }

    [[nodiscard]] nlohmann::json summary_json() const {
        nlohmann::json per_n = nlohmann::json::array();
        for (const auto& s : summary) {
            per_n.push_back({{"n", s.n},
                             {"median_sup_error_agg", s.median_sup_error_agg},
                             {"median_err_agg_big", s.median_err_agg_big},
                             {"median_err_big", s.median_err_big},
                             {"median_default_frac", s.median_default_frac},
                             {"median_default_frac_err", s.median_default_frac_err}});
        }
        return nlohmann::json{{"reference",
                               {{"xbar_s", reference.xbar_s},
                                {"xbar_b", reference.xbar_b},
                                {"x_big", reference.x_big},
                                {"p_d_small", reference_p_d_small}}},
                              {"per_n", per_n}};
    }
};

/// Samples and solves the finite economy over an (n, seed) grid and compares
/// aggregates against the limit solution. Per-cell seeds derive from the
/// listed seeds; failures are recorded per cell, never fatal.
[[nodiscard]] inline ConvergenceReport run_convergence(const ValidatedParams& params, const Scenario& scenario,
                                                       const std::vector<long>& n_values,
                                                       const std::vector<std::uint64_t>& seeds,
                                                       double tol = 1e-12) {
    ConvergenceReport report;
    report.n_values = n_values;
    report.seeds = seeds;
    report.reference = solve_limit_clearing(params, scenario, 1e-13);
    report.reference_p_d_small = default_metrics(report.reference, params, scenario).p_d_small;

    report.cells.resize(n_values.size() * seeds.size());
    parallel_for(report.cells.size(), [&](std::size_t idx) {
        const std::size_t ni = idx / seeds.size();
        const std::size_t si = idx % seeds.size();
        ConvergenceCell cell;
        cell.n = n_values[ni];
        cell.seed = seeds[si];
        try {
            const auto params_n = params.with_n(cell.n);
            const auto net = sample_network(params_n, cell.seed);
            const auto cv = solve_clearing(net, params_n, scenario, FromUpper{}, tol);
            cell.sup_error_agg = 0.0;
            for (double a : cv.agg_small) cell.sup_error_agg = std::max(cell.sup_error_agg, std::abs(a - report.reference.xbar_s));
            cell.err_agg_big = std::abs(cv.agg_big - report.reference.xbar_b);
            cell.err_big = std::abs(cv.x_big - report.reference.x_big);
            cell.default_frac = cv.default_fraction;
            cell.default_frac_err = std::abs(cv.default_fraction - report.reference_p_d_small);
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        report.cells[idx] = std::move(cell);
    });

    for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
        ConvergenceSummary s;
        s.n = n_values[ni];
        std::vector<double> sup, eab, eb, df, dfe;
        for (std::size_t si = 0; si < seeds.size(); ++si) {
            const auto& c = report.cells[ni * seeds.size() + si];
            if (!c.ok) continue;
            sup.push_back(c.sup_error_agg);
            eab.push_back(c.err_agg_big);
            eb.push_back(c.err_big);
            df.push_back(c.default_frac);
            dfe.push_back(c.default_frac_err);
        }
        s.median_sup_error_agg = detail::median(sup);
        s.median_err_agg_big = detail::median(eab);
        s.median_err_big = detail::median(eb);
        s.median_default_frac = detail::median(df);
        s.median_default_frac_err = detail::median(dfe);
        report.summary.push_back(s);
    }
    return report;
}

// --- Parameter sweeps -------------------------------------------------------

/// Regular indicator economy at connectivity p: both eta laws become
/// indicators with mean p and the big bank owes y*p per small bank. This is
/// the family the closed forms and the sweeps study.
[[nodiscard]] inline ValidatedParams regular_indicator_economy(const ValidatedParams& base, double p) {
    if (!base.y_small().is_point_mass())
        throw Error(ErrorCode::RequiresDeterministicY, "sweeps need a point-mass y_small");
    ModelParams raw = base.raw();
    raw.eta_sb = DiscreteDist::indicator(p);
    raw.eta_bs = DiscreteDist::indicator(p);
    raw.y_big = base.y_small().max_value() * p;
    return validate_params(raw);
}

struct PhaseJump {
    double location = 0.0;  // right edge of the refined bracket
    double size = 0.0;      // level change across the bracket
    double level_before = 0.0;
    double level_after = 0.0;
};

struct PhaseCurvePoint {
    double p_bs = 0.0;
    bool ok = false;
    std::string error;
    double p_d_small = 0.0;
    double xbar = 0.0;
    bool big_defaults = false;
    std::optional<int> regime;  // analytic regime when the closed forms apply
    bool analytic_applicable = false;
};

struct PhaseCurve {
    std::vector<PhaseCurvePoint> points;
    std::vector<PhaseJump> jumps;

    [[nodiscard]] std::string to_csv() const {
        std::string out = "p_bs,p_d_small,xbar,big_defaults,regime,analytic_applicable\n";
        for (const auto& pt : points) {
            out += detail::fmt_double(pt.p_bs) + ',' + detail::fmt_double(pt.p_d_small) + ',' +
                   detail::fmt_double(pt.xbar) + ',' + (pt.big_defaults ? '1' : '0') + ',' +
                   (pt.regime ? std::to_string(*pt.regime) : std::string()) + ',' +
                   (pt.analytic_applicable ? '1' : '0') + '\n';
        }
        return out;
    }

    [[nodiscard]] nlohmann::json jumps_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& j : jumps)
            arr.push_back({{"location", j.location},
                           {"size", j.size},
                           {"level_before", j.level_before},
                           {"level_after", j.level_after}});
        return arr;
    }
};

struct SweepOptions {
    double tol = 1e-13;
    double jump_threshold = 0.01;
    double refine_width = 1e-7;  // final bisection bracket width
};

namespace detail {

inline double limit_p_d_at(const ValidatedParams& base, const Scenario& scenario, double p, double tol) {
    const auto econ = regular_indicator_economy(base, p);
    const auto sol = solve_limit_clearing(econ, scenario, tol);
    return default_metrics(sol, econ, scenario).p_d_small;
}

}  // namespace detail

/// Limit default fraction along the connectivity axis, with analytic
/// cross-annotation and refined jump locations.
[[nodiscard]] inline PhaseCurve sweep_pbs(const ValidatedParams& params, const Scenario& scenario,
                                          const std::vector<double>& grid, const SweepOptions& opts = {}) {
    PhaseCurve curve;
    curve.points.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        PhaseCurvePoint pt;
        pt.p_bs = grid[i];
        try {
            const auto econ = regular_indicator_economy(params, pt.p_bs);
            const auto sol = solve_limit_clearing(econ, scenario, opts.tol);
            const auto dm = default_metrics(sol, econ, scenario);
            pt.p_d_small = dm.p_d_small;
            pt.xbar = sol.xbar_s;
            pt.big_defaults = dm.big_defaults;
            try {
                const auto regime = binary_regime_solve(econ, scenario, pt.p_bs);
                pt.regime = regime.regime;
                pt.analytic_applicable = regime.applicable();
            } catch (const Error&) {
                // closed forms do not cover this economy; numeric value stands
            }
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        curve.points[i] = std::move(pt);
    });

    // Jump detection with bisection refinement on each flagged bracket. A
    // bracket whose refined level change collapses was continuous drift of
    // the default fraction, not a transition, and is dropped.
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        if (!a.ok || !b.ok) continue;
        if (std::abs(b.p_d_small - a.p_d_small) <= opts.jump_threshold) continue;
        double lo = a.p_bs, hi = b.p_bs;
        double lo_val = a.p_d_small, hi_val = b.p_d_small;
        while (hi - lo > opts.refine_width) {
            const double mid = 0.5 * (lo + hi);
            const double mid_val = detail::limit_p_d_at(params, scenario, mid, opts.tol);
            if (std::abs(mid_val - lo_val) > std::abs(hi_val - mid_val)) {
                hi = mid;
                hi_val = mid_val;
            } else {
                lo = mid;
                lo_val = mid_val;
            }
        }
        if (std::abs(hi_val - lo_val) <= opts.jump_threshold) continue;
        curve.jumps.push_back({hi, hi_val - lo_val, lo_val, hi_val});
    }
    return curve;
}

struct PhaseSurfacePoint {
    double z_b = 0.0;
    double z_c = 0.0;
    bool ok = false;
    double p_d_small = 0.0;
    double xbar = 0.0;
    bool big_defaults = false;
};

struct PhaseSurface {
    std::vector<double> zb_grid;
    std::vector<double> zc_grid;
    std::vector<PhaseSurfacePoint> points;  // zb-major, zc fastest

    [[nodiscard]] const PhaseSurfacePoint& at(std::size_t bi, std::size_t ci) const {
        return points[bi * zc_grid.size() + ci];
    }

    [[nodiscard]] std::string to_csv() const {
        std::string out = "z_b,z_c,p_d_small,big_defaults\n";
        for (const auto& pt : points) {
            out += detail::fmt_double(pt.z_b) + ',' + detail::fmt_double(pt.z_c) + ',' +
                   detail::fmt_double(pt.p_d_small) + ',' + (pt.big_defaults ? '1' : '0') + '\n';
        }
        return out;
    }

    /// Grid cells where a default level changes between neighbours, along
    /// both axes.
    [[nodiscard]] nlohmann::json transitions_json(double threshold = 1e-9) const {
        nlohmann::json arr = nlohmann::json::array();
        auto compare = [&](const PhaseSurfacePoint& a, const PhaseSurfacePoint& b, const char* axis,
                           double fixed, double from, double to) {
            if (std::abs(b.p_d_small - a.p_d_small) > threshold)
                arr.push_back({{"axis", axis}, {"fixed", fixed}, {"between", {from, to}},
                               {"levels", {a.p_d_small, b.p_d_small}}});
            if (a.big_defaults != b.big_defaults)
                arr.push_back({{"axis", axis}, {"fixed", fixed}, {"between", {from, to}},
                               {"big_bank", true}});
        };
        for (std::size_t bi = 0; bi < zb_grid.size(); ++bi)
            for (std::size_t ci = 0; ci + 1 < zc_grid.size(); ++ci)
                compare(at(bi, ci), at(bi, ci + 1), "z_c", zb_grid[bi], zc_grid[ci], zc_grid[ci + 1]);
        for (std::size_t ci = 0; ci < zc_grid.size(); ++ci)
            for (std::size_t bi = 0; bi + 1 < zb_grid.size(); ++bi)
                compare(at(bi, ci), at(bi + 1, ci), "z_b", zc_grid[ci], zb_grid[bi], zb_grid[bi + 1]);
        return arr;
    }
};

/// Limit default metrics over a (z_b, z_c) shock grid at fixed connectivity.
[[nodiscard]] inline PhaseSurface sweep_shocks(const ValidatedParams& params, double p_bs,
                                               const std::vector<double>& zb_grid,
                                               const std::vector<double>& zc_grid,
                                               const SweepOptions& opts = {}) {
    const auto econ = regular_indicator_economy(params, p_bs);
    PhaseSurface surface;
    surface.zb_grid = zb_grid;
    surface.zc_grid = zc_grid;
    surface.points.resize(zb_grid.size() * zc_grid.size());
    parallel_for(surface.points.size(), [&](std::size_t idx) {
        const std::size_t bi = idx / zc_grid.size();
        const std::size_t ci = idx % zc_grid.size();
        PhaseSurfacePoint pt;
        pt.z_b = zb_grid[bi];
        pt.z_c = zc_grid[ci];
        try {
            const Scenario sc{pt.z_c, pt.z_b};
            const auto sol = solve_limit_clearing(econ, sc, opts.tol);
            const auto dm = default_metrics(sol, econ, sc);
            pt.p_d_small = dm.p_d_small;
            pt.xbar = sol.xbar_s;
            pt.big_defaults = dm.big_defaults;
            pt.ok = true;
        } catch (const std::exception&) {
            pt.ok = false;
        }
        surface.points[idx] = std::move(pt);
    });
    return surface;
}

/// Evenly spaced grid [start, stop] with the given step (inclusive stop
/// within half a step).
[[nodiscard]] inline std::vector<double> make_grid(double start, double stop, double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "grid step must be positive");
    std::vector<double> g;
    const auto count = static_cast<long>(std::floor((stop - start) / step + 0.5)) + 1;
    for (long i = 0; i < count; ++i) g.push_back(start + step * static_cast<double>(i));
    return g;
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << contents;
}

}  // namespace sysrisk
