#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "sysrisk/analytic.hpp"
#include "sysrisk/finance.hpp"

using namespace sysrisk;

namespace {

// Indicator/regular variant of the reference economy at connectivity p.
ValidatedParams figure_econ(double p) {
    auto raw = testutil::figure_params();
    raw.eta_sb = DiscreteDist::indicator(p);
    raw.eta_bs = DiscreteDist::indicator(p);
    raw.y_big = 80.0 * p;
    return validate_params(raw);
}

ModelParams classification_base(double k, double eps, double y, double p_bs, double v) {
    ModelParams raw;
    raw.n = 10;
    raw.p_ss = 0.5;
    raw.eta_sb = DiscreteDist::point(0.5);
    raw.eta_bs = p_bs >= 1.0 ? DiscreteDist::point(1.0) : DiscreteDist::indicator(p_bs);
    raw.shock_small = DiscreteDist::binary(0.5, eps);
    raw.k_small = DiscreteDist::point(k);
    raw.y_small = DiscreteDist::point(y);
    raw.y_big = 1.0;
    raw.k_big = 5.0;
    raw.v_small = v;
    raw.v_big = 1.0;
    raw.delta = 0.0;
    return raw;
}

}  // namespace

TEST_CASE("solvency classification from extreme returns") {
    // k_lower = 5, v = 2, y = 10, p_bs = 0.2: y p_bs = 2 <= 3.
    const auto a = validate_params(classification_base(9.0, 4.0, 10.0, 0.2, 2.0));
    CHECK(classify_solvency(a, Scenario{}, 10.0) == Classification::NoDefaults);

    // k_upper = 5, v = 2, y = 10, p_bs = 1: 10 > 5 + 10 - 2 is false.
    const auto b = validate_params(classification_base(5.0, 5.0, 10.0, 1.0, 2.0));
    CHECK(classify_solvency(b, Scenario{}, 10.0) == Classification::Indeterminate);

    // k_upper = 1, v = 2, y = 3, p_bs = 1: 3 > 1 + 3 - 2.
    const auto c = validate_params(classification_base(1.0, 1.0, 3.0, 1.0, 2.0));
    CHECK(classify_solvency(c, Scenario{}, 3.0) == Classification::AllDefaults);

    auto bad = classification_base(9.0, 4.0, 10.0, 0.2, 2.0);
    bad.eta_bs = DiscreteDist::point(0.5);
    CHECK_THROWS_AS(classify_solvency(validate_params(bad), Scenario{}, 10.0), Error);
}

TEST_CASE("reference economy sits in regime 3 with the known barriers") {
    const auto econ = figure_econ(0.9);
    const auto r = binary_regime_solve(econ, Scenario{}, 0.9);
    CHECK(r.regime == 3);
    CHECK(r.p_d_small == Catch::Approx(0.1));
    CHECK(std::abs(r.xbar - testutil::kFigureXbar) <= 1e-12);
    CHECK(r.k_lower == 5.0);
    CHECK(r.k_upper == 25.0);
    CHECK(r.k_bar_z == Catch::Approx(17.0));
    CHECK(r.barriers[1] == Catch::Approx(12.92));
    CHECK(r.barriers[2] == Catch::Approx(72.32));
    CHECK(r.barriers[4] == 80.0);
    CHECK(r.big_bank_solvent_check);
    CHECK(r.clamp_free);
    CHECK(r.applicable());
    const auto j = to_json(r);
    CHECK(j["regime"] == 3);
    CHECK(j["barriers"].size() == 5);
}

TEST_CASE("low connectivity keeps every bank solvent") {
    // y p_bs below k_lower - v: regime 1 and the aggregate is y(1 - p).
    auto raw = testutil::figure_params();
    raw.v_small = 2.0;  // b1 = 5 - 2 = 3, so p < 3/80
    const double p = 0.03;
    raw.eta_sb = DiscreteDist::indicator(p);
    raw.eta_bs = DiscreteDist::indicator(p);
    raw.y_big = 80.0 * p;
    const auto econ = validate_params(raw);
    const auto r = binary_regime_solve(econ, Scenario{}, p);
    CHECK(r.regime == 1);
    CHECK(r.p_d_small == 0.0);
    CHECK(r.xbar == Catch::Approx(80.0 * (1.0 - p)));
}

TEST_CASE("first barrier crossing jumps by w(1-p)") {
    auto raw = testutil::figure_params();
    raw.v_small = 2.0;
    const double p_star = 3.0 / 80.0;  // (k_lower - v) / y
    auto at = [&](double p) {
        raw.eta_sb = DiscreteDist::indicator(p);
        raw.eta_bs = DiscreteDist::indicator(p);
        raw.y_big = 80.0 * p;
        return binary_regime_solve(validate_params(raw), Scenario{}, p);
    };
    const auto below = at(p_star - 1e-9);
    const auto above = at(p_star + 1e-9);
    CHECK(below.regime == 1);
    CHECK(below.p_d_small == 0.0);
    CHECK(above.regime == 2);
    CHECK(above.p_d_small == Catch::Approx(0.4 * (1.0 - p_star)).margin(1e-6));
}

TEST_CASE("boundary ties resolve to the lower regime") {
    // At y p_bs exactly b1 the worst-case bank still clears: regime 1.
    auto raw = testutil::figure_params();
    raw.v_small = 1.0;
    const double p = (5.0 - 1.0) / 80.0;  // y p == k_lower - v exactly
    raw.eta_sb = DiscreteDist::indicator(p);
    raw.eta_bs = DiscreteDist::indicator(p);
    raw.y_big = 80.0 * p;
    const auto r = binary_regime_solve(validate_params(raw), Scenario{}, p);
    CHECK(r.regime == 1);
    CHECK(r.p_d_small == 0.0);
}

TEST_CASE("shock larger than the liability is rejected") {
    auto raw = testutil::figure_params();
    raw.shock_small = DiscreteDist::binary(0.4, 90.0);
    CHECK_THROWS_AS(binary_regime_solve(validate_params(raw), Scenario{}, 0.9), Error);
    try {
        (void)binary_regime_solve(validate_params(raw), Scenario{}, 0.9);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EpsilonExceedsY);
    }
}

TEST_CASE("closed forms agree with the numeric limit where they apply") {
    const Scenario sc{};
    for (double p = 0.02; p < 0.99; p += 0.018) {
        const auto econ = figure_econ(p);
        const auto r = binary_regime_solve(econ, sc, p);
        if (!r.applicable()) continue;
        const auto sol = solve_limit_clearing(econ, sc, 1e-13);
        const auto dm = default_metrics(sol, econ, sc);
        INFO("p = " << p << " regime " << r.regime);
        CHECK(std::abs(r.p_d_small - dm.p_d_small) <= 1e-10);
        CHECK(std::abs(r.xbar - sol.xbar_s) <= 1e-8);
    }
}

TEST_CASE("regime index is non-decreasing in connectivity while solvent") {
    // The regime solver reads only the scalar economy, so one instance
    // serves the whole scan.
    const auto econ = figure_econ(0.9);
    int prev = 0;
    for (double p = 0.01; p < 0.995; p += 0.002) {
        const auto r = binary_regime_solve(econ, Scenario{}, p);
        if (!r.big_bank_solvent_check) break;
        CHECK(r.regime >= prev);
        prev = r.regime;
    }
    CHECK(prev >= 3);
}

TEST_CASE("default fraction takes only the five closed-form values") {
    const auto econ = figure_econ(0.9);
    for (double p = 0.01; p < 0.995; p += 0.00173) {
        const auto r = binary_regime_solve(econ, Scenario{}, p);
        const double q = 1.0 - p;
        const std::array<double, 5> allowed{0.0, 0.4 * q, q, 1.0 - p * 0.6, 1.0};
        bool found = false;
        for (double a : allowed)
            if (std::abs(r.p_d_small - a) <= 1e-12) found = true;
        CHECK(found);
    }
}

TEST_CASE("barrier inequalities flip exactly at the regime switches") {
    // Scan connectivity; wherever the regime index increments, y p crosses
    // the corresponding barrier between the two sides.
    const auto econ = figure_econ(0.9);
    auto prev = binary_regime_solve(econ, Scenario{}, 1e-5);
    double prev_p = 1e-5;
    long switches = 0;
    for (double p = 1e-5 + 1e-5; p < 0.999; p += 1e-5) {
        const auto cur = binary_regime_solve(econ, Scenario{}, p);
        if (cur.regime > prev.regime && prev.big_bank_solvent_check && cur.big_bank_solvent_check) {
            ++switches;
            const int b = cur.regime - 2;  // barrier index separating the regimes
            REQUIRE(b >= 0);
            CHECK(80.0 * prev_p <= prev.barriers[static_cast<std::size_t>(b)] + 1e-9);
            CHECK(80.0 * p > cur.barriers[static_cast<std::size_t>(b)] - 1e-9);
        }
        prev = cur;
        prev_p = p;
    }
    CHECK(switches >= 2);  // at least 2->3 and 3->4 for this economy
}

TEST_CASE("recovery closed forms select the advertised branches") {
    // y = 10, k = 9, eps = 4: k_lower = 5, k_upper = 9.
    auto raw = classification_base(9.0, 4.0, 10.0, 0.5, 2.0);
    raw.shock_small = DiscreteDist::binary(0.3, 4.0);
    raw.k_big = 50.0;
    raw.recovery = RecoveryParams{0.5, 0.5, 20.0, 5.0};
    const auto vp = validate_params(raw);

    // (k_lower - v)/y = 0.3, (k_upper - v)/y = 0.7, then 1.3, 1.7.
    CHECK(binary_recovery_solve(vp, Scenario{}, 0.2).p_d_small == 0.0);
    CHECK(binary_recovery_solve(vp, Scenario{}, 0.5).p_d_small == Catch::Approx(0.3 * 0.5));
    CHECK(binary_recovery_solve(vp, Scenario{}, 0.8).p_d_small == Catch::Approx(0.2));

    // v < k_upper: minimum defaults from the two-term formula.
    const auto sol = binary_recovery_solve(vp, Scenario{}, 0.5);
    const double expected_star = std::min(0.3 * (1.0 - 0.7), (2.0 - 5.0 > 0.0 ? (2.0 - 5.0) / 10.0 : 0.0));
    CHECK(sol.p_d_star == Catch::Approx(expected_star));
}

TEST_CASE("recovery hypotheses are enforced by name") {
    auto raw = classification_base(9.0, 4.0, 10.0, 0.5, 2.0);
    raw.k_big = 50.0;
    const auto no_recovery = validate_params(raw);
    CHECK_THROWS_AS(binary_recovery_solve(no_recovery, Scenario{}, 0.5), Error);

    raw.recovery = RecoveryParams{0.0, 0.0, 0.0, 0.0};
    const auto weak = validate_params(raw);
    try {
        (void)binary_recovery_solve(weak, Scenario{}, 0.9);  // k_lower + 0 <= v + y p
        FAIL("expected hypothesis failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::HypothesisViolated);
        CHECK(std::string(e.what()).find("rho_s") != std::string::npos);
    }

    raw.recovery = RecoveryParams{0.5, 0.5, 20.0, 5.0};
    raw.k_big = 0.5;
    try {
        (void)binary_recovery_solve(validate_params(raw), Scenario{}, 0.5);
        FAIL("expected hypothesis failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::HypothesisViolated);
        CHECK(std::string(e.what()).find("k_big") != std::string::npos);
    }
}

TEST_CASE("recovery surplus matches the direct computation") {
    // Under the recovery hypotheses every bank clears in full, so the limit
    // point is (y(1-p), y p, y); the surplus formula must agree with the
    // generic per-scenario computation at that point.
    auto raw = classification_base(9.0, 4.0, 10.0, 0.5, 2.0);
    raw.shock_small = DiscreteDist::binary(0.3, 4.0);
    raw.k_big = 50.0;
    raw.recovery = RecoveryParams{0.5, 0.5, 20.0, 5.0};
    for (double p : {0.2, 0.45, 0.6}) {
        raw.eta_sb = DiscreteDist::indicator(p);
        raw.eta_bs = DiscreteDist::indicator(p);
        raw.y_big = 10.0 * p;
        const auto vp = validate_params(raw);
        const auto sol_analytic = binary_recovery_solve(vp, Scenario{}, p);

        LimitSolution limit;
        limit.xbar_s = 10.0 * (1.0 - p);
        limit.xbar_b = 10.0 * p;
        limit.x_big = 10.0;
        const auto dm = default_metrics(limit, vp, Scenario{});
        CHECK(std::abs(dm.p_d_small - sol_analytic.p_d_small) <= 1e-12);
        const auto surplus = expected_surplus(limit, vp, Scenario{}, true);
        REQUIRE(surplus.es2.has_value());
        INFO("p = " << p);
        CHECK(std::abs(*surplus.es2 - sol_analytic.es2) <= 1e-10);
    }
}
