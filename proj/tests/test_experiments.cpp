#include <doctest.h>

#include "magweyl/errors.hpp"
#include "magweyl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

using namespace magweyl;

namespace {

template <typename F> std::optional<errc> thrown_code(F&& f) {
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    return std::nullopt;
}

// cheap exact-flux baseline: L = 1, four flux quanta, dense engine
SweepPlan const_plan() {
    SweepPlan plan;
    plan.d = 2;
    plan.f = {1.0};
    plan.q = 0;
    plan.points = {{1.0 / (2 * M_PI), 1.0}};
    plan.tau = 0.5;
    plan.n = 16;
    plan.points_per_length = 3; // n = 16 puts 3.19 points on the magnetic length
    return plan;
}

} // namespace

TEST_CASE("power-law fits recover synthetic exponents exactly") {
    std::vector<double> xs{0.5, 0.25, 0.125, 0.0625, 0.03125};
    std::vector<double> rs, inv;
    for (double x : xs) {
        rs.push_back(3.7 * std::pow(x, 2.37));
        inv.push_back(0.9 / x);
    }

    ScalingFit fit = fit_power_law(xs, rs);
    CHECK(fit.slope == doctest::Approx(2.37).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(std::log(3.7)).epsilon(1e-10));
    CHECK(fit.n == 5);
    // resampling an exact power law cannot move the slope
    CHECK(fit.ci_lo == doctest::Approx(2.37).epsilon(1e-9));
    CHECK(fit.ci_hi == doctest::Approx(2.37).epsilon(1e-9));
    CHECK(fit.ci_lo <= fit.slope);
    CHECK(fit.slope <= fit.ci_hi);

    CHECK(fit_power_law(xs, inv).slope == doctest::Approx(-1.0).epsilon(1e-12));

    // a shallower second term biases the fitted slope upward, slightly
    std::vector<double> hs{1e-5, 2e-5, 4e-5, 8e-5}, two;
    for (double h : hs) two.push_back(1.0 / h + 1.0 / std::sqrt(h));
    ScalingFit mixed = fit_power_law(hs, two);
    CHECK(mixed.slope > -1.0);
    CHECK(mixed.slope == doctest::Approx(-1.0).epsilon(0.01));

    CHECK(thrown_code([&] { fit_power_law({0.5}, {1.0}); }) == errc::span_too_small);
    CHECK(thrown_code([&] { fit_power_law({0.5, 0.5}, {1.0, 2.0}); }) == errc::span_too_small);
    CHECK(thrown_code([&] { fit_power_law({0.5, 0.2}, {1.0, 0.0}); }) == errc::out_of_range);
    CHECK(thrown_code([&] { fit_power_law({0.5, -0.2}, {1.0, 2.0}); }) == errc::out_of_range);
}

TEST_CASE("record-level scaling fits guard their hypotheses") {
    auto make = [](double h, double mu, const std::string& regime, double r, double eng) {
        RemainderRecord rec;
        rec.h = h;
        rec.mu = mu;
        rec.regime = regime;
        rec.r_abs = r;
        rec.r_corrected_abs = 3.0 / (h * h);
        rec.engine_error = eng;
        return rec;
    };
    std::vector<RemainderRecord> recs;
    for (double h : {0.64, 0.32, 0.16, 0.08, 0.04, 0.02})
        recs.push_back(make(h, 0.4 / h, "weak", 2.0 / h + 5.0, 5.0));

    ScalingFit raw = scaling_fit(recs, "h");
    CHECK(raw.slope > -1.0); // the additive engine error flattens the law
    ScalingFit clean = scaling_fit(recs, "h", false, true);
    CHECK(clean.slope == doctest::Approx(-1.0).epsilon(1e-12));
    ScalingFit corrected = scaling_fit(recs, "h", true);
    CHECK(corrected.slope == doctest::Approx(-2.0).epsilon(1e-12));

    std::vector<RemainderRecord> mrecs;
    for (double mu : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0})
        mrecs.push_back(make(0.1, mu, "weak", 0.7 * std::pow(mu, 1.5), 0.0));
    CHECK(scaling_fit(mrecs, "mu").slope == doctest::Approx(1.5).epsilon(1e-12));

    std::vector<RemainderRecord> four(recs.begin(), recs.begin() + 4);
    CHECK(thrown_code([&] { scaling_fit(four, "h"); }) == errc::span_too_small);

    std::vector<RemainderRecord> narrow;
    for (double h : {0.10, 0.09, 0.08, 0.07, 0.06})
        narrow.push_back(make(h, 1.0, "weak", 1.0 / h, 0.0));
    CHECK(thrown_code([&] { scaling_fit(narrow, "h"); }) == errc::span_too_small);

    std::vector<RemainderRecord> mixed = recs;
    mixed[3].regime = "strong";
    CHECK(thrown_code([&] { scaling_fit(mixed, "h"); }) == errc::regime_mixed);

    CHECK(thrown_code([&] { scaling_fit(recs, "tau"); }) == errc::config_error);
}

TEST_CASE("closed-form remainder bounds evaluate the pinned values") {
    const double tol = 1e-12;
    auto cfg2 = field_from_frequencies({1.0}, 0);
    auto cfg3 = field_from_frequencies({1.0}, 1);

    SUBCASE("weak full rank") {
        auto scale = make_scale(0.01, 2.0, 2, 0);
        REQUIRE(scale.regime == Regime::weak);
        auto b = remainder_bounds(cfg2, scale, {2.0, 0.0}, true, true);
        REQUIRE(b.count("weak_full_rank") == 1);
        CHECK(b["weak_full_rank"] == doctest::Approx(134.83036976765436).epsilon(tol));

        // the smooth limit drops the mollification term entirely
        auto binf = remainder_bounds(cfg2, scale, {}, true, true);
        CHECK(binf["weak_full_rank"] == doctest::Approx(50.0).epsilon(tol));

        // a degenerate gradient or insufficient smoothness gives no bound
        CHECK(remainder_bounds(cfg2, scale, {2.0, 0.0}, true, false).empty());
        CHECK(remainder_bounds(cfg2, scale, {1.0, 1.9}, true, true).empty());
    }

    SUBCASE("strong full rank") {
        auto scale = make_scale(0.01, 30.0, 2, 0);
        REQUIRE(scale.regime == Regime::strong);
        auto b = remainder_bounds(cfg2, scale, {2.0, 0.0}, true, true);
        REQUIRE(b.count("strong_full_rank") == 1);
        CHECK(b["strong_full_rank"] == doctest::Approx(18.6839006199603).epsilon(tol));
    }

    SUBCASE("kernel bounds with and without the gradient hypothesis") {
        auto scale = make_scale(0.01, 2.0, 3, 1);
        auto b = remainder_bounds(cfg3, scale, {2.0, 0.0}, true, true);
        CHECK(b["kernel_generic"] == doctest::Approx(12828.42712474619).epsilon(tol));
        CHECK(b["kernel_nondegenerate"] == doctest::Approx(11199.682594265414).epsilon(tol));
        CHECK(b["kernel_multiplicity"] == doctest::Approx(22000.0).epsilon(tol));

        auto bval = remainder_bounds(cfg3, scale, {2.0, 0.0}, true, false);
        CHECK(bval.count("kernel_generic") == 1);
        CHECK(bval.count("kernel_nondegenerate") == 0);

        auto binf = remainder_bounds(cfg3, scale, {}, true, true);
        CHECK(binf["kernel_nondegenerate"] == doctest::Approx(10000.0).epsilon(tol));
        CHECK(binf["kernel_multiplicity"] == doctest::Approx(10200.0).epsilon(tol));
    }

    SUBCASE("frequency-modulus weighted bounds need r >= 2 and a supplied nu") {
        auto cfg5 = field_from_frequencies({1.0, 1.0}, 1);
        auto scale = make_scale(0.01, 2.0, 5, 1);
        auto plain = remainder_bounds(cfg5, scale, {2.0, 0.0}, true, true);
        CHECK(plain.count("diophantine_generic") == 0);

        auto b = remainder_bounds(cfg5, scale, {2.0, 0.0}, true, true, false, 0.3);
        CHECK(b["diophantine_generic"] == doctest::Approx(3005043971.7021384).epsilon(tol));
        CHECK(b["diophantine_multiplicity"] == doctest::Approx(2658713564.692573).epsilon(tol));

        // r = 1 ignores nu even when given
        auto b3 = remainder_bounds(cfg3, scale, {2.0, 0.0}, true, true, false, 0.3);
        CHECK(b3.count("diophantine_generic") == 0);
    }

    SUBCASE("codimension two") {
        auto cfg4 = field_from_frequencies({1.0}, 2);
        auto scale = make_scale(0.01, 2.0, 4, 2);
        auto b = remainder_bounds(cfg4, scale, {2.0, 0.0}, true, true);
        CHECK(b["kernel_multiplicity"] == doctest::Approx(1019999.9999999999).epsilon(tol));

        auto cfg6 = field_from_frequencies({1.0, 1.0}, 2);
        auto scale6 = make_scale(0.01, 2.0, 6, 2);
        auto b6 = remainder_bounds(cfg6, scale6, {2.0, 0.0}, true, true, false, 0.3);
        CHECK(b6["diophantine_generic"] == doctest::Approx(23924766500.838314).epsilon(tol));
        CHECK(b6["diophantine_multiplicity"] == doctest::Approx(12999999999.999998).epsilon(tol));
    }

    SUBCASE("ultrastrong field") {
        auto scale3 = make_scale(0.01, 150.0, 3, 1);
        REQUIRE(scale3.regime == Regime::ultrastrong);
        // the kernel bound needs no nondegeneracy hypotheses
        auto b3 = remainder_bounds(cfg3, scale3, {}, false, false);
        CHECK(b3["ultrastrong_kernel"] == doctest::Approx(300.0).epsilon(tol));

        auto cfg4 = field_from_frequencies({1.0, 1.0}, 0);
        auto scale4 = make_scale(0.01, 150.0, 4, 0);
        CHECK(remainder_bounds(cfg4, scale4, {}, true, true).empty());
        auto b4 = remainder_bounds(cfg4, scale4, {}, true, true, true);
        CHECK(b4["ultrastrong_full_rank"] == doctest::Approx(15000.0).epsilon(tol));

        auto cfg5 = field_from_frequencies({1.0}, 3);
        auto b5 = remainder_bounds(cfg5, make_scale(0.01, 150.0, 5, 3), {}, false, false);
        CHECK(b5["ultrastrong_kernel"] == doctest::Approx(150.0).epsilon(tol));
    }
}

TEST_CASE("constant potentials with quantized flux leave no remainder") {
    SweepPlan plan = const_plan();
    RemainderRecord rec = remainder(plan, plan.points[0]);

    // two Landau levels below tau = 0.5, four states each
    CHECK(rec.count == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(rec.emw == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(rec.r_abs < 1e-9);
    CHECK(rec.r_corrected_abs < 1e-9);
    CHECK(rec.engine_error == 0.0); // both stencils count the same mid-gap integer
    CHECK(rec.quad_error < 1e-12);  // midpoint quadrature of a constant density
    CHECK(rec.engine == "dense");
    CHECK(rec.regime == "weak");
    CHECK(rec.n == 16);
    CHECK(rec.snapped_half_width == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rec.bounds.empty()); // zero gradient satisfies no bound hypothesis

    CHECK(rec.degraded == false);
    SweepPlan strict = plan;
    strict.points_per_length = 4; // 3.19 points per length no longer suffice
    CHECK(remainder(strict, strict.points[0]).degraded == true);

    // refinement keeps the exact agreement
    SweepPlan fine = plan;
    fine.n = 24;
    RemainderRecord rec24 = remainder(fine, fine.points[0]);
    CHECK(rec24.r_abs < 1e-9);
}

TEST_CASE("a zero weight yields a zero record") {
    SweepPlan plan = const_plan();
    plan.psi = "0";
    RemainderRecord rec = remainder(plan, plan.points[0]);
    CHECK(rec.count == 0.0);
    CHECK(rec.emw == 0.0);
    CHECK(rec.r_abs == 0.0);
}

TEST_CASE("localized records stay near the localized density integral") {
    SweepPlan plan = const_plan();
    plan.psi = "(bump 0.45)";
    RemainderRecord rec = remainder(plan, plan.points[0]);
    CHECK(rec.count > 0.1);
    CHECK(rec.emw > 0.1);
    // constant field: the projector diagonal is flat, so the mismatch is pure
    // quadrature-versus-grid-sampling error
    CHECK(rec.r_abs < 0.05 * rec.count);
    CHECK(rec.r_signed == rec.count - rec.emw);
}

TEST_CASE("a gradient potential activates the weak-regime bound column") {
    SweepPlan plan = const_plan();
    plan.potential = "(+ 1 (* 0.3 x1))";
    plan.n = 20;
    plan.tau = 1.5;
    RemainderRecord rec = remainder(plan, plan.points[0]);
    REQUIRE(rec.bounds.count("weak_full_rank") == 1);
    // the plan declares a smooth potential, so only the h^{1-d}/mu term is left
    CHECK(rec.bounds["weak_full_rank"] == doctest::Approx(2 * M_PI).epsilon(1e-12));
    CHECK(rec.count > 0);
    CHECK(rec.emw > 0);
    CHECK(rec.r_abs == std::fabs(rec.r_signed));
}

TEST_CASE("plan materialization applies the length rule and budget") {
    SweepPlan plan = const_plan();
    plan.n = 0;
    plan.points_per_length = 4;
    PointInputs in = materialize(plan, plan.points[0]);
    // ceil(2 L ppl / l_B) = ceil(8 / 0.3989) = 21, above the floor of 16
    CHECK(in.grid.n == 21);
    CHECK(in.scale.magnetic_length(1.0) ==
          doctest::Approx(std::sqrt(plan.points[0].h)).epsilon(1e-15));

    plan.points_per_length = 8;
    CHECK(materialize(plan, plan.points[0]).grid.n == 41);

    plan.budget_dim = 1000; // 41^2 = 1681 exceeds it
    CHECK(thrown_code([&] { materialize(plan, plan.points[0]); }) == errc::budget_exceeded);

    SweepPlan bad = const_plan();
    bad.d = 3;
    CHECK(thrown_code([&] { materialize(bad, bad.points[0]); }) == errc::config_error);

    SweepPlan engine = const_plan();
    engine.engine = "bogus";
    CHECK(thrown_code([&] { remainder(engine, engine.points[0]); }) == errc::config_error);

    SweepPlan loc = const_plan();
    loc.engine = "inertia";
    loc.psi = "(bump 0.45)";
    CHECK(thrown_code([&] { remainder(loc, loc.points[0]); }) == errc::config_error);
}

TEST_CASE("records replay bit for bit from their sidecars") {
    SweepPlan plan = const_plan();
    plan.potential = "(+ 1 (* 0.3 x1))";
    plan.tau = 1.5;
    SweepPoint pt = plan.points[0];

    RemainderRecord rec = remainder(plan, pt);
    std::string js = record_to_json(rec, plan, pt);
    CHECK(js.find("wall_seconds") != std::string::npos);
    CHECK(strip_volatile(js).find("wall_seconds") == std::string::npos);

    RemainderRecord back = replay_record(js);
    CHECK(strip_volatile(record_to_json(back, plan, pt)) == strip_volatile(js));

    // the stochastic engine must reproduce through its recorded seed
    SweepPlan kp = const_plan();
    kp.engine = "kpm";
    kp.kpm.n_moments = 256;
    kp.kpm.n_vectors = 8;
    kp.psi = "(bump 0.45)";
    kp.seed = 42;
    RemainderRecord krec = remainder(kp, pt);
    CHECK(krec.engine_stderr > 0.0);
    std::string kjs = record_to_json(krec, kp, pt);
    CHECK(strip_volatile(record_to_json(replay_record(kjs), kp, pt)) == strip_volatile(kjs));

    // a different seed genuinely changes the stochastic count
    SweepPlan kp2 = kp;
    kp2.seed = 43;
    CHECK(remainder(kp2, pt).count != krec.count);
}

TEST_CASE("sweeps preserve grid order and parallel runs match serial ones") {
    SweepPlan plan = const_plan();
    plan.points = {{1.0 / (2 * M_PI), 1.0}, {1.0 / (4 * M_PI), 2.0}};
    plan.threads = 1;
    auto serial = run_sweep(plan);
    REQUIRE(serial.size() == 2);
    CHECK(serial[0].h == doctest::Approx(1.0 / (2 * M_PI)));
    CHECK(serial[1].h == doctest::Approx(1.0 / (4 * M_PI)));

    SweepPlan par = plan;
    par.threads = 2;
    auto parallel = run_sweep(par);
    REQUIRE(parallel.size() == 2);
    for (size_t i = 0; i < 2; ++i)
        CHECK(strip_volatile(record_to_json(parallel[i], plan, plan.points[i])) ==
              strip_volatile(record_to_json(serial[i], plan, plan.points[i])));

    SweepPlan empty = const_plan();
    empty.points.clear();
    CHECK(thrown_code([&] { run_sweep(empty); }) == errc::config_error);

    SweepPlan over = plan;
    over.n = 0;
    over.points_per_length = 8;
    over.budget_dim = 1000;
    CHECK(thrown_code([&] { run_sweep(over); }) == errc::budget_exceeded);
}

TEST_CASE("weyl limit studies recover the first-order deviation rate") {
    std::vector<double> ladder{0.4, 0.17, 0.068, 0.029, 0.011};
    auto st = weyl_limit_study(2, {1.0}, 0.5, 0.0, ladder);
    REQUIRE(st.rows.size() == 5);

    // nearest even multiple of mu h against tau: |2 mu h k - tau| / tau
    CHECK(st.rows[0].rel_gap == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(st.rows[1].rel_gap == doctest::Approx(0.32).epsilon(1e-12));
    CHECK(st.rows[4].rel_gap == doctest::Approx(0.012).epsilon(1e-10));
    for (size_t i = 1; i < st.rows.size(); ++i) CHECK(st.rows[i].rel_gap < st.rows[i - 1].rel_gap);
    for (const auto& row : st.rows) CHECK(row.ew > 0.0);
    CHECK(st.slope > 0.9);
    CHECK(st.slope < 1.3);

    // shifting tau and the constant potential together changes nothing
    auto shifted = weyl_limit_study(2, {1.0}, 0.75, 0.25, ladder);
    for (size_t i = 0; i < ladder.size(); ++i)
        CHECK(shifted.rows[i].rel_gap == st.rows[i].rel_gap);

    // with a kernel direction the deviation still dies out at first order,
    // modulated by the square-root band edges
    auto st3 = weyl_limit_study(3, {1.0}, 0.5, 0.0, ladder);
    CHECK(st3.rows.back().rel_gap < st3.rows.front().rel_gap);
    CHECK(st3.slope > 0.5);
    CHECK(st3.slope < 2.0);

    CHECK(thrown_code([&] { weyl_limit_study(2, {1.0}, 0.5, 0.0, {}); }) == errc::out_of_range);
    CHECK(thrown_code([&] { weyl_limit_study(2, {1.0}, 0.5, 0.0, {0.1, -0.2}); }) ==
          errc::out_of_range);
    CHECK_THROWS_AS(weyl_limit_study(2, {1.0}, 0.2, 0.6, ladder), error);
}

TEST_CASE("gap studies confirm cluster structure in the superstrong regime") {
    GapStudyPlan plan;
    plan.n = 32;
    plan.mu_h = {2.0, 4.0};
    auto rows = gap_study(plan);
    REQUIRE(rows.size() == 2);

    for (const auto& row : rows) {
        REQUIRE(row.cluster_centers.size() == 2);
        REQUIRE(row.predicted_centers.size() == 2);
        for (size_t a = 0; a < 2; ++a) {
            // discretization drags the high clusters down a little
            CHECK(std::fabs(row.cluster_centers[a] - row.predicted_centers[a]) < 0.2 * row.mu_h);
            CHECK(row.cluster_centers[a] < row.predicted_centers[a] + 1e-9);
        }
        CHECK(row.gaps_present);
        CHECK(row.min_required_gap > 0.7 * (2 * row.mu_h - 0.3));
        double widest = 0;
        for (double w : row.gap_widths) widest = std::max(widest, w);
        CHECK(widest >= row.min_required_gap);
        // spectrum bottom sits near mu h + min V, far above zero
        CHECK(row.localized_count_at_zero == 0.0);
    }

    CHECK(thrown_code([&] { gap_study({{}, 0.25}); }) == errc::out_of_range);
    CHECK(thrown_code([&] { gap_study({{1.0}, 0.25}); }) == errc::out_of_range);
}

TEST_CASE("frequency-modulus tables match the direct computation") {
    auto rows = diophantine_study({{1.5}, {1.0, 1.0}}, {1.0 / 64, 1.0 / 128});
    REQUIRE(rows.size() == 4);

    // a single frequency has simple levels: one jump of hbar, less one grid step
    CHECK(rows[0].nu / rows[0].hbar == doctest::Approx(15.0 / 16).epsilon(1e-12));
    CHECK(rows[1].nu / rows[1].hbar == doctest::Approx(15.0 / 16).epsilon(1e-12));
    CHECK(rows[1].nu == doctest::Approx(0.5 * rows[0].nu).epsilon(1e-12));

    // the commensurable pair piles (k+1)-fold clusters at the top of the window
    for (size_t i = 2; i < 4; ++i) {
        CHECK(rows[i].f.size() == 2);
        CHECK(rows[i].nu / rows[i].hbar ==
              doctest::Approx(0.4375 - rows[i].hbar).epsilon(1e-12));
        CHECK(rows[i].nu == doctest::Approx(diophantine_modulus(rows[i].f, rows[i].hbar).nu)
                                .epsilon(1e-15));
    }
}

TEST_CASE("csv and plot emission cover every record column") {
    SweepPlan plan = const_plan();
    plan.potential = "(+ 1 (* 0.3 x1))";
    plan.tau = 1.5;
    auto recs = run_sweep(plan);
    std::string csv = records_to_csv(recs);
    CHECK(csv.find("h,mu,tau,regime,engine") == 0);
    CHECK(csv.find(",bound_weak_full_rank") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(recs.size()) + 1);

    std::string script = plot_script("out.csv", "remainder", 1, 12, true);
    CHECK(script.find("set logscale xy") != std::string::npos);
    CHECK(script.find("'out.csv' using 1:12") != std::string::npos);
    CHECK(plot_script("o.csv", "t", 1, 2, false).find("logscale") == std::string::npos);
}

TEST_CASE("sweep plans assemble from layered config text") {
    Config cfg;
    cfg.load_text("d = 2\n"
                  "f = 1\n"
                  "potential = (+ 1 (* 0.3 x1))\n"
                  "tau = 1.5\n"
                  "h = 0.1, 0.05\n"
                  "mu_h = 0.4\n"
                  "engine = dense\n"
                  "n = 24\n"
                  "smooth_l = 2\n"
                  "seed = 9\n");
    SweepPlan plan = plan_from_config(cfg);
    CHECK(plan.d == 2);
    CHECK(plan.q == 0);
    CHECK(plan.potential == "(+ 1 (* 0.3 x1))");
    CHECK(plan.tau == 1.5);
    CHECK(plan.engine == "dense");
    CHECK(plan.n == 24);
    CHECK(plan.smoothness.l == 2.0);
    CHECK(plan.seed == 9);
    REQUIRE(plan.points.size() == 2);
    CHECK(plan.points[0].h == doctest::Approx(0.1));
    CHECK(plan.points[0].mu == doctest::Approx(4.0));
    CHECK(plan.points[1].mu == doctest::Approx(8.0));

    // without the mu_h coupling the grid is the h x mu product
    Config grid;
    grid.load_text("h = 0.1\nmu = 1, 2\n");
    SweepPlan pg = plan_from_config(grid);
    REQUIRE(pg.points.size() == 2);
    CHECK(pg.points[0].mu == doctest::Approx(1.0));
    CHECK(pg.points[1].mu == doctest::Approx(2.0));
    CHECK(std::isinf(pg.smoothness.l)); // smooth unless declared otherwise
}
