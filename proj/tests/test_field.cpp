#include <doctest.h>

#include "magweyl/errors.hpp"
#include "magweyl/field.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace magweyl;

TEST_CASE("canonical block layout, gauge curl, and field inverse") {
    auto cfg = field_from_frequencies({3.0, 1.0}, 1);
    CHECK(cfg.d == 5);
    CHECK(cfg.r == 2);
    CHECK(cfg.q == 1);

    Eigen::MatrixXd F = cfg.canonical();
    CHECK(F(0, 2) == -3.0);
    CHECK(F(2, 0) == 3.0);
    CHECK(F(1, 3) == -1.0);
    CHECK(F(3, 1) == 1.0);
    CHECK(F.row(4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(F.col(4).cwiseAbs().maxCoeff() == 0.0);
    CHECK((F + F.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd G = cfg.gauge();
    CHECK(G(2, 0) == -3.0);
    CHECK(G(3, 1) == -1.0);
    CHECK((G.transpose() - G - F).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(cfg.beta(), error); // kernel present

    auto full = field_from_frequencies({3.0, 1.0}, 0);
    Eigen::MatrixXd B = full.beta();
    CHECK(B(0, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(B(2, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK((full.canonical() * B - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
          1e-14);
}

TEST_CASE("frequency lists are sorted descending and validated") {
    auto cfg = field_from_frequencies({1.0, 3.0, 2.0}, 0);
    CHECK(cfg.f[0] == 3.0);
    CHECK(cfg.f[1] == 2.0);
    CHECK(cfg.f[2] == 1.0);
    CHECK(cfg.f_max() == 3.0);
    CHECK(cfg.f_min() == 1.0);
    CHECK_THROWS_AS(field_from_frequencies({}, 2), error);
    CHECK_THROWS_AS(field_from_frequencies({1.0, 0.0}, 0), error);
    CHECK_THROWS_AS(field_from_frequencies({1.0}, -1), error);
}

TEST_CASE("field invariants recover frequencies from a rotated frame") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal;
    const int d = 5;
    Eigen::MatrixXd raw(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) raw(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd Q = qr.householderQ();

    Eigen::MatrixXd Fc = canonical_field({2.0, 0.7}, d);
    Eigen::MatrixXd F = Q * Fc * Q.transpose();
    auto cfg = field_invariants(F);

    CHECK(cfg.r == 2);
    CHECK(cfg.q == 1);
    CHECK(cfg.f[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cfg.f[1] == doctest::Approx(0.7).epsilon(1e-12));
    // basis must be orthogonal and bring F to the canonical block form
    Eigen::MatrixXd QtQ = cfg.basis.transpose() * cfg.basis;
    CHECK((QtQ - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd resid = cfg.basis.transpose() * cfg.F * cfg.basis - cfg.canonical();
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("field invariants handle repeated frequencies") {
    Eigen::MatrixXd Fc = canonical_field({1.5, 1.5}, 4);
    auto cfg = field_invariants(Fc);
    CHECK(cfg.r == 2);
    CHECK(cfg.q == 0);
    CHECK(cfg.f[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(cfg.f[1] == doctest::Approx(1.5).epsilon(1e-12));
    Eigen::MatrixXd resid = cfg.basis.transpose() * Fc * cfg.basis - cfg.canonical();
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("near-skew inputs are symmetrized, asymmetric ones rejected") {
    Eigen::MatrixXd F = canonical_field({1.0}, 2);
    Eigen::MatrixXd bumped = F;
    bumped(0, 1) += 5e-13;
    auto cfg = field_invariants(bumped);
    CHECK((cfg.F + cfg.F.transpose()).cwiseAbs().maxCoeff() == 0.0);

    bumped(0, 1) += 1e-6;
    CHECK_THROWS_AS(field_invariants(bumped), error);
    CHECK_THROWS_AS(field_invariants(Eigen::MatrixXd::Zero(3, 3)), error); // zero field
}

TEST_CASE("gauge potential of the canonical linear gauge") {
    auto cfg = field_from_frequencies({2.0, 1.0}, 0);
    Eigen::VectorXd x(4);
    x << 1.0, 2.0, 3.0, 4.0;
    Eigen::VectorXd A = gauge_potential(cfg, x);
    CHECK(A[0] == 0.0);
    CHECK(A[1] == 0.0);
    CHECK(A[2] == -2.0);
    CHECK(A[3] == -2.0);
    Eigen::VectorXd small(2);
    CHECK_THROWS_AS(gauge_potential(cfg, small), error);
}

TEST_CASE("regime thresholds at pinned parameter values") {
    RegimeThresholds t;
    CHECK(classify_regime(1e-3, 5.0, 2, 0, &t) == Regime::weak);
    CHECK(t.weak_max == doctest::Approx(5.2506).epsilon(1e-3));
    CHECK(t.intermediate_max == doctest::Approx(144.77).epsilon(1e-3));
    CHECK(t.strong_max == doctest::Approx(500.0).epsilon(1e-12));
    CHECK(t.superstrong_max == doctest::Approx(1000.0).epsilon(1e-12));

    CHECK(classify_regime(1e-3, 100.0, 2, 0) == Regime::intermediate);
    CHECK(classify_regime(1e-3, 200.0, 2, 0) == Regime::strong);
    CHECK(classify_regime(1e-3, 600.0, 2, 0) == Regime::superstrong);
    CHECK(classify_regime(1e-3, 2000.0, 2, 0) == Regime::ultrastrong);

    // d >= 3 uses the square-root weak threshold
    CHECK(classify_regime(1e-3, 5.0, 3, 1, &t) == Regime::weak);
    CHECK(t.weak_max == doctest::Approx(12.032).epsilon(1e-3));
    CHECK(t.mu_star1 == doctest::Approx(10.0).epsilon(1e-12)); // h^{-1/3} at h = 1e-3

    CHECK_THROWS_AS(classify_regime(1.5, 2.0, 2, 0), error);
    CHECK_THROWS_AS(classify_regime(1e-3, 0.5, 2, 0), error);
}

TEST_CASE("regime labels sweep monotonically upward in mu") {
    bool seen[5] = {false, false, false, false, false};
    int prev = 0;
    for (double mu = 1.0; mu <= 4000.0; mu *= 1.07) {
        int lab = static_cast<int>(classify_regime(1e-3, mu, 2, 0));
        CHECK(lab >= prev);
        prev = lab;
        seen[lab] = true;
    }
    for (bool s : seen) CHECK(s);
}

TEST_CASE("semiclassical scale derived quantities") {
    auto s = make_scale(1e-2, 50.0, 2, 0);
    double hl = 1e-2 * std::log(100.0);
    CHECK(s.eps_weak == doctest::Approx(hl * 50.0).epsilon(1e-14));
    CHECK(s.rho_bar1 == doctest::Approx(std::sqrt(50.0 * hl)).epsilon(1e-14));
    CHECK(s.rho_bar1 == doctest::Approx(1.51743).epsilon(1e-4));
    CHECK(s.magnetic_length(4.0) == doctest::Approx(7.0711e-3).epsilon(1e-4));

    // at tiny mu the zone radius is set by 1/mu instead
    auto s2 = make_scale(1e-4, 1.0, 2, 0);
    CHECK(s2.rho_bar1 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("nondegeneracy scans over the unit ball") {
    auto cfg = field_from_frequencies({1.0}, 0);
    auto scale = make_scale(0.5, 4.0, 2, 0); // mu h = 2

    auto vconst = Potential::constant(0.5, 2);
    auto rep = check_nondegeneracy(vconst, NondegeneracyCondition::value_bounded_below, scale,
                                   cfg);
    CHECK(rep.holds);
    CHECK(rep.margin == doctest::Approx(0.5).epsilon(1e-14));

    auto vlin = Potential::expression("(+ x1 x2)", 2);
    rep = check_nondegeneracy(vlin, NondegeneracyCondition::value_bounded_below, scale, cfg);
    CHECK_FALSE(rep.holds);
    CHECK(rep.margin < 1e-12);

    rep = check_nondegeneracy(vlin, NondegeneracyCondition::gradient_bounded_below, scale, cfg);
    CHECK(rep.holds);
    CHECK(rep.margin == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    auto vone = Potential::constant(1.0, 2);
    rep = check_nondegeneracy(vone, NondegeneracyCondition::below_lowest_level, scale, cfg,
                              0.05, /*tau=*/0.0);
    CHECK(rep.holds);
    CHECK(rep.margin == doctest::Approx(3.0).epsilon(1e-14)); // V + f mu h - tau

    rep = check_nondegeneracy(vone, NondegeneracyCondition::below_lowest_level, scale, cfg,
                              0.05, /*tau=*/3.5);
    CHECK_FALSE(rep.holds);

    // levels sit at {2, 6, 10, ...}: tau on a level with flat V degenerates,
    // tau between levels is fine
    auto vzero = Potential::constant(0.0, 2);
    rep = check_nondegeneracy(vzero, NondegeneracyCondition::level_or_gradient, scale, cfg,
                              0.05, /*tau=*/2.0);
    CHECK_FALSE(rep.holds);
    CHECK(rep.margin < 1e-12);

    rep = check_nondegeneracy(vzero, NondegeneracyCondition::level_or_gradient, scale, cfg,
                              0.05, /*tau=*/3.0);
    CHECK(rep.holds);
    CHECK(rep.margin == doctest::Approx(1.0).epsilon(1e-12));
}
