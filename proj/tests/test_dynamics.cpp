#include <doctest.h>

#include "magweyl/dynamics.hpp"
#include "magweyl/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace magweyl;

namespace {

// d=2, single frequency f=1; the workhorse configuration
FieldConfig plane() { return field_from_frequencies({1.0}, 0); }

SemiclassicalScale plane_scale(double mu) { return make_scale(0.01, mu, 2, 0); }

PhaseState state2(double x1, double x2, double xi1, double xi2) {
    PhaseState s;
    s.x = Eigen::Vector2d(x1, x2);
    s.xi = Eigen::Vector2d(xi1, xi2);
    return s;
}

double max_energy_drift(const Trajectory& tr) {
    double h0 = tr.samples.front().energy, worst = 0;
    for (const auto& p : tr.samples) worst = std::max(worst, std::fabs(p.energy - h0) / std::fabs(h0));
    return worst;
}

} // namespace

TEST_CASE("hamiltonian and step bounds evaluate the pinned closed forms") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);

    // A = (0, -x1): kinetic term |xi - mu A|^2 plus the potential
    auto V = Potential::expression("x1", 2);
    Eigen::Vector2d x(0.1, 0.2), xi(0.3, -0.4);
    CHECK(hamiltonian(V, cfg, scale, x, xi) == doctest::Approx(0.55).epsilon(1e-14));
    CHECK(hamiltonian(Potential(), cfg, scale, x, xi) == doctest::Approx(0.45).epsilon(1e-14));

    // cap resolves the fastest cyclotron frequency 2 mu f_max
    CHECK(max_step(cfg, scale) == doctest::Approx(1.0 / 400).epsilon(1e-15));
    CHECK(cyclotron_period(cfg, scale) == doctest::Approx(M_PI / 10).epsilon(1e-15));

    auto cfg4 = field_from_frequencies({2.0, 1.0}, 0);
    auto scale4 = make_scale(0.01, 5.0, 4, 0);
    CHECK(max_step(cfg4, scale4) == doctest::Approx(1.0 / 400).epsilon(1e-15));
    // slowest pair sets the period used for drift-fit windows
    CHECK(cyclotron_period(cfg4, scale4) == doctest::Approx(M_PI / 5).epsilon(1e-15));
}

TEST_CASE("free motion in the plane is a cyclotron circle") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);
    Potential V;
    auto s0 = state2(0, 0, 1, 0);

    // p = xi/mu = (0.1, 0), center X = x - (p2, -p1) = (0, 0.1), radius |p|/f
    Eigen::VectorXd X0 = slow_variables(s0, cfg, scale);
    CHECK(X0(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(X0(1) == doctest::Approx(0.1).epsilon(1e-15));

    double T = cyclotron_period(cfg, scale);
    auto tr = integrate(s0, V, cfg, scale, T);
    CHECK(tr.samples.front().t == 0.0);
    CHECK(tr.samples.back().t == doctest::Approx(T).epsilon(1e-14));

    Eigen::Vector2d center(0.0, 0.1);
    double radius_dev = 0, energy_dev = 0, center_dev = 0;
    for (const auto& p : tr.samples) {
        radius_dev = std::max(radius_dev, std::fabs((p.x - center).norm() - 0.1));
        energy_dev = std::max(energy_dev, std::fabs(p.energy - 1.0));
        PhaseState ps;
        ps.x = p.x;
        ps.xi = p.xi;
        center_dev = std::max(center_dev, (slow_variables(ps, cfg, scale) - X0).norm());
    }
    // the squared radius and the energy are quadratic invariants of the
    // midpoint rule, so both hold to roundoff
    CHECK(radius_dev < 1e-12);
    CHECK(energy_dev < 1e-12);
    CHECK(center_dev < 1e-8);

    // after one period the orbit closes up to the O(dt^2) phase error
    CHECK((tr.samples.back().x - s0.x).norm() < 1e-6);
    CHECK(max_energy_drift(tr) < 1e-12);
}

TEST_CASE("slow variables reduce to the position at zero kinetic momentum") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);
    PhaseState s;
    s.x = Eigen::Vector2d(0.4, -0.7);
    s.xi = scale.mu * gauge_potential(cfg, s.x);
    Eigen::VectorXd X = slow_variables(s, cfg, scale);
    CHECK(X(0) == s.x(0));
    CHECK(X(1) == s.x(1));
}

TEST_CASE("orbit radius scales as the inverse field strength") {
    auto cfg = plane();
    Potential V;
    std::vector<double> products;
    for (double mu : {5.0, 10.0, 20.0, 40.0}) {
        auto scale = plane_scale(mu);
        // same energy shell H = 1 for every mu
        auto s0 = state2(0, 0, 1, 0);
        auto tr = integrate(s0, V, cfg, scale, 3 * cyclotron_period(cfg, scale));
        Eigen::VectorXd X0 = slow_variables(tr.samples.front(), cfg, scale);
        double rsum = 0;
        for (const auto& p : tr.samples) rsum += (p.x - X0).norm();
        products.push_back(mu * rsum / static_cast<double>(tr.samples.size()));
    }
    for (double prod : products) CHECK(std::fabs(prod - products.front()) < 1e-6);
    CHECK(products.front() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a kernel direction adds uniform translation to the circle") {
    auto cfg = field_from_frequencies({1.0}, 1);
    auto scale = make_scale(0.01, 5.0, 3, 1);
    Potential V;
    PhaseState s0;
    s0.x = Eigen::Vector3d::Zero();
    s0.xi = Eigen::Vector3d(1.0, 0.0, 0.25);

    auto tr = integrate(s0, V, cfg, scale, 1.0);
    Eigen::Vector2d center(0.0, 0.2); // transverse p = (0.2, 0), radius 0.2
    for (size_t i = 0; i < tr.samples.size(); i += 100) {
        const auto& p = tr.samples[i];
        CHECK(std::fabs((p.x.head(2) - center).norm() - 0.2) < 1e-12);
        // x3' = 2 xi3 with xi3 conserved, so the kernel coordinate is linear
        // in t up to the accumulated fixed-point tolerance of the stepper
        CHECK(p.x(2) == doctest::Approx(0.5 * p.t).epsilon(1e-9));
        CHECK(p.xi(2) == doctest::Approx(0.25).epsilon(1e-14));
    }
    Eigen::VectorXd X_end = slow_variables(tr.samples.back(), cfg, scale);
    CHECK(X_end(0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(X_end(1) == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(X_end(2) == doctest::Approx(0.5).epsilon(1e-12)); // kernel passthrough
}

TEST_CASE("energy stays conserved at the default step on oscillatory potentials") {
    auto cfg = plane();
    auto scale = plane_scale(5.0);
    auto s0 = state2(0.1, -0.2, 0.9, 0.4);
    const double T = 5.0;

    auto V1 = Potential::expression("(+ 1 (* 0.3 (sin (* 3.141592653589793 x1))))", 2);
    auto tr1 = integrate(s0, V1, cfg, scale, T);
    CHECK(max_energy_drift(tr1) < 1e-8 * T);

    auto V2 = Potential::expression("(+ 1.5 (* 0.4 (cos x1) (cos (* 2 x2))))", 2);
    auto tr2 = integrate(s0, V2, cfg, scale, T);
    CHECK(max_energy_drift(tr2) < 1e-8 * T);

    // the wobble is O(dt^2): quartering it under dt/2 (with margin for the
    // roundoff floor)
    IntegrateOptions fine;
    fine.dt = max_step(cfg, scale) / 128;
    auto tr1f = integrate(s0, V1, cfg, scale, T, fine);
    CHECK(max_energy_drift(tr1f) < 0.35 * max_energy_drift(tr1));

    // quadratic Hamiltonians are conserved exactly even at the coarsest step
    auto Vq = Potential::expression("(* 0.2 (+ (pow x1 2) (pow x2 2)))", 2);
    IntegrateOptions coarse;
    coarse.dt = max_step(cfg, scale);
    auto trq = integrate(state2(0.3, 0.1, 0.5, -0.2), Vq, cfg, scale, 2.0, coarse);
    double h0 = trq.samples.front().energy, worst = 0;
    for (const auto& p : trq.samples) worst = std::max(worst, std::fabs(p.energy - h0));
    CHECK(worst < 1e-12);
}

TEST_CASE("endpoint error converges at second order, fourth order when requested") {
    auto cfg = plane();
    auto scale = plane_scale(5.0);
    auto Vq = Potential::expression("(* 0.2 (+ (pow x1 2) (pow x2 2)))", 2);
    auto s0 = state2(0.3, 0.1, 0.5, -0.2);
    const double T = 0.5;
    const double base = max_step(cfg, scale);

    auto endpoint = [&](double dt, bool fourth) {
        IntegrateOptions o;
        o.dt = dt;
        o.fourth_order = fourth;
        return integrate(s0, Vq, cfg, scale, T, o).samples.back().x;
    };

    for (bool fourth : {false, true}) {
        Eigen::VectorXd ref = endpoint(base / 64, fourth);
        double e1 = (endpoint(base, fourth) - ref).norm();
        double e2 = (endpoint(base / 2, fourth) - ref).norm();
        double e4 = (endpoint(base / 4, fourth) - ref).norm();
        double lo = fourth ? 14.0 : 3.6;
        double hi = fourth ? 18.0 : 4.4;
        CHECK(e1 / e2 > lo);
        CHECK(e1 / e2 < hi);
        CHECK(e2 / e4 > lo);
        CHECK(e2 / e4 < hi);
    }

    // the composed scheme also cuts the oscillatory-potential energy wobble
    auto Vt = Potential::expression("(+ 1 (* 0.3 (sin (* 3.141592653589793 x1))))", 2);
    IntegrateOptions o4;
    o4.fourth_order = true;
    auto tr4 = integrate(s0, Vt, cfg, scale, 5.0, o4);
    auto tr2 = integrate(s0, Vt, cfg, scale, 5.0);
    CHECK(max_energy_drift(tr4) < 1e-10);
    CHECK(max_energy_drift(tr4) < 0.1 * max_energy_drift(tr2));
}

TEST_CASE("guiding center drifts orthogonally to a linear potential gradient") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);
    auto V = Potential::expression("(* 0.3 x1)", 2);
    auto s0 = state2(0, 0, 1, 0);

    double T = 22.0 * cyclotron_period(cfg, scale);
    auto tr = integrate(s0, V, cfg, scale, T);
    auto rep = measure_drift(tr, cfg, scale);

    // grad V = (0.3, 0) pushes the center along -x2 under this gauge
    Eigen::VectorXd vth = drift_velocity(cfg, scale, V.gradient(s0.x));
    CHECK(vth(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(vth(1) == doctest::Approx(-0.03).epsilon(1e-15));
    CHECK((rep.velocity - vth).norm() < 1e-10);
    CHECK(rep.velocity.dot(V.gradient(s0.x)) == doctest::Approx(0.0).epsilon(1e-10));

    // the exactly solvable case: the fit is essentially perfect
    CHECK(rep.rel_residual < 1e-8);
    CHECK(rep.n_used >= 8);
    CHECK(rep.window_lo >= cyclotron_period(cfg, scale) - 1e-12);
    CHECK(rep.window_hi <= T - cyclotron_period(cfg, scale) + 1e-12);

    // intercept extrapolates back to the initial center
    Eigen::VectorXd X0 = slow_variables(tr.samples.front(), cfg, scale);
    CHECK((rep.intercept - X0).norm() < 1e-8);

    // constant potentials do not drift at all
    auto trc = integrate(s0, Potential::constant(0.7, 2), cfg, scale, T);
    auto repc = measure_drift(trc, cfg, scale);
    CHECK(repc.velocity.norm() < 1e-12);

    CHECK_THROWS_AS(
        measure_drift(integrate(s0, V, cfg, scale, 5 * cyclotron_period(cfg, scale)), cfg, scale),
        error);
}

TEST_CASE("drift decouples into the two frequency blocks in four dimensions") {
    auto cfg = field_from_frequencies({2.0, 1.0}, 0);
    auto scale = make_scale(0.01, 5.0, 4, 0);
    auto V = Potential::expression("(+ (* 0.1 x1) (* 0.2 x2) (* 0.3 x3) (* 0.4 x4))", 4);

    PhaseState s0;
    s0.x = Eigen::Vector4d::Zero();
    s0.xi = Eigen::Vector4d(1.0, 0.5, 0.0, 0.0);

    Eigen::Vector4d a(0.1, 0.2, 0.3, 0.4);
    Eigen::VectorXd vth = drift_velocity(cfg, scale, a);
    // beta pairs (0,2) and (1,3) with 1/f_m, applied per block
    CHECK(vth(0) == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(vth(1) == doctest::Approx(0.08).epsilon(1e-14));
    CHECK(vth(2) == doctest::Approx(-0.01).epsilon(1e-14));
    CHECK(vth(3) == doctest::Approx(-0.04).epsilon(1e-14));

    double T = 21.0 * cyclotron_period(cfg, scale);
    auto rep = measure_drift(integrate(s0, V, cfg, scale, T), cfg, scale);
    CHECK((rep.velocity - vth).norm() < 1e-9);
    CHECK(rep.rel_residual < 1e-8);
}

TEST_CASE("drift velocity vanishes along kernel axes") {
    auto cfg = field_from_frequencies({1.0}, 1);
    auto scale = make_scale(0.01, 5.0, 3, 1);
    Eigen::Vector3d grad(0.2, -0.1, 0.5);
    Eigen::VectorXd v = drift_velocity(cfg, scale, grad);
    CHECK(v(0) == doctest::Approx(-0.1 / 5).epsilon(1e-14));
    CHECK(v(1) == doctest::Approx(-0.2 / 5).epsilon(1e-14));
    CHECK(v(2) == 0.0);
}

TEST_CASE("drift formula error on a curved potential shrinks like the inverse field") {
    auto cfg = plane();
    auto V = Potential::expression("(* 0.1 (+ (pow x1 2) (pow x2 2)))", 2);

    // deviation of the fitted velocity from the formula frozen at the initial
    // center; over a fixed time window the center sweeps an arc of angle
    // proportional to 1/mu, so the deviation halves when mu doubles
    auto deviation = [&](double mu) {
        auto scale = plane_scale(mu);
        PhaseState s;
        s.x = Eigen::Vector2d(0.8, 0.0);
        s.xi = Eigen::Vector2d(0.5, 0.0) + mu * gauge_potential(cfg, s.x);
        auto rep = measure_drift(integrate(s, V, cfg, scale, 7.0), cfg, scale);
        Eigen::VectorXd X0 = slow_variables(s, cfg, scale);
        Eigen::VectorXd vth = drift_velocity(cfg, scale, V.gradient(X0));
        return (rep.velocity - vth).norm() / vth.norm();
    };

    double d10 = deviation(10.0);
    double d20 = deviation(20.0);
    CHECK(d10 > 1e-3); // the effect is visible, not noise
    CHECK(d10 / d20 > 1.8);
    CHECK(d10 / d20 < 2.2);
}

TEST_CASE("bracket relations hold symbolically with one global sign") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);
    auto rep = poisson_check(cfg, scale);
    CHECK(rep.px_zero);
    CHECK(rep.max_px_residual == 0.0);
    CHECK(rep.kernel_pair_value == 0.0);
    CHECK(rep.sign_xx == -1);
    CHECK(rep.sign_pp == -1);
    CHECK(rep.max_xx_mismatch == 0.0);
    CHECK(rep.max_pp_mismatch == 0.0);

    // the sign pair is a fixed property of the bracket orientation, not of
    // the configuration
    auto cfg5 = field_from_frequencies({3.0, 1.0}, 1);
    auto scale5 = make_scale(0.01, 7.0, 5, 1);
    auto rep5 = poisson_check(cfg5, scale5);
    CHECK(rep5.px_zero);
    CHECK(rep5.max_px_residual == 0.0);
    CHECK(rep5.sign_xx == -1);
    CHECK(rep5.sign_pp == -1);
    CHECK(rep5.max_xx_mismatch == 0.0);
    CHECK(rep5.max_pp_mismatch == 0.0);
    // along the field the slow variable is the coordinate itself, so the
    // kernel diagonal carries the canonical pair value 1/mu
    CHECK(rep5.kernel_pair_value == doctest::Approx(1.0 / 7.0).epsilon(1e-15));

    // homogeneity: scaling mu rescales the only dimensional quantity
    auto rep5b = poisson_check(cfg5, make_scale(0.01, 14.0, 5, 1));
    CHECK(rep5b.kernel_pair_value == doctest::Approx(0.5 / 7.0).epsilon(1e-15));
}

TEST_CASE("periodic return fraction separates closed orbits from drifting ones") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);

    // free planar motion: every orbit closes after pi/(mu f)
    CHECK(periodicity_probe(Potential(), cfg, scale, 0.4) == doctest::Approx(1.0));

    // a uniform gradient displaces every center by |v| T = 0.03 >> delta
    auto V = Potential::expression("(* 0.3 x1)", 2);
    CHECK(periodicity_probe(V, cfg, scale, 1.0) == doctest::Approx(0.0));

    // free kernel motion displaces x3 by 2 xi3 T regardless of the circle
    auto cfg3 = field_from_frequencies({1.0}, 1);
    auto scale3 = make_scale(0.01, 5.0, 3, 1);
    PeriodicityOptions po;
    po.min_kernel_momentum = 0.1;
    CHECK(periodicity_probe(Potential(), cfg3, scale3, 1.0, po) == doctest::Approx(0.0));

    // seeded ensembles are reproducible
    PeriodicityOptions pa, pb;
    pa.seed = pb.seed = 777;
    double fa = periodicity_probe(V, cfg, scale, 0.05, pa);
    double fb = periodicity_probe(V, cfg, scale, 0.05, pb);
    CHECK(fa == fb);
}

TEST_CASE("integration rejects oversized steps and departures from the domain") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);
    auto s0 = state2(0, 0, 1, 0);

    IntegrateOptions big;
    big.dt = 1.5 * max_step(cfg, scale);
    CHECK_THROWS_AS(integrate(s0, Potential(), cfg, scale, 0.1, big), error);

    // box potential of half width 0.3: the radius-0.1 orbit through
    // x = (0.25, 0) pokes out near x1 = 0.35
    auto Vbox = Potential::expression("(* 0.3 x1)", 2, 0.3);
    auto s1 = state2(0.25, 0, 1, -2.5); // xi2 = mu A2 = -2.5 so p = (0.1, 0)
    CHECK_THROWS_AS(integrate(s1, Vbox, cfg, scale, 1.0, big), error);
    CHECK_THROWS_AS(integrate(s1, Vbox, cfg, scale, 1.0), error);

    // same orbit far inside the box integrates fine
    auto Vwide = Potential::expression("(* 0.3 x1)", 2, 3.0);
    CHECK_NOTHROW(integrate(s1, Vwide, cfg, scale, 0.5));
}

TEST_CASE("long runs thin the stored samples but keep the endpoint exact") {
    auto cfg = plane();
    auto scale = plane_scale(10.0);
    IntegrateOptions o;
    o.max_samples = 101;
    const double T = 0.7;
    auto tr = integrate(state2(0, 0, 1, 0), Potential(), cfg, scale, T, o);
    CHECK(tr.samples.size() <= 101);
    CHECK(tr.samples.size() >= 50);
    CHECK(tr.samples.back().t == doctest::Approx(T).epsilon(1e-14));
    for (size_t i = 1; i < tr.samples.size(); ++i) {
        double gap = tr.samples[i].t - tr.samples[i - 1].t;
        if (i + 1 < tr.samples.size()) CHECK(gap == doctest::Approx(tr.sample_spacing).epsilon(1e-12));
    }
    CHECK(tr.step <= max_step(cfg, scale));
}
