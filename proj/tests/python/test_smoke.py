import math

import numpy as np
import pytest

import magweyl as mw

H_FLUX = 1.0 / (2.0 * math.pi)  # four flux quanta through [-1, 1]^2 at mu = 1


def test_version():
    assert mw.__version__


def test_exact_landau_density():
    cfg = mw.field_from_frequencies([1.0])
    scale = mw.make_scale(H_FLUX, 1.0, 2, 0)
    v = mw.magnetic_weyl_density(0.5, np.zeros(2), mw.Potential(), cfg, scale)
    # two Landau levels below tau, each mu f / (2 pi h) = 1 per unit area
    assert v == pytest.approx(2.0, abs=1e-12)
    w = mw.standard_weyl_density(0.5, np.zeros(2), mw.Potential(), 2, 0.1)
    assert w == pytest.approx(math.pi * 0.5 / (2 * math.pi * 0.1) ** 2, rel=1e-12)


def test_lattice_count_and_modulus():
    assert mw.lattice_count(0.2, 1.0, [1.0]) == 2
    est = mw.diophantine_modulus([1.5], 1.0 / 64)
    assert est.nu / (1.0 / 64) == pytest.approx(15.0 / 16, rel=1e-12)


def test_operator_counting_exact_flux():
    cfg = mw.field_from_frequencies([1.0])
    scale = mw.make_scale(H_FLUX, 1.0, 2, 0)
    op = mw.assemble(mw.Potential(), cfg, scale, mw.GridSpec(d=2, n=16, L=1.0))
    assert op.dim() == 256
    assert op.flux.quanta == [4]
    assert not op.flux.snapped
    assert op.hermiticity_residual == 0.0

    curve = mw.dense_counting(op, [0.5])
    assert curve.values[0] == 8.0
    assert mw.inertia_counting(op, [0.5]).values[0] == 8.0

    opts = mw.KpmOptions()
    opts.n_moments = 256
    opts.n_vectors = 4
    ones = np.ones(op.dim())
    k1 = mw.kpm_local_counting(op, [0.5], ones, opts)
    k2 = mw.kpm_local_counting(op, [0.5], ones, opts)
    assert k1.curve.values[0] == k2.curve.values[0]  # deterministic given the seed
    assert abs(k1.curve.values[0] - 8.0) < 3 * k1.curve.stderrs[0] + 2.0


def test_drift_matches_theory():
    cfg = mw.field_from_frequencies([1.0])
    scale = mw.make_scale(0.01, 10.0, 2, 0)
    V = mw.Potential.expression("(* 0.3 x1)", 2)
    state = mw.PhaseState(np.zeros(2), np.array([1.0, 0.0]))
    traj = mw.integrate(state, V, cfg, scale, 8.0)
    rep = mw.measure_drift(traj, cfg, scale)
    assert rep.velocity == pytest.approx([0.0, -0.03], abs=1e-9)
    theory = mw.drift_velocity(cfg, scale, V.gradient(np.zeros(2)))
    assert theory == pytest.approx([0.0, -0.03], abs=1e-15)

    X0 = mw.slow_variables(traj.samples[0], cfg, scale)
    assert X0 == pytest.approx([0.0, 0.1], abs=1e-12)

    pois = mw.poisson_check(cfg, scale)
    assert pois.px_zero
    assert pois.sign_xx == -1 and pois.sign_pp == -1


def test_remainder_record_and_replay():
    plan = mw.plan_from_text(
        "d = 2\n"
        "f = 1\n"
        f"h = {H_FLUX!r}\n"
        "mu = 1\n"
        "tau = 0.5\n"
        "n = 16\n"
        "points_per_length = 3\n"
        "engine = dense\n"
    )
    assert len(plan.points) == 1
    rec = mw.remainder(plan, plan.points[0])
    assert rec.count == pytest.approx(8.0, abs=1e-12)
    assert rec.emw == pytest.approx(8.0, abs=1e-12)
    assert rec.r_abs < 1e-9
    assert rec.engine == "dense"
    assert rec.regime == "weak"

    js = mw.record_to_json(rec, plan, plan.points[0])
    again = mw.replay_record(js)
    assert mw.strip_volatile(mw.record_to_json(again, plan, plan.points[0])) == \
        mw.strip_volatile(js)


def test_fit_and_bounds():
    xs = [0.5, 0.25, 0.125, 0.0625]
    fit = mw.fit_power_law(xs, [3.0 * x**-1.5 for x in xs])
    assert fit.slope == pytest.approx(-1.5, abs=1e-10)

    cfg = mw.field_from_frequencies([1.0])
    scale = mw.make_scale(0.01, 2.0, 2, 0)
    bounds = mw.remainder_bounds(cfg, scale, mw.Smoothness(), True, True)
    assert bounds["weak_full_rank"] == pytest.approx(50.0, rel=1e-12)


def test_errors_translate():
    plan = mw.plan_from_text("d = 2\nf = 1\nh = 0.01\nmu = 1\nn = 600\n")
    with pytest.raises(mw.Error, match="BudgetExceeded"):
        mw.remainder(plan, plan.points[0])
    with pytest.raises(mw.Error, match="ParseError"):
        mw.Potential.expression("(bogus", 2)
