"""Power-series deformation of constant calibrations on the torus."""

import numpy as np
import pytest

from calorbits import deform, hodge
from calorbits.orbits import analysis, model_calibration
from calorbits.torus import TrigForm, d


@pytest.fixture(scope="module")
def sympl():
    spec = model_calibration("symplectic", dim=4)
    return spec, hodge.build(spec, freq_bound=2)


def _two_mode_seed(spec, scale=0.15):
    s1 = deform.exact_seed(spec, (1, 0, 0, 0), (0.9, 0.2, -0.4, 0.3))
    s2 = deform.exact_seed(spec, (0, 1, -1, 0), (0.1, -0.7, 0.5, 0.6))
    return deform.DeformationSeed((s1.a1 + s2.a1).scale(scale))


@pytest.fixture(scope="module")
def sympl_run(sympl):
    spec, sys = sympl
    return deform.run(spec, sys, _two_mode_seed(spec), order=4, tol=1e-9)


def test_seed_validation_accepts_exact_and_rejects_nonclosed(sympl):
    spec, _ = sympl
    seed = _two_mode_seed(spec)
    assert seed.validate(spec) < 1e-10
    # a generic oscillating endomorphism does not give a closed tangent
    rng = np.random.default_rng(0)
    M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    modes = {(1, 0, 0, 0): tuple(tuple(row) for row in M),
             (-1, 0, 0, 0): tuple(tuple(row) for row in M.conj())}
    from calorbits.torus import EndoField
    bad = deform.DeformationSeed(EndoField(4, modes))
    with pytest.raises(ValueError):
        bad.validate(spec)


def test_constant_seed_series_terminates(sympl):
    spec, sys = sympl
    rng = np.random.default_rng(1)
    seed = deform.constant_seed(spec, 0.2 * rng.standard_normal((4, 4)))
    res = deform.run(spec, sys, seed, order=4)
    assert not res.obstruction
    for k in range(2, res.order + 1):
        assert res.coeffs[k].norm() < 1e-12
    assert deform.closure_residual(res, 0.7) < 1e-12


def test_run_residuals_within_tolerance(sympl_run):
    for rec in sympl_run.per_order:
        assert rec["two_path_residual"] <= 1e-9
        assert rec["ob_exactness_residual"] <= 1e-9
        assert rec["closure_residual"] <= 1e-9
    assert sympl_run.order == 4
    assert not sympl_run.obstruction


def test_obstruction_norms_decay(sympl_run):
    obs = [rec["ob_norm"] for rec in sympl_run.per_order[1:]]
    assert obs[0] > 0
    assert obs[-1] < obs[0]


def test_evaluate_at_zero_is_model_point(sympl_run):
    spec = sympl_run.spec
    out = deform.evaluate(sympl_run, 0.0)
    assert (out - TrigForm.constant(spec.phi0.to_float())).norm() == 0.0


def test_derivative_matches_seed_tangent(sympl_run):
    assert deform.derivative_check(sympl_run, h=1e-4) < 1e-6


def test_closure_residual_order_of_vanishing(sympl_run):
    slope, residuals = deform.residual_slope(sympl_run, [0.1, 0.08, 0.06])
    if max(residuals) > 1e-12:
        assert slope >= sympl_run.order + 0.5
    # residuals shrink with t either way
    assert residuals[-1] <= residuals[0] + 1e-15


def test_report_shape(sympl_run):
    rep = sympl_run.report()
    assert rep["structure"] == "symplectic"
    assert rep["order"] == 4
    assert rep["obstructed"] is False
    assert len(rep["per_order"]) == 4
    assert len(sympl_run.a_list) == 4


def test_solve_order_reports_harmonic_obstruction(sympl):
    spec, sys = sympl
    # a right-hand side with a constant (harmonic) component cannot be
    # written as d of anything; the solver must report the class, not raise
    e = np.zeros(sys.dims[2])
    e[0] = 1.0
    ob = TrigForm.constant(sys.from_coords(2, e))
    alpha, rec = deform.solve_order(spec, sys, ob, 2)
    assert alpha is None
    assert rec["obstructed"]
    assert rec["norm"] > 0.5


def test_gauge_shifted_seed_still_integrates(sympl):
    spec, sys = sympl
    iso = analysis(spec).isotropy
    shifted = deform.DeformationSeed(
        _two_mode_seed(spec).a1 +
        deform.constant_seed(spec, 0.1 * iso[0]).a1)
    res = deform.run(spec, sys, shifted, order=3, tol=1e-9)
    assert not res.obstruction
    for rec in res.per_order:
        assert rec["closure_residual"] <= 1e-9
    assert deform.closure_residual(res, 0.05) < 1e-4


def test_order_cap_enforced(sympl):
    spec, sys = sympl
    with pytest.raises(ValueError):
        deform.run(spec, sys, _two_mode_seed(spec),
                   order=deform.ORDER_CAP + 1)


def test_period_map_full_rank_symplectic(sympl):
    spec, sys = sympl
    results = []
    for i in range(4):
        for j in range(4):
            xi = np.zeros((4, 4))
            xi[i, j] = 0.1
            seed = deform.constant_seed(spec, xi)
            results.append(deform.run(spec, sys, seed, order=1))
    rep = deform.period_map(spec, sys, results)
    assert rep["h1_dim"] == 6
    assert rep["rank"] == 6
    assert rep["locally_injective"]


def test_period_map_cy_volume_pairing(sympl):
    spec = model_calibration("cy", complex_dim=2)
    sys = hodge.build(spec, freq_bound=1)
    results = []
    rng = np.random.default_rng(2)
    for _ in range(16):
        seed = deform.constant_seed(spec,
                                    0.1 * rng.standard_normal((4, 4)))
        results.append(deform.run(spec, sys, seed, order=1))
    rep = deform.period_map(spec, sys, results)
    assert rep["h1_dim"] == 13
    assert rep["rank"] == 13
    assert rep["volume_pairing_residual"] < 1e-9


def test_first_order_period_matches_tangent_class(sympl_run):
    per = deform.first_order_period(sympl_run)
    coeffs = deform.period_coefficients(sympl_run)
    assert (coeffs[1] - per).norm() < 1e-12
