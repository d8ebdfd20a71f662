"""Acceptance gate: the nine headline checks, one pass/fail line each."""

import numpy as np
import pytest

from calorbits import deform, hodge, verify
from calorbits.exalg import Form, MultiForm, rho_hat, wedge
from calorbits.orbits import (analysis, check_elliptic, check_metrical,
                              g2_J, irrep_projectors, isotropy_algebra,
                              g2_extract_gamma, model_calibration,
                              monge_ampere_constant)
from calorbits.scalars import QC, RATIONAL

ELLIPTIC_SPECS = [
    ("symplectic", {"dim": 4}), ("symplectic", {"dim": 6}),
    ("sl", {"complex_dim": 2}), ("cy", {"complex_dim": 2}),
    ("cy", {"complex_dim": 3}), ("hk", {"m": 1}), ("g2", {}), ("spin7", {}),
]


def _report(name, failures):
    status = "PASS" if not failures else "FAIL"
    print(f"\nACCEPTANCE {name}: {status}")
    assert not failures, "; ".join(failures)


def test_acceptance_1_ellipticity_table():
    expected = {("symplectic", 4): True, ("symplectic", 6): True,
                ("degenerate2form", 4): False, ("sl", 2): True,
                ("cy", 2): True, ("cy", 3): True, ("hk", 1): True,
                ("g2", 7): True, ("spin7", 8): True}
    failures = []
    for (kind, size), want in expected.items():
        kwargs = ({} if kind in ("g2", "spin7") else
                  {"m": size} if kind == "hk" else
                  {"complex_dim": size} if kind in ("sl", "cy") else
                  {"dim": size})
        rep = check_elliptic(model_calibration(kind, **kwargs),
                             trials=16, seed=0)
        if rep["verdict"] is not want:
            failures.append(f"{kind}({size}) verdict {rep['verdict']}")
        if not want and rep["witness"] is None:
            failures.append(f"{kind}({size}) missing witness")
    _report("1 ellipticity-table", failures)


def test_acceptance_2_metrical_table():
    expected = [("symplectic", {"dim": 4}, False),
                ("symplectic", {"dim": 6}, False),
                ("degenerate2form", {"dim": 4}, False),
                ("sl", {"complex_dim": 2}, False),
                ("cy", {"complex_dim": 2}, True),
                ("cy", {"complex_dim": 3}, True),
                ("hk", {"m": 1}, True), ("g2", {}, True),
                ("spin7", {}, True)]
    failures = []
    for kind, kwargs, want in expected:
        spec = model_calibration(kind, **kwargs)
        verdict, witness = check_metrical(spec)
        if verdict is not want:
            failures.append(f"{kind}{kwargs} verdict {verdict}")
            continue
        if not want:
            W = np.asarray(witness)
            sym = np.max(np.abs(W - W.T))
            tangent = rho_hat(W, spec.phi0.to_float())
            resid = max(p.norm() for p in tangent.parts)
            if sym > 1e-9 or np.linalg.norm(W) < 1e-6 or resid > 1e-9:
                failures.append(f"{kind}{kwargs} bad witness")
    _report("2 metrical-table", failures)


def test_acceptance_3_dimension_tables():
    failures = []
    iso = [("symplectic", {"dim": 4}, 10), ("sl", {"complex_dim": 2}, 6),
           ("cy", {"complex_dim": 2}, 3), ("hk", {"m": 1}, 3),
           ("g2", {}, 14), ("spin7", {}, 21)]
    for kind, kwargs, want in iso:
        spec = model_calibration(kind, **kwargs)
        got = len(isotropy_algebra(spec))
        if got != want:
            failures.append(f"isotropy {kind} {got}!={want}")
    e1 = [("symplectic", {"dim": 4}, 6), ("symplectic", {"dim": 6}, 15),
          ("sl", {"complex_dim": 2}, 10), ("sl", {"complex_dim": 3}, 20),
          ("cy", {"complex_dim": 2}, 13), ("cy", {"complex_dim": 3}, 28),
          ("hk", {"m": 1}, 13), ("g2", {}, 35), ("spin7", {}, 43)]
    for kind, kwargs, want in e1:
        spec = model_calibration(kind, **kwargs)
        got = analysis(spec).ek_dim(1)
        if got != want:
            failures.append(f"E1 {kind}{kwargs} {got}!={want}")
    from calorbits.orbits import hk_two_form_space
    if hk_two_form_space(model_calibration("hk", m=1)).shape[1] != 3:
        failures.append("hk invariant 2-forms != 3")
    g2 = model_calibration("g2")
    if sorted(p["dim"] for p in irrep_projectors(g2, 3)) != [1, 7, 27]:
        failures.append("g2 3-form split")
    if sorted(p["dim"] for p in irrep_projectors(g2, 2)) != [7, 14]:
        failures.append("g2 2-form split")
    s7 = model_calibration("spin7")
    if sorted(p["dim"] for p in irrep_projectors(s7, 4)) != [1, 7, 27, 35]:
        failures.append("spin7 4-form split")
    if sorted(p["dim"] for p in irrep_projectors(s7, 3)) != [8, 48]:
        failures.append("spin7 3-form split")
    _report("3 dimension-tables", failures)


def test_acceptance_4_volume_normalization_exact():
    failures = []
    for n in (1, 2, 3):
        spec = model_calibration("cy", complex_dim=n)
        p = spec.phi0_exact.parts
        Om = p[0] + p[1].scale(QC(0, 1))
        omn = Form(2 * n, 0, {(): QC(1)}, RATIONAL)
        for _ in range(n):
            omn = wedge(omn, p[2])
        lhs = wedge(Om, Om.conj())
        if not (lhs - omn.scale(monge_ampere_constant(n))).is_zero():
            failures.append(f"n={n} not exact")
    _report("4 volume-normalization", failures)


def test_acceptance_5_identity_suite():
    failures = []
    rep = verify.identity_suite(trials=100, freq_bound=2, seed=0,
                                tol=1e-10)
    if not rep["passed"]:
        failures.append(f"float residuals {rep['residuals']}")
    exact = verify.identity_suite(trials=8, freq_bound=1, seed=1,
                                  scalar=RATIONAL, tol=0.0)
    for name, val in exact["residuals"].items():
        if val != 0:
            failures.append(f"rational {name} = {val}")
    if rep["residuals"]["identity_torsion"] != 0:
        failures.append("torsion of identity nonzero")
    if rep["residuals"]["constant_torsion"] != 0:
        failures.append("torsion of constants nonzero")
    _report("5 identity-suite", failures)


def test_acceptance_6_torus_cohomology():
    failures = []
    for kind, kwargs in ELLIPTIC_SPECS:
        spec = model_calibration(kind, **kwargs)
        sys = hodge.build(spec, freq_bound=2)
        rep = hodge.cohomology_report(sys)
        levels = (1, 2) if kind == "symplectic" else (0, 1, 2, 3)
        for k in levels:
            if rep["h_sharp"][k] != sys.dims[k]:
                failures.append(
                    f"{kind}{kwargs} level {k}: {rep['h_sharp'][k]}"
                    f" != {sys.dims[k]}")
        if not (rep["p1_injective"] and rep["p2_injective"]):
            failures.append(f"{kind}{kwargs} comparison map not injective")
        if kind == "spin7":
            dc = hodge.dirac_check(sys)
            if not dc["all_nonzero_frequencies_injective"]:
                failures.append("dirac kernel at nonzero frequency")
            if dc["zero_frequency_kernel_dim"] != 8:
                failures.append("dirac zero-frequency kernel dim")
    _report("6 torus-cohomology", failures)


def test_acceptance_7_g2_operator_checks():
    failures = []
    spec = model_calibration("g2")
    phi = spec.phi0.parts[0].to_float()
    psi = spec.phi0.parts[1].to_float()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        xi = rng.standard_normal((7, 7))
        worst = max(worst,
                    (g2_J(spec, rho_hat(xi, phi)) -
                     rho_hat(xi, psi)).norm())
    if worst > 1e-10:
        failures.append(f"J on orbit tangents residual {worst:.2e}")
    worst = 0.0
    for _ in range(50):
        u = rng.standard_normal(7)
        eta = Form.zero(7, 2)
        for _ in range(5):
            idx = tuple(sorted(int(x) + 1
                               for x in rng.choice(7, 2, replace=False)))
            eta = eta + Form.basis(7, idx).scale(rng.standard_normal())
        rec = g2_extract_gamma(spec, u, eta)
        worst = max(worst, rec["identity_residual"],
                    rec["membership_residual"],
                    rec["contraction_residual"])
    if worst > 1e-10:
        failures.append(f"contraction extraction residual {worst:.2e}")
    _report("7 g2-operators", failures)


def test_acceptance_8_deformation_end_to_end():
    failures = []
    # (a) constant seed: series terminates, exact closure
    spec = model_calibration("symplectic", dim=4)
    sys = hodge.build(spec, freq_bound=2)
    rng = np.random.default_rng(1)
    res = deform.run(spec, sys,
                     deform.constant_seed(spec,
                                          0.2 * rng.standard_normal((4, 4))),
                     order=4)
    if any(res.coeffs[k].norm() > 1e-12 for k in range(2, 5)):
        failures.append("constant seed did not terminate")
    if deform.closure_residual(res, 0.7) > 1e-12:
        failures.append("constant seed closure not exact")

    def gates(result, label, order):
        for rec in result.per_order:
            if rec["closure_residual"] > 1e-9:
                failures.append(f"{label} closure order {rec['k']}")
            if rec["two_path_residual"] > 1e-9:
                failures.append(f"{label} two-path order {rec['k']}")
            if rec["ob_exactness_residual"] > 1e-9:
                failures.append(f"{label} exactness order {rec['k']}")
        if deform.derivative_check(result, h=1e-4) > 1e-6:
            failures.append(f"{label} derivative check")
        slope, rs = deform.residual_slope(result, [0.1, 0.08, 0.06])
        if max(rs) > 1e-12 and slope < order + 0.8:
            failures.append(f"{label} slope {slope:.2f} < {order + 0.8}")
        if not deform.majorant_report(result)["holds"]:
            failures.append(f"{label} majorant fit fails")

    # (b) oscillating exact seed on T^4, order 6
    s1 = deform.exact_seed(spec, (1, 0, 0, 0), (0.9, 0.2, -0.4, 0.3))
    s2 = deform.exact_seed(spec, (0, 1, -1, 0), (0.1, -0.7, 0.5, 0.6))
    seed = deform.DeformationSeed((s1.a1 + s2.a1).scale(0.15))
    res_b = deform.run(spec, sys, seed, order=6, tol=1e-9)
    if res_b.obstruction:
        failures.append("symplectic run obstructed")
    else:
        gates(res_b, "symplectic K=6", 6)

    # (c) mixed seed on T^7, order 4
    g2 = model_calibration("g2")
    gsys = hodge.build(g2, freq_bound=2)
    xi = 0.1 * np.random.default_rng(0).standard_normal((7, 7))
    gseed = deform.mixed_seed(g2, xi, (1, 0, 0, 0, 0, 0, 0),
                              (0.4, 0.1, -0.3, 0.2, 0.0, 0.5, -0.1),
                              weight=0.15)
    res_c = deform.run(g2, gsys, gseed, order=4, tol=1e-9)
    if res_c.obstruction:
        failures.append("g2 run obstructed")
    else:
        gates(res_c, "g2 K=4", 4)
    _report("8 deformation", failures)


def test_acceptance_9_period_map():
    failures = []
    cases = [("symplectic", {"dim": 4}, 6), ("cy", {"complex_dim": 2}, 13),
             ("g2", {}, 35)]
    for kind, kwargs, h1 in cases:
        spec = model_calibration(kind, **kwargs)
        sys = hodge.build(spec, freq_bound=1)
        n = spec.dim
        results = []
        for i in range(n):
            for j in range(n):
                xi = np.zeros((n, n))
                xi[i, j] = 0.1
                results.append(deform.run(
                    spec, sys, deform.constant_seed(spec, xi), order=1))
        rep = deform.period_map(spec, sys, results)
        if rep["h1_dim"] != h1 or rep["rank"] != h1:
            failures.append(f"{kind} rank {rep['rank']} != {h1}")
        if kind == "cy" and rep["volume_pairing_residual"] > 1e-9:
            failures.append(
                f"cy pairing residual {rep['volume_pairing_residual']:.2e}")
    _report("9 period-map", failures)
