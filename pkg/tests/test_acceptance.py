"""End-to-end verdicts for the package's headline guarantees.

Each test checks one guarantee at its stated tolerance, on the standard
map collection, and records a single PASS/FAIL line that pytest prints in
the terminal summary.  Wall-clock budgets are asserted where enumeration
cost is part of the guarantee, so those tests build fresh databases
instead of using the shared session fixtures."""

import math
from time import perf_counter

import numpy as np
import pytest
from conftest import record_acceptance

from torusdyn import bundles, corpus, kernels, mme, spectral
from torusdyn.horocycle import (
    Observable,
    coboundary_report,
    deviation_suite,
    horocycle_integral,
    linear_observable_bound,
    rotation_number,
)
from torusdyn.maps import evaluate_lift, torus_distance
from torusdyn.orbits import OrbitDatabase, smith_normal_form
from torusdyn.series import PowerSeries, trim_degree

LAM = (3.0 + math.sqrt(5.0)) / 2.0
GOLDEN = 0.6180339887498949
FROZEN_COUNTS = {1: 1, 2: 5, 3: 16, 4: 45, 5: 121, 6: 320, 7: 841, 8: 2205}


def _verdict(name: str, ok: bool, detail: str) -> None:
    record_acceptance(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_orbit_counts_exact_within_budget():
    t0 = perf_counter()
    built = [
        OrbitDatabase.build(corpus.cat_linear(), range(1, 9)),
        OrbitDatabase.build(corpus.cat_sin(0.05), range(1, 9)),
    ]
    elapsed = perf_counter() - t0
    exact = all(db.counts() == FROZEN_COUNTS for db in built)
    _verdict(
        "orbit counts",
        exact and elapsed <= 60.0,
        f"levels 1..8 equal 1,5,16,45,121,320,841,2205 for eps=0 and "
        f"eps=0.05; fresh enumeration {elapsed:.1f}s (budget 60s)",
    )


def test_product_formula_and_leading_coefficient(db_cat_lin, cat_lin):
    det = spectral.determinant_series(db_cat_lin, "g-tilde", extended=True)
    prod = spectral.product_formula_series(cat_lin.linear(), order=det.order)
    resid = float(np.max(np.abs(det.coeffs[:9] - prod.coeffs[:9])))
    c1 = det.coeffs[1]
    c1_err = abs(c1 - (-3.0652476))
    _verdict(
        "product formula",
        resid <= 1e-10 and c1_err <= 1e-6,
        f"extended determinant vs factor product through order 8: max "
        f"residual {resid:.2e} (tol 1e-10); c1 = {c1.real:.7f} "
        f"(-3.0652476 +/- 1e-6)",
    )


def test_factorization_identities(db_cat_lin, db_fib, db_cat02, db_cat05):
    worst = {1e-10: 0.0, 1e-6: 0.0}
    ok = True
    for db, tol in (
        (db_cat_lin, 1e-10),
        (db_fib, 1e-10),
        (db_cat02, 1e-6),
        (db_cat05, 1e-6),
    ):
        for extended in (False, True):
            rep = spectral.check_identity(db, order=8, extended=extended)
            r = max(rep.residual, rep.twisted_residual)
            worst[tol] = max(worst[tol], r)
            ok = ok and r <= tol
    _verdict(
        "factorization identities",
        ok,
        f"base and extended through order 8: linear residuals <= "
        f"{worst[1e-10]:.2e} (tol 1e-10), perturbed <= {worst[1e-6]:.2e} "
        f"(tol 1e-6)",
    )


def test_leading_resonance_every_map():
    t0 = perf_counter()
    worst_dist = 0.0
    ok = True
    for spec in corpus.standard_corpus():
        db = OrbitDatabase.build(spec, range(1, 11))
        rep = spectral.resonance_report(db)
        worst_dist = max(worst_dist, rep.distance)
        ok = ok and rep.verdict and rep.disc_zero_count == 1 and rep.simple
    elapsed = perf_counter() - t0
    _verdict(
        "leading resonance",
        ok and elapsed <= 300.0,
        f"one simple stable zero in the unit disc for all 4 maps, worst "
        f"|zero - exp(-h_top)| = {worst_dist:.2e} (tol 1e-3); enumeration + "
        f"reports {elapsed:.0f}s (budget 300s)",
    )


def test_flow_deviation_suite():
    observables = [
        Observable.cosine((1, 0)),
        Observable.cosine((0, 1)),
        Observable.from_terms([((1, 1), 0.5), ((1, -1), 0.25j)]),
    ]
    worst_theta = -np.inf
    worst_clock = 0.0
    verdicts = True
    sup_ok = True
    cat05_reports = None
    for spec in corpus.standard_corpus():
        reports = deviation_suite(spec, observables)
        if spec.label == "cat-sin-0.05":
            cat05_reports = reports
        for obs, rep in zip(observables, reports):
            verdicts = verdicts and rep.verdict
            worst_theta = max(worst_theta, rep.theta)
            worst_clock = max(worst_clock, rep.clock_error)
            if spec.is_linear:
                bound = linear_observable_bound(spec.linear(), obs)
                sup_ok = sup_ok and float(np.max(rep.dev)) <= bound + 1e-3
    rep01 = cat05_reports[1]
    cob = coboundary_report(
        corpus.cat_sin(0.05), observables[1],
        mu=rep01.mu, mu_spread=rep01.mu_spread,
    )
    _verdict(
        "flow deviations",
        verdicts and sup_ok and worst_clock <= 1e-9 and cob.verdict,
        f"theta_hat <= 0.1 for 4 maps x 3 zero-mean observables (worst "
        f"{worst_theta:.3f}); linear sups within closed-form bounds + 1e-3; "
        f"clock integrates to T within {worst_clock:.1e} rel (tol 1e-9); "
        f"drift-corrected running sup slope {cob.slope:.3f} <= 0.05",
    )


def test_rotation_number_quadratic():
    worst_lin = 0.0
    worst_pert = 0.0
    omega_err = 0.0
    ok = True
    for spec in corpus.standard_corpus():
        rep = rotation_number(spec)
        ok = ok and rep.relation == (1, -1)
        if spec.is_linear:
            worst_lin = max(worst_lin, rep.relation_residual)
            omega_err = max(omega_err, abs(rep.omega - 0.6180340))
        else:
            worst_pert = max(worst_pert, rep.relation_residual)
    ok = ok and worst_lin <= 1e-6 and worst_pert <= 1e-4 and omega_err <= 1e-6
    _verdict(
        "rotation number",
        ok,
        f"omega_hat = 0.6180340 +/- {omega_err:.1e} (tol 1e-6) on linear "
        f"maps; |omega^2 + omega - 1| <= {worst_lin:.1e} linear (tol 1e-6), "
        f"<= {worst_pert:.1e} perturbed (tol 1e-4)",
    )


def test_correlation_decay_suite(db_cat_lin, db_fib, db_cat05, cat_lin):
    # exact branch: empirical characters equal the lattice rule on every level
    char_diff = 0.0
    for db in (db_cat_lin, db_fib):
        A = db.spec.matrix
        for n in db.level_list:
            got = mme.character_averages(db.level(n), mme.DEFAULT_MODES)
            want = [mme.linear_level_character(A, n, k) for k in mme.DEFAULT_MODES]
            char_diff = max(char_diff, float(np.max(np.abs(got - np.array(want)))))
    f1, f2 = Observable.cosine((1, 0)), Observable.cosine((0, 1))
    cross = float(
        np.max(np.abs(mme.lebesgue_correlations(cat_lin.matrix, f1, range(9), f2)))
    )
    C0 = mme.lebesgue_correlations(cat_lin.matrix, f1, [0])[0]
    emp0 = mme.empirical_correlations(cat_lin, db_cat_lin.level(10), f1, [0])[0]
    pert = mme.correlation_decay(db_cat05, f1)
    equi = mme.equidistribution_report(db_cat05)
    ok = (
        char_diff <= 1e-10
        and cross == 0.0
        and C0 == 0.5
        and abs(emp0 - 0.5) <= 1e-12
        and pert.ok()
        and equi.ok()
    )
    _verdict(
        "correlation decay",
        ok,
        f"character oracle exact (diff {char_diff:.1e}); cross pair "
        f"vanishes at every lag; C_0 = 1/2 exactly; eps=0.05 level-10 rate "
        f"{pert.fit.rho:.3f} <= 1.2 exp(-h_top) = {1.2 * pert.rate_limit:.3f}"
        f"{' (floor-limited bound)' if pert.fit.bound_only else ''}; "
        f"character convergence rate {equi.fit.rho:.3f} within the same limit",
    )


def test_regularity_bounds(cat_lin):
    rb = spectral.rho_bounds(cat_lin, r=5)
    r1_err = abs(rb.r1 - 3.01)
    bound_err = abs(rb.rho_bound - 1.0 / LAM)
    _verdict(
        "regularity bounds",
        r1_err <= 1e-9 and bound_err <= 1e-9 and rb.bound_valid,
        f"smoothness threshold r1 = {rb.r1:.6f} (3.01 exact); radius bound "
        f"at r=5 within {bound_err:.1e} of 1/lambda (tol 1e-9)",
    )


def test_module_property_suite(db_cat_lin, db_fib, db_cat02, db_cat05, cat05, rng):
    checks: dict[str, bool] = {}

    # lift equivariance: F(x + m) = F(x) + A m for integer m
    X = rng.random((50, 2))
    M = rng.integers(-3, 4, size=(50, 2)).astype(float)
    A = np.array(cat05.matrix.to_rows(), dtype=float)
    shift = evaluate_lift(cat05, X + M) - (evaluate_lift(cat05, X) + M @ A.T)
    checks["lift equivariance"] = float(np.max(np.abs(shift))) <= 1e-9

    # integer normal forms: exact factorization, unimodular, divisibility
    snf_ok = True
    for _ in range(100):
        B = rng.integers(-9, 10, size=(2, 2))
        if B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0] == 0:
            continue
        U, D, V = (np.array(m, dtype=object) for m in smith_normal_form(B))
        snf_ok = snf_ok and np.array_equal(U @ D @ V, B)
        snf_ok = snf_ok and abs(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]) == 1
        snf_ok = snf_ok and abs(V[0, 0] * V[1, 1] - V[0, 1] * V[1, 0]) == 1
        snf_ok = snf_ok and D[1, 1] % D[0, 0] == 0
    checks["normal forms"] = snf_ok

    # series: exp/log round trip and truncation stability
    coeffs = np.concatenate([[1.0], 0.3 * rng.standard_normal(9)])
    ps = PowerSeries(coeffs.astype(complex))
    round_trip = float(np.max(np.abs(ps.log().exp().coeffs - ps.coeffs)))
    noisy = PowerSeries(
        np.concatenate([[1.0, -2.0, 0.5], 1e-15 * rng.standard_normal(5)]).astype(
            complex
        )
    )
    checks["series round trips"] = (
        round_trip <= 1e-12 and trim_degree(noisy.coeffs) == 2
    )

    # sign-twisted identity stays exact for the orientation-reversing map
    rep = spectral.check_identity(db_fib, order=8, extended=True)
    checks["twisted identity"] = (
        rep.residual <= 1e-10 and rep.twisted_residual <= 1e-10
    )
    checks["per-point residuals"] = (
        spectral.check_identity(db_cat05, order=8).per_point_max <= 1e-6
    )

    checks["database validation"] = all(
        db.validate().ok for db in (db_cat_lin, db_fib, db_cat02, db_cat05)
    )

    # both computation backends produce the same flow integrals
    obs = Observable.cosine((1, 0))
    current = kernels.backend_name()
    vals = {}
    try:
        for name in ("numpy", current):
            kernels.set_backend(name)
            res = horocycle_integral(cat05, [(0.3, 0.4)], [5.0], obs)
            vals[name] = res.values[0, 0]
    finally:
        kernels.set_backend(current)
    checks["backend agreement"] = abs(vals["numpy"] - vals[current]) <= 1e-8

    # bundle geometry: contraction/expansion split, transversality, residuals
    sample = bundles.sample_directions(cat05, bundles.grid_points(6))
    summary = bundles.stretch_summary(sample)
    checks["bundle geometry"] = (
        0.0 < summary.ms_min
        and summary.ms_max < 1.0 < summary.mu_min
        and summary.min_angle > 0.5
        and summary.max_resid <= 1e-9
    )

    # monodromy multipliers satisfy the trace/determinant identities
    lv = db_cat05.level(6)
    ms, mu = spectral.split_multipliers(lv.trace, lv.det)
    checks["multiplier identities"] = (
        float(np.max(np.abs(ms * mu - lv.det))) <= 1e-9
        and float(np.max(np.abs(ms + mu - lv.trace))) <= 1e-9
        and bool(np.all(np.abs(ms) < 1.0))
        and bool(np.all(np.abs(mu) > 1.0))
    )

    checks["measure normalization"] = (
        mme.character_averages(lv, [(0, 0)])[0] == 1.0 + 0.0j
    )

    # flow composition: integrating T/2 twice equals integrating T once
    T = 40.0
    one = horocycle_integral(cat05, [(0.37, 0.21)], [T / 2, T], obs)
    two = horocycle_integral(cat05, [tuple(one.positions[0, 0])], [T / 2], obs)
    comp_val = abs(one.values[0, 0] + two.values[0, 0] - one.values[0, 1])
    comp_pos = float(
        torus_distance(one.positions[0, 1], two.positions[0, 0]).max()
    )
    checks["flow composition"] = (
        comp_val <= 1e-5
        and comp_pos <= 1e-6
        and max(one.clock_error, two.clock_error) <= 1e-9
    )

    failed = sorted(name for name, good in checks.items() if not good)
    _verdict(
        "module properties",
        not failed,
        "all hold: " + ", ".join(sorted(checks))
        if not failed
        else "failed: " + ", ".join(failed),
    )
