"""Acceptance criteria, one test per criterion.

Each check prints a single PASS/FAIL line; the lines are also collected in
``RESULTS`` and repeated in the pytest terminal summary.  Run this file
directly (``python tests/test_acceptance.py``) to get only those lines.
"""

from fractions import Fraction
import json
import math

import numpy as np

from fragarea.cli import main as cli_main
from fragarea.laplace import dyadic_laplace, dyadic_residual, solve_laplace_fixed_point
from fragarea.measures import Atomic, BetaSplit, Brownian, FragmentationParams, phi, truncate
from fragarea.moments import coeff_a, coeff_a_jk, moment_table, moment_upper_bound, takacs_table
from fragarea.simulate import (
    SimConfig, discretization_allowance, estimate_moments, riemann_gap_formula, run_excursion, run_homogeneous,
    run_rde, run_truncated,
)

RESULTS = []

SQRT_PI_8 = math.sqrt(math.pi / 8.0)
BROWNIAN = FragmentationParams(Brownian(), -0.5)
BETA = FragmentationParams(BetaSplit(c=1.0, beta=-1.5), -0.5)
DYADIC = FragmentationParams(Atomic(((0.5, 1.0),)), -0.5)

EXCURSION_SAMPLES, EXCURSION_STEPS = 100_000, 10_000
DYADIC_SAMPLES = 1_000_000
HOMOGENEOUS_PATHS, HOMOGENEOUS_T_MAX = 100_000, 6.0
TRUNCATION_SAMPLES, TRUNCATION_EPS = 20_000, 1e-2


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def rel(a, b):
    return abs(a - b) / abs(b)


def within(est, ref, n_se=4.0):
    z = est.z_scores(ref)
    return all(abs(v) <= n_se for v in z), z


# ---------------------------------------------------------------- criteria


def criterion_1():
    m1 = moment_table(BROWNIAN, 1).M[1]
    err = rel(m1, SQRT_PI_8)
    return err <= 1e-10, f"Brownian M_1 = {m1:.12f}, sqrt(pi/8) rel err {err:.1e} (tol 1e-10)"


def criterion_2():
    ours = moment_table(BROWNIAN, 20).M
    tak = takacs_table(20)
    worst = max(rel(ours[k], tak.M[k]) for k in range(1, 21))
    rationals = tak.K_seq[1:4] == (Fraction(1, 8), Fraction(5, 64), Fraction(15, 128))
    return worst <= 1e-10 and rationals, (
        f"recursion vs Takacs k<=20 max rel err {worst:.1e} (tol 1e-10); K_1..3 = "
        + ", ".join(str(v) for v in tak.K_seq[1:4])
    )


def criterion_3():
    m2 = moment_table(BROWNIAN, 2).M[2]
    exact_err = rel(m2, 5.0 / 12.0)
    samples = run_excursion(EXCURSION_SAMPLES, EXCURSION_STEPS, seed=2024)
    est = estimate_moments(samples, 2)
    allowance = discretization_allowance(2, EXCURSION_STEPS)
    dev = abs(est.moments[1] - 5.0 / 12.0)
    ok_mc = dev <= 4 * est.stderr[1] + allowance
    return exact_err <= 1e-10 and ok_mc, (
        f"M_2 = {m2:.12f} rel err {exact_err:.1e}; excursion MC ({EXCURSION_SAMPLES} x {EXCURSION_STEPS} steps) "
        f"E A^2 = {est.moments[1]:.5f}, |dev| {dev:.2e} <= 4 se {4 * est.stderr[1]:.2e} + allowance {allowance:.1e}"
    )


def criterion_4():
    worst = 0.0
    for params in (BROWNIAN, BETA):
        for k in range(1, 21):
            worst = max(worst, rel(coeff_a(params, k, "quadrature"), coeff_a(params, k, "closed-form")))
            for j in range(1, k):
                worst = max(worst, rel(coeff_a_jk(params, j, k, "quadrature"), coeff_a_jk(params, j, k, "closed-form")))
    return worst <= 1e-8, f"a_k, a_jk closed form vs quadrature, Brownian and Beta(1, -3/2), k<=20: max rel err {worst:.1e} (tol 1e-8)"


def _dyadic_oracle(alpha):
    # cumulants of the infinite product: kappa_k = (k-1)! sum_n 2^n 2^{n (alpha-1) k}
    kappa1 = sum(2.0 ** (n * alpha) for n in range(400))
    kappa2 = sum(2.0**n * 2.0 ** (2 * n * (alpha - 1)) for n in range(400))
    return kappa1, kappa2 + kappa1**2


def criterion_5():
    table = moment_table(DYADIC, 2)
    m1_ref, m2_ref = _dyadic_oracle(-0.5)
    closed = (abs(m1_ref - (2 + math.sqrt(2))) / m1_ref, abs(m2_ref - (4 / 3 + (2 + math.sqrt(2)) ** 2)) / m2_ref)
    exact_err = max(rel(table.M[1], m1_ref), rel(table.M[2], m2_ref), *closed)
    samples = run_rde(DYADIC, SimConfig(epsilon=1e-6, residual_mode="expected-tail", n_samples=DYADIC_SAMPLES, seed=7))
    ok_mc, z = within(estimate_moments(samples, 2), table.M[1:])
    res = float(np.max(dyadic_residual(-0.5, np.linspace(0.0, 50.0, 100))))
    ok = exact_err <= 1e-10 and ok_mc and res <= 1e-10
    return ok, (
        f"dyadic M_1, M_2 vs analytic rel err {exact_err:.1e}; RDE n=1e6 z = {z[0]:+.2f}, {z[1]:+.2f}; "
        f"functional-equation residual max {res:.1e} (tol 1e-10)"
    )


def criterion_6():
    grid = solve_laplace_fixed_point(DYADIC, q_max=10.0)
    q = np.linspace(0.0, 10.0, 1001)
    err = float(np.max(np.abs(grid(q) - dyadic_laplace(-0.5, q))))
    return err <= 1e-6, f"fixed point vs product on [0,10]: max abs err {err:.1e} after {grid.iterations} iterations (tol 1e-6)"


def criterion_7():
    measures = {
        "brownian": BROWNIAN,
        "beta": BETA,
        "dyadic": DYADIC,
        "two-atom": FragmentationParams(Atomic(((0.5, 1.0), (0.8, 2.0))), -1.0),
        "truncated-brownian": FragmentationParams(truncate(Brownian(), 16), -0.5),
        "beta(alpha=-2)": FragmentationParams(BetaSplit(2.0, -1.2), -2.0),
    }
    ok, worst_eq = True, 0.0
    for params in measures.values():
        t = moment_table(params, 20)
        ok &= all(m <= moment_upper_bound(params, k) * (1 + 1e-12) for k, m in enumerate(t.M[1:], start=1))
        worst_eq = max(worst_eq, rel(t.M[1], moment_upper_bound(params, 1)))
    ok &= worst_eq <= 1e-12
    return ok, f"M_k <= k k!/prod phi(-j alpha) for k<=20 on {len(measures)} measures; k=1 equality rel err {worst_eq:.1e}"


def criterion_8():
    ks = (1, 2, 4)
    times = (0.5, 1.0, 2.0)
    out = run_homogeneous(DYADIC, ks, HOMOGENEOUS_T_MAX, HOMOGENEOUS_PATHS, seed=8, times=times)
    parts, ok = [], True
    for k in ks:
        gap = out["area"] - out["riemann"][k]
        ok &= bool(np.all(gap >= -1e-12))
        est = estimate_moments(gap, 1)
        z = est.z_scores([riemann_gap_formula(DYADIC, k)])[0]
        ok &= abs(z) <= 4
        parts.append(f"k={k} z={z:+.2f}")
    rate = phi(DYADIC, 0.5)
    for t in times:
        z = estimate_moments(out["s_at"][t], 1).z_scores([math.exp(-t * rate)])[0]
        ok &= abs(z) <= 4
        parts.append(f"S({t:g}) z={z:+.2f}")
    return ok, "homogeneous paths n=1e5: " + ", ".join(parts)


def criterion_9():
    levels = (4, 16, 64, 256)
    exact, zs = [], []
    ok = True
    for n in levels:
        tparams = FragmentationParams(truncate(Brownian(), n), -0.5)
        m1 = moment_table(tparams, 1).M[1]
        exact.append(m1)
        cfg = SimConfig(epsilon=TRUNCATION_EPS, n_samples=TRUNCATION_SAMPLES, seed=900 + n)
        z = estimate_moments(run_truncated(BROWNIAN, n, cfg), 1).z_scores([m1])[0]
        zs.append(z)
        ok &= abs(z) <= 4
    monotone = all(b <= a for a, b in zip(exact, exact[1:]))
    closer = abs(exact[-1] - SQRT_PI_8) < abs(exact[0] - SQRT_PI_8)
    ok &= monotone and closer
    return ok, (
        "M_1(n) = " + ", ".join(f"{v:.5f}" for v in exact) + f" non-increasing={monotone}, closer={closer}; "
        "MC z = " + ", ".join(f"{v:+.2f}" for v in zs)
    )


def _verify_report(tmp_path, name, text):
    path = tmp_path / f"{name}.yaml"
    path.write_text(text)
    out = tmp_path / f"{name}.json"
    code = cli_main(["verify", "--config", str(path), "--format", "json", "--out", str(out)])
    return code, json.loads(out.read_text())


def criterion_10(tmp_path):
    configs = {
        "brownian": "measure: {kind: brownian}\nalpha: -0.5\nverify: {monomial_k_max: 10}\n",
        "beta": "measure: {kind: beta, c: 1.0, beta: -1.5}\nalpha: -0.5\nverify: {monomial_k_max: 10}\n",
        "dyadic": "measure: {kind: atomic, atoms: [{x: 0.5, w: 1.0}]}\nalpha: -0.5\n"
                  "verify: {monomial_k_max: 10, dyadic_q: [0.1, 1, 10], exponential_q: [0.1, 1, 10]}\n",
    }
    ok, worst = True, {"monomial": 0.0, "exponential": 0.0, "dyadic": 0.0}
    for name, text in configs.items():
        code, report = _verify_report(tmp_path, name, text)
        ok &= code == 0 and report["passed"]
        for c in report["checks"]:
            worst[c["check"]] = max(worst[c["check"]], c["rel_residual"])
    ok &= worst["monomial"] <= 1e-8 and worst["exponential"] <= 1e-9
    code, report = _verify_report(
        tmp_path, "perturbed", configs["brownian"].replace("{monomial_k_max: 10}", "{monomial_k_max: 10, perturb: {k: 2, delta: 0.01}}")
    )
    flagged = code != 0 and not report["passed"]
    ok &= flagged
    return ok, (
        f"verify battery: monomial max {worst['monomial']:.1e} (tol 1e-8), exponential max {worst['exponential']:.1e} "
        f"(tol 1e-9), dyadic max {worst['dyadic']:.1e}; 1% error in M_2 flagged={flagged} (exit {code})"
    )


def criterion_11(tmp_path):
    dyadic = "measure: {kind: atomic, atoms: [{x: 0.5, w: 1.0}]}\nalpha: -0.5\n"
    brownian = "measure: {kind: brownian}\nalpha: -0.5\n"
    runs = {
        "rde": dyadic + "simulate: {mode: rde, n_samples: 5000, k_max: 3}\n",
        "truncated": brownian + "simulate: {mode: truncated, n_trunc: 8, epsilon: 0.02, n_samples: 3000}\n",
        "excursion": brownian + "simulate: {mode: excursion, n_samples: 2000, n_steps: 2000}\n",
        "homogeneous": dyadic + "simulate: {mode: homogeneous, n_samples: 1500, k: 2, t_max: 3}\n",
    }
    ok, worst = True, 0.0
    for name, text in runs.items():
        path = tmp_path / f"{name}.yaml"
        path.write_text(text)
        reports = []
        for workers in (1, 3):
            out = tmp_path / f"{name}_{workers}.json"
            code = cli_main(["simulate", "--config", str(path), "--seed", "123", "--format", "json",
                             "--workers", str(workers), "--out", str(out)])
            ok &= code == 0
            reports.append(json.loads(out.read_text()))
        a, b = (r["moments"] for r in reports)
        worst = max([worst] + [abs(x - y) / abs(x) for x, y in zip(a, b)])
    ok &= worst <= 1e-12
    return ok, f"simulate rde/truncated/excursion/homogeneous with 1 vs 3 workers: max rel diff {worst:.1e} (tol 1e-12)"


# ---------------------------------------------------------------- tests


def _run(number, fn, *args):
    ok, detail = fn(*args)
    assert record(number, ok, detail), detail


def test_criterion_01_brownian_mean():
    _run(1, criterion_1)


def test_criterion_02_takacs_equivalence():
    _run(2, criterion_2)


def test_criterion_03_second_moment_and_excursion():
    _run(3, criterion_3)


def test_criterion_04_coefficients_closed_form_vs_quadrature():
    _run(4, criterion_4)


def test_criterion_05_dyadic_end_to_end():
    _run(5, criterion_5)


def test_criterion_06_fixed_point_laplace():
    _run(6, criterion_6)


def test_criterion_07_moment_bounds():
    _run(7, criterion_7)


def test_criterion_08_riemann_gap_and_survival():
    _run(8, criterion_8)


def test_criterion_09_truncation_convergence():
    _run(9, criterion_9)


def test_criterion_10_verify_battery(tmp_path):
    _run(10, criterion_10, tmp_path)


def test_criterion_11_determinism(tmp_path):
    _run(11, criterion_11, tmp_path)


if __name__ == "__main__":
    import pathlib
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        tmp = pathlib.Path(d)
        checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                  criterion_7, criterion_8, criterion_9, lambda: criterion_10(tmp), lambda: criterion_11(tmp)]
        failures = 0
        for i, fn in enumerate(checks, start=1):
            ok, detail = fn()
            failures += not record(i, ok, detail)
    raise SystemExit(1 if failures else 0)
