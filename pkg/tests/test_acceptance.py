"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
terminal output even with capture on).
"""

import math
import time

import numpy as np
import pytest

from lavgap.cantor import CantorSpec, ball_mass_constant, neighborhood_slope
from lavgap.exterior import selftest
from lavgap.forms import derivative_mismatch
from lavgap.models import Borderline, DoublePhase, VariableExponent
from lavgap.planner import plan_for_model
from lavgap.runner import run_sweep
from lavgap.schemas import RunConfig
from lavgap.verify import (EXPECTED_TABLE, assumption_check, boundary_pairings, build_instance,
                           check_disjointness, check_energies, coefficient_probe, functional_table,
                           gap_scan, sample_points, stokes_null, verify_separating)


@pytest.fixture
def announce(capsys):
    def emit(number: int, title: str, passed: bool, detail: str, started: float):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail} ({time.time() - started:.1f} s)"
        with capsys.disabled():
            print("\n" + line)
        assert passed, line
    return emit


def instance(model, N, k, setup="auto", gamma=None, p0=None):
    plan, check = plan_for_model(model, N, k, setup, gamma, p0)
    return build_instance(model, plan), check


def scaffold_matrix():
    """One admissible-shaped instance per setup and degree for N = 2, 3."""
    for N in (2, 3):
        for k in range(1, N):
            c = N / k
            yield N, k, 1, DoublePhase(1.2, 3.0, 0.5), c
            yield N, k, 2, DoublePhase(c + 1, 2 * c + 3, 0.5), c + 1
            if c > 1.3:
                yield N, k, 3, DoublePhase(1.1, 3.0, 0.5), (1 + c) / 2
            yield N, k, 4, DoublePhase(1.2, 3.0, 0.5), c
            yield N, k, 5, DoublePhase(1.2, 3.0, 0.5), c


@pytest.fixture(scope="module")
def reference():
    return instance(DoublePhase(1.5, 3.0, 0.5), 2, 1, p0=2.0)[0]


def test_criterion_01_exterior_algebra(announce):
    t0 = time.time()
    res = selftest(cases=1000, seed=0, max_N=6)
    elapsed = time.time() - t0
    worst = max(res["max_deviation"].values())
    ok = res["passed"] and res["hodge_twice_exact"] and res["degrees_covered"] == 27 and elapsed < 10
    announce(1, "exterior algebra", ok,
             f"1000 cases, 27 (N, k) degrees, double star exact, worst deviation {worst:.1e}", t0)


def test_criterion_02_derivative_oracle(announce):
    t0 = time.time()
    worst, forms = 0.0, 0
    for N, k, setup, model, p0 in scaffold_matrix():
        inst, _ = instance(model, N, k, setup, p0=p0)
        pts = sample_points(inst, 1400, stream=7)
        for field in (inst.u, inst.A):
            nonsingular = pts[field.singular_distance(pts) > 0][:1000]
            assert len(nonsingular) == 1000
            worst = max(worst, float(derivative_mismatch(field, nonsingular).max()))
            forms += 1
    elapsed = time.time() - t0
    announce(2, "derivative oracle", worst < 1e-6 and elapsed < 60,
             f"{forms} forms x 1000 points, worst relative mismatch {worst:.1e}", t0)


PAIRING_CASES = [
    ("S1 N=2 k=1", DoublePhase(1.5, 3.0, 0.5), 2, 1, 1, None, 2.0, 1e-3),
    ("S1 N=3 k=1", DoublePhase(2.5, 5.0, 0.5), 3, 1, 1, None, 3.0, 1e-3),
    ("S1 N=3 k=2", DoublePhase(1.2, 3.0, 0.5), 3, 2, 1, None, 1.5, 1e-3),
    ("S2 N=3 k=1", DoublePhase(4.0, 8.0, 0.5), 3, 1, 2, None, 5.0, 1e-2),
    ("S3 N=3 k=2", DoublePhase(1.2, 3.0, 0.5), 3, 2, 3, None, 1.25, 1e-2),
    ("S4 N=3 k=1", DoublePhase(2.5, 5.0, 0.5), 3, 1, 4, 1.0, 3.0, 1e-2),
    ("S5 N=3 k=2", DoublePhase(1.2, 3.0, 0.5), 3, 2, 5, 1.0, 1.5, 1e-2),
]


@pytest.mark.parametrize("label,model,N,k,setup,gamma,p0,tol", PAIRING_CASES, ids=[c[0] for c in PAIRING_CASES])
def test_criterion_03_boundary_pairing(announce, label, model, N, k, setup, gamma, p0, tol):
    t0 = time.time()
    inst, _ = instance(model, N, k, setup, gamma, p0)
    res = boundary_pairings(inst)
    a_du = res["A_wedge_du"]["value"]
    u_da = res["u_wedge_dA"]["value"]
    sign = (-1) ** (k * (N - k))
    depth = inst.config.atom_depth
    ok = (abs(a_du - 1.0) <= tol and abs(u_da - sign) <= tol and time.time() - t0 < 300
          and (setup == 1 or depth == 8))
    announce(3, f"boundary pairing {label}", ok,
             f"A^du = {a_du:.6f}, u^dA = {u_da:.6f} (expected {sign:+d}), tol {tol:g}, atom depth {depth}", t0)


def test_criterion_04_support_disjointness(announce):
    t0 = time.time()
    cases = [(N, k, s, m, p0) for N, k, s, m, p0 in scaffold_matrix()]
    cases.append((3, 1, 3, DoublePhase(2.0, 2.6, 0.5), 2.0))
    overlaps, pairs = 0, 0
    for N, k, setup, model, p0 in cases:
        inst, _ = instance(model, N, k, setup, p0=p0)
        res = check_disjointness(inst, samples=1_000_000)
        overlaps += res["overlapping"]
        pairs += 1
        assert res["du_nonzero"] > 0 and res["dA_nonzero"] > 0
    announce(4, "support disjointness", overlaps == 0,
             f"{pairs} pairs x 1e6 points, {overlaps} points with both derivatives nonzero", t0)


def test_criterion_05_functional_table(announce, reference):
    t0 = time.time()
    table = functional_table(reference)
    deviation = float(np.max(np.abs(np.array(table["values"]) - EXPECTED_TABLE)))
    announce(5, "functional table", deviation < 1e-2,
             f"nine values within {deviation:.1e} of (0,1,-1 / 1,1,0 / -1,0,-1)", t0)


def test_criterion_06_threshold_sharpness(announce):
    t0 = time.time()
    base = {"model": {"family": "double-phase", "p": 2.0, "q": 2.6, "alpha": 0.5}, "N": 3, "k": 1,
            "gamma": -1.5}
    sweep = run_sweep(RunConfig(**base, command="sweep", sweep_range="2.0:3.0:0.05"))
    flips = sweep["I2_flips"]
    one_flip = len(flips) == 1 and flips[0]["before"] == "divergent" and flips[0]["after"] == "convergent"
    brackets = one_flip and flips[0]["from"] <= 2.5 + 1e-12 and flips[0]["to"] - 2.5 <= 0.05 + 1e-12
    inst, check = instance(DoublePhase(2.0, 2.6, 0.5), 3, 1, gamma=-1.5)
    report = verify_separating(inst)
    ok = brackets and check.admissible and report.passed and time.time() - t0 < 600
    where = f"{flips[0]['from']:g} -> {flips[0]['to']:g}" if flips else "none"
    announce(6, "threshold sharpness", ok,
             f"I2 flip {where}; q = 2.6 verify {'separating' if report.passed else 'not separating'}", t0)


def test_criterion_07_borderline(announce):
    t0 = time.time()
    good, good_check = instance(Borderline(2.0, 2.0, 1.0, 0.5), 3, 1)
    report = verify_separating(good)
    bad, bad_check = instance(Borderline(2.0, 1.4, 1.0, 0.5), 3, 1, gamma=-0.25)
    energies = check_energies(bad, with_box=False)
    verdicts = [energies["reduced"][name]["verdict"] for name in ("I1", "I2")]
    ok = (good.plan.setup in (2, 3) and good_check.admissible and report.passed
          and not energies["passed"] and "divergent" in verdicts and time.time() - t0 < 600)
    announce(7, "borderline model", ok,
             f"alpha+beta=3 setup {good.plan.setup} {'separating' if report.passed else 'fails'}; "
             f"alpha+beta=2.4 energies {verdicts}", t0)


def test_criterion_08_variable_exponent(announce):
    t0 = time.time()
    inst, check = instance(VariableExponent(1.5, 4.0, 2.0, 2.0), 2, 1)
    report = verify_separating(inst)
    base = coefficient_probe(inst, budget=100_000)["constant"]
    doubled = coefficient_probe(inst, budget=200_000)["constant"]
    stable = math.isfinite(base) and abs(doubled - base) <= 0.1 * base
    ok = check.admissible and report.passed and stable
    announce(8, "variable exponent", ok,
             f"verify {'separating' if report.passed else 'fails'}; probe constant {base:.4f} -> {doubled:.4f}", t0)


def test_criterion_09_gap_witness(announce, reference):
    t0 = time.time()
    gap = gap_scan(reference)
    stokes = stokes_null(reference)
    ok = (gap["found"] and len(stokes["residuals"]) == 20 and stokes["max_residual"] < 1e-3
          and time.time() - t0 < 600)
    announce(9, "gap witness", ok,
             f"F(t u) = {gap['F_min']:.3e} at t = {gap['t_star']:.3e}; "
             f"max smooth residual {stokes['max_residual']:.1e}", t0)


def test_criterion_10_assumption_witness(announce, reference):
    t0 = time.time()
    res = assumption_check(reference)
    ok = res["found"] and res["source"] == "seeded curve"
    w = res["witness"] or {}
    announce(10, "assumption witness", ok,
             f"(s, t) = ({w.get('s', math.nan):.4g}, {w.get('t', math.nan):.4g}), margin {w.get('margin', math.nan):.4g}", t0)


def test_criterion_11_cantor_measure(announce):
    t0 = time.time()
    slopes = []
    for m in (1, 2):
        fit = neighborhood_slope(CantorSpec("generalized", lam=0.25, power=m))
        slopes.append((m, fit["slope"], fit["expected"]))
    mass = ball_mass_constant(CantorSpec("generalized", lam=0.25, power=1))
    ok = (all(abs(s - e) <= 0.05 for _, s, e in slopes) and math.isfinite(mass["constant"])
          and abs(mass["drift"]) < 0.05 and mass["min_ratio"] > 0)
    text = ", ".join(f"m={m}: slope {s:.4f} vs {e:.4f}" for m, s, e in slopes)
    announce(11, "Cantor measure bounds", ok,
             f"{text}; ball mass C = {mass['constant']:.4f}, drift {mass['drift']:+.4f}", t0)
