import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lavgap.models import (Borderline, DoublePhase, ExponentProfile, VariableExponent, convexity_scan,
                           exponent_warp, fit_growth_exponents, model_from_dict)

MODELS = [DoublePhase(1.5, 3.0, 0.5), DoublePhase(2.0, 2.6, 0.5), Borderline(2.0, 2.0, 1.0, 0.5),
          VariableExponent(1.5, 4.0, 2.0, 2.0)]


def brute_conjugate(model, s, rho, xhat):
    ts = np.geomspace(1e-8, 1e4, 200001)
    return float(np.max(s * ts - model.phi(ts, rho, xhat)))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
@pytest.mark.parametrize("s", [0.3, 1.0, 5.0, 40.0])
def test_conjugate_matches_brute_force_sup(model, s):
    for rho, xhat in [(0.0, 0.5), (1.0, 0.5), (0.5, 1e-3)]:
        value, capped = model.phi_conjugate(np.array([s]), rho, xhat)
        assert not capped.any()
        assert value[0] == pytest.approx(brute_conjugate(model, s, rho, xhat), rel=1e-6, abs=1e-10)


def test_conjugate_at_zero():
    for model in MODELS:
        value, capped = model.phi_conjugate(np.array([0.0]), 1.0, 0.3)
        assert value[0] == 0.0 and not capped[0]


def test_conjugate_rejects_negative_argument():
    with pytest.raises(ValueError):
        MODELS[0].phi_conjugate(np.array([-1.0]), 0.0, 0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 50), st.floats(0, 1), st.floats(1e-4, 1),
       st.sampled_from(range(len(MODELS))))
def test_fenchel_young(t, s, rho, xhat, index):
    model = MODELS[index]
    conj = model.phi_conjugate(np.array([s]), rho, xhat)[0][0]
    assert model.phi(t, rho, xhat) + conj >= s * t * (1 - 1e-9) - 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-2, 50), st.floats(0, 1), st.floats(1e-4, 1), st.sampled_from(range(len(MODELS))))
def test_double_conjugate_recovers_phi(t, rho, xhat, index):
    model = MODELS[index]
    ss = np.geomspace(1e-6, 1e5, 4001)
    conj = model.phi_conjugate(ss, rho, xhat)[0]
    biconj = float(np.max(ss * t - conj))
    assert biconj == pytest.approx(float(model.phi(t, rho, xhat)), rel=2e-3)


def test_double_phase_pieces():
    m = DoublePhase(1.5, 3.0, 0.5)
    assert m.phi(2.0, 0.0, 0.25) == pytest.approx(2.0 ** 1.5)
    assert m.phi(2.0, 1.0, 0.25) == pytest.approx(2.0 ** 1.5 + 0.5 * 8.0)
    assert m.growth_range() == (1.5, 3.0)
    with pytest.raises(ValueError):
        DoublePhase(2.0, 2.0, 0.5)


def test_growth_exponent_fit():
    m = DoublePhase(1.5, 3.0, 0.5)
    assert fit_growth_exponents(m, 0.0, 0.5) == pytest.approx(1.5, abs=1e-6)
    assert fit_growth_exponents(m, 1.0, 0.5) == pytest.approx(3.0, abs=1e-2)


def test_phi_prime_matches_difference_quotient():
    ts = np.geomspace(1e-3, 1e3, 50)
    for m in MODELS:
        for rho, xhat in [(0.0, 0.3), (1.0, 0.3), (0.7, 1e-4)]:
            h = 1e-6 * ts
            fd = (m.phi(ts + h, rho, xhat) - m.phi(ts - h, rho, xhat)) / (2 * h)
            assert np.allclose(fd, m.phi_prime(ts, rho, xhat), rtol=1e-6)


def test_borderline_balance_condition():
    assert Borderline(2.0, 2.0, 1.0, 0.5).balanced
    assert not Borderline(2.0, 1.4, 1.0, 0.5).balanced


def test_variable_exponent_stays_between_bounds():
    m = VariableExponent(1.5, 4.0, 2.0, 2.0)
    xhat = np.geomspace(1e-12, 1, 200)
    for rho in (0.0, 0.5, 1.0):
        p = m.exponent(rho, xhat)
        assert np.all(p > 1.5) and np.all(p < 4.0)
    assert m.exponent(0.5, 0.1) == pytest.approx(2.0)


def test_exponent_warp_is_monotone_identity_core():
    v = np.linspace(0, 6, 2001)
    w = exponent_warp(v, 1.5, 2.0, 4.0)
    assert np.all(np.diff(w) >= 0)
    core = (v >= 1.75) & (v <= 3.0)
    assert np.allclose(w[core], v[core])
    assert w.min() >= (3 * 1.5 + 2) / 4 - 1e-12 and w.max() <= (3 * 4 + 2) / 4 + 1e-12


def test_exponent_profile_clamp():
    prof = ExponentProfile(2.0, 1e-2)
    assert prof(0.5) == prof(1e-2)
    L = math.log(1e6)
    assert prof(1e-6) == pytest.approx(2.0 * math.log(L) / L)
    assert prof.log_scale(math.log(1e-6)) == pytest.approx(prof(1e-6))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
@pytest.mark.parametrize("branch", ["u", "A"])
def test_log_branch_conjugate_matches_grid_sup(model, branch):
    log_t = math.log(1e-3)

    def grid_sup(ys, sigma):
        vals = sigma * np.exp(ys) - np.exp([model.log_branch(branch, log_t, y) for y in ys])
        return ys[int(np.argmax(vals))], float(vals.max())

    for log_sigma in (-2.0, 0.0, 3.0):
        y0, _ = grid_sup(np.linspace(-30, 30, 6001), math.exp(log_sigma))
        _, grid = grid_sup(np.linspace(y0 - 0.02, y0 + 0.02, 4001), math.exp(log_sigma))
        assert model.log_branch_conjugate(branch, log_t, log_sigma) == pytest.approx(math.log(grid), abs=1e-6)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.family)
def test_dict_round_trip(model):
    assert model_from_dict(model.to_dict()) == model


def test_convexity_scan_flags_nonconvex_borderline():
    assert convexity_scan(DoublePhase(1.5, 3.0, 0.5))["convex_on_samples"]
    bad = convexity_scan(Borderline(1.1, 0.1, 3.0, 0.5))
    assert not bad["convex_on_samples"] and bad["violation_count"] > 0
