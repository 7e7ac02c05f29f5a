"""Generalized Orlicz integrands: double phase, borderline double phase and
variable exponent.

Each family evaluates Phi(x, t) from two pointwise inputs: the separator
value rho~(x) and the norm |xhat|.  ``BoundModel`` attaches a separator field
so the integrand can be evaluated on point arrays.

For the reduced energy integrals every family also exposes log-space versions
of its two branches (``log_branch``): the branch active where rho~ = 0 (the
support of du) and the weighted branch active where rho~ = 1 (the support of
dA).  Conjugates of the weighted branch are computed in log space by solving
the stationarity equation, so scales like t = exp(-10^4) stay in range.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from .forms import ScalarField, as_points, smoothstep

Branch = Literal["u", "A"]

T_CLAMP = 1e-2
BISECTION_CAP = 200


def _log_log_e_plus(log_tau: float) -> float:
    """log(ln(e + tau)) from log tau."""
    return math.log(float(np.logaddexp(1.0, log_tau)))


def _ratio(log_tau: float) -> float:
    """tau / ((e + tau) ln(e + tau))."""
    lep = float(np.logaddexp(1.0, log_tau))
    return math.exp(log_tau - lep) / lep


class OrliczModel:
    family: str

    # pointwise -------------------------------------------------------------

    def phi(self, t, rho, xhat):
        raise NotImplementedError

    def phi_prime(self, t, rho, xhat):
        raise NotImplementedError

    def coefficient(self, rho, xhat):
        raise NotImplementedError

    def growth_range(self) -> tuple[float, float]:
        raise NotImplementedError

    def phi_conjugate(self, s, rho, xhat, rtol: float = 1e-10):
        """sup_t (s t - Phi(t)) by bracketing and bisection on Phi' = s.

        Returns (values, flags) where flags marks entries that hit the
        iteration cap.
        """
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("conjugate argument must be nonnegative")
        rho = np.broadcast_to(np.asarray(rho, dtype=float), s.shape)
        xhat = np.broadcast_to(np.asarray(xhat, dtype=float), s.shape)
        hi = np.ones(s.shape)
        for _ in range(2000):
            low_slope = self.phi_prime(hi, rho, xhat) < s
            if not low_slope.any():
                break
            hi = np.where(low_slope, hi * 2.0, hi)
        hi = np.where(s == 0, 0.0, hi)
        lo = np.zeros(s.shape)
        capped = np.zeros(s.shape, dtype=bool)
        for it in range(BISECTION_CAP):
            mid = 0.5 * (lo + hi)
            below = self.phi_prime(mid, rho, xhat) < s
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            done = hi - lo <= rtol * hi
            if np.all(done):
                break
        else:
            capped = ~done
        tau = 0.5 * (lo + hi)
        value = np.maximum(s * tau - self.phi(tau, rho, xhat), 0.0)
        return value, capped

    # log-space branches for reduced integrals --------------------------------

    def log_branch(self, branch: Branch, log_t: float, log_tau: float) -> float:
        raise NotImplementedError

    def branch_elasticity(self, branch: Branch, log_t: float, log_tau: float) -> float:
        """d log F / d log tau of a branch."""
        raise NotImplementedError

    def log_branch_conjugate(self, branch: Branch, log_t: float, log_sigma: float) -> float:
        """log F*(sigma) of a branch via the stationarity equation in log variables.

        With y = log tau and g = elasticity, F'(tau) = F g / tau, so the
        maximizer solves log F(y) + log g(y) - y = log sigma and
        F* = F (g - 1).
        """

        def h(y):
            return self.log_branch(branch, log_t, y) + math.log(self.branch_elasticity(branch, log_t, y)) - y

        lo, hi = -1.0, 1.0
        while h(lo) > log_sigma:
            lo *= 2.0
        while h(hi) < log_sigma:
            hi *= 2.0
        for _ in range(BISECTION_CAP):
            mid = 0.5 * (lo + hi)
            if h(mid) < log_sigma:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(1.0, abs(hi)):
                break
        y = 0.5 * (lo + hi)
        g = self.branch_elasticity(branch, log_t, y)
        return self.log_branch(branch, log_t, y) + math.log(g - 1.0)

    def branch_asymptotics(self, branch: Branch, a: float, b: float) -> tuple[float, float]:
        """Power-log exponents of the branch (u) or its conjugate (A) at tau = t^a (ln 1/t)^b, a < 0."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, **asdict(self)}

    def bind(self, rho: ScalarField, axes: int) -> "BoundModel":
        return BoundModel(self, rho, axes)


@dataclass(frozen=True)
class DoublePhase(OrliczModel):
    p: float
    q: float
    alpha: float
    family = "double-phase"

    def __post_init__(self):
        if not 1 < self.p < self.q:
            raise ValueError("double phase needs 1 < p < q")
        if self.alpha < 0:
            raise ValueError("double phase needs alpha >= 0")

    def weight(self, rho, xhat):
        return np.asarray(rho) * np.asarray(xhat, dtype=float) ** self.alpha

    def phi(self, t, rho, xhat):
        t = _nonneg(t)
        return t ** self.p + self.weight(rho, xhat) * t ** self.q

    def phi_prime(self, t, rho, xhat):
        t = np.asarray(t, dtype=float)
        return self.p * t ** (self.p - 1) + self.weight(rho, xhat) * self.q * t ** (self.q - 1)

    def coefficient(self, rho, xhat):
        return self.weight(rho, xhat)

    def growth_range(self):
        return (self.p, self.q)

    def log_branch(self, branch, log_t, log_tau):
        if branch == "u":
            return self.p * log_tau
        return self.alpha * log_t + self.q * log_tau

    def branch_elasticity(self, branch, log_t, log_tau):
        return self.p if branch == "u" else self.q

    def branch_asymptotics(self, branch, a, b):
        if branch == "u":
            return self.p * a, self.p * b
        qc = self.q / (self.q - 1)
        return -self.alpha / (self.q - 1) + qc * a, qc * b


@dataclass(frozen=True)
class Borderline(OrliczModel):
    p0: float
    alpha: float
    beta: float
    kappa: float
    t_clamp: float = T_CLAMP
    family = "borderline"

    def __post_init__(self):
        if self.p0 <= 1:
            raise ValueError("borderline model needs p0 > 1")

    @property
    def balanced(self) -> bool:
        """alpha + beta > p0 + kappa, the condition on the logarithmic powers."""
        return self.alpha + self.beta > self.p0 + self.kappa

    def weight(self, rho, xhat):
        x = np.minimum(np.asarray(xhat, dtype=float), self.t_clamp)
        with np.errstate(divide="ignore"):
            return np.asarray(rho) * np.log(1.0 / x) ** (-self.kappa)

    def phi(self, t, rho, xhat):
        t = _nonneg(t)
        L = np.log(np.e + t)
        return t ** self.p0 * L ** (-self.beta) + self.weight(rho, xhat) * t ** self.p0 * L ** self.alpha

    def phi_prime(self, t, rho, xhat):
        t = np.asarray(t, dtype=float)
        L = np.log(np.e + t)
        p = self.p0
        dphi = p * t ** (p - 1) * L ** (-self.beta) - self.beta * t ** p * L ** (-self.beta - 1) / (np.e + t)
        dpsi = p * t ** (p - 1) * L ** self.alpha + self.alpha * t ** p * L ** (self.alpha - 1) / (np.e + t)
        return dphi + self.weight(rho, xhat) * dpsi

    def coefficient(self, rho, xhat):
        return self.weight(rho, xhat)

    def growth_range(self):
        return (self.p0, self.p0)

    def log_branch(self, branch, log_t, log_tau):
        if branch == "u":
            return self.p0 * log_tau - self.beta * _log_log_e_plus(log_tau)
        L = -min(log_t, math.log(self.t_clamp))
        return -self.kappa * math.log(L) + self.p0 * log_tau + self.alpha * _log_log_e_plus(log_tau)

    def branch_elasticity(self, branch, log_t, log_tau):
        sign = -self.beta if branch == "u" else self.alpha
        return self.p0 + sign * _ratio(log_tau)

    def branch_asymptotics(self, branch, a, b):
        p = self.p0
        if branch == "u":
            return p * a, p * b - self.beta
        pc = p / (p - 1)
        return pc * a, pc * b + (self.kappa - self.alpha) / (p - 1)


@dataclass(frozen=True)
class VariableExponent(OrliczModel):
    p_minus: float
    p_plus: float
    p0: float
    kappa: float
    t_clamp: float = T_CLAMP
    family = "variable-exponent"

    def __post_init__(self):
        if not 1 < self.p_minus < self.p0 < self.p_plus:
            raise ValueError("variable exponent needs 1 < p_minus < p0 < p_plus")
        if self.kappa <= 0:
            raise ValueError("variable exponent needs kappa > 0")

    def profile(self) -> "ExponentProfile":
        return ExponentProfile(self.kappa, self.t_clamp)

    def warp(self, v):
        return exponent_warp(v, self.p_minus, self.p0, self.p_plus)

    def exponent(self, rho, xhat):
        xhat = np.asarray(xhat, dtype=float)
        sigma = np.where(xhat > 0, self.profile()(np.maximum(xhat, 1e-300)), 0.0)
        return self.warp(self.p0 + sigma * (2.0 * np.asarray(rho) - 1.0))

    def phi(self, t, rho, xhat):
        t = _nonneg(t)
        return t ** self.exponent(rho, xhat)

    def phi_prime(self, t, rho, xhat):
        p = self.exponent(rho, xhat)
        return p * np.asarray(t, dtype=float) ** (p - 1)

    def phi_conjugate(self, s, rho, xhat, rtol: float = 1e-10):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("conjugate argument must be nonnegative")
        p = self.exponent(rho, xhat)
        pc = p / (p - 1)
        return (p - 1) * p ** (-pc) * s ** pc, np.zeros(np.shape(s), dtype=bool)

    def coefficient(self, rho, xhat):
        return self.exponent(rho, xhat)

    def growth_range(self):
        return (self.p_minus, self.p_plus)

    def _branch_p(self, branch, log_t):
        sigma = self.profile().log_scale(log_t)
        return float(self.warp(self.p0 - sigma if branch == "u" else self.p0 + sigma))

    def log_branch(self, branch, log_t, log_tau):
        return self._branch_p(branch, log_t) * log_tau

    def branch_elasticity(self, branch, log_t, log_tau):
        return self._branch_p(branch, log_t)

    def branch_asymptotics(self, branch, a, b):
        p = self.p0
        if branch == "u":
            return p * a, p * b + a * self.kappa
        pc = p / (p - 1)
        return pc * a, pc * b + a * self.kappa / (p - 1) ** 2


def _nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Phi is defined for t >= 0")
    return t


@dataclass(frozen=True)
class ExponentProfile:
    """sigma(t) = kappa ln ln(1/t) / ln(1/t), evaluated at min(t, t_clamp)."""

    kappa: float
    t_clamp: float = T_CLAMP

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError("sigma is defined for t > 0")
        L = np.log(1.0 / np.minimum(t, self.t_clamp))
        out = self.kappa * np.log(L) / L
        return float(out) if np.ndim(out) == 0 else out

    def log_scale(self, log_t: float) -> float:
        L = -min(log_t, math.log(self.t_clamp))
        return self.kappa * math.log(L) / L


def exponent_profile(profile: ExponentProfile, t):
    return profile(t)


def _blend(s):
    """C^3 map with value 0 and slope 1 at 0 rising to the plateau 1 at s = 2."""
    s = np.clip(s, 0.0, 2.0)
    x = s / 2.0
    return s - 2.0 * (x ** 6 - 3.0 * x ** 5 + 2.5 * x ** 4)


def exponent_warp(v, p_minus: float, p0: float, p_plus: float):
    """Identity on [(p-+p0)/2, (p++p0)/2], blending onto (3p-+p0)/4 and (3p++p0)/4."""
    v = np.asarray(v, dtype=float)
    lo_id, hi_id = (p_minus + p0) / 2, (p_plus + p0) / 2
    lo_cap, hi_cap = (3 * p_minus + p0) / 4, (3 * p_plus + p0) / 4
    up, down = hi_cap - hi_id, lo_id - lo_cap
    out = np.where(v > hi_id, hi_id + up * _blend((v - hi_id) / up), v)
    out = np.where(v < lo_id, lo_id - down * _blend((lo_id - v) / down), out)
    return float(out) if np.ndim(out) == 0 else out


class BoundModel:
    """A model attached to a separator field, evaluated on point arrays."""

    def __init__(self, model: OrliczModel, rho: ScalarField, axes: int):
        self.model = model
        self.rho = rho
        self.axes = axes

    def _inputs(self, points):
        pts = as_points(points, self.rho.N)
        return self.rho.value(pts), np.sqrt((pts[:, self.axes:] ** 2).sum(axis=1))

    def phi(self, points, t):
        rho, xhat = self._inputs(points)
        return self.model.phi(t, rho, xhat)

    def phi_conjugate(self, points, s):
        rho, xhat = self._inputs(points)
        return self.model.phi_conjugate(s, rho, xhat)[0]

    def coefficient(self, points):
        rho, xhat = self._inputs(points)
        return self.model.coefficient(rho, xhat)


MODEL_FAMILIES = {
    "double-phase": DoublePhase,
    "borderline": Borderline,
    "variable-exponent": VariableExponent,
}


def model_from_dict(data: dict) -> OrliczModel:
    data = dict(data)
    family = data.pop("family", None)
    if family not in MODEL_FAMILIES:
        raise ValueError(f"unknown model family {family!r}")
    return MODEL_FAMILIES[family](**data)


def fit_growth_exponents(model: OrliczModel, rho: float, xhat: float,
                         t_range: tuple[float, float] = (1e2, 1e8)) -> float:
    """Log-log slope of Phi(x, .) over a range of large t."""
    ts = np.geomspace(*t_range, 25)
    vals = model.phi(ts, rho, xhat)
    return float(np.polyfit(np.log(ts), np.log(vals), 1)[0])


def log_sum(*terms: float) -> float:
    return float(logsumexp(terms))


def convexity_scan(model: OrliczModel, t_grid=None, rho_grid=(0.0, 0.5, 1.0), xhat_grid=(1e-6, 1e-3, 0.1)) -> dict:
    """Sample points where Phi'(x, .) decreases, i.e. where Phi fails to be convex.

    The conjugate is still defined as a sup there; this only reports.
    """
    ts = np.geomspace(1e-6, 1e6, 241) if t_grid is None else np.asarray(t_grid, dtype=float)
    bad = []
    for rho in rho_grid:
        for xhat in xhat_grid:
            d = np.diff(model.phi_prime(ts, rho, xhat))
            for i in np.nonzero(d < -1e-12 * np.abs(d).max())[0]:
                bad.append({"rho": rho, "xhat": xhat, "t": float(ts[i])})
    return {"convex_on_samples": not bad, "violations": bad[:20], "violation_count": len(bad),
            "samples": len(rho_grid) * len(xhat_grid) * ts.size}
