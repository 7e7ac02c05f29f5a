"""Choose the contact-set geometry and form roles for a given regime.

``plan_setup`` picks one of five setups from p0 against the critical value
N/k.  ``check_model_conditions`` evaluates the per-family admissibility
inequalities for a plan and returns the admissible range of the shrinking
parameter gamma.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

from .cantor import CantorSpec, PointSet
from .models import Borderline, DoublePhase, OrliczModel, VariableExponent

EQUALITY_TOL = 1e-12

SETUP_NAMES = {
    1: "point singularity",
    2: "supercritical",
    3: "subcritical",
    4: "right limiting",
    5: "left limiting",
}


@dataclass(frozen=True)
class GammaInterval:
    """Open interval of admissible gamma values; infinite ends allowed."""

    lower: float = -math.inf
    upper: float = math.inf

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper

    def contains(self, gamma: float) -> bool:
        return self.lower < gamma < self.upper

    def intersect(self, lower: float = -math.inf, upper: float = math.inf) -> "GammaInterval":
        return GammaInterval(max(self.lower, lower), min(self.upper, upper))

    def default_choice(self) -> float | None:
        if self.empty:
            return None
        lo, hi = self.lower, self.upper
        if math.isinf(lo) and math.isinf(hi):
            return 0.0
        if math.isinf(lo):
            return hi - 1.0
        if math.isinf(hi):
            return lo + 1.0
        return 0.5 * (lo + hi)

    def to_dict(self) -> dict:
        return {
            "lower": None if math.isinf(self.lower) else self.lower,
            "upper": None if math.isinf(self.upper) else self.upper,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GammaInterval":
        lo, hi = data.get("lower"), data.get("upper")
        return cls(-math.inf if lo is None else lo, math.inf if hi is None else hi)


@dataclass(frozen=True)
class RoleMap:
    """Which scaffold form plays u and which plays A."""

    u_form: Literal["cutoff", "convolved"]
    a_form: Literal["cutoff", "convolved"]
    a_sign: int
    separator: Literal["rho", "one_minus_rho"]
    cantor_axes: int
    cutoff_constant: float


@dataclass(frozen=True)
class SetupPlan:
    setup: int
    N: int
    k: int
    p0: float
    dimension: float
    lam: float
    gamma: float
    admissible_gamma: GammaInterval
    contact_family: Literal["point", "generalized", "meager"]
    roles: RoleMap

    @property
    def name(self) -> str:
        return SETUP_NAMES[self.setup]

    @property
    def cantor_axes(self) -> int:
        return self.roles.cantor_axes

    def with_gamma(self, gamma: float, interval: GammaInterval | None = None) -> "SetupPlan":
        return replace(self, gamma=float(gamma),
                       admissible_gamma=interval if interval is not None else self.admissible_gamma)

    def contact_set(self, max_depth: int | None = None) -> CantorSpec | PointSet:
        m = self.cantor_axes
        if self.contact_family == "point":
            return PointSet(m)
        if self.contact_family == "generalized":
            return CantorSpec("generalized", gamma=self.gamma, lam=self.lam, power=m, max_depth=max_depth)
        return CantorSpec("meager", gamma=self.gamma, power=m, max_depth=max_depth)

    def to_dict(self) -> dict:
        return {
            "setup": self.setup,
            "name": self.name,
            "N": self.N,
            "k": self.k,
            "p0": self.p0,
            "dimension": self.dimension,
            "lam": self.lam,
            "gamma": self.gamma,
            "admissible_gamma": self.admissible_gamma.to_dict(),
            "contact_family": self.contact_family,
            "cantor_axes": self.cantor_axes,
            "roles": asdict(self.roles),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SetupPlan":
        return cls(
            setup=int(data["setup"]),
            N=int(data["N"]),
            k=int(data["k"]),
            p0=float(data["p0"]),
            dimension=float(data["dimension"]),
            lam=float(data["lam"]),
            gamma=float(data["gamma"]),
            admissible_gamma=GammaInterval.from_dict(data["admissible_gamma"]),
            contact_family=data["contact_family"],
            roles=RoleMap(**data["roles"]),
        )


class PlanError(ValueError):
    """A requested setup is incompatible with the regime."""


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= EQUALITY_TOL * max(1.0, abs(a), abs(b))


def _roles(setup: int, N: int, k: int) -> RoleMap:
    if setup in (2, 4):
        return RoleMap("convolved", "cutoff", (-1) ** (k * (N - k)), "one_minus_rho", k, 4.0)
    return RoleMap("cutoff", "convolved", 1, "rho", N - k, 1.0 if setup == 1 else 4.0)


def auto_setup(p0: float, N: int, k: int) -> int:
    critical = N / k
    if _near(p0, critical):
        return 1
    return 2 if p0 > critical else 3


def plan_setup(p0: float, N: int, k: int, preference: int | Literal["auto"] = "auto",
               gamma: float | None = None) -> SetupPlan:
    """Build the plan for exponent p0 in R^N with k-forms.

    Auto mode compares p0 with N/k.  Setups 4 and 5 can only be forced and
    only at p0 = N/k.  Without a model the admissible gamma range is as wide
    as the contact family allows; ``plan_for_model`` narrows it.
    """
    if not 1 <= k <= N - 1:
        raise PlanError(f"need 1 <= k <= N-1, got N={N}, k={k}")
    if p0 <= 1:
        raise PlanError(f"need p0 > 1, got {p0}")
    natural = auto_setup(p0, N, k)
    setup = natural if preference == "auto" else int(preference)
    if setup not in SETUP_NAMES:
        raise PlanError(f"unknown setup {setup}")
    critical = N / k
    if setup in (4, 5):
        if natural != 1:
            raise PlanError(f"setup {setup} needs p0 = N/k = {critical:g}, got p0 = {p0:g}")
    elif setup != natural:
        relation = {1: "p0 = N/k", 2: "p0 > N/k", 3: "p0 < N/k"}[setup]
        raise PlanError(f"setup {setup} needs {relation} (N/k = {critical:g}), got p0 = {p0:g}")

    roles = _roles(setup, N, k)
    if setup == 1:
        dimension, lam, family, interval = 0.0, 0.0, "point", GammaInterval()
    elif setup == 2:
        dimension = (p0 * k - N) / (p0 - 1)
        lam = 2.0 ** (-k / dimension)
        family, interval = "generalized", GammaInterval()
    elif setup == 3:
        dimension = N - p0 * k
        lam = 2.0 ** (-(N - k) / dimension)
        family, interval = "generalized", GammaInterval()
    else:
        dimension, lam, family, interval = 0.0, 0.0, "meager", GammaInterval(0.0, math.inf)
    if family == "generalized" and lam == 0.0:
        raise PlanError(f"p0 = {p0:g} is too close to N/k = {critical:g}: "
                        f"the Cantor ratio 2^(-m/D) underflows (D = {dimension:.3g})")
    if gamma is None:
        gamma = 0.0 if family != "meager" else 1.0
    return SetupPlan(setup, N, k, float(p0), dimension, lam, float(gamma), interval, family, roles)


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class Constraint:
    name: str
    expression: str
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConditionCheck:
    verdict: Literal["admissible", "inadmissible"]
    gamma_interval: GammaInterval
    violated: list[str]
    constraints: list[Constraint]
    notes: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.verdict == "admissible"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "gamma_interval": self.gamma_interval.to_dict(),
            "violated": list(self.violated),
            "constraints": [c.to_dict() for c in self.constraints],
            "notes": list(self.notes),
        }


class _Checker:
    def __init__(self, base: GammaInterval):
        self.interval = base
        self.constraints: list[Constraint] = []

    def require(self, name: str, expression: str, holds: bool) -> None:
        self.constraints.append(Constraint(name, expression, bool(holds)))

    def gamma_window(self, name: str, scale: float, lower: float, upper: float, label: str) -> None:
        """Record lower < scale * gamma < upper."""
        if scale == 0:
            holds = lower < 0 < upper
            self.require(name, f"{lower:g} < 0 < {upper:g}", holds)
            if not holds:
                self.interval = GammaInterval(0.0, 0.0)
            return
        lo, hi = lower / scale, upper / scale
        if scale < 0:
            lo, hi = hi, lo
        self.interval = self.interval.intersect(lo, hi)
        self.require(name, f"{_fmt(lower)} < {label} < {_fmt(upper)}", not self.interval.empty)

    def gamma_below(self, name: str, bound: float) -> None:
        self.gamma_window(name, 1.0, -math.inf, bound, "gamma")

    def gamma_above(self, name: str, bound: float) -> None:
        self.gamma_window(name, 1.0, bound, math.inf, "gamma")

    def finish(self, notes: list[str]) -> ConditionCheck:
        violated = [c.name for c in self.constraints if not c.holds]
        if self.interval.empty and "gamma_interval_empty" not in violated:
            violated.append("gamma_interval_empty")
        verdict = "inadmissible" if violated else "admissible"
        return ConditionCheck(verdict, self.interval, violated, self.constraints, notes)


def _fmt(x: float) -> str:
    return "-inf" if x == -math.inf else "inf" if x == math.inf else f"{x:.6g}"


def _base_interval(plan: SetupPlan) -> GammaInterval:
    return GammaInterval(0.0, math.inf) if plan.contact_family == "meager" else GammaInterval()


def _double_phase(model: DoublePhase, plan: SetupPlan, c: _Checker) -> list[str]:
    N, k, p0 = plan.N, plan.k, plan.p0
    p, q, alpha = model.p, model.q, model.alpha
    s = plan.setup
    if s == 1:
        c.require("p_below_critical", f"p={p:g} < N/k={N / k:g}", p < N / k)
        c.require("q_above_threshold", f"N/k={N / k:g} < q - alpha/k={q - alpha / k:g}", N / k < q - alpha / k)
    else:
        c.require("p_at_most_p0", f"p={p:g} <= p0={p0:g}", p <= p0 or _near(p, p0))
        if s in (2, 4):
            threshold = p0 + alpha * (p0 - 1) / (N - k)
        else:
            threshold = p0 + alpha / k
        c.require("q_above_threshold", f"q={q:g} >= {threshold:g}", q >= threshold or _near(q, threshold))
        p_eq, q_eq = _near(p, p0), _near(q, threshold)
        if s == 3:
            if p_eq:
                c.gamma_below("gamma_at_p_equality", 1.0 / (p0 * k - N))
            if q_eq:
                c.gamma_above("gamma_at_q_equality", (q - 1) / (N - p0 * k))
        elif s == 2:
            if p_eq:
                c.gamma_above("gamma_at_p_equality", 1.0 / (p0 * k - N))
            if q_eq:
                c.gamma_below("gamma_at_q_equality", (1 - p0) / (p0 * k - N))
        elif s == 4:
            if p_eq:
                c.gamma_above("gamma_at_p_equality", 1.0 / (N - k))
            if q_eq:
                c.gamma_below("gamma_at_q_equality", -1.0 / k)
        else:
            if p_eq:
                c.gamma_below("gamma_at_p_equality", 1.0 / (k - N))
            if q_eq:
                c.gamma_above("gamma_at_q_equality", (q - 1) / (N - k))
    gap_threshold = p + alpha * max(1.0 / k, (p - 1) / (N - k))
    shifted = k - 1
    return [
        f"exponent threshold for {k}-forms with p0 = p: q > p + alpha*max(1/k, (p-1)/(N-k)) = {gap_threshold:.6g}",
        f"indexed by the degree j = {shifted} of u it reads q > p + alpha*max(1/(j+1), (p-1)/(N-j-1))",
    ]


def _borderline(model: Borderline, plan: SetupPlan, c: _Checker) -> list[str]:
    N, k, p0 = plan.N, plan.k, plan.p0
    a, b, kap = model.alpha, model.beta, model.kappa
    D = plan.dimension
    s = plan.setup
    if s == 1:
        c.require("beta_above_one", f"beta={b:g} > 1", b > 1)
        c.require("alpha_dominates", f"alpha+1={a + 1:g} > kappa+p0={kap + p0:g}", a + 1 > kap + p0)
    elif s == 2:
        c.gamma_window("gamma_window", D, (1 - b) / (p0 - 1), (a - kap - p0 + 1) / (p0 - 1), "gamma*D")
    elif s == 3:
        c.gamma_window("gamma_window", D, p0 + kap - a - 1, b - 1, "gamma*D")
    elif s == 4:
        c.require("alpha_dominates", f"alpha={a:g} > p0-1+kappa={p0 - 1 + kap:g}", a > p0 - 1 + kap)
        c.gamma_window("gamma_window", k, (1 - b) / (p0 - 1), (a - kap - p0 + 1) / (p0 - 1), "gamma*k")
    else:
        c.require("beta_above_one", f"beta={b:g} > 1", b > 1)
        c.gamma_window("gamma_window", N - k, p0 + kap - a - 1, b - 1, "gamma*(N-k)")
    # implied by every case above; recorded so the violation has a direct name
    c.require("log_powers_balanced", f"alpha+beta={a + b:g} > p0+kappa={p0 + kap:g}", model.balanced)
    return []


def _variable_exponent(model: VariableExponent, plan: SetupPlan, c: _Checker) -> list[str]:
    N, k, p0 = plan.N, plan.k, plan.p0
    kap = model.kappa
    s = plan.setup
    if s == 1:
        bound = max(k, N - k) / k ** 2
        c.require("kappa_large", f"kappa={kap:g} > {bound:g}", kap > bound)
    elif s == 2:
        bound = p0 * (p0 - 1) / (2 * (N - k))
        c.require("kappa_large", f"kappa={kap:g} > {bound:g}", kap > bound)
        c.gamma_window("gamma_window", k * p0 - N, 1 - kap * (N - k) / (p0 - 1),
                       kap * (N - k) / (p0 - 1) - (p0 - 1), "gamma*(k*p0-N)")
    elif s == 3:
        bound = p0 / (2 * k)
        c.require("kappa_large", f"kappa={kap:g} > {bound:g}", kap > bound)
        c.gamma_window("gamma_window", N - p0 * k, p0 - 1 - kap * k, kap * k - 1, "gamma*(N-p0*k)")
    elif s == 4:
        bound = N / (2 * k ** 2)
        c.require("kappa_large", f"kappa={kap:g} > {bound:g}", kap > bound)
        c.gamma_window("gamma_window", k, (k - kap * k ** 2) / (N - k), (k - N + kap * k ** 2) / (N - k), "gamma*k")
    else:
        bound = N / (2 * k ** 2)
        c.require("kappa_large", f"kappa={kap:g} > {bound:g}", kap > bound)
        c.gamma_window("gamma_window", N - k, -kap * k + (N - k) / k, kap * k - 1, "gamma*(N-k)")
    return []


def model_p0(model: OrliczModel, p0: float | None = None) -> float:
    if p0 is not None:
        return float(p0)
    if isinstance(model, DoublePhase):
        return model.p
    return float(model.p0)


def check_model_conditions(model: OrliczModel, plan: SetupPlan) -> ConditionCheck:
    """Evaluate every admissibility inequality of the model family for this plan."""
    if isinstance(model, VariableExponent) or isinstance(model, Borderline):
        if not _near(model.p0, plan.p0):
            raise PlanError(f"model p0={model.p0:g} differs from plan p0={plan.p0:g}")
    checker = _Checker(_base_interval(plan))
    if isinstance(model, DoublePhase):
        notes = _double_phase(model, plan, checker)
    elif isinstance(model, Borderline):
        notes = _borderline(model, plan, checker)
    elif isinstance(model, VariableExponent):
        notes = _variable_exponent(model, plan, checker)
    else:
        raise PlanError(f"no admissibility table for {type(model).__name__}")
    return checker.finish(notes)


def plan_for_model(model: OrliczModel, N: int, k: int, preference: int | Literal["auto"] = "auto",
                   gamma: float | None = None, p0: float | None = None) -> tuple[SetupPlan, ConditionCheck]:
    """Plan, check, and fix gamma (the given one, or the interval default)."""
    plan = plan_setup(model_p0(model, p0), N, k, preference)
    check = check_model_conditions(model, plan)
    if gamma is None:
        chosen = check.gamma_interval.default_choice()
        gamma = plan.gamma if chosen is None or plan.contact_family == "point" else chosen
    elif plan.contact_family != "point" and not check.gamma_interval.contains(gamma):
        check.violated.append("gamma_outside_interval")
        check.verdict = "inadmissible"
    plan = plan.with_gamma(gamma, check.gamma_interval)
    return plan, check
