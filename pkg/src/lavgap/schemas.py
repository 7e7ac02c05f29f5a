"""Request and response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .models import Borderline, DoublePhase, OrliczModel, VariableExponent
from .verify import VerifyConfig

Family = Literal["double-phase", "borderline", "variable-exponent"]

REQUIRED = {
    "double-phase": ("p", "q", "alpha"),
    "borderline": ("p0", "alpha", "beta", "kappa"),
    "variable-exponent": ("p_minus", "p_plus", "p0", "kappa"),
}
OPTIONAL = {"double-phase": ("p0",), "borderline": ("t_clamp",), "variable-exponent": ("t_clamp",)}


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Family
    p: float | None = None
    q: float | None = None
    alpha: float | None = None
    beta: float | None = None
    kappa: float | None = None
    p0: float | None = None
    p_minus: float | None = None
    p_plus: float | None = None
    t_clamp: float = 1e-2

    @model_validator(mode="after")
    def _required(self):
        missing = [name for name in REQUIRED[self.family] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.family} model needs {', '.join(missing)}")
        return self

    def build(self) -> OrliczModel:
        if self.family == "double-phase":
            return DoublePhase(self.p, self.q, self.alpha)
        if self.family == "borderline":
            return Borderline(self.p0, self.alpha, self.beta, self.kappa, self.t_clamp)
        return VariableExponent(self.p_minus, self.p_plus, self.p0, self.kappa, self.t_clamp)

    def parameters(self) -> tuple[str, ...]:
        """Names of the fields this family reads."""
        return REQUIRED[self.family] + OPTIONAL[self.family]

    def planning_p0(self) -> float | None:
        """Explicit p0 for double phase (otherwise p is used)."""
        return self.p0 if self.family == "double-phase" else None


class QuadratureConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    atom_depth: int | None = None
    distance_depth: int | None = None
    finite_samples: int = 4000
    disjoint_samples: int = 1_000_000
    face_levels: int = 10
    face_panels: int | None = None
    face_order: int = 8
    face_uniform_panels: int | None = None
    energy_levels: int = 8
    energy_panels: int = 4
    energy_order: int = 4
    table_levels: int = 14
    table_panels: int = 2
    table_order: int = 8
    reduced_fit_levels: int = 14


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pairing: float | None = None
    table: float = 1e-2
    stokes: float = 1e-3


class RunConfig(BaseModel):
    """Everything a run needs; echoed into every artifact."""

    model_config = ConfigDict(extra="forbid")

    command: str = "verify"
    model: ModelConfig
    N: int = Field(ge=2)
    k: int = Field(ge=1)
    setup: int | Literal["auto"] = "auto"
    gamma: float | None = None
    seed: int = 0
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    extras: list[Literal["table", "stokes", "gap", "assumption", "continuity"]] = Field(default_factory=list)
    sweep_param: str = "q"
    sweep_range: str | None = None
    t_grid: list[float] | None = None
    outputs: dict[str, str] = Field(default_factory=dict)

    @field_validator("setup")
    @classmethod
    def _setup(cls, v):
        if v != "auto" and v not in (1, 2, 3, 4, 5):
            raise ValueError("setup must be auto or 1..5")
        return v

    @model_validator(mode="after")
    def _degrees(self):
        if not 1 <= self.k <= self.N - 1:
            raise ValueError(f"need 1 <= k <= N-1, got N={self.N}, k={self.k}")
        return self

    def verify_config(self) -> VerifyConfig:
        q = self.quadrature.model_dump()
        return VerifyConfig(seed=self.seed, pairing_tol=self.tolerances.pairing,
                            table_tol=self.tolerances.table, stokes_tol=self.tolerances.stokes, **q)


def parse_range(text: str) -> list[float]:
    """'a:b:step' -> [a, a+step, ..., b] with b included up to rounding."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"range must look like start:stop:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise ValueError("range needs step > 0 and stop >= start")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


class CantorRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["generalized", "meager"] = "generalized"
    lam: float | None = 0.25
    gamma: float = 0.0
    power: int = 1
    depth: int = 6
    t_min: float = 1e-6
    t_max: float = 1e-2
    seed: int = 0
    include_generation: bool = False


class SelftestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cases: int = 1000
    seed: int = 0
    max_N: int = 6


class ErrorResponse(BaseModel):
    error: str
    detail: Any = None
