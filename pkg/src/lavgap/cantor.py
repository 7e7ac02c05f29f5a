"""Generalized and meager Cantor sets, their Cartesian powers and measures.

A Cantor set here lives in [-1/2, 1/2]: from every interval of generation j
(length l_j) the open middle gap of length l_j - 2 l_{j+1} is removed.
Endpoints of every generation stay in the set forever, which is what makes
the per-axis distance exact in gaps and outside the hull.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

AUTO_REINDEX_LIMIT = 10_000
LOG_TINY = -700.0
UNDERFLOW = "length below double precision"


def _raw_log_length(family: str, lam: float, gamma: float, j: float) -> float:
    if family == "generalized":
        if j == 0:
            return 0.0
        return j * math.log(lam) + gamma * math.log(j)
    return -(2.0 ** (j / gamma))


@dataclass(frozen=True)
class IntervalGeneration:
    depth: int
    left: np.ndarray
    right: np.ndarray

    @property
    def length(self) -> float:
        return float(self.right[0] - self.left[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["depth", "a", "b"])
        for a, b in zip(self.left, self.right):
            writer.writerow([self.depth, repr(float(a)), repr(float(b))])
        return buf.getvalue()


@dataclass(frozen=True)
class MeasureAtoms:
    depth: int
    positions: np.ndarray  # (n, power)
    weights: np.ndarray    # (n,)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


class CantorSpec:
    """Parameters of a (power of a) generalized or meager Cantor set.

    ``reindex`` may be an integer j0 or ``"auto"``, in which case the smallest
    j0 whose shifted sequence satisfies both the halving condition and gap
    monotonicity up to ``max_depth`` is selected.
    """

    def __init__(
        self,
        family: Literal["generalized", "meager"],
        gamma: float = 0.0,
        lam: float | None = None,
        power: int = 1,
        reindex: int | Literal["auto"] = "auto",
        max_depth: int | None = None,
    ):
        if family not in ("generalized", "meager"):
            raise ValueError(f"unknown Cantor family {family!r}")
        if family == "generalized":
            if lam is None or not 0.0 < lam < 0.5:
                raise ValueError("generalized Cantor sets need lambda in (0, 1/2)")
        else:
            if gamma <= 0:
                raise ValueError("meager Cantor sets need gamma > 0")
            lam = 0.0
        if power < 1:
            raise ValueError("power must be a positive integer")
        self.family = family
        self.lam = float(lam)
        self.gamma = float(gamma)
        self.power = int(power)
        self.max_depth = int(max_depth if max_depth is not None else (24 if family == "generalized" else 8))
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if reindex == "auto":
            self.reindex = self._find_reindex()
        else:
            self.reindex = int(reindex)
            if self.reindex < 0:
                raise ValueError("reindex offset must be nonnegative")
            bad = self._first_violation(self.reindex)
            if bad is not None:
                raise ValueError(f"length sequence violates {bad[1]} at j={bad[0]}")
        self._lengths = np.array([math.exp(self.log_length(j)) for j in range(self.max_depth + 2)])

    # -- length sequence ---------------------------------------------------

    def _raw(self, j: float) -> float:
        return _raw_log_length(self.family, self.lam, self.gamma, j)

    def _first_violation(self, j0: int) -> tuple[int, str] | None:
        if self.family == "generalized" and self.gamma != 0 and j0 == 0:
            # j^gamma is singular at j = 0, so the sequence must be shifted
            return (0, "l_0 = 0^gamma is undefined")
        logs = [self._raw(j0 + j) - self._raw(j0) for j in range(self.max_depth + 3)]
        # entries past max_depth only enter comparisons, where 0 is harmless
        for j, v in enumerate(logs[:self.max_depth + 1]):
            if v < LOG_TINY:
                return (j, UNDERFLOW)
        ls = [math.exp(v) for v in logs]
        for j in range(1, self.max_depth + 2):
            if not logs[j - 1] > logs[j] + math.log(2.0):
                return (j, "l_{j-1} > 2 l_j")
        for j in range(1, self.max_depth + 1):
            if not ls[j - 1] - 2 * ls[j] > ls[j] - 2 * ls[j + 1]:
                return (j, "gap monotonicity")
        return None

    def _find_reindex(self) -> int:
        for j0 in range(AUTO_REINDEX_LIMIT):
            bad = self._first_violation(j0)
            if bad is None:
                return j0
            if bad[1] == UNDERFLOW:
                # shifting only shrinks the lengths further
                raise ValueError(f"l_{bad[0]} underflows double precision; lower max_depth")
        raise ValueError("no admissible reindexing offset found for this length sequence")

    def log_length(self, j: float) -> float:
        """log of the reindexed length; ``j`` may be any real >= 0."""
        return self._raw(j + self.reindex) - self._raw(self.reindex)

    def length(self, j: int) -> float:
        if not 0 <= j <= self.max_depth + 1:
            raise ValueError(f"depth {j} outside 0..{self.max_depth}")
        return float(self._lengths[j])

    @property
    def dimension(self) -> float:
        """Fractal dimension of the power set (0 for meager sets)."""
        if self.family == "meager":
            return 0.0
        return -self.power * math.log(2.0) / math.log(self.lam)

    @property
    def axes(self) -> int:
        return self.power

    def describe(self) -> dict:
        return {
            "family": self.family,
            "lambda": self.lam if self.family == "generalized" else None,
            "gamma": self.gamma,
            "power": self.power,
            "reindex": self.reindex,
            "max_depth": self.max_depth,
            "dimension": self.dimension,
        }

    # -- generations and atoms --------------------------------------------

    def _check_depth(self, m: int) -> None:
        if not 0 <= m <= self.max_depth:
            raise ValueError(f"depth {m} outside 0..{self.max_depth}")

    def generation(self, m: int) -> IntervalGeneration:
        self._check_depth(m)
        left = np.array([-0.5])
        for j in range(m):
            shift = self._lengths[j] - self._lengths[j + 1]
            left = np.concatenate([left, left + shift])
            left.sort()
        return IntervalGeneration(m, left, left + self._lengths[m])

    def axis_atoms(self, m: int) -> np.ndarray:
        """Per-axis atom positions: the endpoint each interval shares with its parent.

        These points belong to the Cantor set, so distances to atoms bound the
        distance to the set from above.
        """
        self._check_depth(m)
        atoms = np.array([-0.5])
        left = np.array([-0.5])
        for j in range(m):
            shift = self._lengths[j] - self._lengths[j + 1]
            right_child_right = left + self._lengths[j]
            order = np.argsort(np.concatenate([left, left + shift]))
            atoms = np.concatenate([left, right_child_right])[order]
            left = np.concatenate([left, left + shift])[order]
        return atoms

    def atoms(self, m: int) -> MeasureAtoms:
        axis = self.axis_atoms(m)
        w = 2.0 ** (-m)
        grids = np.meshgrid(*([axis] * self.power), indexing="ij")
        positions = np.stack([g.reshape(-1) for g in grids], axis=1)
        weights = np.full(positions.shape[0], w ** self.power)
        return MeasureAtoms(m, positions, weights)

    # -- distances -----------------------------------------------------------

    def axis_distance(self, x, depth: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Distance of each coordinate to the 1-D set, plus the sign of x - nearest point.

        Exact in gaps and outside the hull; inside a surviving interval of the
        last generation the distance to its nearer endpoint is returned, which
        overestimates by at most half the final length.
        """
        depth = self.max_depth if depth is None else depth
        self._check_depth(depth)
        x = np.asarray(x, dtype=float)
        lo = np.full(x.shape, -0.5)
        dist = np.full(x.shape, np.nan)
        sign = np.zeros(x.shape)
        hi = lo + 1.0
        below, above = x <= lo, x >= hi
        dist[below], sign[below] = lo[below] - x[below], -1.0
        dist[above], sign[above] = x[above] - hi[above], 1.0
        active = ~(below | above)
        for j in range(depth):
            if not active.any():
                break
            child = self._lengths[j + 1]
            gap_lo = lo + child
            gap_hi = lo + self._lengths[j] - child
            in_gap = active & (x > gap_lo) & (x < gap_hi)
            to_left = x - gap_lo
            to_right = gap_hi - x
            near_left = in_gap & (to_left <= to_right)
            near_right = in_gap & ~(to_left <= to_right)
            dist[near_left], sign[near_left] = to_left[near_left], 1.0
            dist[near_right], sign[near_right] = to_right[near_right], -1.0
            active &= ~in_gap
            go_right = active & (x >= gap_hi)
            lo = np.where(go_right, gap_hi, lo)
        if active.any():
            length = self._lengths[depth]
            a = lo[active]
            xa = x[active]
            dl, dr = xa - a, a + length - xa
            dist[active] = np.minimum(dl, dr)
            sign[active] = np.where(dl <= dr, 1.0, -1.0)
        return dist, sign

    def distance(self, points, depth: int | None = None) -> np.ndarray:
        d, _ = self.distance_and_gradient(points, depth)
        return d

    def distance_and_gradient(self, points, depth: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :] if self.power > 1 or pts.size == 1 else pts[:, None]
        if pts.shape[1] != self.power:
            raise ValueError(f"points must have {self.power} coordinates")
        d_axis, s_axis = self.axis_distance(pts, depth)
        dist = np.sqrt((d_axis ** 2).sum(axis=1))
        with np.errstate(invalid="ignore", divide="ignore"):
            grad = np.where(dist[:, None] > 0, d_axis * s_axis / dist[:, None], 0.0)
        return dist, grad

    def distance_error_bound(self, depth: int | None = None) -> float:
        depth = self.max_depth if depth is None else depth
        return float(self._lengths[depth]) * math.sqrt(self.power) / 2

    # -- measure diagnostics -------------------------------------------------

    def ball_mass(self, center, r: float, depth: int) -> float:
        """Mass of the depth-m atomic measure inside the open Euclidean ball."""
        self._check_depth(depth)
        center = np.atleast_1d(np.asarray(center, dtype=float))
        axis = self.axis_atoms(depth)
        w = 2.0 ** (-depth)
        near = [axis[np.abs(axis - c) < r] - c for c in center]
        if any(v.size == 0 for v in near):
            return 0.0
        grids = np.meshgrid(*near, indexing="ij")
        sq = sum(g ** 2 for g in grids)
        return float(np.count_nonzero(sq < r * r)) * w ** self.power

    def neighborhood_volume_1d(self, t: float, depth: int) -> float:
        gen = self.generation(depth)
        gaps = gen.left[1:] - gen.right[:-1]
        span = gen.right[-1] - gen.left[0] + 2 * t
        return float(span - np.clip(gaps - 2 * t, 0.0, None).sum())

    def neighborhood_volume(self, t: float, depth: int | None = None) -> dict:
        """Lebesgue measure of the t-neighborhood, with the analytic bound shape.

        For power 1 the value is exact for the depth-m pre-Cantor set.  For
        higher powers the Euclidean neighborhood is bracketed between products
        of one-dimensional neighborhoods of radius t/sqrt(m) and t.
        """
        if t <= 0:
            raise ValueError("t must be positive")
        depth = self.max_depth if depth is None else depth
        one = self.neighborhood_volume_1d(t, depth)
        if self.power == 1:
            upper = lower = one
        else:
            upper = one ** self.power
            lower = self.neighborhood_volume_1d(t / math.sqrt(self.power), depth) ** self.power
        return {
            "t": t,
            "depth": depth,
            "numeric": upper,
            "numeric_lower": lower,
            "analytic_shape": self.volume_bound_shape(t),
            "analytic_shape_alt": self.volume_bound_shape(t, meager_log_power="dimension"),
        }

    def volume_bound_shape(self, t: float, meager_log_power: str = "power") -> float:
        """t^(m - D) (ln 1/t)^r without its constant.

        For generalized sets r = gamma D.  For meager sets the logarithmic
        power is ambiguous between gamma m and gamma D (= 0); ``meager_log_power``
        picks one.
        """
        m = self.power
        L = math.log(1.0 / t)
        if self.family == "generalized":
            return t ** (m - self.dimension) * L ** (self.gamma * self.dimension)
        r = self.gamma * m if meager_log_power == "power" else 0.0
        return t ** m * L ** r

    def mass_bound_shape(self, t: float) -> float:
        L = math.log(1.0 / t)
        if self.family == "generalized":
            return t ** self.dimension * L ** (-self.gamma * self.dimension)
        return L ** (-self.gamma * self.power)

    # -- continuous scale model used by the reduced integrals ---------------

    def level_for_log_scale(self, log_t: float) -> float:
        """Real generation index j with l_j = 2t (t given through its log)."""
        target = log_t + math.log(2.0)
        if target >= 0.0:
            return 0.0
        lo, hi = 0.0, 1.0
        while self.log_length(hi) > target:
            lo, hi = hi, hi * 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.log_length(mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    def log_neighborhood_model(self, log_t: float) -> tuple[float, float]:
        """(log |C_t|, log sup mu(B_t)) from the covering by 2^(mj) cubes of side 4t."""
        j = self.level_for_log_scale(log_t)
        m = self.power
        log_vol = m * (j * math.log(2.0) + math.log(4.0) + log_t)
        log_mass = -m * j * math.log(2.0)
        return min(log_vol, m * math.log(1.0 + 2.0 * math.exp(min(log_t, 50.0)))), log_mass


class PointSet:
    """The degenerate contact set {0} in R^m."""

    family = "point"

    def __init__(self, power: int):
        self.power = int(power)
        self.max_depth = 0
        self.gamma = 0.0
        self.lam = 0.0
        self.reindex = 0

    @property
    def dimension(self) -> float:
        return 0.0

    @property
    def axes(self) -> int:
        return self.power

    def describe(self) -> dict:
        return {"family": "point", "power": self.power, "dimension": 0.0}

    def distance_and_gradient(self, points, depth: int | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.power == 1 else pts[None, :]
        dist = np.sqrt((pts ** 2).sum(axis=1))
        with np.errstate(invalid="ignore", divide="ignore"):
            grad = np.where(dist[:, None] > 0, pts / dist[:, None], 0.0)
        return dist, grad

    def distance(self, points, depth: int | None = None) -> np.ndarray:
        return self.distance_and_gradient(points)[0]

    def distance_error_bound(self, depth: int | None = None) -> float:
        return 0.0

    def atoms(self, m: int = 0) -> MeasureAtoms:
        return MeasureAtoms(0, np.zeros((1, self.power)), np.ones(1))

    def log_neighborhood_model(self, log_t: float) -> tuple[float, float]:
        m = self.power
        unit_ball = math.pi ** (m / 2) / math.gamma(m / 2 + 1)
        return math.log(unit_ball) + m * log_t, 0.0


def depth_for_scale(spec: CantorSpec, t: float) -> int:
    """Smallest depth whose interval length is below t / 16, capped at max_depth."""
    for j in range(spec.max_depth + 1):
        if spec.length(j) < t / 16:
            return j
    return spec.max_depth


def neighborhood_slope(spec: CantorSpec, t_range: tuple[float, float] = (1e-6, 1e-2),
                       samples: int = 41, depth: int | None = None) -> dict:
    """Least-squares log-log slope of |K_t| against t, with the expected m - D."""
    ts = np.geomspace(*t_range, samples)
    depth = depth_for_scale(spec, t_range[0]) if depth is None else depth
    rows = [spec.neighborhood_volume(float(t), depth) for t in ts]
    upper = np.log([r["numeric"] for r in rows])
    lower = np.log([r["numeric_lower"] for r in rows])
    slope = float(np.polyfit(np.log(ts), upper, 1)[0])
    slope_lower = float(np.polyfit(np.log(ts), lower, 1)[0])
    return {
        "t_range": list(t_range),
        "depth": depth,
        "slope": slope,
        "slope_lower": slope_lower,
        "expected": spec.power - spec.dimension,
        "t": ts.tolist(),
        "volume": np.exp(upper).tolist(),
    }


def ball_mass_constant(spec: CantorSpec, t_range: tuple[float, float] = (1e-6, 1e-2),
                       samples: int = 41, centers: int = 200, depth: int | None = None,
                       seed: int = 0) -> dict:
    """Fit C in mu(B_t(x)) <= C t^D (ln 1/t)^(-r) over sampled centers and radii.

    Centers are atoms of the measure (where the mass concentrates) plus
    uniform points of the hull.  ``drift`` is the log-log slope of the
    per-radius maxima of the ratio; a bound with the right exponent has no
    drift.
    """
    rng = np.random.default_rng(seed)
    ts = np.geomspace(*t_range, samples)
    depth = depth_for_scale(spec, t_range[0]) if depth is None else depth
    m = spec.power
    grid = spec.atoms(min(depth, max(1, 16 // m))).positions
    picks = grid[rng.integers(0, grid.shape[0], centers // 2)]
    uniform = rng.uniform(-0.5, 0.5, size=(centers - centers // 2, m))
    pts = np.vstack([picks, uniform])
    per_t = []
    for t in ts:
        shape = spec.mass_bound_shape(float(t))
        per_t.append(max(spec.ball_mass(c, float(t), depth) for c in pts) / shape)
    per_t = np.array(per_t)
    drift = float(np.polyfit(np.log(ts), np.log(per_t), 1)[0])
    return {
        "constant": float(per_t.max()),
        "min_ratio": float(per_t.min()),
        "drift": drift,
        "depth": depth,
        "centers": int(pts.shape[0]),
        "t": ts.tolist(),
        "ratios": per_t.tolist(),
    }
