"""Concrete differential forms built from Laplace fundamental solutions.

Points are split as x = (xbar, xhat) with xbar the first ``a`` coordinates
(the axes carrying the contact set) and xhat the remaining ``b = N - a``.

* ``cutoff_form`` (the first scaffold):
  theta(sqrt(N) C |xhat| / eta(dist(xbar, K))) * star_xhat dGamma_b(xhat),
  a (b-1)-form.
* ``convolved_form`` (the second scaffold): the atomic-measure average over
  y in K of theta(sqrt(N) |xbar - y| / eta(|xhat|)) * star_xbar dGamma_a(xbar - y),
  an (a-1)-form.
* ``separator``: theta(C |xhat| / (3 eta(dist(xbar, K)))).

Everything is vectorized: a FormField maps an (n, N) array of points to an
(n, C(N, degree)) coefficient array in the order of :func:`exterior.basis`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .cantor import CantorSpec, PointSet
from .exterior import ExteriorElement, basis, basis_position, wedge_arrays

ContactSet = CantorSpec | PointSet

ATOM_CHUNK = 2_000_000


class SingularPointError(ValueError):
    pass


def sphere_area(l: int) -> float:
    """Surface area of the unit sphere in R^l (2 for l = 1)."""
    return 2.0 * math.pi ** (l / 2) / math.gamma(l / 2)


# ---------------------------------------------------------------------------
# cutoffs

def cutoff_theta(t):
    """Quintic smoothstep rising from 0 at t = 1/4 to 1 at t = 1/2."""
    s = np.clip((np.asarray(t, dtype=float) - 0.25) * 4.0, 0.0, 1.0)
    out = s ** 3 * (s * (6.0 * s - 15.0) + 10.0)
    return float(out) if np.ndim(out) == 0 else out


def cutoff_theta_prime(t):
    t = np.asarray(t, dtype=float)
    s = np.clip((t - 0.25) * 4.0, 0.0, 1.0)
    out = 4.0 * 30.0 * s ** 2 * (s - 1.0) ** 2
    return float(out) if np.ndim(out) == 0 else out


def cutoff_eta(t):
    """C^1 concave cap: t below 1/4, 1/2 above 3/4, quadratic between."""
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 0.25, t, np.where(t >= 0.75, 0.5, 0.5 - (0.75 - t) ** 2))
    return float(out) if np.ndim(out) == 0 else out


def cutoff_eta_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 0.25, 1.0, np.where(t >= 0.75, 0.0, 2.0 * (0.75 - t)))
    return float(out) if np.ndim(out) == 0 else out


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (s * (6.0 * s - 15.0) + 10.0)


def smoothstep_prime(s):
    inside = (s > 0.0) & (s < 1.0)
    return np.where(inside, 30.0 * s ** 2 * (s - 1.0) ** 2, 0.0)


# ---------------------------------------------------------------------------
# fundamental solution

def gamma_value(l: int, r):
    r = np.asarray(r, dtype=float)
    if l == 1:
        return r / 2.0
    if l == 2:
        return np.log(r) / (2.0 * math.pi)
    return -(r ** (2 - l)) / ((l - 2) * sphere_area(l))


def star_dgamma_local(y: np.ndarray) -> np.ndarray:
    """Coefficients of star dGamma_l at points y (n, l), local (l-1)-basis order.

    The monomial omitting variable j sits at position l - j of the
    lexicographic basis and carries (-1)^(j-1) y_j / (sigma_l |y|^l).
    """
    n, l = y.shape
    r = np.sqrt((y ** 2).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = 1.0 / (sphere_area(l) * r ** l)
    out = np.empty((n, l))
    for j in range(1, l + 1):
        out[:, l - j] = (-1.0) ** (j - 1) * y[:, j - 1] * scale
    return out


def gamma_kernel(l: int, x) -> tuple[float, ExteriorElement]:
    """Value of Gamma_l and the (l-1)-vector star dGamma_l at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != l:
        raise ValueError(f"point must have {l} coordinates")
    r = float(np.sqrt((x ** 2).sum()))
    if r == 0.0:
        raise SingularPointError("Gamma is singular at the origin")
    coeffs = star_dgamma_local(x[None, :])[0]
    return float(gamma_value(l, r)), ExteriorElement.from_array(l, l - 1, coeffs)


@lru_cache(maxsize=None)
def embed_positions(N: int, offset: int, l: int) -> np.ndarray:
    """Global positions of the local (l-1)-monomials of variables offset+1..offset+l."""
    pos = basis_position(N, l - 1)
    local = basis(l, l - 1)
    return np.array([pos[tuple(offset + i for i in idx)] for idx in local], dtype=int)


def embed_local(N: int, offset: int, local: np.ndarray) -> np.ndarray:
    l = local.shape[1]
    out = np.zeros((local.shape[0], math.comb(N, l - 1)))
    out[:, embed_positions(N, offset, l)] = local
    return out


# ---------------------------------------------------------------------------
# fields

@dataclass
class ScalarField:
    N: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def __call__(self, points) -> np.ndarray:
        return self.value(as_points(points, self.N))


def as_points(points, N: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[1] != N:
        raise ValueError(f"points must have {N} coordinates, got {pts.shape[1]}")
    return pts


@dataclass
class FormField:
    """A differential form with an analytic exterior derivative.

    ``singular_distance`` returns, per point, the distance to the declared
    singular set; ``smooth_at`` optionally rejects stencils that straddle a
    nonsmooth locus of the construction (e.g. kinks of the distance function).
    """

    N: int
    degree: int
    values: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    singular_distance: Callable[[np.ndarray], np.ndarray]
    singular_set: dict
    smooth_at: Callable[[np.ndarray, float], np.ndarray] | None = None
    name: str = ""

    def __call__(self, points) -> np.ndarray:
        return self.values(as_points(points, self.N))

    def d(self, points) -> np.ndarray:
        return self.derivative(as_points(points, self.N))

    def eval(self, x) -> ExteriorElement:
        pts = as_points(x, self.N)
        if self.singular_distance(pts)[0] == 0.0:
            raise SingularPointError(f"{self.name or 'form'} is singular at {pts[0].tolist()}")
        return ExteriorElement.from_array(self.N, self.degree, self.values(pts)[0])

    def eval_derivative(self, x) -> ExteriorElement:
        pts = as_points(x, self.N)
        if self.singular_distance(pts)[0] == 0.0:
            raise SingularPointError(f"{self.name or 'form'} is singular at {pts[0].tolist()}")
        return ExteriorElement.from_array(self.N, self.degree + 1, self.derivative(pts)[0])

    def scaled(self, c: float, name: str | None = None) -> "FormField":
        return FormField(
            self.N, self.degree,
            lambda p: c * self.values(p),
            lambda p: c * self.derivative(p),
            self.singular_distance, self.singular_set, self.smooth_at,
            name or self.name,
        )

    def times(self, field: ScalarField, name: str = "") -> "FormField":
        """Pointwise product with a scalar field, derivative by the product rule."""
        if field.gradient is None:
            raise ValueError("scalar field needs a gradient")

        def values(p):
            return field.value(p)[:, None] * self.values(p)

        def derivative(p):
            grad = field.gradient(p)
            return (wedge_arrays(self.N, 1, self.degree, grad, self.values(p))
                    + field.value(p)[:, None] * self.derivative(p))

        return FormField(self.N, self.degree, values, derivative,
                         self.singular_distance, self.singular_set, self.smooth_at, name)

    def minus(self, other: "FormField", name: str = "") -> "FormField":
        return FormField(
            self.N, self.degree,
            lambda p: self.values(p) - other.values(p),
            lambda p: self.derivative(p) - other.derivative(p),
            lambda p: np.minimum(self.singular_distance(p), other.singular_distance(p)),
            self.singular_set, self.smooth_at, name,
        )


def _split(points: np.ndarray, a: int) -> tuple[np.ndarray, np.ndarray]:
    return points[:, :a], points[:, a:]


def _contact_singular_distance(contact: ContactSet, a: int, depth: int | None):
    def dist(points):
        xbar, xhat = _split(points, a)
        d = contact.distance(xbar, depth)
        return np.sqrt(d ** 2 + (xhat ** 2).sum(axis=1))
    return dist


def _nearest_point(contact: ContactSet, xbar: np.ndarray, depth: int | None) -> np.ndarray:
    if isinstance(contact, PointSet):
        return np.zeros_like(xbar)
    d_axis, s_axis = contact.axis_distance(xbar, depth)
    return xbar - s_axis * d_axis


def _stencil_same_projection(contact: ContactSet, a: int, depth: int | None):
    """True where the nearest point of K is the same across a +-2h stencil."""

    def smooth(points, h):
        xbar = points[:, :a]
        base = _nearest_point(contact, xbar, depth)
        ok = np.ones(points.shape[0], dtype=bool)
        for i in range(points.shape[1]):
            for step in (-2 * h, -h, h, 2 * h):
                shifted = points.copy()
                shifted[:, i] += step
                other = _nearest_point(contact, shifted[:, :a], depth)
                ok &= np.all(np.abs(other - base) <= 1e-12, axis=1)
        return ok

    return smooth


def cutoff_form(N: int, a: int, contact: ContactSet, C: float = 4.0,
                depth: int | None = None, name: str = "") -> FormField:
    """theta(sqrt(N) C |xhat| / eta(d)) star_xhat dGamma_b(xhat); degree b - 1."""
    b = N - a
    if not 1 <= a <= N - 1:
        raise ValueError("need 1 <= a <= N-1")
    if contact.axes != a:
        raise ValueError(f"contact set has {contact.axes} axes, expected {a}")
    root = math.sqrt(N) * C

    def parts(points):
        xbar, xhat = _split(points, a)
        r = np.sqrt((xhat ** 2).sum(axis=1))
        d, grad_d = contact.distance_and_gradient(xbar, depth)
        eta = cutoff_eta(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(eta > 0, root * r / eta, np.inf)
        th = cutoff_theta(np.where(np.isfinite(arg), arg, 1.0))
        kernel = np.zeros((points.shape[0], b))
        live = th > 0
        kernel[live] = star_dgamma_local(xhat[live])
        return r, d, grad_d, eta, arg, th, kernel

    def values(points):
        *_, th, kernel = parts(points)
        return embed_local(N, a, th[:, None] * kernel)

    def derivative(points):
        xbar, xhat = _split(points, a)
        r, d, grad_d, eta, arg, th, kernel = parts(points)
        thp = np.where(np.isfinite(arg), cutoff_theta_prime(np.where(np.isfinite(arg), arg, 1.0)), 0.0)
        n = points.shape[0]
        darg = np.zeros((n, N))
        live = thp > 0
        if live.any():
            rl, el = r[live], eta[live]
            darg[live, a:] = root * xhat[live] / (rl * el)[:, None]
            darg[live, :a] = -(root * rl * cutoff_eta_prime(d[live]) / el ** 2)[:, None] * grad_d[live]
        omega = embed_local(N, a, kernel)
        return wedge_arrays(N, 1, b - 1, thp[:, None] * darg, omega)

    return FormField(
        N, b - 1, values, derivative,
        _contact_singular_distance(contact, a, depth),
        {"contact": contact.describe(), "axes": a},
        None if isinstance(contact, PointSet) else _stencil_same_projection(contact, a, depth),
        name or f"cutoff_form(N={N}, a={a})",
    )


def _expand_windows(axis_atoms: np.ndarray, xbar: np.ndarray, radius: np.ndarray):
    """All (point, atom multi-index) pairs with every |xbar_i - y_i| < radius."""
    pid = np.arange(xbar.shape[0])
    idx = np.zeros((xbar.shape[0], 0), dtype=int)
    for axis in range(xbar.shape[1]):
        c = xbar[pid, axis]
        R = radius[pid]
        lo = np.searchsorted(axis_atoms, c - R, side="right")
        hi = np.searchsorted(axis_atoms, c + R, side="left")
        cnt = np.maximum(hi - lo, 0)
        rep = np.repeat(np.arange(pid.size), cnt)
        offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        pid = pid[rep]
        idx = np.column_stack([idx[rep], lo[rep] + offs])
    return pid, idx


def convolved_form(N: int, a: int, contact: ContactSet, atom_depth: int = 0,
                   name: str = "") -> FormField:
    """Atomic-measure average of theta(sqrt(N)|xbar - y|/eta(|xhat|)) star dGamma_a(xbar - y).

    Atoms form a product grid, so the derivative only visits atoms inside the
    transition band of each point, found by per-axis window search.
    """
    b = N - a
    if not 1 <= a <= N - 1:
        raise ValueError("need 1 <= a <= N-1")
    if contact.axes != a:
        raise ValueError(f"contact set has {contact.axes} axes, expected {a}")
    if isinstance(contact, PointSet):
        axis_atoms, atom_depth = np.zeros(1), 0
    else:
        axis_atoms = contact.axis_atoms(atom_depth)
    axis_weight = 2.0 ** (-atom_depth)
    atom_weight = axis_weight ** a
    grids = np.meshgrid(*([axis_atoms] * a), indexing="ij")
    positions = np.stack([g.reshape(-1) for g in grids], axis=1)
    M = positions.shape[0]
    root = math.sqrt(N)
    width = math.comb(N, a - 1)
    width_d = math.comb(N, a)
    strides = np.array([axis_atoms.size ** (a - 1 - i) for i in range(a)], dtype=int)

    def values_chunk(points):
        xbar, xhat = _split(points, a)
        n = points.shape[0]
        eta = cutoff_eta(np.sqrt((xhat ** 2).sum(axis=1)))
        z = xbar[:, None, :] - positions[None, :, :]
        rz = np.sqrt((z ** 2).sum(axis=2))
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(eta[:, None] > 0, root * rz / eta[:, None], np.inf)
        finite = np.isfinite(arg)
        th = np.where(finite, cutoff_theta(np.where(finite, arg, 1.0)), 1.0)
        kernel = embed_local(N, 0, star_dgamma_local(z.reshape(n * M, a)))
        vals = (th.reshape(-1)[:, None] * kernel).reshape(n, M, width)
        return vals.sum(axis=1) * atom_weight

    def values(points):
        n = points.shape[0]
        out = np.empty((n, width))
        step = max(1, ATOM_CHUNK // M)
        for s in range(0, n, step):
            out[s:s + step] = values_chunk(points[s:s + step])
        return out

    def derivative_chunk(points):
        xbar, xhat = _split(points, a)
        n = points.shape[0]
        r = np.sqrt((xhat ** 2).sum(axis=1))
        eta = cutoff_eta(r)
        out = np.zeros((n, width_d))
        pid, idx = _expand_windows(axis_atoms, xbar, eta / (2.0 * root))
        if pid.size == 0:
            return out
        z = xbar[pid] - positions[idx @ strides]
        rz = np.sqrt((z ** 2).sum(axis=1))
        el, rl = eta[pid], r[pid]
        arg = root * rz / el
        thp = cutoff_theta_prime(arg)
        live = thp > 0
        if not live.any():
            return out
        pid, z, rz, el, rl, thp = pid[live], z[live], rz[live], el[live], rl[live], thp[live]
        darg = np.zeros((pid.size, N))
        darg[:, :a] = root * z / (rz * el)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            radial = np.where(rl > 0, root * rz * cutoff_eta_prime(rl) / (el ** 2 * rl), 0.0)
        darg[:, a:] = -radial[:, None] * xhat[pid]
        kernel = embed_local(N, 0, star_dgamma_local(z))
        contrib = wedge_arrays(N, 1, a - 1, thp[:, None] * darg, kernel) * atom_weight
        for col in range(width_d):
            out[:, col] = np.bincount(pid, weights=contrib[:, col], minlength=n)
        return out

    def derivative(points):
        n = points.shape[0]
        out = np.empty((n, width_d))
        step = 20_000
        for s in range(0, n, step):
            out[s:s + step] = derivative_chunk(points[s:s + step])
        return out

    def singular_distance(points):
        xbar, xhat = _split(points, a)
        best = np.zeros(points.shape[0])
        for axis in range(a):
            pos = np.clip(np.searchsorted(axis_atoms, xbar[:, axis]), 1, axis_atoms.size - 1)
            if axis_atoms.size == 1:
                gap = np.abs(xbar[:, axis] - axis_atoms[0])
            else:
                gap = np.minimum(np.abs(xbar[:, axis] - axis_atoms[pos - 1]),
                                 np.abs(xbar[:, axis] - axis_atoms[pos]))
            best += gap ** 2
        return np.sqrt(best + (xhat ** 2).sum(axis=1))

    return FormField(
        N, a - 1, values, derivative, singular_distance,
        {"contact": contact.describe(), "axes": a, "atom_depth": atom_depth, "atoms": M},
        None,
        name or f"convolved_form(N={N}, a={a}, depth={atom_depth})",
    )


def separator(N: int, a: int, contact: ContactSet, C: float = 4.0,
              depth: int | None = None, flip: bool = False) -> ScalarField:
    """theta(C |xhat| / (3 eta(d))), or one minus it when ``flip``."""

    def value(points):
        xbar, xhat = _split(points, a)
        r = np.sqrt((xhat ** 2).sum(axis=1))
        d = contact.distance(xbar, depth)
        eta = cutoff_eta(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(eta > 0, C * r / (3.0 * eta), np.inf)
        rho = np.where(np.isfinite(arg), cutoff_theta(np.where(np.isfinite(arg), arg, 1.0)), 1.0)
        return 1.0 - rho if flip else rho

    return ScalarField(N, value, None, "1-rho" if flip else "rho")


def basic_u(N: int, k: int) -> FormField:
    """theta(sqrt(N)|xhat|/eta(|xbar|)) star_xhat dGamma_{N-k}, xbar = first k coordinates."""
    return cutoff_form(N, k, PointSet(k), C=1.0, name=f"basic_u(N={N}, k={k})")


def basic_A(N: int, k: int) -> FormField:
    """theta(sqrt(N)|xbar|/eta(|xhat|)) star_xbar dGamma_k, xbar = first k coordinates."""
    return convolved_form(N, k, PointSet(k), name=f"basic_A(N={N}, k={k})")


def fractal_u(N: int, spec: ContactSet, depth: int | None = None) -> FormField:
    C = 1.0 if isinstance(spec, PointSet) else 4.0
    return cutoff_form(N, spec.axes, spec, C=C, depth=depth, name="fractal_u")


def fractal_A(N: int, spec: ContactSet, atom_depth: int = 0) -> FormField:
    return convolved_form(N, spec.axes, spec, atom_depth, name="fractal_A")


def separator_rho(N: int, spec: ContactSet, depth: int | None = None) -> ScalarField:
    C = 1.0 if isinstance(spec, PointSet) else 4.0
    return separator(N, spec.axes, spec, C=C, depth=depth)


def kernel_form(l: int) -> FormField:
    """star dGamma_l on R^l as a closed (l-1)-form."""

    def values(p):
        return star_dgamma_local(p)

    return FormField(
        l, l - 1, values, lambda p: np.zeros((p.shape[0], math.comb(l, l))),
        lambda p: np.sqrt((p ** 2).sum(axis=1)), {"contact": "origin"}, None, f"star_dGamma_{l}",
    )


# ---------------------------------------------------------------------------
# localization

def radial_bump(N: int, inner: float = 1.05, outer: float | None = None) -> ScalarField:
    """1 for |x| <= inner, 0 for |x| >= outer, quintic blend between."""
    outer = (inner + math.sqrt(N)) / 2 if outer is None else outer
    width = outer - inner

    def value(p):
        r = np.sqrt((p ** 2).sum(axis=1))
        return 1.0 - smoothstep((r - inner) / width)

    def gradient(p):
        r = np.sqrt((p ** 2).sum(axis=1))
        slope = -smoothstep_prime((r - inner) / width) / width
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r[:, None] > 0, slope[:, None] * p / r[:, None], 0.0)

    return ScalarField(N, value, gradient, f"bump({inner:.4g},{outer:.4g})")


@dataclass
class SplitPair:
    """Interior and boundary parts of a form: w° = bump * w and w∂ = w - w°."""

    base: FormField
    bump: ScalarField

    @property
    def interior(self) -> FormField:
        return self.base.times(self.bump, name=f"{self.base.name}°")

    @property
    def boundary(self) -> FormField:
        return self.base.minus(self.interior, name=f"{self.base.name}∂")


# ---------------------------------------------------------------------------
# finite-difference oracle

def _fd_core(field: FormField, pts: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order differences of d(field) and the max |coefficient| over the stencil."""
    N, k = field.N, field.degree
    n = pts.shape[0]
    partial = np.empty((N, n, math.comb(N, k)))
    size = np.zeros(n)
    for i in range(N):
        vals = []
        for step in (-2 * h, -h, h, 2 * h):
            q = pts.copy()
            q[:, i] += step
            v = field.values(q)
            size = np.maximum(size, np.abs(v).max(axis=1, initial=0.0))
            vals.append(v)
        partial[i] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    src = basis_position(N, k)
    out = np.zeros((n, math.comb(N, k + 1)))
    for col, K in enumerate(basis(N, k + 1)):
        for l, i in enumerate(K):
            rest = K[:l] + K[l + 1:]
            out[:, col] += (-1.0) ** l * partial[i - 1][:, src[rest]]
    return out, size


def fd_derivative(field: FormField, x, h: float = 1e-5, check_margin: bool = True) -> np.ndarray:
    """Exterior derivative from fourth-order central differences of the coefficients.

    Accepts one point or an (n, N) array and returns coefficient arrays of
    degree ``field.degree + 1``.
    """
    pts = as_points(x, field.N)
    if check_margin:
        margin = field.singular_distance(pts)
        if np.any(margin <= 2 * h):
            raise ValueError("point closer than 2h to the singular set")
    return _fd_core(field, pts, h)[0]


def derivative_mismatch(field: FormField, x, rel_step: float = 3e-4, max_step: float = 3e-6,
                        refinements: int = 8, settle: float = 1e-8) -> np.ndarray:
    """Per-point max |fd - analytic| of the exterior derivative, relative to its natural scale.

    The scale is max(|analytic|, |w| / dist, 1), with |w| the largest
    coefficient over the stencil and dist the distance to the singular set.

    The starting step is the power of two below min(max_step, rel_step * dist),
    so that x +- h is exact.  A stencil that straddles a support edge of a
    cutoff sees a C^2 seam and the fourth-order formula loses accuracy, so the
    step is quartered (at most ``refinements`` times) until the estimate
    matches the analytic derivative or two successive estimates agree, both
    to ``settle`` relative to the scale.  The last estimate is reported.  Points on the singular set are
    rejected.
    """
    pts = as_points(x, field.N)
    margin = field.singular_distance(pts)
    if np.any(margin <= 0):
        raise ValueError("point on the singular set")
    analytic = field.d(pts)
    h = np.exp2(np.floor(np.log2(np.minimum(max_step, rel_step * margin))))
    scale = np.maximum(np.abs(analytic).max(axis=1), 1.0)
    out = np.full(pts.shape[0], np.inf)
    todo = np.arange(pts.shape[0])
    prev = None
    for _ in range(refinements + 1):
        fd = np.empty((todo.size, analytic.shape[1]))
        steps = h[todo]
        for c in np.unique(steps):
            sel = steps == c
            fd[sel], size = _fd_core(field, pts[todo[sel]], float(c))
            scale[todo[sel]] = np.maximum(scale[todo[sel]], size / margin[todo[sel]])
        err = np.abs(fd - analytic[todo]).max(axis=1) / scale[todo]
        out[todo] = err
        settled = err <= settle
        if prev is not None:
            settled |= np.abs(fd - prev).max(axis=1) / scale[todo] <= settle
        todo, fd = todo[~settled], fd[~settled]
        if todo.size == 0:
            break
        prev = fd
        h[todo] /= 4.0
    return out


def sample_dump(points, u: FormField, A: FormField, rho: ScalarField) -> str:
    """CSV with columns x1..xN, |u|, |du|, |A|, |dA|, rho."""
    pts = as_points(points, u.N)
    cols = [np.linalg.norm(f(pts), axis=1) for f in (u.values, u.derivative, A.values, A.derivative)]
    rows = np.column_stack([pts, *cols, rho.value(pts)])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(u.N)] + ["abs_u", "abs_du", "abs_A", "abs_dA", "rho"])
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
