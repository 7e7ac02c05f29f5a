"""Finite-dimensional Grassmann algebra over R^N.

Elements are stored sparsely, keyed by strictly increasing 1-based index
tuples.  Signs are computed from inversion counts so they stay exact.

Besides the single-element API there are array helpers (``wedge_arrays``,
``hodge_arrays``) used by the form evaluators, which keep coefficients of
many points in dense arrays ordered like :func:`basis`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb, sqrt
from typing import Iterable, Mapping

import numpy as np

MultiIndex = tuple[int, ...]


def check_multi_index(indices: Iterable[int], N: int) -> MultiIndex:
    idx = tuple(int(i) for i in indices)
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"multi-index {idx} is not strictly increasing")
    if idx and (idx[0] < 1 or idx[-1] > N):
        raise ValueError(f"multi-index {idx} has entries outside 1..{N}")
    return idx


@lru_cache(maxsize=None)
def basis(N: int, k: int) -> tuple[MultiIndex, ...]:
    """Lexicographically ordered multi-indices of degree ``k`` in ``R^N``."""
    if k < 0 or k > N:
        return ()
    return tuple(combinations(range(1, N + 1), k))


@lru_cache(maxsize=None)
def basis_position(N: int, k: int) -> dict[MultiIndex, int]:
    return {idx: i for i, idx in enumerate(basis(N, k))}


def count_inversions(seq: Iterable[int]) -> int:
    """Number of inversions, by merge sort."""
    items = list(seq)

    def sort(lo: int, hi: int) -> int:
        if hi - lo < 2:
            return 0
        mid = (lo + hi) // 2
        inv = sort(lo, mid) + sort(mid, hi)
        left, right = items[lo:mid], items[mid:hi]
        i = j = 0
        pos = lo
        while i < len(left) and j < len(right):
            if right[j] < left[i]:
                items[pos] = right[j]
                inv += len(left) - i
                j += 1
            else:
                items[pos] = left[i]
                i += 1
            pos += 1
        for rest in (left[i:], right[j:]):
            for v in rest:
                items[pos] = v
                pos += 1
        return inv

    return sort(0, len(items))


def permutation_sign(seq: Iterable[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    items = list(seq)
    if len(set(items)) != len(items):
        return 0
    return -1 if count_inversions(items) % 2 else 1


@lru_cache(maxsize=None)
def shuffle_sign(first: MultiIndex, second: MultiIndex) -> int:
    return permutation_sign(first + second)


def complement(idx: MultiIndex, N: int) -> MultiIndex:
    present = set(idx)
    return tuple(i for i in range(1, N + 1) if i not in present)


@dataclass(frozen=True)
class ExteriorElement:
    """A k-vector in Lambda^k(R^N).

    Degrees outside ``0..N`` are allowed only for the zero element; they arise
    from wedge overflow and from contracting by a higher-degree element.
    """

    N: int
    k: int
    coeffs: Mapping[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("ambient dimension must be nonnegative")
        clean: dict[MultiIndex, float] = {}
        for key, value in dict(self.coeffs).items():
            idx = check_multi_index(key, self.N)
            if len(idx) != self.k:
                raise ValueError(f"key {idx} does not have degree {self.k}")
            if value != 0.0:
                clean[idx] = float(value)
        if clean and not 0 <= self.k <= self.N:
            raise ValueError(f"nonzero element of degree {self.k} in R^{self.N}")
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls, N: int, k: int) -> "ExteriorElement":
        return cls(N, k, {})

    @classmethod
    def monomial(cls, N: int, indices: Iterable[int], coefficient: float = 1.0) -> "ExteriorElement":
        idx = tuple(indices)
        sign = permutation_sign(idx)
        ordered = tuple(sorted(idx))
        return cls(N, len(idx), {ordered: sign * coefficient} if sign else {})

    @classmethod
    def from_array(cls, N: int, k: int, values) -> "ExteriorElement":
        keys = basis(N, k)
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != len(keys):
            raise ValueError(f"expected {len(keys)} coefficients, got {values.size}")
        return cls(N, k, dict(zip(keys, values.tolist())))

    def to_array(self) -> np.ndarray:
        out = np.zeros(len(basis(self.N, self.k)))
        pos = basis_position(self.N, self.k)
        for idx, value in self.coeffs.items():
            out[pos[idx]] = value
        return out

    def __getitem__(self, indices: Iterable[int]) -> float:
        """Antisymmetric coefficient lookup: ``f[(2, 1)] == -f[(1, 2)]``."""
        idx = tuple(indices)
        sign = permutation_sign(idx)
        if not sign:
            return 0.0
        return sign * self.coeffs.get(tuple(sorted(idx)), 0.0)

    def _check_same(self, other: "ExteriorElement") -> None:
        if self.N != other.N:
            raise ValueError(f"ambient dimensions differ: {self.N} vs {other.N}")
        if self.k != other.k:
            raise ValueError(f"degrees differ: {self.k} vs {other.k}")

    def __add__(self, other: "ExteriorElement") -> "ExteriorElement":
        self._check_same(other)
        out = dict(self.coeffs)
        for idx, value in other.coeffs.items():
            out[idx] = out.get(idx, 0.0) + value
        return ExteriorElement(self.N, self.k, out)

    def __neg__(self) -> "ExteriorElement":
        return self * -1.0

    def __sub__(self, other: "ExteriorElement") -> "ExteriorElement":
        return self + (-other)

    def __mul__(self, scalar: float) -> "ExteriorElement":
        return ExteriorElement(self.N, self.k, {i: scalar * v for i, v in self.coeffs.items()})

    __rmul__ = __mul__

    def norm(self) -> float:
        return sqrt(sum(v * v for v in self.coeffs.values()))

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def allclose(self, other: "ExteriorElement", atol: float = 1e-12) -> bool:
        if self.N != other.N:
            return False
        if not self.coeffs and not other.coeffs:
            return True
        if self.k != other.k:
            return False
        return (self - other).max_abs() <= atol


def _check_ambient(f: ExteriorElement, g: ExteriorElement) -> None:
    if f.N != g.N:
        raise ValueError(f"ambient dimensions differ: {f.N} vs {g.N}")


def wedge(f: ExteriorElement, g: ExteriorElement) -> ExteriorElement:
    """Exterior product; degree overflow gives the zero element of degree k+l."""
    _check_ambient(f, g)
    degree = f.k + g.k
    if degree > f.N:
        return ExteriorElement.zero(f.N, degree)
    out: dict[MultiIndex, float] = {}
    for I, a in f.coeffs.items():
        for J, b in g.coeffs.items():
            sign = shuffle_sign(I, J)
            if sign:
                key = tuple(sorted(I + J))
                out[key] = out.get(key, 0.0) + sign * a * b
    return ExteriorElement(f.N, degree, out)


def hodge(f: ExteriorElement) -> ExteriorElement:
    if not 0 <= f.k <= f.N:
        raise ValueError(f"degree {f.k} outside 0..{f.N}")
    out = {}
    for I, a in f.coeffs.items():
        J = complement(I, f.N)
        out[J] = shuffle_sign(I, J) * a
    return ExteriorElement(f.N, f.N - f.k, out)


def inner(f: ExteriorElement, g: ExteriorElement) -> float:
    _check_ambient(f, g)
    if f.k != g.k:
        raise ValueError(f"degrees differ: {f.k} vs {g.k}")
    return sum(a * g.coeffs.get(I, 0.0) for I, a in f.coeffs.items())


def contract(g: ExteriorElement, f: ExteriorElement) -> ExteriorElement:
    """Interior product g ⌟ f, the adjoint of left multiplication by g."""
    _check_ambient(f, g)
    degree = f.k - g.k
    if degree < 0:
        return ExteriorElement.zero(f.N, degree)
    out: dict[MultiIndex, float] = {}
    for I, a in g.coeffs.items():
        members = set(I)
        for K, b in f.coeffs.items():
            if not members.issubset(K):
                continue
            J = tuple(i for i in K if i not in members)
            out[J] = out.get(J, 0.0) + shuffle_sign(I, J) * a * b
    return ExteriorElement(f.N, degree, out)


def one_form(N: int, vector) -> ExteriorElement:
    return ExteriorElement.from_array(N, 1, vector)


# ---------------------------------------------------------------------------
# dense array helpers

@lru_cache(maxsize=None)
def wedge_table(N: int, k: int, l: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays (left, right, out, sign) for dense wedge products."""
    pos_out = basis_position(N, k + l)
    left, right, out, sign = [], [], [], []
    for i, I in enumerate(basis(N, k)):
        for j, J in enumerate(basis(N, l)):
            s = shuffle_sign(I, J)
            if s:
                left.append(i)
                right.append(j)
                out.append(pos_out[tuple(sorted(I + J))])
                sign.append(float(s))
    return (np.array(left, dtype=int), np.array(right, dtype=int),
            np.array(out, dtype=int), np.array(sign))


def wedge_arrays(N: int, k: int, l: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise wedge of coefficient arrays of shape (n, C(N,k)) and (n, C(N,l))."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if k + l > N:
        return np.zeros((n, 0))
    left, right, out, sign = wedge_table(N, k, l)
    result = np.zeros((n, comb(N, k + l)))
    if left.size:
        prod = a[:, left] * b[:, right] * sign
        for col in range(result.shape[1]):
            mask = out == col
            if mask.any():
                result[:, col] = prod[:, mask].sum(axis=1)
    return result


@lru_cache(maxsize=None)
def hodge_table(N: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    pos_out = basis_position(N, N - k)
    target, sign = [], []
    for I in basis(N, k):
        J = complement(I, N)
        target.append(pos_out[J])
        sign.append(float(shuffle_sign(I, J)))
    return np.array(target, dtype=int), np.array(sign)


def hodge_arrays(N: int, k: int, a: np.ndarray) -> np.ndarray:
    target, sign = hodge_table(N, k)
    out = np.zeros_like(a)
    out[:, target] = a * sign
    return out


def omitted_position(N: int, j: int) -> int:
    """Position, in the degree N-1 basis, of the monomial omitting dx^j."""
    return basis_position(N, N - 1)[tuple(i for i in range(1, N + 1) if i != j)]


# ---------------------------------------------------------------------------
# randomized identity checks

def random_element(N: int, k: int, rng: np.random.Generator) -> ExteriorElement:
    return ExteriorElement.from_array(N, k, rng.normal(size=len(basis(N, k))))


def selftest(cases: int = 1000, seed: int = 0, max_N: int = 6) -> dict:
    """Max deviations of the core identities over random elements.

    * double Hodge star: ⋆⋆f = (-1)^(k(N-k)) f (checked for exact equality),
    * adjointness: <g ∧ f, h> = <f, g ⌟ h>,
    * decomposition: for a unit 1-vector v, f = v ∧ (v ⌟ f) + v ⌟ (v ∧ f),
    * Hodge duality: f ∧ ⋆g = <f, g> dV.
    """
    rng = np.random.default_rng(seed)
    worst = {"hodge_twice": 0.0, "adjointness": 0.0, "decomposition": 0.0, "hodge_pairing": 0.0}
    exact_hodge = True
    degrees = [(N, k) for N in range(1, max_N + 1) for k in range(N + 1)]
    for case in range(cases):
        N, k = degrees[case % len(degrees)]
        l = int(rng.integers(0, N - k + 1))
        f = random_element(N, k, rng)
        g = random_element(N, l, rng)
        h = random_element(N, k + l, rng)
        twice = hodge(hodge(f))
        sign = (-1) ** (k * (N - k))
        exact_hodge &= twice.coeffs == (f * sign).coeffs
        worst["hodge_twice"] = max(worst["hodge_twice"], (twice - f * sign).max_abs())
        worst["adjointness"] = max(worst["adjointness"], abs(inner(wedge(g, f), h) - inner(f, contract(g, h))))
        vec = rng.normal(size=N)
        v = one_form(N, vec / np.linalg.norm(vec))
        parts = [wedge(v, contract(v, f)) if k > 0 else ExteriorElement.zero(N, k),
                 contract(v, wedge(v, f)) if k < N else ExteriorElement.zero(N, k)]
        recomposed = parts[0] + parts[1]
        worst["decomposition"] = max(worst["decomposition"], (recomposed - f).max_abs())
        g2 = random_element(N, k, rng)
        volume = wedge(f, hodge(g2))[tuple(range(1, N + 1))]
        worst["hodge_pairing"] = max(worst["hodge_pairing"], abs(volume - inner(f, g2)))
    passed = exact_hodge and all(v <= 1e-12 for v in worst.values())
    return {"cases": cases, "seed": seed, "max_N": max_N, "max_deviation": worst,
            "degrees_covered": min(cases, len(degrees)),
            "hodge_twice_exact": bool(exact_hodge), "tolerance": 1e-12, "passed": bool(passed)}
