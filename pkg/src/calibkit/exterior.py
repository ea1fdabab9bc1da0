"""Sparse exterior algebra for constant-coefficient covectors on R^m.

A k-covector is stored as a mapping from bitmasks (bit ``i - 1`` set for
coordinate ``i``) to real coefficients.  Coordinates are 1-based in every
public surface; bitmasks are an internal detail.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

ZERO_CUTOFF = 1e-15
MAX_DIM = 64


def _mask(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask


def _indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _merge_sign(a: int, b: int) -> int:
    """Sign of the permutation sorting the concatenation of index sets a, b."""
    inversions = 0
    rest = b
    while rest:
        low = rest & -rest
        # bits of a strictly above this bit of b
        inversions += bin(a & ~((low << 1) - 1)).count("1")
        rest ^= low
    return -1 if inversions & 1 else 1


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Strictly increasing 1-based index list of length k <= m."""

    indices: tuple[int, ...]
    m: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 1 or idx[-1] > self.m):
            raise ValueError(f"indices {idx} out of range 1..{self.m}")

    @property
    def mask(self) -> int:
        return _mask(self.indices)

    @classmethod
    def from_mask(cls, mask: int, m: int) -> "MultiIndex":
        return cls(_indices(mask), m)

    def complement(self) -> "MultiIndex":
        return MultiIndex(tuple(i for i in range(1, self.m + 1) if i not in self.indices), self.m)

    def __len__(self):
        return len(self.indices)


class Covector:
    """Immutable k-covector on R^m with sparse coefficients.

    Coefficients with magnitude below ``ZERO_CUTOFF`` are dropped on
    construction, so structural equality coincides with equality of forms up
    to that cutoff.
    """

    __slots__ = ("_m", "_k", "_terms")

    def __init__(self, m: int, k: int, terms: Mapping[int, float] | None = None):
        if not 1 <= m <= MAX_DIM:
            raise ValueError(f"ambient dimension must lie in 1..{MAX_DIM}, got {m}")
        if not 0 <= k <= m:
            raise ValueError(f"degree must lie in 0..{m}, got {k}")
        clean = {}
        for mask, c in (terms or {}).items():
            c = float(c)
            if not math.isfinite(c):
                raise ValueError("coefficients must be finite")
            if abs(c) < ZERO_CUTOFF:
                continue
            if mask >> m or bin(mask).count("1") != k:
                raise ValueError(f"term {_indices(mask)} incompatible with m={m}, k={k}")
            clean[mask] = c
        self._m = m
        self._k = k
        self._terms = clean

    # construction -------------------------------------------------------

    @classmethod
    def from_terms(cls, m: int, terms: Mapping[Iterable[int], float], k: int | None = None) -> "Covector":
        """Build from ``{(i1, ..., ik): coeff}`` with 1-based increasing indices."""
        acc: dict[int, float] = {}
        for idx, c in terms.items():
            mi = MultiIndex(tuple(idx), m)
            if k is None:
                k = len(mi)
            if len(mi) != k:
                raise ValueError("all terms must have the same degree")
            if mi.mask in acc:
                raise ValueError(f"duplicate index {mi.indices}")
            acc[mi.mask] = c
        return cls(m, 0 if k is None else k, acc)

    @classmethod
    def basis(cls, m: int, *indices: int, coeff: float = 1.0) -> "Covector":
        """``coeff * dx_{i1} ^ ... ^ dx_{ik}``; indices may be unsorted."""
        order = sorted(indices)
        if len(set(order)) != len(order):
            return cls(m, len(indices))
        sign = _perm_sign(indices)
        return cls(m, len(indices), {MultiIndex(tuple(order), m).mask: sign * coeff})

    @classmethod
    def zero(cls, m: int, k: int) -> "Covector":
        return cls(m, k)

    @classmethod
    def volume(cls, m: int) -> "Covector":
        return cls(m, m, {(1 << m) - 1: 1.0})

    # accessors ----------------------------------------------------------

    @property
    def m(self) -> int:
        return self._m

    @property
    def k(self) -> int:
        return self._k

    @property
    def terms(self) -> Mapping[int, float]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[tuple[int, ...], float]]:
        """Yield ``(indices, coeff)`` sorted lexicographically by indices."""
        for idx, c in sorted((_indices(mask), c) for mask, c in self._terms.items()):
            yield idx, c

    def coeff(self, *indices: int) -> float:
        """Coefficient of ``dx_{i1} ^ ... ^ dx_{ik}`` (sign-adjusted if unsorted)."""
        order = sorted(indices)
        if len(set(order)) != len(order):
            return 0.0
        return _perm_sign(indices) * self._terms.get(_mask(order), 0.0)

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    # arithmetic ---------------------------------------------------------

    def _check_same(self, other: "Covector"):
        if (self.m, self.k) != (other.m, other.k):
            raise ValueError(f"shape mismatch: ({self.m},{self.k}) vs ({other.m},{other.k})")

    def __add__(self, other: "Covector") -> "Covector":
        self._check_same(other)
        out = dict(self._terms)
        for mask, c in other._terms.items():
            out[mask] = out.get(mask, 0.0) + c
        return Covector(self.m, self.k, out)

    def __neg__(self) -> "Covector":
        return Covector(self.m, self.k, {mask: -c for mask, c in self._terms.items()})

    def __sub__(self, other: "Covector") -> "Covector":
        return self + (-other)

    def __mul__(self, s: float) -> "Covector":
        return Covector(self.m, self.k, {mask: s * c for mask, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "Covector":
        return self * (1.0 / s)

    def __xor__(self, other: "Covector") -> "Covector":
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Covector):
            return NotImplemented
        return (self.m, self.k) == (other.m, other.k) and self._terms == other._terms

    def __hash__(self):
        return hash((self.m, self.k, frozenset(self._terms.items())))

    def allclose(self, other: "Covector", tol: float = 1e-12) -> bool:
        self._check_same(other)
        return max_abs_diff(self, other) <= tol

    def __repr__(self):
        if not self._terms:
            return f"Covector(m={self.m}, k={self.k}, 0)"
        body = " + ".join(f"{c:g}*dx{''.join(map(str, idx)) if self.m < 10 else idx}" for idx, c in self.items())
        return f"Covector(m={self.m}, k={self.k}, {body})"

    # serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "terms": [{"idx": list(idx), "c": c} for idx, c in self.items()],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_dict(), **kw)

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Covector":
        try:
            m = int(data["m"])
            k = int(data["k"])
            raw = data["terms"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed covector JSON: {exc}") from exc
        terms: dict[int, float] = {}
        for t in raw:
            idx = tuple(int(i) for i in t["idx"])
            if len(idx) != k:
                raise ValueError(f"term {idx} has degree {len(idx)}, expected {k}")
            mi = MultiIndex(idx, m)
            if mi.mask in terms:
                raise ValueError(f"duplicate index {idx}")
            terms[mi.mask] = float(t["c"])
        return cls(m, k, terms)

    @classmethod
    def from_json(cls, text: str) -> "Covector":
        return cls.from_json_dict(json.loads(text))


def _perm_sign(seq: Iterable[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def max_abs_diff(a: Covector, b: Covector) -> float:
    keys = set(a._terms) | set(b._terms)
    return max((abs(a._terms.get(x, 0.0) - b._terms.get(x, 0.0)) for x in keys), default=0.0)


# operations -------------------------------------------------------------


def wedge(a: Covector, b: Covector) -> Covector:
    if a.m != b.m:
        raise ValueError(f"ambient dimension mismatch: {a.m} vs {b.m}")
    if a.k + b.k > a.m:
        raise ValueError(f"degree overflow: {a.k} + {b.k} > {a.m}")
    out: dict[int, float] = {}
    for ma, ca in a._terms.items():
        for mb, cb in b._terms.items():
            if ma & mb:
                continue
            key = ma | mb
            out[key] = out.get(key, 0.0) + _merge_sign(ma, mb) * ca * cb
    return Covector(a.m, a.k + b.k, out)


def wedge_all(forms: Iterable[Covector]) -> Covector:
    it = iter(forms)
    acc = next(it)
    for f in it:
        acc = wedge(acc, f)
    return acc


def hodge_star(a: Covector) -> Covector:
    """Euclidean Hodge star with ``*dx_I = sgn(I, I^c) dx_{I^c}``."""
    full = (1 << a.m) - 1
    out = {}
    for mask, c in a._terms.items():
        comp = full ^ mask
        out[comp] = _merge_sign(mask, comp) * c
    return Covector(a.m, a.m - a.k, out)


def hs_norm(a: Covector) -> float:
    """Euclidean norm of the coefficient vector."""
    return math.sqrt(math.fsum(c * c for c in a._terms.values()))


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def pullback(A, a: Covector) -> Covector:
    """Pull ``a`` back along the linear map ``A: R^n -> R^m`` (columns are images of e_j)."""
    A = _as_matrix(A)
    m, n = A.shape
    if m != a.m:
        raise ValueError(f"map has {m} rows but covector lives on R^{a.m}")
    if a.k > n:
        raise ValueError(f"cannot pull a {a.k}-form back to R^{n}")
    if a.k == 0:
        return Covector(n, 0, {0: c for c in a._terms.values()})
    rows = [np.array(_indices(mask)) - 1 for mask in a._terms]
    coeffs = np.array(list(a._terms.values()))
    out = {}
    for cols in itertools.combinations(range(n), a.k):
        sub = A[:, cols]
        minors = np.linalg.det(np.stack([sub[r, :] for r in rows])) if rows else np.zeros(0)
        val = float(coeffs @ minors)
        if abs(val) >= ZERO_CUTOFF:
            out[_mask(c + 1 for c in cols)] = val
    return Covector(n, a.k, out)


class _Compiled:
    """Row-index array and coefficient vector of a covector, for batched evaluation."""

    def __init__(self, a: Covector):
        self.m = a.m
        self.k = a.k
        if a._terms:
            self.rows = np.array([np.array(_indices(mask)) - 1 for mask in a._terms])
            self.coeffs = np.array(list(a._terms.values()))
        else:
            self.rows = np.zeros((0, a.k), dtype=int)
            self.coeffs = np.zeros(0)


def compile_form(a: Covector) -> _Compiled:
    return _Compiled(a)


def _check_frame(a, Q: np.ndarray):
    if Q.shape[-2:] != (a.m, a.k):
        raise ValueError(f"frame shape {Q.shape[-2:]} does not match (m, k) = ({a.m}, {a.k})")


def eval_frame(a: Covector | _Compiled, Q) -> float | np.ndarray:
    """Evaluate ``a(q_1, ..., q_k)`` on the columns of Q.

    Q may be a single m x k matrix or a stack of shape (..., m, k); the
    result is a float or an array of shape (...).
    """
    c = a if isinstance(a, _Compiled) else _Compiled(a)
    Q = np.asarray(Q, dtype=float)
    _check_frame(c, Q)
    if c.k == 0:
        val = np.full(Q.shape[:-2], c.coeffs.sum())
    elif len(c.coeffs) == 0:
        val = np.zeros(Q.shape[:-2])
    else:
        minors = Q[..., c.rows, :]  # (..., T, k, k)
        val = np.linalg.det(minors) @ c.coeffs
    return float(val) if np.ndim(val) == 0 else val


def _cofactors(M: np.ndarray) -> np.ndarray:
    """Cofactor matrices of a stack (..., k, k), robust to singular input."""
    k = M.shape[-1]
    if k == 1:
        return np.ones_like(M)
    cof = np.empty_like(M)
    idx = np.arange(k)
    for i in range(k):
        ri = idx[idx != i]
        for j in range(k):
            cj = idx[idx != j]
            sub = M[..., ri[:, None], cj[None, :]]
            cof[..., i, j] = (-1) ** (i + j) * np.linalg.det(sub)
    return cof


def frame_gradient(a: Covector | _Compiled, Q) -> np.ndarray:
    """Gradient of ``eval_frame(a, Q)`` with respect to the entries of Q."""
    c = a if isinstance(a, _Compiled) else _Compiled(a)
    Q = np.asarray(Q, dtype=float)
    _check_frame(c, Q)
    G = np.zeros_like(Q)
    if c.k == 0 or len(c.coeffs) == 0:
        return G
    minors = Q[..., c.rows, :]  # (..., T, k, k)
    cof = _cofactors(minors) * c.coeffs[:, None, None]
    for t, rows in enumerate(c.rows):
        G[..., rows, :] += cof[..., t, :, :]
    return G


def value_and_gradient(c: _Compiled, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    val = eval_frame(c, Q)
    return np.asarray(val), frame_gradient(c, Q)


def coordinate_projection(m: int, keep: Iterable[int]) -> np.ndarray:
    """Matrix of the projection R^m -> R^len(keep) onto the listed 1-based coordinates."""
    keep = list(keep)
    P = np.zeros((len(keep), m))
    for r, i in enumerate(keep):
        P[r, i - 1] = 1.0
    return P


def coordinate_inclusion(m: int, at: Iterable[int]) -> np.ndarray:
    """Matrix of the inclusion R^len(at) -> R^m placing coordinate j at ``at[j]``."""
    return coordinate_projection(m, at).T


def embed(a: Covector, m: int, at: Iterable[int]) -> Covector:
    """Pull ``a`` (on R^p) back along the coordinate projection R^m -> R^p picking ``at``.

    Exact index relabelling; no floating-point arithmetic.
    """
    at = list(at)
    if len(at) != a.m:
        raise ValueError("need one target coordinate per source coordinate")
    if sorted(set(at)) != sorted(at) or min(at) < 1 or max(at) > m:
        raise ValueError("target coordinates must be distinct and in range")
    out = {}
    for idx, c in a.items():
        target = [at[i - 1] for i in idx]
        out[_mask(target)] = _perm_sign(target) * c
    return Covector(m, a.k, out)


def random_covector(m: int, k: int, rng: np.random.Generator, terms: int | None = None, scale: float = 1.0) -> Covector:
    """Gaussian coefficients on ``terms`` distinct random multi-indices (all of them if None)."""
    combos = list(itertools.combinations(range(1, m + 1), k))
    if terms is not None and terms < len(combos):
        pick = rng.choice(len(combos), size=terms, replace=False)
        combos = [combos[i] for i in sorted(pick)]
    coeffs = scale * rng.standard_normal(len(combos))
    return Covector(m, k, {_mask(idx): c for idx, c in zip(combos, coeffs)})
