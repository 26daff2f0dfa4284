"""Generalized Haar and Schauder functions along a refining partition sequence.

Basis functions of level m live on a parent interval ``[t^m_k, t^m_{k+1}]``
with children ``t^{m+1}_{p}, ..., t^{m+1}_{p+c}``.  The function with offset
``i`` (``2 <= i <= c``) has anchors ``t1 = t^{m+1}_p``, ``t2 = t^{m+1}_{p+i-1}``
and ``t3 = t^{m+1}_{p+i}``.  Offset ``i = 1`` has ``t1 == t2`` and is
identically zero; it is accepted by the evaluators but never carries a
coefficient, which is why level m holds exactly ``N(pi^{m+1}) - N(pi^m)``
coefficients.

In the flat ordering the basis function whose decreasing leg sits on child
interval ``j`` of level m+1 gets flat index ``j - k - 1`` where k is the
parent of j.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .partition import PartitionSequence

__all__ = [
    "BasisIndexRaw",
    "BasisIndexFlat",
    "SampledPath",
    "SchauderCoefficients",
    "LevelBasis",
    "level_basis",
    "index_set_size",
    "haar_eval",
    "schauder_eval",
    "coefficient",
    "decompose",
    "synthesize",
    "flatten_index",
    "unflatten_index",
    "haar_matrix",
    "sample_function",
    "ShapeError",
]


class ShapeError(ValueError):
    """Coefficient rows do not match the index sets of their partition."""


class BasisIndexRaw(NamedTuple):
    m: int
    k: int
    i: int


class BasisIndexFlat(NamedTuple):
    m: int
    k: int


@dataclass(frozen=True)
class LevelBasis:
    """Anchor data of every nondegenerate basis function of one level, flat order."""

    m: int
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    parent: np.ndarray      # k of each function
    offset: np.ndarray      # i of each function
    child: np.ndarray       # level m+1 interval carrying the decreasing leg
    up: np.ndarray          # slope of the increasing leg (= positive Haar value)
    down: np.ndarray        # |slope| of the decreasing leg (= |negative Haar value|)

    @property
    def size(self) -> int:
        return self.t1.size


_BASIS_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def level_basis(seq: PartitionSequence, m: int) -> LevelBasis:
    if not 0 <= m < seq.depth:
        raise IndexError(f"level {m} basis needs levels {m} and {m + 1}; depth is {seq.depth}")
    cache = _BASIS_CACHE.setdefault(seq, {})
    if m in cache:
        return cache[m]
    p = seq.parent_map(m)
    fine = seq[m + 1]
    N1 = fine.size - 1
    j = np.arange(N1)
    parent_of_child = np.searchsorted(p, j, side="right") - 1
    keep = j != p[parent_of_child]
    j = j[keep]
    k = parent_of_child[keep]
    t1 = fine[p[k]]
    t2 = fine[j]
    t3 = fine[j + 1]
    d1, d2 = t2 - t1, t3 - t2
    up = np.sqrt(d2 / (d1 * (d1 + d2)))
    down = np.sqrt(d1 / (d2 * (d1 + d2)))
    lb = LevelBasis(m, t1, t2, t3, k, j - p[k] + 1, j, up, down)
    for a in (lb.t1, lb.t2, lb.t3, lb.parent, lb.offset, lb.child, lb.up, lb.down):
        a.setflags(write=False)
    cache[m] = lb
    return lb


def index_set_size(seq: PartitionSequence, m: int) -> int:
    """``|I_m| = N(pi^{m+1}) - N(pi^m)``."""
    return seq.n_intervals(m + 1) - seq.n_intervals(m)


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Path values at increasing times, linearly interpolated in between."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size < 2:
            raise ValueError("a sampled path needs at least two samples")
        if not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def at(self, points, tol: float = 0.0) -> np.ndarray:
        """Values at ``points``, which must coincide with sample times within ``tol``."""
        pts = np.asarray(points, dtype=float)
        idx = np.searchsorted(self.times, pts)
        idx = np.clip(idx, 0, self.times.size - 1)
        left = np.clip(idx - 1, 0, self.times.size - 1)
        closer_left = np.abs(self.times[left] - pts) < np.abs(self.times[idx] - pts)
        idx = np.where(closer_left, left, idx)
        err = np.abs(self.times[idx] - pts)
        if np.any(err > tol):
            bad = float(pts[np.argmax(err > tol)])
            raise KeyError(f"no sample at partition point t={bad!r} (tolerance {tol})")
        return self.values[idx]

    def __add__(self, other: "SampledPath") -> "SampledPath":
        if not np.array_equal(self.times, other.times):
            raise ValueError("paths sampled on different grids")
        return SampledPath(self.times, self.values + other.values)

    def scale(self, r: float) -> "SampledPath":
        return SampledPath(self.times, r * self.values)


def sample_function(seq: PartitionSequence, f, level: Optional[int] = None) -> SampledPath:
    """Sample the callable ``f`` at the points of ``seq[level]`` (finest by default)."""
    t = seq[seq.depth if level is None else level]
    return SampledPath(t, np.asarray(f(t), dtype=float))


@dataclass(frozen=True, eq=False)
class SchauderCoefficients:
    """Affine part plus ragged coefficient rows ``theta[m]`` of length ``|I_m|``.

    Rows beyond ``len(theta)`` are zero: the object describes the finite
    expansion it stores.
    """

    partition: PartitionSequence
    x0: float
    xT: float
    theta: tuple

    def __post_init__(self):
        rows = tuple(np.array(r, dtype=float).ravel() for r in self.theta)
        if len(rows) > self.partition.depth:
            raise ShapeError(
                f"{len(rows)} coefficient rows need partition depth {len(rows)}, "
                f"got {self.partition.depth}")
        for m, r in enumerate(rows):
            want = index_set_size(self.partition, m)
            if r.size != want:
                raise ShapeError(f"row {m} has {r.size} entries, |I_{m}| = {want}")
            r.setflags(write=False)
        object.__setattr__(self, "theta", rows)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "xT", float(self.xT))

    @property
    def depth(self) -> int:
        return len(self.theta)

    @property
    def T(self) -> float:
        return self.partition.T

    def row(self, m: int) -> np.ndarray:
        if m < len(self.theta):
            return self.theta[m]
        return np.zeros(index_set_size(self.partition, m))

    def scale(self, r: float) -> "SchauderCoefficients":
        return SchauderCoefficients(self.partition, r * self.x0, r * self.xT,
                                    tuple(r * row for row in self.theta))

    def without_affine(self) -> "SchauderCoefficients":
        return SchauderCoefficients(self.partition, 0.0, 0.0, self.theta)


def _anchors(seq: PartitionSequence, idx: BasisIndexRaw):
    m, k, i = idx
    if not 0 <= m < seq.depth:
        raise IndexError(f"level {m} needs levels {m} and {m + 1}")
    if not 0 <= k < seq.n_intervals(m):
        raise IndexError(f"parent interval {k} out of range at level {m}")
    p = seq.parent_map(m)
    c = int(p[k + 1] - p[k])
    if not 1 <= i <= c:
        raise IndexError(f"offset {i} out of range 1..{c}")
    fine = seq[m + 1]
    return fine[p[k]], fine[p[k] + i - 1], fine[p[k] + i]


def haar_eval(seq: PartitionSequence, idx: BasisIndexRaw, t: float) -> float:
    """Generalized Haar function ``psi_{m,k,i}`` at time t."""
    t1, t2, t3 = _anchors(seq, idx)
    if t1 == t2 or t < t1 or t >= t3:
        return 0.0
    d1, d2 = t2 - t1, t3 - t2
    if t < t2:
        return float(np.sqrt(d2 / (d1 * (d1 + d2))))
    return float(-np.sqrt(d1 / (d2 * (d1 + d2))))


def schauder_eval(seq: PartitionSequence, idx: BasisIndexRaw, t: float) -> float:
    """Triangle function ``e_{m,k,i}``, the running integral of ``psi_{m,k,i}``."""
    t1, t2, t3 = _anchors(seq, idx)
    if t1 == t2 or t < t1 or t >= t3:
        return 0.0
    d1, d2 = t2 - t1, t3 - t2
    if t < t2:
        return float(np.sqrt(d2 / (d1 * (d1 + d2))) * (t - t1))
    return float(np.sqrt(d1 / (d2 * (d1 + d2))) * (t3 - t))


def _closed_form(x1, x2, x3, t1, t2, t3):
    d1, d2 = t2 - t1, t3 - t2
    return ((x2 - x1) * d2 - (x3 - x2) * d1) / np.sqrt(d1 * d2 * (t3 - t1))


def coefficient(seq: PartitionSequence, x: SampledPath, idx: BasisIndexRaw,
                tol: float = 0.0) -> float:
    """Closed-form Schauder coefficient from the three anchor values of x."""
    t1, t2, t3 = _anchors(seq, idx)
    if t1 == t2:
        raise ValueError(f"offset i=1 is degenerate (t1 == t2) for {idx}")
    x1, x2, x3 = x.at([t1, t2, t3], tol=tol)
    return float(_closed_form(x1, x2, x3, t1, t2, t3))


def decompose(seq: PartitionSequence, x: SampledPath, n_levels: int,
              tol: float = 0.0) -> SchauderCoefficients:
    """Affine part and coefficient rows ``0..n_levels-1`` of x along seq.

    Only the values of x at the points of ``seq[n_levels]`` are read.
    """
    if not 0 <= n_levels <= seq.depth:
        raise ValueError(f"n_levels={n_levels} exceeds partition depth {seq.depth}")
    ends = x.at([0.0, seq.T], tol=tol)
    try:
        vals = x.at(seq[n_levels], tol=tol)
    except KeyError as exc:
        raise ValueError(f"path not sampled on level {n_levels}: {exc}") from None
    pos = {n_levels: vals}
    # values on coarser levels by index maps (levels are nested bit-exactly)
    for n in range(n_levels - 1, -1, -1):
        pos[n] = pos[n + 1][seq.parent_map(n)]
    rows = []
    for m in range(n_levels):
        lb = level_basis(seq, m)
        fine_vals = pos[m + 1]
        p = seq.parent_map(m)
        x1 = fine_vals[p[lb.parent]]
        x2 = fine_vals[lb.child]
        x3 = fine_vals[lb.child + 1]
        rows.append(_closed_form(x1, x2, x3, lb.t1, lb.t2, lb.t3))
    return SchauderCoefficients(seq, float(ends[0]), float(ends[1]), tuple(rows))


def _level_contribution(seq: PartitionSequence, lb: LevelBasis, theta: np.ndarray,
                        t: np.ndarray) -> np.ndarray:
    m = lb.m
    fine = seq[m + 1]
    p = seq.parent_map(m)
    N1 = fine.size - 1
    j = np.clip(np.searchsorted(fine, t, side="right") - 1, 0, N1 - 1)
    # per child interval: weight of the increasing leg of the function owning it
    w_up = np.zeros(N1)
    w_up[lb.child] = theta * lb.up
    coef_down = np.zeros(N1)
    coef_down[lb.child] = theta * lb.down
    parent_of_child = np.searchsorted(p, np.arange(N1), side="right") - 1
    # S[j] = sum of w_up over later children of the same parent (local sums only)
    S = np.zeros(N1)
    max_c = int(np.diff(p).max())
    for d in range(1, max_c):
        jj = np.arange(N1 - d)
        same = parent_of_child[jj + d] == parent_of_child[jj]
        S[jj] += np.where(same, w_up[jj + d], 0.0)
    k = parent_of_child[j]
    left = fine[p[k]]
    return coef_down[j] * (fine[j + 1] - t) + S[j] * (t - left)


def synthesize(seq: PartitionSequence, coeffs: SchauderCoefficients, t,
               max_level: Optional[int] = None):
    """Evaluate the Schauder expansion at t using rows ``m < max_level``."""
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    T = coeffs.T
    if np.any(tt < 0) or np.any(tt > T):
        raise ValueError(f"evaluation times must lie in [0, {T}]")
    out = coeffs.x0 + (coeffs.xT - coeffs.x0) * (tt / T)
    rows = coeffs.depth if max_level is None else min(max_level, coeffs.depth)
    for m in range(rows):
        theta = coeffs.theta[m]
        if not np.any(theta):
            continue
        out = out + _level_contribution(coeffs.partition, level_basis(coeffs.partition, m),
                                        theta, tt)
    return float(out[0]) if scalar else out


def flatten_index(seq: PartitionSequence, raw: BasisIndexRaw) -> BasisIndexFlat:
    m, k, i = raw
    _anchors(seq, raw)
    if i < 2:
        raise IndexError("offset i=1 carries no basis function")
    p = seq.parent_map(m)
    return BasisIndexFlat(m, int(p[k] - k + i - 2))


def unflatten_index(seq: PartitionSequence, flat: BasisIndexFlat) -> BasisIndexRaw:
    m, f = flat
    lb = level_basis(seq, m)
    if not 0 <= f < lb.size:
        raise IndexError(f"flat index {f} out of range for |I_{m}| = {lb.size}")
    return BasisIndexRaw(m, int(lb.parent[f]), int(lb.offset[f]))


def haar_matrix(seq: PartitionSequence, max_level: int):
    """Haar values of every basis function of levels ``< max_level`` on the
    intervals of ``seq[max_level]``, where all of them are constant.

    Returns ``(values, widths)`` with ``values`` of shape (n_functions, N).
    """
    grid = seq[max_level]
    mid = 0.5 * (grid[:-1] + grid[1:])
    widths = np.diff(grid)
    blocks = []
    for m in range(max_level):
        lb = level_basis(seq, m)
        tm = mid[None, :]
        pos = (tm >= lb.t1[:, None]) & (tm < lb.t2[:, None])
        neg = (tm >= lb.t2[:, None]) & (tm < lb.t3[:, None])
        blocks.append(pos * lb.up[:, None] - neg * lb.down[:, None])
    return np.vstack(blocks) if blocks else np.zeros((0, widths.size)), widths
