"""Refining partition sequences of [0, T] and their structural certificates.

A partition sequence is stored as a list of strictly increasing point arrays,
one per level.  Every constructor in this module builds level n+1 by copying
the points of level n verbatim and inserting new points between them, so the
nesting property can be checked with exact float equality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "PartitionSequence",
    "PartitionStats",
    "PartitionCertificate",
    "PartitionError",
    "make_dyadic",
    "make_badic",
    "make_random_refining",
    "from_levels",
    "check_refining",
    "check_finitely_refining",
    "check_balanced",
    "check_complete_refining",
    "estimate_convergent_ratio",
    "child_index_map",
    "certify",
    "is_dyadic",
]


class PartitionError(ValueError):
    """A partition sequence violates a structural requirement."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PartitionSequence:
    """Nested grids ``levels[n]`` on ``[0, T]`` with ``levels[0] == [0, T]``.

    ``recipe`` records how the sequence was generated (``{"kind": "dyadic"}``
    and so on) so it can be serialized compactly; it is ``None`` for inline
    sequences.
    """

    T: float
    levels: tuple
    recipe: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise PartitionError(f"horizon T must be positive, got {self.T}")
        if len(self.levels) == 0:
            raise PartitionError("a partition sequence needs at least one level")
        frozen = tuple(_freeze(lv) for lv in self.levels)
        for n, lv in enumerate(frozen):
            if lv.ndim != 1 or lv.size < 2:
                raise PartitionError(f"level {n} needs at least two points")
            if lv[0] != 0.0 or lv[-1] != self.T:
                raise PartitionError(f"level {n} must start at 0 and end at T={self.T}")
            if not np.all(np.diff(lv) > 0):
                raise PartitionError(f"level {n} is not strictly increasing")
        if frozen[0].size != 2:
            raise PartitionError("level 0 must be {0, T}")
        object.__setattr__(self, "levels", frozen)

    @property
    def depth(self) -> int:
        """Index of the finest stored level."""
        return len(self.levels) - 1

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, n: int) -> np.ndarray:
        return self.levels[n]

    @property
    def finest(self) -> np.ndarray:
        return self.levels[-1]

    def n_intervals(self, n: int) -> int:
        return self.levels[n].size - 1

    def mesh(self, n: int) -> float:
        return float(self._steps[n].max())

    def min_step(self, n: int) -> float:
        return float(self._steps[n].min())

    @cached_property
    def _steps(self) -> list:
        return [np.diff(lv) for lv in self.levels]

    @cached_property
    def meshes(self) -> np.ndarray:
        return np.array([s.max() for s in self._steps])

    def stats(self, n: int) -> "PartitionStats":
        ratio = None
        if n + 1 < len(self.levels):
            ratio = self.mesh(n) / self.mesh(n + 1)
        return PartitionStats(n=n, N=self.n_intervals(n), mesh=self.mesh(n),
                              min_step=self.min_step(n), ratio=ratio)

    @cached_property
    def _parent_maps(self) -> list:
        # p(n, k) for k = 0..N(pi^n), as an index array into level n+1
        maps = []
        for n in range(len(self.levels) - 1):
            coarse, fine = self.levels[n], self.levels[n + 1]
            p = np.searchsorted(fine, coarse)
            ok = (p < fine.size) & (fine[np.minimum(p, fine.size - 1)] == coarse)
            maps.append(p if ok.all() else None)
        return maps

    def parent_map(self, n: int) -> np.ndarray:
        """Array ``p`` with ``levels[n+1][p[k]] == levels[n][k]`` for every k."""
        p = self._parent_maps[n]
        if p is None:
            raise PartitionError(f"level {n} is not contained in level {n + 1}")
        return p

    def truncate(self, depth: int) -> "PartitionSequence":
        """The sequence restricted to levels ``0..depth``."""
        if depth < 0 or depth > self.depth:
            raise PartitionError(f"cannot truncate depth {self.depth} sequence to {depth}")
        recipe = None if self.recipe is None else {**self.recipe, "depth": depth}
        return PartitionSequence(self.T, self.levels[: depth + 1], recipe)


@dataclass(frozen=True)
class PartitionStats:
    n: int
    N: int
    mesh: float
    min_step: float
    ratio: Optional[float] = None


@dataclass(frozen=True)
class PartitionCertificate:
    """Structural constants of a stored partition sequence.

    M counts child intervals per parent; ``M_interior`` is the alternative
    reading that counts interior points (always ``M - 1``).  Any constant that
    does not exist for the stored levels is ``None``.
    """

    refining: bool
    M: Optional[int]
    M_interior: Optional[int]
    c: Optional[float]
    a: Optional[float]
    b: Optional[float]
    r_estimate: Optional[float]
    r_dispersion: Optional[float]
    mesh_last: float

    def as_dict(self) -> dict:
        return {
            "refining": self.refining, "M": self.M, "M_interior": self.M_interior,
            "c": self.c, "a": self.a, "b": self.b,
            "r_estimate": self.r_estimate, "r_dispersion": self.r_dispersion,
            "mesh_last": self.mesh_last,
        }


def _refine(parent: np.ndarray, interiors: Sequence[np.ndarray]) -> np.ndarray:
    """Insert ``interiors[k]`` (strictly inside interval k) into ``parent``."""
    chunks = []
    for k in range(parent.size - 1):
        chunks.append(parent[k : k + 1])
        chunks.append(np.asarray(interiors[k], dtype=float))
    chunks.append(parent[-1:])
    return np.concatenate(chunks)


def make_dyadic(T: float, n_max: int) -> PartitionSequence:
    """Dyadic sequence with level n equal to ``{k T / 2**n}``."""
    return make_badic(T, 2, n_max)


def make_badic(T: float, base: int, n_max: int) -> PartitionSequence:
    """Uniform base-``base`` sequence: level n has ``base**n`` equal intervals."""
    if not T > 0:
        raise PartitionError(f"T must be positive, got {T}")
    if int(n_max) != n_max or n_max < 0:
        raise PartitionError(f"n_max must be a nonnegative integer, got {n_max}")
    if int(base) != base or base < 2:
        raise PartitionError(f"base must be an integer >= 2, got {base}")
    T, base, n_max = float(T), int(base), int(n_max)
    levels = [np.array([0.0, T])]
    for n in range(n_max):
        N = base ** (n + 1)
        # new points j/N*T for j not divisible by base; parents copied verbatim
        idx = np.arange(N + 1)
        fresh = idx * T / N
        fine = fresh.copy()
        fine[::base] = levels[-1]
        levels.append(fine)
    kind = "dyadic" if base == 2 else "badic"
    return PartitionSequence(T, tuple(levels), {"kind": kind, "base": base, "T": T, "depth": n_max})


def make_random_refining(T: float, n_max: int, max_children: int = 3,
                         ratio_cap: float = 4.0, seed: int = 0) -> PartitionSequence:
    """Random nested sequence with 2..max_children children per interval.

    At each level a target child length is drawn, every parent is split into
    the child count closest to that target, and child lengths are perturbed by
    random weights.  The perturbation is bounded so that the largest-to-smallest
    step ratio of every level stays at most ``ratio_cap``.
    """
    if int(max_children) != max_children or max_children < 2:
        raise PartitionError(f"max_children must be an integer >= 2, got {max_children}")
    if not ratio_cap >= 1:
        raise PartitionError(f"ratio_cap must be >= 1, got {ratio_cap}")
    if not T > 0 or n_max < 0:
        raise PartitionError("need T > 0 and n_max >= 0")
    rng = np.random.default_rng(seed)
    levels = [np.array([0.0, float(T)])]
    for _ in range(int(n_max)):
        parent = levels[-1]
        lengths = np.diff(parent)
        lmin = lengths.min()
        order = rng.permutation(np.arange(2, max_children + 1))
        counts = None
        for c0 in order:
            target = lmin / c0
            cand = np.clip(np.rint(lengths / target), 2, max_children).astype(int)
            base = lengths / cand
            if base.max() / base.min() <= ratio_cap * (1 + 1e-12):
                counts, rho = cand, base.max() / base.min()
                break
        if counts is None:
            raise PartitionError(
                f"ratio_cap={ratio_cap} is infeasible with max_children={max_children}")
        spread = math.sqrt(ratio_cap / rho)
        s = rng.uniform(1.0, spread) if spread > 1 else 1.0
        interiors = []
        for k, c in enumerate(counts):
            if s > 1:
                u = rng.uniform(1.0, s, size=c)
            else:
                u = np.ones(c)
            cuts = np.cumsum(u)[:-1] / u.sum()
            a, b = parent[k], parent[k + 1]
            pts = a + (b - a) * cuts
            if not (np.all(np.diff(pts) > 0) and pts[0] > a and pts[-1] < b):
                raise PartitionError("interval too short to subdivide in floating point")
            interiors.append(pts)
        levels.append(_refine(parent, interiors))
    seq = PartitionSequence(float(T), tuple(levels), None)
    steps = seq._steps
    worst = max(s.max() / s.min() for s in steps)
    if worst > ratio_cap * (1 + 1e-9):
        raise PartitionError(f"generated step ratio {worst} exceeds ratio_cap={ratio_cap}")
    return seq


def from_levels(T: float, levels: Sequence[Sequence[float]]) -> PartitionSequence:
    return PartitionSequence(float(T), tuple(np.asarray(lv, dtype=float) for lv in levels))


def check_refining(seq: PartitionSequence) -> bool:
    """True iff every point of every level occurs in all deeper levels."""
    for n in range(len(seq) - 1):
        if seq._parent_maps[n] is None:
            return False
    return True


def _child_counts(seq: PartitionSequence, n: int) -> np.ndarray:
    return np.diff(seq.parent_map(n))


def check_finitely_refining(seq: PartitionSequence) -> int:
    """Largest number of child intervals of any parent interval.

    Also confirms ``N(pi^n) <= M**n`` on the stored levels.
    """
    if not check_refining(seq):
        raise PartitionError("sequence is not refining")
    if len(seq) == 1:
        return 1
    M = int(max(_child_counts(seq, n).max() for n in range(len(seq) - 1)))
    for n in range(len(seq)):
        if seq.n_intervals(n) > M ** n:
            raise PartitionError(f"N(pi^{n}) exceeds M^{n} with M={M}")
    return M


def check_balanced(seq: PartitionSequence) -> float:
    """Largest ratio of biggest to smallest step over the stored levels."""
    ratios = []
    for n in range(len(seq)):
        lo = seq.min_step(n)
        if lo <= 0:
            raise PartitionError(f"degenerate interval at level {n}")
        ratios.append(seq.mesh(n) / lo)
    return float(max(ratios))


def check_complete_refining(seq: PartitionSequence) -> tuple:
    """Tightest ``(a, b)`` with ``1 + a <= |pi^n| / |pi^{n+1}| <= b``."""
    if len(seq) < 2:
        raise PartitionError("need at least two levels")
    m = seq.meshes
    ratios = m[:-1] / m[1:]
    if np.any(ratios <= 1):
        n = int(np.argmax(ratios <= 1))
        raise PartitionError(f"mesh does not shrink between levels {n} and {n + 1}")
    return float(ratios.min() - 1), float(ratios.max())


def estimate_convergent_ratio(seq: PartitionSequence, tail_window: int = 5) -> tuple:
    """Mean and max deviation of the mesh ratio over the last ``tail_window`` levels."""
    if tail_window < 2:
        raise PartitionError("tail_window must be at least 2")
    m = seq.meshes
    ratios = m[:-1] / m[1:]
    if ratios.size < tail_window:
        raise PartitionError(
            f"need {tail_window} mesh ratios, sequence has {ratios.size}")
    tail = ratios[-tail_window:]
    r = float(tail.mean())
    return r, float(np.abs(tail - r).max())


def child_index_map(seq: PartitionSequence, n: int, k: int) -> int:
    """``p(n, k)``: position of ``t^n_k`` inside level n+1."""
    if not 0 <= n < len(seq) - 1:
        raise IndexError(f"level {n} has no finer level stored")
    if not 0 <= k <= seq.n_intervals(n):
        raise IndexError(f"point index {k} out of range for level {n}")
    return int(seq.parent_map(n)[k])


def is_dyadic(seq: PartitionSequence) -> bool:
    if seq.recipe is not None and seq.recipe.get("kind") == "dyadic":
        return True
    for n, lv in enumerate(seq.levels):
        if lv.size != 2 ** n + 1:
            return False
        if not np.allclose(lv, np.arange(lv.size) * seq.T / 2 ** n, rtol=0, atol=1e-12 * seq.T):
            return False
    return True


def certify(seq: PartitionSequence, tail_window: int = 5) -> PartitionCertificate:
    """Run every predicate and collect the constants that exist."""
    refining = check_refining(seq)
    M = c = a = b = r = disp = None
    if refining:
        try:
            M = check_finitely_refining(seq)
        except PartitionError:
            M = None
    try:
        c = check_balanced(seq)
    except PartitionError:
        pass
    if len(seq) >= 2:
        try:
            a, b = check_complete_refining(seq)
        except PartitionError:
            pass
        window = min(tail_window, len(seq) - 1)
        if window >= 2:
            r, disp = estimate_convergent_ratio(seq, window)
    return PartitionCertificate(
        refining=refining, M=M, M_interior=None if M is None else M - 1,
        c=c, a=a, b=b, r_estimate=r, r_dispersion=disp, mesh_last=seq.mesh(seq.depth))
