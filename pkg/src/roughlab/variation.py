"""p-th variation along partition levels and its Schauder-coefficient diagnostics.

Paths can be given either as a :class:`SampledPath` (values read at partition
points) or as :class:`SchauderCoefficients` (values synthesized at partition
points).  All limits are truncated to the stored depth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .partition import PartitionSequence, is_dyadic
from .schauder import SampledPath, SchauderCoefficients, level_basis, synthesize

__all__ = [
    "VariationSeries",
    "DiagnosticSeries",
    "IndexEstimate",
    "level_values",
    "pth_variation",
    "variation_series",
    "variation_norm",
    "eta_seq",
    "xi_seq",
    "diagnostic_series",
    "variation_index_estimate",
    "dyadic_quadratic",
    "dyadic_even_p",
    "EquivalenceResidual",
    "quadratic_equivalence_residual",
    "QVarPartition",
    "build_partition_small_qvar",
    "VanishingQVarResult",
    "build_vanishing_qvar_sequence",
    "holder_seminorm_grid",
    "DEFAULT_P_GRID",
]

PathLike = Union[SampledPath, SchauderCoefficients]

DEFAULT_P_GRID = np.round(np.arange(1.05, 6.0 + 1e-9, 0.05), 10)
SLOPE_TOL = 0.05


@dataclass
class VariationSeries:
    p: float
    t: float
    levels: list
    v: list

    def __post_init__(self):
        assert all(val >= 0 for val in self.v)


@dataclass
class DiagnosticSeries:
    p: float
    levels: list
    eta: list
    xi: list
    t: Optional[float] = None


@dataclass
class IndexEstimate:
    p_hat: float
    method: str
    window: list
    p_grid: list
    slopes: list
    flag: Optional[str] = None
    classification: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"p_hat": self.p_hat, "method": self.method, "window": self.window,
                "p_grid": self.p_grid, "slopes": self.slopes, "flag": self.flag,
                "classification": self.classification}


def level_values(seq: PartitionSequence, x: PathLike, n: int, tol: float = 0.0) -> np.ndarray:
    """Values of x at the points of ``seq[n]``."""
    if isinstance(x, SchauderCoefficients):
        return synthesize(seq, x, seq[n])
    return x.at(seq[n], tol=tol)


def _increments_upto(seq, x, n, t, tol=0.0):
    vals = level_values(seq, x, n, tol)
    pts = seq[n]
    if t is None:
        t = seq.T
    if t < 0 or t > seq.T:
        raise ValueError(f"cutoff t={t} outside [0, {seq.T}]")
    # increments starting at partition points t_j <= t, including a straddling one
    n_incr = min(int(np.searchsorted(pts, t, side="right")), pts.size - 1)
    return np.diff(vals)[:n_incr]


def pth_variation(seq: PartitionSequence, x: PathLike, p: float, n: int,
                  t: Optional[float] = None, tol: float = 0.0) -> float:
    """Sum of ``|x(t_{j+1}) - x(t_j)|**p`` over level-n points ``t_j <= t``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    d = _increments_upto(seq, x, n, t, tol)
    return float(np.sum(np.abs(d) ** p))


def variation_series(seq, x, p, levels=None, t=None, tol=0.0) -> VariationSeries:
    levels = list(range(seq.depth + 1)) if levels is None else list(levels)
    v = [pth_variation(seq, x, p, n, t, tol) for n in levels]
    return VariationSeries(p=p, t=seq.T if t is None else t, levels=levels, v=v)


def variation_norm(seq: PartitionSequence, x: PathLike, p: float, n_max: Optional[int] = None,
                   tol: float = 0.0) -> float:
    """``|x(0)| + max_{n <= n_max} ([x]^(p)_n(T))**(1/p)``."""
    n_max = seq.depth if n_max is None else n_max
    x0 = level_values(seq, x, 0, tol)[0]
    best = max(pth_variation(seq, x, p, n, tol=tol) ** (1.0 / p) for n in range(n_max + 1))
    return float(abs(x0) + best)


def _row_mask(coeffs: SchauderCoefficients, m: int, t: Optional[float]) -> np.ndarray:
    if t is None:
        return slice(None)
    lb = level_basis(coeffs.partition, m)
    return lb.t3 <= t


def _check_p(p):
    if not p > 1:
        raise ValueError(f"eta/xi require p > 1, got {p}")


def eta_seq(seq: PartitionSequence, coeffs: SchauderCoefficients, p: float, n: int,
            t: Optional[float] = None) -> float:
    """``|pi^n|**(p-1) * (sum_{m<n} |pi^m|**(1/p-1/2) * ||theta_m||_p)**p``.

    With a cutoff t only coefficients whose Schauder function is supported in
    ``[0, t]`` contribute.
    """
    _check_p(p)
    if coeffs.depth == 0:
        raise ValueError("no coefficient rows")
    if not 1 <= n <= coeffs.depth:
        raise IndexError(f"eta_{n} needs rows 0..{n - 1}; {coeffs.depth} stored")
    total = 0.0
    for m in range(n):
        row = np.abs(coeffs.theta[m][_row_mask(coeffs, m, t)])
        total += seq.mesh(m) ** (1.0 / p - 0.5) * float(np.sum(row ** p)) ** (1.0 / p)
    return float(seq.mesh(n) ** (p - 1) * total ** p)


def xi_seq(seq: PartitionSequence, coeffs: SchauderCoefficients, p: float, n: int,
           t: Optional[float] = None) -> float:
    """``|pi^n|**(p/2) * sum_k |theta_{n,k}|**p`` over row n."""
    _check_p(p)
    if not 0 <= n < coeffs.depth:
        raise IndexError(f"row {n} missing; {coeffs.depth} rows stored")
    row = np.abs(coeffs.theta[n][_row_mask(coeffs, n, t)])
    return float(seq.mesh(n) ** (p / 2) * np.sum(row ** p))


def diagnostic_series(seq, coeffs, p, t=None) -> DiagnosticSeries:
    levels = list(range(coeffs.depth))
    eta = [0.0] + [eta_seq(seq, coeffs, p, n, t) for n in range(1, coeffs.depth)]
    xi = [xi_seq(seq, coeffs, p, n, t) for n in levels]
    return DiagnosticSeries(p=p, levels=levels, eta=eta, xi=xi, t=t)


def _slope(levels, values) -> float:
    vals = np.asarray(values, dtype=float)
    logs = np.log(np.maximum(vals, 1e-300))
    return float(np.polyfit(np.asarray(levels, dtype=float), logs, 1)[0])


def variation_index_estimate(seq: PartitionSequence, x: PathLike, p_grid=None,
                             tail_window: int = 5, tol: float = 0.0) -> IndexEstimate:
    """Estimate the variation index from tail log-slopes across a grid of p.

    For each p the slope of ``log [x]^(p)_n(T)`` (sampled path) or of
    ``log xi_n`` (coefficients) against n is fitted over the last
    ``tail_window`` levels.  The estimate is the linearly interpolated p where
    the slope changes sign from diverging to vanishing.
    """
    p_grid = DEFAULT_P_GRID if p_grid is None else np.asarray(p_grid, dtype=float)
    if np.any(np.diff(p_grid) <= 0) or np.any(p_grid <= 1):
        raise ValueError("p_grid must be increasing with all entries > 1")
    if p_grid.size < 2:
        raise ValueError("p_grid needs at least two values")
    if isinstance(x, SchauderCoefficients):
        method = "xi-slope"
        if x.depth < tail_window + 2:
            raise ValueError(f"need {tail_window + 2} coefficient rows, have {x.depth}")
        window = list(range(x.depth - tail_window, x.depth))
        absrows = [np.abs(x.theta[n]) for n in window]
        meshes = [seq.mesh(n) for n in window]
        curves = [[meshes[i] ** (p / 2) * float(np.sum(r ** p)) for i, r in enumerate(absrows)]
                  for p in p_grid]
    else:
        method = "pvar-slope"
        if seq.depth < tail_window + 1:
            raise ValueError(f"need {tail_window + 2} levels, have {seq.depth + 1}")
        window = list(range(seq.depth - tail_window + 1, seq.depth + 1))
        incs = [np.abs(np.diff(level_values(seq, x, n, tol))) for n in window]
        curves = [[float(np.sum(d ** p)) for d in incs] for p in p_grid]
    if all(max(c) == 0.0 for c in curves):
        return IndexEstimate(1.0, method, window, p_grid.tolist(),
                             [0.0] * p_grid.size, "null", ["vanishing"] * p_grid.size)
    slopes = np.array([_slope(window, c) for c in curves])
    cls = ["diverging" if s > SLOPE_TOL else "vanishing" if s < -SLOPE_TOL else "critical"
           for s in slopes]
    flag = None
    nonpos = np.nonzero(slopes <= 0)[0]
    if nonpos.size == 0:
        p_hat, flag = float(p_grid[-1]), "above_grid"
    elif nonpos[0] == 0:
        s0, s1 = slopes[0], slopes[1]
        if s1 < s0:
            p_hat = float(p_grid[0] - s0 * (p_grid[1] - p_grid[0]) / (s1 - s0))
        else:
            p_hat = 1.0
        p_hat = min(max(p_hat, 1.0), float(p_grid[0]))
        flag = "below_grid"
    else:
        i = int(nonpos[0])
        pa, pb, sa, sb = p_grid[i - 1], p_grid[i], slopes[i - 1], slopes[i]
        p_hat = float(pa + sa * (pb - pa) / (sa - sb))
    return IndexEstimate(max(p_hat, 1.0), method, window, p_grid.tolist(), slopes.tolist(),
                         flag, cls)


def _require_dyadic(coeffs: SchauderCoefficients):
    if not is_dyadic(coeffs.partition):
        raise ValueError("closed-form dyadic formulas need the dyadic partition sequence")


def dyadic_quadratic(coeffs: SchauderCoefficients, n: int) -> float:
    """Quadratic variation at dyadic level n of the expansion without its affine part.

    Equals ``T 2**-n sum_{m<n} sum_k theta_{m,k}**2``; rows not stored count as zero.
    """
    _require_dyadic(coeffs)
    total = sum(float(np.sum(coeffs.theta[m] ** 2)) for m in range(min(n, coeffs.depth)))
    return coeffs.T * 2.0 ** (-n) * total


def dyadic_even_p(coeffs: SchauderCoefficients, p: int, n: int) -> float:
    """Even-p variation at dyadic level n of the expansion without its affine part.

    ``sum_{m<n} sum_k 2**(n-m) (2**(m/2) T**(1/2) 2**-n)**p theta_{m,k}**p``.
    Odd p has no such closed form and is rejected.

    Only the pure p-th powers are summed.  For p = 2 this is exact.  For
    p >= 4, products such as ``theta_a**2 theta_b**2`` of coefficients with
    nested supports do not cancel, so the sum is exact only when no two
    nonzero coefficients have nested supports (e.g. a single nonzero row).
    """
    if int(p) != p or p < 2 or int(p) % 2:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    p = int(p)
    _require_dyadic(coeffs)
    sqT = math.sqrt(coeffs.T)
    total = 0.0
    for m in range(min(n, coeffs.depth)):
        w = 2.0 ** (n - m) * (2.0 ** (m / 2) * sqT * 2.0 ** (-n)) ** p
        total += w * float(np.sum(coeffs.theta[m] ** p))
    return total


class EquivalenceResidual(NamedTuple):
    lhs: float
    rhs: float
    residual: float
    eta_scaled: float


def quadratic_equivalence_residual(coeffs: SchauderCoefficients, p: int,
                                   n_max: int) -> EquivalenceResidual:
    """Finite-n comparison of the three dyadic limits linked for even p.

    ``lhs`` is the variation at level n_max, ``rhs`` is ``xi_{n_max} / (2**(p-1) - 1)``
    and ``eta_scaled`` is ``eta_{n_max} (2**(1-1/p) - 1)**p / (2**(p-1) - 1)``.
    """
    lhs = dyadic_even_p(coeffs, p, n_max)
    seq = coeffs.partition
    denom = 2.0 ** (p - 1) - 1
    rhs = xi_seq(seq, coeffs, p, n_max) / denom
    eta = eta_seq(seq, coeffs, p, n_max) if n_max >= 1 else 0.0
    eta_scaled = eta * (2.0 ** (1 - 1 / p) - 1) ** p / denom
    return EquivalenceResidual(lhs, rhs, abs(lhs - rhs), eta_scaled)


class QVarPartition(NamedTuple):
    points: np.ndarray
    q_variation: float
    N: int
    feasible: bool


def _qvar(values: np.ndarray, q: float) -> float:
    return float(np.sum(np.abs(np.diff(values)) ** q))


def _level_set_indices(v: np.ndarray, lo: int, hi: int, q: float, budget: float):
    """Grid indices in ``[lo, hi]`` at first crossings of equally spaced levels.

    Starts from the smallest level count N with ``|dx|**q N**(1-q) < budget`` and
    raises N until the measured q-variation meets the budget or the grid is
    exhausted.  Returns ``(indices, qvar, N, feasible)``.
    """
    seg = v[lo : hi + 1]
    delta = seg[-1] - seg[0]
    if delta == 0 or hi - lo <= 1:
        idx = np.array([lo, hi])
        val = _qvar(v[idx], q)
        return idx, val, 1, val <= budget
    y = (seg - seg[0]) / delta
    running = np.maximum.accumulate(y)
    N = int(math.floor((abs(delta) ** q / budget) ** (1.0 / (q - 1)))) + 1
    best = None
    limit = hi - lo
    while True:
        levels = np.arange(1, N + 1) / N
        hits = np.searchsorted(running, levels, side="left")
        hits = np.minimum(hits, seg.size - 1)
        idx = np.unique(np.concatenate(([0], hits, [seg.size - 1]))) + lo
        val = _qvar(v[idx], q)
        if best is None or val < best[1]:
            best = (idx, val, N)
        if val <= budget:
            return idx, val, N, True
        if N >= limit:
            return best[0], best[1], best[2], False
        N = min(limit, max(N + 1, int(N * 1.1)))


def build_partition_small_qvar(x: SampledPath, q: float, eps: float) -> QVarPartition:
    """Finite partition of ``[0, T]`` along which the q-variation of x is below eps.

    The path is normalized to run from 0 to 1 and partition points are the
    first sample times at which it reaches ``j / N``.  The bound is checked on
    the returned points, not assumed.
    """
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    v = x.values
    if v[0] == v[-1]:
        return QVarPartition(x.times[[0, -1]].copy(), 0.0, 1, True)
    idx, val, N, ok = _level_set_indices(v, 0, v.size - 1, q, eps)
    return QVarPartition(x.times[idx].copy(), val, N, bool(ok))


@dataclass
class VanishingQVarResult:
    sequence: PartitionSequence
    schedule: list
    q_variation: list
    mesh: list
    feasible: bool


def _mesh_fill(times: np.ndarray, idx: np.ndarray, eps: float):
    """Add grid indices so that consecutive selected times are at most eps apart."""
    out = [int(idx[0])]
    ok = True
    for a, b in zip(idx[:-1], idx[1:]):
        cur = int(a)
        while times[b] - times[cur] > eps:
            nxt = int(np.searchsorted(times, times[cur] + eps, side="right")) - 1
            if nxt <= cur:
                ok = False
                nxt = cur + 1
            cur = nxt
            out.append(cur)
        out.append(int(b))
    return np.unique(out), ok


def build_vanishing_qvar_sequence(x: SampledPath, q: float,
                                  eps_schedule: Sequence[float]) -> VanishingQVarResult:
    """Nested partitions with mesh and q-variation of x both below ``eps_schedule[n]``.

    Each level first refines the previous one to the required mesh, then splits
    every resulting interval by level sets with a per-interval budget
    ``eps_n / m`` where m is the number of intervals.  If a level cannot meet
    its schedule on the sample grid, the levels built so far are returned with
    ``feasible = False``.
    """
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    eps = np.asarray(eps_schedule, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_schedule must be positive and strictly decreasing")
    times, v = x.times, x.values
    idx = np.array([0, times.size - 1])
    levels = [times[idx].copy()]
    qv, meshes = [], []
    feasible = True
    for e in eps:
        rho, _ = _mesh_fill(times, idx, e)
        m = rho.size - 1
        pieces = [rho[:1]]
        # a missed per-interval budget is harmless if the level total still fits
        for a, b in zip(rho[:-1], rho[1:]):
            sub, _, _, _ = _level_set_indices(v, int(a), int(b), q, e / m)
            pieces.append(sub[1:])
        cand = np.unique(np.concatenate(pieces))
        cq, cm = _qvar(v[cand], q), float(np.diff(times[cand]).max())
        if cq > e or cm > e:
            feasible = False
            break
        idx = cand
        levels.append(times[idx].copy())
        qv.append(cq)
        meshes.append(cm)
    seq = PartitionSequence(x.T, tuple(levels))
    return VanishingQVarResult(seq, eps.tolist(), qv, meshes, bool(feasible))


def holder_seminorm_grid(x: SampledPath, alpha: float, subsample_cap: int = 2048) -> float:
    """Largest ``|x(s) - x(t)| / |s - t|**alpha`` over sample pairs.

    All pairs are used when there are at most ``subsample_cap`` samples;
    otherwise every pair at a fixed set of lags (all small lags plus a
    geometric ladder) is used.  Either way the result is a lower bound for the
    true semi-norm.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    t, v = x.times, x.values
    n = t.size
    if n < 2:
        raise ValueError("need at least two samples")
    if n <= subsample_cap:
        lags = range(1, n)
    else:
        small = np.arange(1, 65)
        ladder = np.unique(np.geomspace(65, n - 1, 64).astype(int))
        lags = np.unique(np.concatenate((small, ladder)))
    best = 0.0
    for lag in lags:
        lag = int(lag)
        r = np.abs(v[lag:] - v[:-lag]) / (t[lag:] - t[:-lag]) ** alpha
        best = max(best, float(r.max()))
    return best
