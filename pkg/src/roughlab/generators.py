"""Seeded test paths and coefficient matrices with known roughness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .partition import PartitionSequence, make_dyadic
from .schauder import SampledPath, SchauderCoefficients, index_set_size, sample_function

__all__ = [
    "GeneratorSpec",
    "generate",
    "gen_brownian",
    "gen_brownian_dyadic",
    "gen_takagi",
    "takagi_xi",
    "gen_uniform",
    "gen_sqrt",
    "gen_inverse_log",
    "gen_affine",
    "gen_weierstrass",
    "weierstrass_exponent",
    "gen_fbm_cholesky",
    "gen_constant_xi",
]

KINDS = ("brownian", "takagi", "weierstrass", "sqrt", "inverse_log", "affine", "fbm",
         "custom_xi_constant", "uniform")


def gen_brownian(seq: PartitionSequence, depth: int, seed: int) -> SchauderCoefficients:
    """Brownian motion in coefficient space: i.i.d. standard normal rows.

    Valid on any refining sequence because the generalized Haar functions are
    orthonormal; the endpoint has variance T.
    """
    if not 0 <= depth <= seq.depth:
        raise ValueError(f"depth {depth} outside 0..{seq.depth}")
    rng = np.random.default_rng(seed)
    xT = math.sqrt(seq.T) * rng.standard_normal()
    rows = tuple(rng.standard_normal(index_set_size(seq, m)) for m in range(depth))
    return SchauderCoefficients(seq, 0.0, xT, rows)


def gen_brownian_dyadic(T: float, depth: int, seed: int) -> SchauderCoefficients:
    if depth > 24:
        raise ValueError("depth must be at most 24")
    return gen_brownian(make_dyadic(T, depth), depth, seed)


def gen_takagi(T: float, depth: int, h: float, sign_seed: Optional[int] = 0,
               seq: Optional[PartitionSequence] = None) -> SchauderCoefficients:
    """Generalized Takagi expansion ``theta_{m,k} = sigma_{m,k} |pi^{m+1}|**(h - 1/2)``.

    On the dyadic grid of [0, 1] the magnitude is ``2**((m+1)(1/2 - h))``.
    Signs are random with ``sign_seed`` or all +1 when it is None.
    """
    if not 0 < h < 1:
        raise ValueError(f"h must lie in (0, 1), got {h}")
    seq = make_dyadic(T, depth) if seq is None else seq
    if depth > seq.depth:
        raise ValueError(f"depth {depth} exceeds partition depth {seq.depth}")
    rng = None if sign_seed is None else np.random.default_rng(sign_seed)
    rows = []
    for m in range(depth):
        size = index_set_size(seq, m)
        sign = np.ones(size) if rng is None else rng.choice([-1.0, 1.0], size=size)
        rows.append(sign * seq.mesh(m + 1) ** (h - 0.5))
    return SchauderCoefficients(seq, 0.0, 0.0, tuple(rows))


def takagi_xi(T: float, h: float, p: float, n: int) -> float:
    """Closed-form ``xi_n`` of the dyadic Takagi expansion.

    ``(T 2**-n)**(p/2) * 2**n * (T 2**-(n+1))**((h - 1/2) p)``, which on [0, 1]
    is ``2**(n (1 - h p)) * 2**((1/2 - h) p)``.
    """
    return (T * 2.0 ** -n) ** (p / 2) * 2.0 ** n * (T * 2.0 ** -(n + 1)) ** ((h - 0.5) * p)


def gen_uniform(T: float, depth: int, seed: int, low: float = -1.0, high: float = 1.0,
                seq: Optional[PartitionSequence] = None) -> SchauderCoefficients:
    """Coefficient rows with i.i.d. uniform entries and zero affine part."""
    seq = make_dyadic(T, depth) if seq is None else seq
    rng = np.random.default_rng(seed)
    rows = tuple(rng.uniform(low, high, index_set_size(seq, m)) for m in range(depth))
    return SchauderCoefficients(seq, 0.0, 0.0, rows)


def _grid(T, depth, seq):
    return make_dyadic(T, depth) if seq is None else seq


def gen_sqrt(T: float = 1.0, depth: int = 12,
             seq: Optional[PartitionSequence] = None) -> SampledPath:
    return sample_function(_grid(T, depth, seq), np.sqrt)


def gen_inverse_log(depth: int = 12, seq: Optional[PartitionSequence] = None) -> SampledPath:
    """``z(t) = 1 / log t`` on ``[0, 1/2]`` with ``z(0) = 0``."""
    seq = _grid(0.5, depth, seq)
    if seq.T != 0.5:
        raise ValueError("inverse_log lives on [0, 1/2]")

    def z(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = 1.0 / np.log(t[pos])
        return out

    return sample_function(seq, z)


def gen_affine(x0: float, xT: float, T: float = 1.0, depth: int = 10,
               seq: Optional[PartitionSequence] = None) -> SampledPath:
    seq = _grid(T, depth, seq)
    return sample_function(seq, lambda t: x0 + (xT - x0) * t / seq.T)


def weierstrass_exponent(a_w: float, b_w: int) -> float:
    """Hoelder exponent ``-log a / log b`` of the Weierstrass function."""
    return -math.log(a_w) / math.log(b_w)


def gen_weierstrass(T: float, depth: int, a_w: float = 0.5, b_w: int = 3, terms: int = 30,
                    seq: Optional[PartitionSequence] = None) -> SampledPath:
    """Partial sum ``sum_{k<terms} a**k cos(b**k pi t / T)``."""
    if not 0 < a_w < 1:
        raise ValueError(f"a_w must lie in (0, 1), got {a_w}")
    if int(b_w) != b_w or b_w < 3 or int(b_w) % 2 == 0:
        raise ValueError(f"b_w must be an odd integer >= 3, got {b_w}")
    if a_w * b_w <= 1:
        raise ValueError("a_w * b_w must exceed 1")
    if not 0 <= terms <= 60:
        raise ValueError(f"terms must lie in 0..60, got {terms}")
    seq = _grid(T, depth, seq)

    def w(t):
        out = np.zeros_like(t)
        for k in range(terms):
            out += a_w ** k * np.cos(float(b_w) ** k * np.pi * t / seq.T)
        return out

    return sample_function(seq, w)


@lru_cache(maxsize=2)
def _fbm_factor(T: float, H: float, n_points: int) -> np.ndarray:
    t = np.linspace(0.0, T, n_points)[1:]
    s, u = np.meshgrid(t, t, indexing="ij")
    cov = 0.5 * (s ** (2 * H) + u ** (2 * H) - np.abs(s - u) ** (2 * H))
    try:
        L = scipy.linalg.cholesky(cov, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"fBM covariance is not positive definite: {exc}") from None
    L.setflags(write=False)
    return L


def gen_fbm_cholesky(T: float, H: float, n_points: int = 4097, seed: int = 0) -> SampledPath:
    """Exact fractional Brownian motion on a uniform grid via dense Cholesky.

    The sample lives on the dyadic level with ``2**d <= n_points - 1``; when
    ``n_points - 1`` is a power of two the grids coincide and no interpolation
    happens.
    """
    if not 0 < H < 1:
        raise ValueError(f"H must lie in (0, 1), got {H}")
    if not 3 <= n_points <= 4097:
        raise ValueError(f"n_points must lie in 3..4097, got {n_points}")
    L = _fbm_factor(float(T), float(H), int(n_points))
    rng = np.random.default_rng(seed)
    vals = np.concatenate(([0.0], L @ rng.standard_normal(n_points - 1)))
    d = int(math.floor(math.log2(n_points - 1)))
    target = make_dyadic(T, d).finest
    if 2 ** d == n_points - 1:
        return SampledPath(target, vals)
    src = np.linspace(0.0, T, n_points)
    return SampledPath(target, np.interp(target, src, vals))


def gen_constant_xi(T: float, depth: int, p: int, target_xi: float) -> SchauderCoefficients:
    """Dyadic rows chosen so that ``xi_n`` equals ``target_xi`` at every level.

    ``theta_{n,k} = (target / (2**n |pi^n|**(p/2)))**(1/p)`` for all k; on
    [0, 1] this is ``(target 2**(n p / 2) / 2**n)**(1/p)``.
    """
    if int(p) != p or p < 2 or int(p) % 2:
        raise ValueError(f"p must be an even integer, got {p}")
    if target_xi < 0:
        raise ValueError("target_xi must be nonnegative")
    seq = make_dyadic(T, depth)
    rows = []
    for n in range(depth):
        mesh = T * 2.0 ** -n
        val = (target_xi / (2.0 ** n * mesh ** (p / 2))) ** (1.0 / p)
        rows.append(np.full(2 ** n, val))
    return SchauderCoefficients(seq, 0.0, 0.0, tuple(rows))


@dataclass
class GeneratorSpec:
    """Generator request as read from JSON: a kind plus keyword parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        h = self.params.get("h", self.params.get("H"))
        if h is not None and not 0 < float(h) < 1:
            raise ValueError(f"roughness must lie in (0, 1), got {h}")

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind is None:
            raise ValueError("generator spec needs a 'kind'")
        params = d.pop("params", {})
        params.update(d)
        return cls(kind, params)


def generate(spec: GeneratorSpec) -> Union[SampledPath, SchauderCoefficients]:
    p = dict(spec.params)
    T = float(p.get("T", 1.0))
    depth = int(p.get("depth", 10))
    seed = int(p.get("seed", 0))
    kind = spec.kind
    if kind == "brownian":
        return gen_brownian_dyadic(T, depth, seed)
    if kind == "takagi":
        return gen_takagi(T, depth, float(p.get("h", 0.5)), p.get("sign_seed", seed))
    if kind == "uniform":
        return gen_uniform(T, depth, seed)
    if kind == "custom_xi_constant":
        return gen_constant_xi(T, depth, int(p.get("p", 2)), float(p.get("target_xi", 1.0)))
    if kind == "sqrt":
        return gen_sqrt(T, depth)
    if kind == "inverse_log":
        return gen_inverse_log(depth)
    if kind == "affine":
        return gen_affine(float(p.get("x0", 0.0)), float(p.get("xT", 1.0)), T, depth)
    if kind == "weierstrass":
        return gen_weierstrass(T, depth, float(p.get("a_w", 0.5)), int(p.get("b_w", 3)),
                               int(p.get("terms", 30)))
    if kind == "fbm":
        return gen_fbm_cholesky(T, float(p.get("H", p.get("h", 0.5))),
                                int(p.get("n_points", 4097)), seed)
    raise ValueError(kind)
