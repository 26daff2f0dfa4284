"""Weighted norms of Schauder coefficient matrices and per-instance bound checks.

The diagonal weightings of the matrix norms are applied row by row; no
weight matrix is ever formed.  Row m of the Hoelder-weighted norm carries the
weight ``|pi^{m+1}|**(1/2 - alpha)`` and row n of the p-norm carries
``|pi^n|**(1/2)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .partition import PartitionSequence, certify, make_dyadic
from .schauder import SampledPath, SchauderCoefficients, decompose, level_basis, synthesize
from .variation import holder_seminorm_grid, level_values, variation_norm, xi_seq

__all__ = [
    "NormBundle",
    "BoundCheck",
    "alpha_sup_rows",
    "alpha_sup_norm",
    "sup_norm",
    "p_norm",
    "forward_bound_check",
    "inverse_bound_constants",
    "xp_constants",
    "xp_bound_check",
    "discontinuity_coefficients",
    "discontinuity_probe",
    "norm_bundle",
]

SLACK = 1e-8


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    passed: bool
    detail: dict


@dataclass
class NormBundle:
    alpha_sup: float
    p_norm: float
    sup_norm: float
    holder_grid: float
    var_norm: float
    alpha: float
    p: float
    constants: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def alpha_sup_rows(seq: PartitionSequence, coeffs: SchauderCoefficients, alpha: float) -> np.ndarray:
    """Per-row maxima of ``|pi^{m+1}|**(1/2 - alpha) |theta_{m,k}|``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return np.array([seq.mesh(m + 1) ** (0.5 - alpha) * float(np.abs(row).max(initial=0.0))
                     for m, row in enumerate(coeffs.theta)])


def alpha_sup_norm(seq: PartitionSequence, coeffs: SchauderCoefficients, alpha: float) -> float:
    rows = alpha_sup_rows(seq, coeffs, alpha)
    return float(rows.max()) if rows.size else 0.0


def sup_norm(coeffs: SchauderCoefficients) -> float:
    return max((float(np.abs(r).max(initial=0.0)) for r in coeffs.theta), default=0.0)


def p_norm(seq: PartitionSequence, coeffs: SchauderCoefficients, p: float) -> float:
    """``max_n xi_n**(1/p)`` over the stored rows."""
    if coeffs.depth == 0:
        return 0.0
    return max(xi_seq(seq, coeffs, p, n) for n in range(coeffs.depth)) ** (1.0 / p)


def _depth_for(seq: PartitionSequence, depth: Optional[int]) -> int:
    depth = seq.depth if depth is None else depth
    if not 1 <= depth <= seq.depth:
        raise ValueError(f"depth {depth} outside 1..{seq.depth}")
    return depth


def _anchor_holder(seq: PartitionSequence, x: SampledPath, depth: int, alpha: float) -> float:
    # ratios on the anchor pairs (t1, t2) and (t2, t3) of every basis function
    best = 0.0
    for m in range(depth):
        lb = level_basis(seq, m)
        if lb.size == 0:
            continue
        x1, x2, x3 = x.at(lb.t1), x.at(lb.t2), x.at(lb.t3)
        r1 = np.abs(x2 - x1) / (lb.t2 - lb.t1) ** alpha
        r2 = np.abs(x3 - x2) / (lb.t3 - lb.t2) ** alpha
        best = max(best, float(r1.max()), float(r2.max()))
    return best


def forward_bound_check(seq: PartitionSequence, x: SampledPath, alpha: float,
                        depth: Optional[int] = None, subsample_cap: int = 2048) -> BoundCheck:
    """Check ``||Theta||^alpha_sup <= 2 c**1.5 |x|_alpha`` for one path.

    The Hoelder semi-norm is the grid estimate over the points of
    ``seq[depth]``, raised to at least the ratios on every coefficient's anchor
    pairs.  Those are the only increments the coefficient bound uses, so the
    inequality must hold exactly up to rounding.
    """
    depth = _depth_for(seq, depth)
    cert = certify(seq.truncate(depth))
    if cert.c is None:
        raise ValueError("partition is not balanced on the stored levels")
    coeffs = decompose(seq, x, depth)
    lhs = alpha_sup_norm(seq, coeffs, alpha)
    pts = seq[depth]
    grid = SampledPath(pts, x.at(pts))
    hold = max(holder_seminorm_grid(grid, alpha, subsample_cap),
               _anchor_holder(seq, x, depth, alpha))
    rhs = 2.0 * cert.c ** 1.5 * hold
    return BoundCheck(lhs, rhs, bool(lhs <= rhs * (1 + SLACK)),
                      {"c": cert.c, "holder_grid": hold, "alpha": alpha, "depth": depth})


def inverse_bound_constants(a: float, alpha: float, M: int, c: float, pi1_mesh: float):
    """``(K1, K2, bound)`` for the inverse of the coefficient map on Hoelder space."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if M < 2 or c < 1:
        raise ValueError("need M >= 2 and c >= 1")
    K1 = 1.0 / (1.0 - (1.0 + a) ** (alpha - 1.0))
    K2 = 1.0 / (1.0 - (1.0 + a) ** (-alpha))
    bound = max(2 * M * math.sqrt(c) * K1 + 2 * M * K2, M * K2 * pi1_mesh ** alpha)
    return K1, K2, bound


def xp_constants(M: int, c: float, a: float, b: float, p: float) -> tuple:
    """Forward and inverse constants relating ``||Theta||_(p)`` and ``||x||^(p)``.

    The forward constant chains ``eta_n**(1/p) <= (M+1)**2 c**1.5 b**(1/2) ||x|| / g**(1/p)``
    with ``xi_n**(1/p) <= b**(1 - 1/p) eta_{n+1}**(1/p)``, so b enters with
    exponent ``3/2 - 1/p``.
    """
    g = (1.0 + a) ** (1.0 - 1.0 / p) - 1.0
    k_fwd = (M + 1) ** 2 * c ** 1.5 * b ** (1.5 - 1.0 / p) / g ** (1.0 / p)
    k_inv = c ** (1.0 / p) * (M * c * math.sqrt(b * M)) / g
    return k_fwd, k_inv


def xp_bound_check(seq: PartitionSequence, x: Union[SampledPath, SchauderCoefficients],
                   p: float, depth: Optional[int] = None) -> BoundCheck:
    """Check both inequalities between ``||Theta||_(p)`` and ``||x||^(p)``.

    The path is first reduced to ``x(0) = x(T) = 0`` by removing its affine
    part, which leaves every coefficient unchanged.
    """
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    if isinstance(x, SchauderCoefficients):
        depth = _depth_for(seq, x.depth if depth is None else depth)
        coeffs = SchauderCoefficients(seq, 0.0, 0.0, x.theta[:depth])
    else:
        depth = _depth_for(seq, depth)
        coeffs = decompose(seq, x, depth).without_affine()
    cert = certify(seq.truncate(depth))
    if None in (cert.M, cert.c, cert.a, cert.b):
        raise ValueError("partition certificate lacks M, c, a or b")
    k_fwd, k_inv = xp_constants(cert.M, cert.c, cert.a, cert.b, p)
    theta_p = p_norm(seq, coeffs, p)
    bridge = level_values(seq, coeffs, depth)
    x_p = variation_norm(seq.truncate(depth), SampledPath(seq[depth], bridge), p)
    fwd_ok = theta_p <= k_fwd * x_p * (1 + SLACK) + 1e-300
    inv_ok = x_p <= k_inv * theta_p * (1 + SLACK) + 1e-300
    detail = {"theta_p": theta_p, "x_p": x_p, "k_fwd": k_fwd, "k_inv": k_inv,
              "forward": [theta_p, k_fwd * x_p, bool(fwd_ok)],
              "inverse": [x_p, k_inv * theta_p, bool(inv_ok)],
              "M": cert.M, "c": cert.c, "a": cert.a, "b": cert.b, "depth": depth}
    ratio = max(theta_p / (k_fwd * x_p) if x_p > 0 else 0.0,
                x_p / (k_inv * theta_p) if theta_p > 0 else 0.0)
    return BoundCheck(ratio, 1.0, bool(fwd_ok and inv_ok), detail)


def discontinuity_coefficients(depth: int, T: float = 1.0) -> SchauderCoefficients:
    """Dyadic matrix with ``Theta_{m,0} = 2**(m/2)`` and all other entries zero."""
    seq = make_dyadic(T, depth)
    rows = []
    for m in range(depth):
        r = np.zeros(2 ** m)
        r[0] = 2.0 ** (m / 2)
        rows.append(r)
    return SchauderCoefficients(seq, 0.0, 0.0, tuple(rows))


def discontinuity_probe(n_max: int = 20, tol: float = 1e-12) -> np.ndarray:
    """Rows ``(2**-n, x(2**-n))`` for n = 1..n_max of the discontinuous expansion.

    Every value must equal ``1 - 2**-n``; the expansion therefore does not tend
    to ``x(0) = 0`` even though its p-norm for p = 2 is one.
    """
    coeffs = discontinuity_coefficients(n_max)
    t = 2.0 ** -np.arange(1, n_max + 1)
    vals = synthesize(coeffs.partition, coeffs, t)
    err = np.abs(vals - (1 - t))
    if err.max() > tol:
        raise AssertionError(f"discontinuity probe off by {err.max():.3e}")
    return np.column_stack((t, vals))


def norm_bundle(seq: PartitionSequence, x: Union[SampledPath, SchauderCoefficients],
                alpha: float, p: float, depth: Optional[int] = None) -> NormBundle:
    """All coefficient and path norms of x together with the constants in play."""
    if isinstance(x, SchauderCoefficients):
        coeffs = x
        depth = coeffs.depth if depth is None else depth
        path = SampledPath(seq[depth], level_values(seq, coeffs, depth))
    else:
        depth = _depth_for(seq, depth)
        coeffs = decompose(seq, x, depth)
        path = SampledPath(seq[depth], x.at(seq[depth]))
    sub = seq.truncate(depth)
    cert = certify(sub)
    flags = []
    rows = alpha_sup_rows(seq, coeffs, alpha)
    if rows.size == 0:
        flags.append("empty")
    elif rows.size > 1 and rows[-1] >= rows.max() and rows[-1] > rows[-2]:
        flags.append("alpha_sup_growing")
    constants = cert.as_dict()
    if cert.a and cert.a > 0 and cert.M and cert.M >= 2 and cert.c:
        K1, K2, inv = inverse_bound_constants(cert.a, alpha, cert.M, cert.c, sub.mesh(1))
        k_fwd, k_inv = xp_constants(cert.M, cert.c, cert.a, cert.b, p)
        constants.update({"K1": K1, "K2": K2, "inverse_bound": inv,
                          "forward_bound": 2 * cert.c ** 1.5, "k_fwd_p": k_fwd, "k_inv_p": k_inv})
    return NormBundle(
        alpha_sup=alpha_sup_norm(seq, coeffs, alpha),
        p_norm=p_norm(seq, coeffs, p),
        sup_norm=sup_norm(coeffs),
        holder_grid=holder_seminorm_grid(path, alpha),
        var_norm=variation_norm(sub, path, p),
        alpha=alpha, p=p, constants=constants, flags=flags)
