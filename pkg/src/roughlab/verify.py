"""Self-contained verification corpus: every check reports a measured residual."""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .ciesielski import (discontinuity_coefficients, discontinuity_probe, forward_bound_check,
                         xp_bound_check)
from .generators import gen_brownian, gen_takagi, gen_uniform, gen_weierstrass
from .partition import make_badic, make_dyadic, make_random_refining
from .schauder import SampledPath, decompose, haar_matrix, synthesize
from .variation import dyadic_even_p, dyadic_quadratic, level_values, pth_variation, xi_seq

__all__ = ["CheckResult", "run_checks", "thread_count"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def thread_count() -> int:
    env = os.environ.get("ROUGHLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300) if (a or b) else 0.0


def _partitions(depth: int):
    yield "dyadic", make_dyadic(1.0, depth)
    yield "3-adic", make_badic(1.0, 3, max(1, min(depth, 7)))
    for s in range(5):
        yield f"random[{s}]", make_random_refining(1.0, max(1, min(depth, 8)), 3, 4.0, seed=s)


def check_orthonormality(depth: int) -> CheckResult:
    worst = 0.0
    for s in range(5):
        seq = make_random_refining(1.0, min(depth, 6) + 1, 3, 4.0, seed=100 + s)
        vals, w = haar_matrix(seq, seq.depth)
        worst = max(worst, float(np.abs(vals @ w).max()))
        gram = (vals * w) @ vals.T
        worst = max(worst, float(np.abs(gram - np.eye(gram.shape[0])).max()))
    return CheckResult("orthonormality", worst <= 1e-12, worst, 1e-12)


def check_interpolation(depth: int) -> CheckResult:
    worst, where = 0.0, ""
    for name, seq in _partitions(depth):
        d = seq.depth
        paths = [SampledPath(seq[d], level_values(seq, gen_brownian(seq, d, 0), d)),
                 SampledPath(seq[d], level_values(seq, gen_takagi(1.0, d, 0.3, 1, seq=seq), d)),
                 gen_weierstrass(1.0, d, 0.6, 3, 12, seq=seq)]
        for x in paths:
            coeffs = decompose(seq, x, d)
            for n in range(d + 1):
                err = float(np.abs(synthesize(seq, coeffs, seq[n], max_level=n) - x.at(seq[n])).max())
                if err > worst:
                    worst, where = err, f"{name} level {n}"
    return CheckResult("interpolation", worst <= 1e-10, worst, 1e-10, where)


def _single_row(coeffs, m):
    rows = [r if i == m else np.zeros_like(r) for i, r in enumerate(coeffs.theta)]
    return type(coeffs)(coeffs.partition, 0.0, 0.0, tuple(rows))


def check_dyadic_oracle(depth: int, perturb: float = 0.0, n_mats: int = 20) -> CheckResult:
    """Closed forms against brute-force increments.

    The quadratic form is exact for any matrix.  For p = 4, 6 the closed form
    omits the even-power products of nested coefficients, so it is compared on
    matrices with a single nonzero row, where those products vanish.
    """
    seq = make_dyadic(1.0, depth)
    worst = 0.0

    def perturbed(c):
        if not perturb:
            return c
        rows = list(c.theta)
        rows[-1] = rows[-1] + perturb
        return type(c)(seq, 0.0, 0.0, tuple(rows))

    for s in range(n_mats):
        coeffs = gen_uniform(1.0, depth, seed=s)
        brute2 = pth_variation(seq, coeffs, 2, depth)
        worst = max(worst, _rel(dyadic_even_p(perturbed(coeffs), 2, depth), brute2),
                    _rel(dyadic_quadratic(perturbed(coeffs), depth), brute2))
        single = _single_row(coeffs, s % depth)
        for p in (4, 6):
            brute = pth_variation(seq, single, p, depth)
            worst = max(worst, _rel(dyadic_even_p(perturbed(single), p, depth), brute))
    return CheckResult("dyadic_oracle", worst <= 1e-10, worst, 1e-10)


def check_bounds(depth: int) -> CheckResult:
    worst, failures = 0.0, []
    for name, seq in _partitions(depth):
        d = seq.depth
        paths = {"brownian": SampledPath(seq[d], level_values(seq, gen_brownian(seq, d, 3), d)),
                 "takagi": SampledPath(seq[d], level_values(seq, gen_takagi(1.0, d, 0.4, 2, seq=seq), d))}
        for label, x in paths.items():
            for alpha in (0.25, 0.4):
                r = forward_bound_check(seq, x, alpha)
                worst = max(worst, r.lhs / r.rhs if r.rhs > 0 else 0.0)
                if not r.passed:
                    failures.append(f"forward {name}/{label}/{alpha}")
            for p in (2, 3, 4):
                r = xp_bound_check(seq, x, p)
                worst = max(worst, r.lhs)
                if not r.passed:
                    failures.append(f"xp {name}/{label}/{p}")
    return CheckResult("bounds", not failures, worst, 1.0, "; ".join(failures))


def check_discontinuity(depth: int) -> CheckResult:
    n = min(20, max(depth, 4))
    try:
        rows = discontinuity_probe(n)
        err = float(np.abs(rows[:, 1] - (1 - rows[:, 0])).max())
    except AssertionError as exc:
        return CheckResult("discontinuity_probe", False, float("inf"), 1e-12, str(exc))
    coeffs = discontinuity_coefficients(n + 1)
    xi_err = max(abs(xi_seq(coeffs.partition, coeffs, 2, m) - 1.0) for m in range(n + 1))
    worst = max(err, xi_err)
    return CheckResult("discontinuity_probe", worst <= 1e-12, worst, 1e-12)


def run_checks(depth: int = 10, perturb: float = 0.0,
               threads: Optional[int] = None) -> list:
    """Run the corpus; depth caps every generated sequence (small depth = quick mode)."""
    if depth < 2:
        raise ValueError("verify needs depth >= 2")
    jobs: list[Callable[[], CheckResult]] = [
        lambda: check_orthonormality(depth),
        lambda: check_interpolation(depth),
        lambda: check_dyadic_oracle(depth, perturb),
        lambda: check_bounds(depth),
        lambda: check_discontinuity(depth),
    ]
    threads = thread_count() if threads is None else threads

    def timed(job):
        t0 = time.perf_counter()
        res = job()
        res.detail = (res.detail + " " if res.detail else "") + f"[{time.perf_counter() - t0:.2f}s]"
        return res

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(timed, jobs))
