"""Seeded random metrics and potentials for property tests."""

from __future__ import annotations

import itertools

import numpy as np

from gradsoliton.exprlang import Expr, compile_batch, parse_expr
from gradsoliton.geometry import MetricField


def _monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(degree + 1):
        out += list(itertools.combinations_with_replacement(range(n), d))
    return out


def random_polynomial(rng: np.random.Generator, n: int, degree: int, amp: float) -> str:
    terms = []
    for mono in _monomials(n, degree):
        c = rng.uniform(-amp, amp)
        factors = [repr(round(c, 6))] + [f"x{i + 1}" for i in mono]
        terms.append("(" + " * ".join(factors) + ")")
    return " + ".join(terms)


def _is_spd_on(metric: MetricField, points: np.ndarray) -> bool:
    n = metric.dim
    vals = compile_batch(list(metric.lower.values()))(points)
    g = np.empty((len(points), n, n))
    for (i, j), v in zip(metric.lower, vals):
        g[:, i, j] = g[:, j, i] = v
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        return False
    return True


def perturbed_flat_metric(
    rng: np.random.Generator,
    n: int,
    amp: float = 0.05,
    degree: int = 2,
    trig: bool = False,
    check_points: np.ndarray | None = None,
) -> MetricField:
    """``delta_ij`` plus random polynomial (and optionally trigonometric) terms.

    Coefficients are bounded by ``amp``.  Draws are repeated until the metric
    is positive definite at ``check_points`` (default: corners of the unit box).
    """
    if check_points is None:
        check_points = np.array(list(itertools.product([-1.0, 0.0, 1.0], repeat=n)))
    while True:
        entries = {}
        for i in range(n):
            for j in range(i + 1):
                text = random_polynomial(rng, n, degree, amp)
                if i == j:
                    text = "1 + " + text
                    if trig:
                        k = int(rng.integers(n))
                        a, b = rng.uniform(0.5, 1.5), rng.uniform(-1, 1)
                        text += f" + {amp} * sin({a:.4f} * x{k + 1} + {b:.4f})"
                entries[(i, j)] = text
        metric = MetricField.from_strings(entries, n)
        if _is_spd_on(metric, check_points):
            return metric


def random_potential(rng: np.random.Generator, n: int, amp: float = 0.5) -> Expr:
    text = random_polynomial(rng, n, 3, amp)
    k = int(rng.integers(n))
    text += f" + {amp} * cos(x{k + 1})"
    return parse_expr(text, n)


def random_points(rng: np.random.Generator, n: int, count: int, half: float = 0.8) -> np.ndarray:
    return rng.uniform(-half, half, size=(count, n))
