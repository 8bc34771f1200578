"""Truncated Taylor data for tensor fields at a batch of points.

A :class:`Jet` of order ``K`` holds, for every sample point, a tensor
field's value and all its coordinate partials up to order ``K``.  Part ``k``
has shape ``(P, *components, n, ..., n)`` with ``k`` trailing derivative
axes, symmetric in those axes.  Products and inverses apply the Leibniz
rule, so exact derivative tables of the metric and potential propagate
exactly through curvature formulas without any finite differencing.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

_COMPONENT_LETTERS = "abcdefghijklmnopqrstuvw"
_DERIV_LETTERS = "ABCDEFGHIJ"


class Jet:
    __slots__ = ("parts", "n")

    def __init__(self, parts: Sequence[np.ndarray], n: int):
        self.parts = list(parts)
        self.n = n

    @property
    def order(self) -> int:
        return len(self.parts) - 1

    @property
    def comp_ndim(self) -> int:
        return self.parts[0].ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.parts[0]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.parts[: order + 1], self.n)

    def grad(self) -> "Jet":
        """Partial derivatives as a new trailing component axis (order drops by one)."""
        if self.order < 1:
            raise ValueError("jet has no derivative data left")
        # the first derivative axis of part k+1 sits right after the components
        return Jet(self.parts[1:], self.n)

    def map(self, subscripts: str) -> "Jet":
        """Apply a linear component-only einsum such as ``"ij->ji"``."""
        src, dst = subscripts.split("->")
        spec = f"p{src}...->p{dst}..."
        return Jet([np.einsum(spec, part) for part in self.parts], self.n)

    def __add__(self, other: "Jet") -> "Jet":
        k = min(self.order, other.order)
        return Jet([a + b for a, b in zip(self.parts[: k + 1], other.parts[: k + 1])], self.n)

    def __sub__(self, other: "Jet") -> "Jet":
        k = min(self.order, other.order)
        return Jet([a - b for a, b in zip(self.parts[: k + 1], other.parts[: k + 1])], self.n)

    def __mul__(self, scalar: float) -> "Jet":
        return Jet([scalar * a for a in self.parts], self.n)

    __rmul__ = __mul__

    def __neg__(self) -> "Jet":
        return Jet([-a for a in self.parts], self.n)


def _subset_terms(k: int, skip_empty: bool = False):
    """Yield (m, perm) for every subset S of the k derivative slots.

    ``perm`` reorders the axes of ``A_m (x) B_{k-m}`` (derivative slots of S
    first, then its complement) into the natural slot order.
    """
    for m in range(k + 1):
        if skip_empty and m == 0:
            continue
        for subset in itertools.combinations(range(k), m):
            rest = [i for i in range(k) if i not in subset]
            order = list(subset) + rest
            yield m, tuple(np.argsort(order))


def product(subscripts: str, a: Jet, b: Jet, order: int | None = None) -> Jet:
    """Leibniz product ``einsum(subscripts, a, b)`` of two jets.

    ``subscripts`` names component axes only, e.g. ``"ij,jk->ik"``.
    """
    if order is None:
        order = min(a.order, b.order)
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    parts = []
    for k in range(order + 1):
        total = None
        cache: dict[int, np.ndarray] = {}
        for m, perm in _subset_terms(k):
            if m not in cache:
                da = _DERIV_LETTERS[:m]
                db = _DERIV_LETTERS[m:k]
                cache[m] = np.einsum(f"p{sa}{da},p{sb}{db}->p{out}{da}{db}", a.parts[m], b.parts[k - m])
            term = cache[m]
            lead = 1 + len(out)
            axes = tuple(range(lead)) + tuple(lead + i for i in perm)
            term = np.transpose(term, axes)
            total = term if total is None else total + term
        parts.append(total)
    return Jet(parts, a.n)


def inverse(g: Jet) -> Jet:
    """Matrix inverse of a jet of square matrices, to the same order."""
    g0 = g.parts[0]
    inv0 = np.linalg.inv(g0)
    parts = [inv0]
    for k in range(1, g.order + 1):
        acc = None
        cache: dict[int, np.ndarray] = {}
        for m, perm in _subset_terms(k, skip_empty=True):
            if m not in cache:
                da = _DERIV_LETTERS[:m]
                db = _DERIV_LETTERS[m:k]
                cache[m] = np.einsum(f"pij{da},pjk{db}->pik{da}{db}", g.parts[m], parts[k - m])
            axes = (0, 1, 2) + tuple(3 + i for i in perm)
            term = np.transpose(cache[m], axes)
            acc = term if acc is None else acc + term
        d = _DERIV_LETTERS[:k]
        parts.append(-np.einsum(f"pij,pjk{d}->pik{d}", inv0, acc))
    return Jet(parts, g.n)


def from_table(values: dict[tuple[int, ...], np.ndarray], n: int, order: int, npoints: int) -> Jet:
    """Build a scalar jet from sorted-index derivative values."""
    parts = []
    for k in range(order + 1):
        arr = np.empty((npoints,) + (n,) * k)
        for idx in itertools.product(range(n), repeat=k):
            arr[(slice(None),) + idx] = values[tuple(sorted(idx))]
        parts.append(arr)
    return Jet(parts, n)


def stack(jets: Sequence[Jet], shape: tuple[int, ...]) -> Jet:
    """Assemble scalar jets (row-major list) into a tensor jet of ``shape``."""
    order = min(j.order for j in jets)
    n = jets[0].n
    parts = []
    for k in range(order + 1):
        arr = np.stack([j.parts[k] for j in jets], axis=1)
        parts.append(arr.reshape((arr.shape[0],) + shape + arr.shape[2:]))
    return Jet(parts, n)
