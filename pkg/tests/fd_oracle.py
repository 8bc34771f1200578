"""Finite-difference reference for the curvature pipeline.

Only the raw metric and potential expressions are evaluated; every
derivative here comes from Richardson-extrapolated central differences, and
the tensor formulas are written out independently of the package's jet
machinery.
"""

from __future__ import annotations

import numpy as np

from gradsoliton.exprlang import Expr, compile_batch
from gradsoliton.geometry import MetricField

INNER_STEP = 1e-3
# grad S and lap S difference S a second time.  S at h = 1e-3 carries ~1e-9
# of roundoff, which a second difference amplifies past 1e-5, so those
# derivatives see an S built with a wider, doubly extrapolated inner step.
SMOOTH_STEP = 2e-2
OUTER_STEP = 1e-1
LEVELS = 1
SMOOTH_LEVELS = 2


def _stencil(fn, x: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """``fn`` at every ``x + offset`` in one batched call; shape (K, P, *out)."""
    k, (p, n) = len(offsets), x.shape
    pts = (x[None, :, :] + offsets[:, None, :]).reshape(k * p, n)
    vals = fn(pts)
    return vals.reshape((k, p) + vals.shape[1:])


def _richardson(central, h: float, levels: int) -> np.ndarray:
    # central differences have even error expansions: eliminate h^2, h^4, ...
    table = [central(h / 2**m) for m in range(levels + 1)]
    for lev in range(1, levels + 1):
        factor = 4.0**lev
        table = [(factor * table[m + 1] - table[m]) / (factor - 1) for m in range(len(table) - 1)]
    return table[0]


def d1(fn, x: np.ndarray, h: float, levels: int = 1) -> np.ndarray:
    """Partials of ``fn`` (batched over points) with shape (P, n, *out)."""
    n = x.shape[1]
    eye = np.eye(n)

    def central(step):
        v = _stencil(fn, x, np.concatenate([eye * step, -eye * step]))
        return np.moveaxis((v[:n] - v[n:]) / (2 * step), 0, 1)

    return _richardson(central, h, levels)


def d2(fn, x: np.ndarray, h: float, levels: int = 1) -> np.ndarray:
    """Second partials with shape (P, n, n, *out)."""
    n = x.shape[1]
    eye = np.eye(n)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]

    def central(step):
        offs = [np.zeros(n)]
        offs += [eye[a] * step for a in range(n)] + [-eye[a] * step for a in range(n)]
        for a, b in pairs:
            offs += [(sa * eye[a] + sb * eye[b]) * step for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
        v = _stencil(fn, x, np.array(offs))
        out = np.empty((n, n) + v.shape[1:])
        for a in range(n):
            out[a, a] = (v[1 + a] - 2 * v[0] + v[1 + n + a]) / step**2
        for q, (a, b) in enumerate(pairs):
            w = v[1 + 2 * n + 4 * q : 5 + 2 * n + 4 * q]
            out[a, b] = out[b, a] = (w[0] - w[1] - w[2] + w[3]) / (4 * step**2)
        return np.moveaxis(out, 2, 0)

    return _richardson(central, h, levels)


class FDOracle:
    def __init__(
        self,
        metric: MetricField,
        potential: Expr | None = None,
        h: float = INNER_STEP,
        outer: float = OUTER_STEP,
        levels: int = LEVELS,
    ):
        self.n = metric.dim
        self.h = h
        self.outer = outer
        self.levels = levels
        self._metric = metric
        n = self.n
        self._g = compile_batch([metric.component(i, j) for i in range(n) for j in range(n)])
        self._f = compile_batch([potential]) if potential is not None else None

    def metric(self, x: np.ndarray) -> np.ndarray:
        vals = self._g(x)  # (n*n, P)
        return np.moveaxis(vals.reshape(self.n, self.n, -1), -1, 0)

    def potential(self, x: np.ndarray) -> np.ndarray:
        return self._f(x)[0]

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        g = self.metric(x)
        gi = np.linalg.inv(g)
        dg = d1(self.metric, x, self.h, self.levels)  # dg[p, a, i, j] = d_a g_ij
        # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
        lower = 0.5 * (
            np.einsum("pijl->pijl", dg) + np.einsum("pjil->pijl", dg) - np.einsum("plij->pijl", dg)
        )
        return np.einsum("pkl,pijl->pkij", gi, lower)

    def ricci(self, x: np.ndarray) -> np.ndarray:
        gam = self.christoffel(x)
        dgam = d1(self.christoffel, x, self.h, self.levels)  # dgam[p, a, k, i, j] = d_a Gamma^k_ij
        # Ric_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
        return (
            np.einsum("pkkij->pij", dgam)
            - np.einsum("pjkik->pij", dgam)
            + np.einsum("pkkl,plij->pij", gam, gam)
            - np.einsum("pkjl,plik->pij", gam, gam)
        )

    def scalar(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("pij,pij->p", np.linalg.inv(self.metric(x)), self.ricci(x))

    def _smooth_scalar(self):
        return FDOracle(self._metric, None, SMOOTH_STEP, levels=SMOOTH_LEVELS).scalar

    def grad_scalar(self, x: np.ndarray) -> np.ndarray:
        return d1(self._smooth_scalar(), x, self.outer, SMOOTH_LEVELS)

    def _laplacian(self, fn, x: np.ndarray, h: float, levels: int = 1) -> np.ndarray:
        gi = np.linalg.inv(self.metric(x))
        gam = self.christoffel(x)
        hess = d2(fn, x, h, levels) - np.einsum("pkij,pk->pij", gam, d1(fn, x, h, levels))
        return np.einsum("pij,pij->p", gi, hess)

    def laplacian_scalar(self, x: np.ndarray) -> np.ndarray:
        return self._laplacian(self._smooth_scalar(), x, self.outer, SMOOTH_LEVELS)

    def hess_f(self, x: np.ndarray) -> np.ndarray:
        gam = self.christoffel(x)
        return d2(self.potential, x, self.h, self.levels) - np.einsum("pkij,pk->pij", gam, d1(self.potential, x, self.h, self.levels))

    def laplacian_f(self, x: np.ndarray) -> np.ndarray:
        return self._laplacian(self.potential, x, self.h, self.levels)
