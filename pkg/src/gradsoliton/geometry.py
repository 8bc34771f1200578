"""Curvature of a Riemannian metric given in one coordinate chart.

The metric components and the potential are expressions; their exact
partials up to order four come from :mod:`gradsoliton.exprlang`.  The
tensor formulas (inverse metric, Christoffel symbols, Ricci, covariant
derivatives) are then propagated through :mod:`gradsoliton.jets` so that
second covariant derivatives of the scalar curvature are exact as well.

Conventions: ``gamma[k, i, j]`` is the Christoffel symbol with upper index
``k``; ``riemann[l, i, j, k]`` is ``dx^l(R(d_j, d_k) d_i)``, antisymmetric in
``j, k``; ``ricci[i, k] = riemann[l, i, l, k]`` summed over ``l``.  With these
the round sphere of radius r has scalar curvature ``n(n-1)/r^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .exprlang import (
    Const,
    Expr,
    compile_batch,
    derivative_table,
    max_var_index,
    parse_expr,
)

__all__ = [
    "GeometryError",
    "NotPositiveDefiniteError",
    "ChartSpec",
    "MetricField",
    "CurvatureState",
    "PotentialState",
    "GeometryEngine",
    "christoffel",
    "curvature_state",
    "potential_state",
    "check_contracted_bianchi",
    "squared_norm",
    "squared_norm_eig",
]


class GeometryError(ValueError):
    pass


class NotPositiveDefiniteError(GeometryError):
    def __init__(self, point: Sequence[float]):
        self.point = tuple(float(v) for v in point)
        super().__init__(f"metric is not positive definite at point {self.point}")


@dataclass(frozen=True)
class ChartSpec:
    """A single coordinate chart with a sampling box.

    ``validity`` is an optional expression; points where it evaluates to a
    positive number are inside the chart.
    """

    dim: int
    names: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    validity: Expr | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise GeometryError("chart dimension must be at least 2 (Ricci vanishes in dimension 1)")
        if len(self.names) != self.dim or len(set(self.names)) != self.dim:
            raise GeometryError(f"need {self.dim} distinct coordinate names")
        if len(self.domain) != self.dim:
            raise GeometryError(f"need {self.dim} domain intervals")
        for name, (lo, hi) in zip(self.names, self.domain):
            if not lo < hi:
                raise GeometryError(f"empty interval for {name}: [{lo}, {hi}]")
        if self.validity is not None and max_var_index(self.validity) >= self.dim:
            raise GeometryError("validity predicate uses a coordinate outside the chart")

    @classmethod
    def box(cls, dim: int, lo: float, hi: float, names: Sequence[str] | None = None, validity: Expr | None = None):
        names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(dim))
        return cls(dim, names, tuple((float(lo), float(hi)) for _ in range(dim)), validity)

    def is_valid(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.ones(len(pts), dtype=bool)
        if self.validity is not None:
            inside &= compile_batch([self.validity])(pts)[0] > 0
        return inside

    def grid(self, counts: int | Sequence[int], margin: float = 0.0) -> np.ndarray:
        """Tensor grid over the domain box, shrunk by ``margin`` (a fraction) per side,
        keeping only valid points."""
        if isinstance(counts, int):
            counts = [counts] * self.dim
        axes = []
        for (lo, hi), m in zip(self.domain, counts):
            pad = margin * (hi - lo)
            axes.append(np.linspace(lo + pad, hi - pad, int(m)) if m > 1 else np.array([(lo + hi) / 2]))
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return mesh[self.is_valid(mesh)]


class MetricField:
    """Symmetric matrix of metric component expressions.

    Only the lower triangle is stored; ``component(i, j)`` answers for any
    ordering.
    """

    def __init__(self, lower: Mapping[tuple[int, int], Expr], dim: int):
        self.dim = dim
        entries: dict[tuple[int, int], Expr] = {}
        for (i, j), e in lower.items():
            a, b = max(i, j), min(i, j)
            if not (0 <= b <= a < dim):
                raise GeometryError(f"metric index ({i}, {j}) out of range for dimension {dim}")
            if (a, b) in entries:
                raise GeometryError(f"metric component ({a + 1},{b + 1}) given twice")
            if max_var_index(e) >= dim:
                raise GeometryError(f"metric component ({a + 1},{b + 1}) uses a coordinate outside the chart")
            entries[(a, b)] = e
        for i in range(dim):
            if (i, i) not in entries:
                raise GeometryError(f"missing diagonal metric component ({i + 1},{i + 1})")
        self.lower = {(i, j): entries.get((i, j), Const(0.0)) for i in range(dim) for j in range(i + 1)}

    @classmethod
    def from_strings(cls, entries: Mapping[tuple[int, int], str], dim: int, names=None) -> "MetricField":
        return cls({k: parse_expr(v, dim, names) for k, v in entries.items()}, dim)

    @classmethod
    def conformal(cls, factor: Expr, dim: int) -> "MetricField":
        return cls({(i, i): factor for i in range(dim)}, dim)

    def component(self, i: int, j: int) -> Expr:
        return self.lower[(max(i, j), min(i, j))]

    def matrix(self, point: Sequence[float]) -> np.ndarray:
        vals = compile_batch(list(self.lower.values()))(np.atleast_2d(point))[:, 0]
        g = np.empty((self.dim, self.dim))
        for (i, j), v in zip(self.lower, vals):
            g[i, j] = g[j, i] = v
        return g


@dataclass
class CurvatureState:
    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    grad_scalar: np.ndarray  # partials of S
    laplacian_scalar: float
    ricci_norm2: float
    div_ricci: np.ndarray


@dataclass
class PotentialState:
    point: np.ndarray
    f: float
    df: np.ndarray
    grad_f_norm2: float
    hess: np.ndarray
    laplacian_f: float
    hess_norm2: float
    laplacian_grad_f_norm2: float
    ricci_grad_f: float  # Ric(grad f, grad f)
    grad_s_dot_grad_f: float  # g(grad S, grad f)


def squared_norm(g_inv: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``trace((g^-1 T)^2)`` for symmetric T, batched over leading axes."""
    op = np.einsum("...ij,...jk->...ik", g_inv, t)
    return np.einsum("...ij,...ji->...", op, op)


def squared_norm_eig(g: np.ndarray, t: np.ndarray) -> float:
    """Sum of squared eigenvalues of the (1,1) operator ``g^-1 T`` (single point).

    Uses the symmetric generalized problem ``T v = mu g v``; kept as an
    independent cross-check of :func:`squared_norm`.
    """
    from scipy.linalg import eigh

    mu = eigh(t, g, eigvals_only=True)
    return float(np.sum(mu**2))


@dataclass
class FieldSamples:
    """Every curvature and potential quantity at a batch of points (leading axis P)."""

    points: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    grad_scalar: np.ndarray
    hess_scalar: np.ndarray
    laplacian_scalar: np.ndarray
    ricci_norm2: np.ndarray
    div_ricci: np.ndarray
    f: np.ndarray | None = None
    df: np.ndarray | None = None
    grad_f_norm2: np.ndarray | None = None
    hess_f: np.ndarray | None = None
    laplacian_f: np.ndarray | None = None
    hess_f_norm2: np.ndarray | None = None
    laplacian_grad_f_norm2: np.ndarray | None = None
    ricci_grad_f: np.ndarray | None = None
    grad_s_dot_grad_f: np.ndarray | None = None
    d2f: np.ndarray | None = None

    def curvature_state(self, k: int) -> CurvatureState:
        return CurvatureState(
            point=self.points[k],
            g=self.g[k],
            g_inv=self.g_inv[k],
            christoffel=self.christoffel[k],
            riemann=self.riemann[k],
            ricci=self.ricci[k],
            scalar=float(self.scalar[k]),
            grad_scalar=self.grad_scalar[k],
            laplacian_scalar=float(self.laplacian_scalar[k]),
            ricci_norm2=float(self.ricci_norm2[k]),
            div_ricci=self.div_ricci[k],
        )

    def potential_state(self, k: int) -> PotentialState:
        if self.f is None:
            raise GeometryError("no potential was supplied")
        return PotentialState(
            point=self.points[k],
            f=float(self.f[k]),
            df=self.df[k],
            grad_f_norm2=float(self.grad_f_norm2[k]),
            hess=self.hess_f[k],
            laplacian_f=float(self.laplacian_f[k]),
            hess_norm2=float(self.hess_f_norm2[k]),
            laplacian_grad_f_norm2=float(self.laplacian_grad_f_norm2[k]),
            ricci_grad_f=float(self.ricci_grad_f[k]),
            grad_s_dot_grad_f=float(self.grad_s_dot_grad_f[k]),
        )


class GeometryEngine:
    """Derivative tables for one metric (and optional potential), compiled once.

    ``sample(points)`` returns a :class:`FieldSamples`; distinct calls share
    only the immutable compiled tables.
    """

    METRIC_ORDER = 4
    POTENTIAL_ORDER = 3

    def __init__(self, metric: MetricField, potential: Expr | None = None):
        self.metric = metric
        self.potential = potential
        n = self.n = metric.dim
        if potential is not None and max_var_index(potential) >= n:
            raise GeometryError("potential uses a coordinate outside the chart")
        exprs: list[Expr] = []
        self._slots: list[tuple[str, object, tuple[int, ...]]] = []
        for key, e in metric.lower.items():
            table = derivative_table(e, self.METRIC_ORDER, n)
            for idx, d in table.items():
                self._slots.append(("g", key, idx))
                exprs.append(d)
        if potential is not None:
            for idx, d in derivative_table(potential, self.POTENTIAL_ORDER, n).items():
                self._slots.append(("f", None, idx))
                exprs.append(d)
        self._run = compile_batch(exprs)

    def _jets(self, pts: np.ndarray):
        n = self.n
        values = self._run(pts)
        g_tables: dict[tuple[int, int], dict] = {key: {} for key in self.metric.lower}
        f_table: dict[tuple[int, ...], np.ndarray] = {}
        for (kind, key, idx), row in zip(self._slots, values):
            if kind == "g":
                g_tables[key][idx] = row
            else:
                f_table[idx] = row
        scalar_jets = []
        for i in range(n):
            for j in range(n):
                key = (max(i, j), min(i, j))
                scalar_jets.append(jets.from_table(g_tables[key], n, self.METRIC_ORDER, len(pts)))
        g = jets.stack(scalar_jets, (n, n))
        f = jets.from_table(f_table, n, self.POTENTIAL_ORDER, len(pts)) if self.potential is not None else None
        return g, f

    def sample(self, points: np.ndarray) -> FieldSamples:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.n:
            raise GeometryError(f"points must have {self.n} coordinates")
        g, f = self._jets(pts)
        _check_spd(g.value, pts)

        g_inv = jets.inverse(g.truncate(3))
        dg = g.grad()  # dg[i, j, a] = d_a g_ij, order 3
        # first-kind symbols gl[l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
        gl = 0.5 * (dg.map("jli->lij") + dg.map("ilj->lij") - dg.map("ijl->lij"))
        gamma = jets.product("kl,lij->kij", g_inv, gl)  # order 3
        dgamma = gamma.grad()  # dgamma[k, i, j, a] = d_a Gamma^k_ij, order 2
        gamma2 = gamma.truncate(2)

        # Ric_ik = d_l G^l_ki - d_k G^l_li + G^l_lm G^m_ki - G^l_km G^m_li
        ricci = (
            dgamma.map("lkil->ki")
            - dgamma.map("llik->ki")
            + jets.product("llm,mki->ki", gamma2, gamma2)
            - jets.product("lkm,mli->ki", gamma2, gamma2)
        )
        ricci = 0.5 * (ricci + ricci.map("ij->ji"))
        scalar = jets.product("ij,ij->", g_inv.truncate(2), ricci)  # order 2

        gi = g_inv.value
        gam = gamma.value
        dgam = dgamma.value
        riemann = (
            np.einsum("plkij->plijk", dgam)  # d_j G^l_ki
            - np.einsum("pljik->plijk", dgam)  # d_k G^l_ji
            + np.einsum("pljm,pmki->plijk", gam, gam)
            - np.einsum("plkm,pmji->plijk", gam, gam)
        )
        s1 = scalar.parts[1]
        s2 = scalar.parts[2]
        lap_s = _laplacian(gi, gam, s1, s2)
        ric0 = ricci.value
        dric = ricci.parts[1]  # d_k Ric_ij as [p, i, j, k]
        cov_ric = (
            dric
            - np.einsum("pmki,pmj->pijk", gam, ric0)
            - np.einsum("pmkj,pim->pijk", gam, ric0)
        )
        div_ric = np.einsum("pik,pijk->pj", gi, cov_ric)

        out = FieldSamples(
            points=pts,
            g=g.value,
            g_inv=gi,
            christoffel=gam,
            riemann=riemann,
            ricci=ric0,
            scalar=scalar.value,
            grad_scalar=s1,
            hess_scalar=s2,
            laplacian_scalar=lap_s,
            ricci_norm2=squared_norm(gi, ric0),
            div_ricci=div_ric,
        )
        if f is not None:
            df = f.grad()  # order 2
            hess = f.parts[2] - np.einsum("pkij,pk->pij", gam, f.parts[1])
            hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
            # |grad f|^2 = g^ab f_a f_b as an order-2 jet
            gi2 = g_inv.truncate(2)
            u = jets.product("a,a->", jets.product("ab,b->a", gi2, df), df)
            raise_f = np.einsum("pab,pb->pa", gi, f.parts[1])
            out.f = f.value
            out.df = f.parts[1]
            out.grad_f_norm2 = u.value
            out.hess_f = hess
            out.laplacian_f = np.einsum("pij,pij->p", gi, hess)
            out.hess_f_norm2 = squared_norm(gi, hess)
            out.laplacian_grad_f_norm2 = _laplacian(gi, gam, u.parts[1], u.parts[2])
            out.ricci_grad_f = np.einsum("pij,pi,pj->p", ric0, raise_f, raise_f)
            out.grad_s_dot_grad_f = np.einsum("pa,pa->p", raise_f, s1)
            out.d2f = f.parts[2]
        return out

    @staticmethod
    def laplacian_of_s_minus(samples: FieldSamples, lam: float) -> np.ndarray:
        """Laplacian of ``S - lam * f`` assembled from its own partials."""
        if samples.f is None:
            raise GeometryError("no potential was supplied")
        d1 = samples.grad_scalar - lam * samples.df
        d2 = samples.hess_scalar - lam * samples.d2f
        return _laplacian(samples.g_inv, samples.christoffel, d1, d2)


def _laplacian(gi: np.ndarray, gam: np.ndarray, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """``g^ij (d_i d_j u - Gamma^k_ij d_k u)`` from first and second partials."""
    return np.einsum("pij,pij->p", gi, d2) - np.einsum("pij,pkij,pk->p", gi, gam, d1)


def _check_spd(g: np.ndarray, pts: np.ndarray) -> None:
    try:
        np.linalg.cholesky(g)
        bad = None
    except np.linalg.LinAlgError:
        bad = next(k for k in range(len(g)) if not _is_spd(g[k]))
    if bad is None:
        # cholesky only reads one triangle; symmetry holds by construction
        return
    raise NotPositiveDefiniteError(pts[bad])


def _is_spd(a: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(a)
        return True
    except np.linalg.LinAlgError:
        return False


# ---------------------------------------------------------------------------
# single-point API


def _engine(metric: MetricField, potential: Expr | None = None) -> GeometryEngine:
    return GeometryEngine(metric, potential)


def christoffel(metric: MetricField, p: Sequence[float]) -> np.ndarray:
    """Levi-Civita symbols ``gamma[k, i, j]`` at ``p``."""
    return _engine(metric).sample(np.atleast_2d(p)).christoffel[0]


def curvature_state(metric: MetricField, p: Sequence[float]) -> CurvatureState:
    return _engine(metric).sample(np.atleast_2d(p)).curvature_state(0)


def potential_state(metric: MetricField, f: Expr, p: Sequence[float]) -> PotentialState:
    return _engine(metric, f).sample(np.atleast_2d(p)).potential_state(0)


@dataclass(frozen=True)
class BianchiCheck:
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def bianchi_residuals(samples: FieldSamples) -> np.ndarray:
    """Per-point ``max_i |d_i S - 2 div(Ric)_i|``."""
    return np.max(np.abs(samples.grad_scalar - 2.0 * samples.div_ricci), axis=1)


def check_contracted_bianchi(metric: MetricField, p: Sequence[float] | np.ndarray, tol: float = 1e-8) -> BianchiCheck:
    """Contracted second Bianchi identity at one point or a batch of points.

    Holds for every smooth metric, so a failure means a bug upstream.
    """
    samples = _engine(metric).sample(np.atleast_2d(p))
    return BianchiCheck(float(np.max(bianchi_residuals(samples))), tol)

