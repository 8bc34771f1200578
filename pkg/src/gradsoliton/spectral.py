"""First nonzero Laplace-Beltrami eigenvalue on two closed surfaces.

Two discretizations with known spectra: the flat square torus (periodic
five-point stencil) and the round sphere (finite volumes on a
latitude-longitude grid whose rows sit half a cell off the poles).  Both
give a symmetric stiffness matrix ``K`` with zero row sums and a diagonal
lumped mass ``M``; eigenvalues solve ``K u = mu M u``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

__all__ = [
    "SpectralError",
    "DiscreteLaplacian",
    "EigenEstimate",
    "DichotomyReport",
    "MIN_RESOLUTION",
    "DEFAULT_RESOLUTION",
    "build_laplacian",
    "first_eigenvalue",
    "closed_form_first_eigenvalue",
    "convergence_study",
    "dichotomy_report",
]

MIN_RESOLUTION = 8
DEFAULT_RESOLUTION = 64
LOW_RESOLUTION = 16


class SpectralError(ValueError):
    pass


@dataclass
class DiscreteLaplacian:
    tag: str  # torus | sphere
    size: float  # side length L or radius r
    resolution: int
    stiffness: sp.csr_matrix
    mass: np.ndarray
    notes: list[str] = field(default_factory=list)

    @property
    def n_vertices(self) -> int:
        return self.mass.size

    @property
    def total_measure(self) -> float:
        return float(self.mass.sum())

    @property
    def low_resolution(self) -> bool:
        return self.resolution < LOW_RESOLUTION


def _torus(side: float, res: int) -> DiscreteLaplacian:
    h = side / res
    idx = np.arange(res * res).reshape(res, res)
    rows, cols, vals = [], [], []
    w = 1.0  # five-point stencil times cell area h^2
    for shift in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb = np.roll(idx, shift, axis=(0, 1))
        rows.append(idx.ravel())
        cols.append(nb.ravel())
        vals.append(np.full(idx.size, -w))
    off = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(idx.size, idx.size))
    diag = -np.asarray(off.sum(axis=1)).ravel()
    stiffness = (off + sp.diags(diag)).tocsr()
    mass = np.full(idx.size, h * h)
    return DiscreteLaplacian("torus", side, res, stiffness, mass)


def _sphere(radius: float, res: int) -> DiscreteLaplacian:
    n_theta, n_phi = res, 2 * res
    dtheta, dphi = math.pi / n_theta, 2 * math.pi / n_phi
    theta = (np.arange(n_theta) + 0.5) * dtheta  # half-cell offset keeps rows off the poles
    faces = np.arange(1, n_theta) * dtheta
    idx = np.arange(n_theta * n_phi).reshape(n_theta, n_phi)
    rows, cols, vals = [], [], []
    # latitude fluxes across interior faces; none through the poles
    w_theta = np.sin(faces) * dphi / dtheta
    for i in range(n_theta - 1):
        a, b = idx[i], idx[i + 1]
        rows += [a, b]
        cols += [b, a]
        vals += [np.full(n_phi, -w_theta[i])] * 2
    w_phi = dtheta / (np.sin(theta) * dphi)
    east = np.roll(idx, -1, axis=1)
    rows.append(idx.ravel())
    cols.append(east.ravel())
    vals.append(np.repeat(-w_phi, n_phi))
    rows.append(east.ravel())
    cols.append(idx.ravel())
    vals.append(np.repeat(-w_phi, n_phi))
    n = idx.size
    off = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    diag = -np.asarray(off.sum(axis=1)).ravel()
    stiffness = (off + sp.diags(diag)).tocsr()
    # radius scaling: stiffness is scale-invariant in 2D, mass scales with r^2
    mass = np.repeat(radius**2 * np.sin(theta) * dtheta * dphi, n_phi)
    return DiscreteLaplacian(
        "sphere", radius, res, stiffness, mass, [f"latitude rows offset by half a cell ({dtheta / 2:.6g} rad) from the poles"]
    )


def build_laplacian(tag: str, resolution: int = DEFAULT_RESOLUTION, size: float | None = None) -> DiscreteLaplacian:
    """Discrete Laplace-Beltrami operator on a torus (side ``size``) or sphere (radius ``size``).

    ``resolution`` is the cell count per axis for the torus and the number
    of latitude rows for the sphere (longitudes get twice as many).
    """
    if resolution < MIN_RESOLUTION:
        raise SpectralError(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")
    if size is not None and not size > 0:
        raise SpectralError("size must be positive")
    if tag == "torus":
        op = _torus(2 * math.pi if size is None else float(size), int(resolution))
    elif tag == "sphere":
        op = _sphere(1.0 if size is None else float(size), int(resolution))
    else:
        raise SpectralError(f"unknown manifold tag {tag!r} (expected 'torus' or 'sphere')")
    if op.low_resolution:
        op.notes.append(f"low resolution ({resolution} < {LOW_RESOLUTION}); estimate is coarse")
    return op


def closed_form_first_eigenvalue(tag: str, size: float) -> float:
    if tag == "torus":
        return (2 * math.pi / size) ** 2
    if tag == "sphere":
        return 2.0 / size**2
    raise SpectralError(f"unknown manifold tag {tag!r}")


@dataclass
class EigenEstimate:
    value: float
    vector: np.ndarray
    residual_history: list[float]
    iterations: int
    constant_overlap: float  # |<u, 1>_M| / (|u|_M |1|_M)


def first_eigenvalue(
    op: DiscreteLaplacian, tol: float = 1e-9, seed: int = 0, maxiter: int = 500, block: int = 4
) -> EigenEstimate:
    """Smallest nonzero eigenvalue of ``K u = mu M u`` with constants deflated.

    LOBPCG runs in the M-orthogonal complement of the constants, from a
    seeded random block, preconditioned by a sparse factorization of
    ``K + M``.  Raises :class:`SpectralError` when the returned pair's
    relative residual exceeds 1e-6.
    """
    K, mvec = op.stiffness, op.mass
    M = sp.diags(mvec).tocsc()
    lu = splu((K + M).tocsc())
    precond = LinearOperator(K.shape, matvec=lu.solve, matmat=lu.solve, dtype=float)
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((K.shape[0], block))
    ones = np.ones((K.shape[0], 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals, vecs, history = lobpcg(
            K,
            x0,
            B=M,
            M=precond,
            Y=ones,
            tol=tol,
            maxiter=maxiter,
            largest=False,
            retResidualNormsHistory=True,
        )
    k = int(np.argmin(vals))
    mu, u = float(vals[k]), vecs[:, k].copy()
    # one more explicit projection against constants in the lumped inner product
    u -= (mvec @ u) / mvec.sum() * ones[:, 0]
    u /= math.sqrt(mvec @ (u * u))
    residual = np.linalg.norm(K @ u - mu * (mvec * u)) / max(abs(mu), 1e-300) / math.sqrt(mvec.sum())
    hist = [float(np.max(h)) for h in history]
    if not np.isfinite(mu) or residual > 1e-6:
        raise SpectralError(f"eigensolver did not converge (residual {residual:.3e} after {len(hist)} iterations)")
    overlap = abs(mvec @ u) / math.sqrt(mvec.sum())
    return EigenEstimate(mu, u, hist, len(hist), float(overlap))


def convergence_study(tag: str, size: float, resolutions=(16, 32, 64), seed: int = 0) -> list[dict]:
    """Estimate and absolute error against the closed form at each resolution."""
    exact = closed_form_first_eigenvalue(tag, size)
    rows = []
    for res in resolutions:
        est = first_eigenvalue(build_laplacian(tag, res, size), seed=seed)
        rows.append({"resolution": res, "estimate": est.value, "exact": exact, "error": abs(est.value - exact)})
    return rows


@dataclass
class DichotomyReport:
    branch: str  # trivial | eigenvalue | hypothesis-not-satisfied | spectral-only
    lam: float | None
    lambda1: float
    lambda_vs_lambda1: str | None  # below | at-or-above
    satisfied: bool | None
    messages: list[str]

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "lambda": self.lam,
            "lambda1": self.lambda1,
            "lambda_vs_lambda1": self.lambda_vs_lambda1,
            "satisfied": self.satisfied,
            "messages": list(self.messages),
        }


def dichotomy_report(lambda1: float, lam: float | None = None, trivial: bool | None = None, hypothesis_holds: bool | None = None) -> DichotomyReport:
    """Place a compact shrinker against the "trivial or lam >= lambda1" dichotomy.

    Without soliton data (``lam is None``, e.g. the torus) only the
    eigenvalue is reported.  If the Poisson hypothesis fails the theorem
    says nothing.
    """
    from .soliton import COMPACTNESS_CAVEAT

    if lam is None:
        return DichotomyReport("spectral-only", None, lambda1, None, None, ["no soliton attached; eigenvalue only"])
    where = "below" if lam < lambda1 else "at-or-above"
    messages = [COMPACTNESS_CAVEAT, f"lambda = {lam:.12g}, lambda1 = {lambda1:.12g} ({where})"]
    if not hypothesis_holds:
        messages.append("hypothesis not satisfied, theorem silent")
        return DichotomyReport("hypothesis-not-satisfied", lam, lambda1, where, None, messages)
    if trivial:
        messages.append("dichotomy satisfied via the trivial branch")
        return DichotomyReport("trivial", lam, lambda1, where, True, messages)
    ok = lam >= lambda1
    messages.append("non-trivial: requires lambda >= lambda1" + ("" if ok else " -- VIOLATED"))
    return DichotomyReport("eigenvalue", lam, lambda1, where, ok, messages)
