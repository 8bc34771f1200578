"""Gradient Ricci soliton identities as residual fields over sample points.

A :class:`SolitonSpec` bundles a chart, a metric, a potential ``f`` and the
soliton constant ``lam``.  Each check evaluates one identity pointwise on
the sample plan and reports the worst absolute and relative residual.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .exprlang import Const, Expr, add
from .geometry import (
    ChartSpec,
    FieldSamples,
    GeometryEngine,
    MetricField,
    bianchi_residuals,
)

__all__ = [
    "IDENTITY_IDS",
    "DEFAULT_TOLERANCES",
    "COMPACTNESS_CAVEAT",
    "NormalizationWarning",
    "SolitonError",
    "SolitonSpec",
    "IdentityEntry",
    "IdentityReport",
    "HamiltonResult",
    "Theorem1Report",
    "TrivialityVerdict",
    "PoissonReport",
    "soliton_residual",
    "trace_identity_residual",
    "hamilton_constant",
    "residual_fields",
    "identity_suite",
    "theorem1_pipeline",
    "classify_triviality",
    "poisson_check",
    "full_report",
]

IDENTITY_IDS = ("eq3", "eq5", "eq6", "eq7norm", "eq8", "eq9", "eq10", "eq11", "eq12", "eq16", "thm2", "thm34")

DEFAULT_TOLERANCES: dict[str, float] = {
    "identity": 1e-8,
    "eq8": 1e-10,
    "normalization": 1e-8,
    "theorem1": 1e-8,
    "triviality": 1e-6,
    "poisson": 1e-8,
    "poisson_algebra": 1e-10,
}

COMPACTNESS_CAVEAT = "assumptions not machine-checkable: compactness"


class SolitonError(ValueError):
    pass


class NormalizationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SolitonSpec:
    """Problem statement: chart, metric, potential and soliton constant.

    ``samples`` is either a per-axis grid count (int or one per axis) or an
    explicit ``(P, n)`` point array.  Grid samples are shrunk away from the
    box edges by ``margin`` and filtered by the chart's validity predicate.
    """

    chart: ChartSpec
    metric: MetricField
    potential: Expr
    lam: float
    samples: int | tuple[int, ...] | np.ndarray = 10
    margin: float = 0.0
    name: str = ""
    tolerances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.metric.dim != self.chart.dim:
            raise SolitonError("metric and chart dimensions differ")
        if not math.isfinite(self.lam):
            raise SolitonError("soliton constant must be finite")

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def kind(self) -> str:
        if self.lam > 0:
            return "shrinking"
        if self.lam < 0:
            return "expanding"
        return "steady"

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def with_potential(self, potential: Expr) -> "SolitonSpec":
        return replace(self, potential=potential)

    def with_tolerances(self, **overrides: float) -> "SolitonSpec":
        return replace(self, tolerances={**self.tolerances, **overrides})

    @cached_property
    def points(self) -> np.ndarray:
        if isinstance(self.samples, np.ndarray) and self.samples.ndim == 2:
            pts = np.asarray(self.samples, dtype=float)
            if pts.shape[1] != self.dim:
                raise SolitonError(f"sample points must have {self.dim} coordinates")
            bad = ~self.chart.is_valid(pts)
            if np.any(bad):
                raise SolitonError(f"sample point {tuple(pts[np.argmax(bad)])} is outside the chart")
        else:
            counts = self.samples
            if not isinstance(counts, int):
                counts = tuple(int(c) for c in counts)
            pts = self.chart.grid(counts, self.margin)
        if len(pts) == 0:
            raise SolitonError("sample plan is empty")
        return pts

    @cached_property
    def engine(self) -> GeometryEngine:
        return GeometryEngine(self.metric, self.potential)

    @cached_property
    def fields(self) -> FieldSamples:
        return self.engine.sample(self.points)

    def at(self, p: Sequence[float]) -> FieldSamples:
        return self.engine.sample(np.atleast_2d(np.asarray(p, dtype=float)))


def _require_nonsteady(spec: SolitonSpec) -> None:
    if spec.lam == 0:
        raise SolitonError("operation needs a non-steady soliton (lambda != 0)")


# ---------------------------------------------------------------------------
# pointwise residual fields


def _eq3(fs: FieldSamples, lam: float) -> np.ndarray:
    return fs.ricci + fs.hess_f - lam * fs.g


def _eq5(fs: FieldSamples, lam: float, n: int) -> np.ndarray:
    return fs.scalar + fs.laplacian_f - n * lam


def _hamilton(fs: FieldSamples, lam: float) -> np.ndarray:
    return fs.scalar + fs.grad_f_norm2 - 2.0 * lam * fs.f


def soliton_residual(spec: SolitonSpec, p: Sequence[float]) -> np.ndarray:
    """``Ric + Hess f - lam g`` at ``p``; zero on a gradient soliton."""
    return _eq3(spec.at(p), spec.lam)[0]


def trace_identity_residual(spec: SolitonSpec, p: Sequence[float]) -> float:
    """``S + Lap f - n lam`` at ``p``, the trace of the soliton equation."""
    return float(_eq5(spec.at(p), spec.lam, spec.dim)[0])


# ---------------------------------------------------------------------------
# reports


@dataclass
class IdentityEntry:
    id: str
    max_abs: float | None
    max_rel: float | None
    worst_point: tuple[float, ...] | None
    tolerance: float
    status: str  # pass | fail | skipped
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "passed": self.passed,
            "max_abs": self.max_abs,
            "max_rel": self.max_rel,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "tolerance": self.tolerance,
            "note": self.note,
        }


def _entry(
    ident: str,
    residual: np.ndarray,
    scale: np.ndarray,
    points: np.ndarray,
    tol: float,
    note: str = "",
) -> IdentityEntry:
    """Entry for a residual field; relative residual is ``|r| / (1 + scale)``."""
    absr = np.abs(residual)
    rel = absr / (1.0 + np.abs(scale))
    k = int(np.argmax(absr))
    max_abs, max_rel = float(absr[k]), float(np.max(rel))
    ok = max_abs <= tol and max_rel <= tol
    return IdentityEntry(ident, max_abs, max_rel, tuple(float(v) for v in points[k]), tol, "pass" if ok else "fail", note)


def _skipped(ident: str, tol: float, note: str) -> IdentityEntry:
    return IdentityEntry(ident, None, None, None, tol, "skipped", note)


@dataclass
class IdentityReport:
    name: str
    dim: int
    lam: float
    kind: str
    sample_count: int
    normalization_constant: float
    entries: dict[str, IdentityEntry]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values())

    def failures(self) -> list[IdentityEntry]:
        return [e for e in self.entries.values() if not e.passed]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dim,
            "lambda": self.lam,
            "kind": self.kind,
            "sample_count": self.sample_count,
            "normalization_constant": self.normalization_constant,
            "passed": self.passed,
            "identities": {k: self.entries[k].to_dict() for k in IDENTITY_IDS if k in self.entries},
            "notes": list(self.notes),
        }


@dataclass
class HamiltonResult:
    c: float
    spread: float
    constant: bool
    normalized: SolitonSpec
    shift: float


def hamilton_constant(spec: SolitonSpec, tol: float | None = None, strict: bool = True) -> HamiltonResult:
    """Fit the constant of ``S + |grad f|^2 - 2 lam f = c`` over the samples.

    Returns the mean as ``c``, the spread of the field, and a copy of the
    spec whose potential is shifted by ``c / (2 lam)`` so that the constant
    becomes zero (raising f by ``s`` lowers the field by ``2 lam s``).  With ``strict`` a non-constant field raises
    :class:`SolitonError`.
    """
    _require_nonsteady(spec)
    if tol is None:
        tol = spec.tol("normalization")
    h = _hamilton(spec.fields, spec.lam)
    c = math.fsum(h) / len(h)
    spread = float(np.max(h) - np.min(h))
    scale = 1.0 + float(np.max(np.abs(h)))
    constant = spread <= tol * scale
    if strict and not constant:
        raise SolitonError(
            f"S + |grad f|^2 - 2 lam f is not constant over the samples (spread {spread:.3e});"
            " input is not a gradient soliton or sampling left the chart"
        )
    shift = c / (2.0 * spec.lam)
    if abs(c) <= tol * (1.0 + abs(spec.lam)):
        normalized, shift = spec, 0.0
    else:
        normalized = spec.with_potential(add(spec.potential, Const(shift)))
    return HamiltonResult(c, spread, constant, normalized, shift)


def _auto_normalize(spec: SolitonSpec, notes: list[str] | None = None) -> tuple[SolitonSpec, float]:
    if spec.lam == 0:
        return spec, 0.0
    res = hamilton_constant(spec, strict=False)
    if res.normalized is not spec:
        msg = f"input was not normalized (c = {res.c:.6g}); potential shifted by {res.shift:+.6g}"
        warnings.warn(msg, NormalizationWarning, stacklevel=3)
        if notes is not None:
            notes.append(msg)
    return res.normalized, res.c


def residual_fields(spec: SolitonSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Pointwise ``(residual, magnitude)`` arrays for the identity suite.

    The eq8 entry holds the violation ``max(S^2/n - |Ric|^2, 0)`` with
    magnitude ``S^2``.  No normalization is applied here.
    """
    fs = spec.fields
    n, lam = spec.dim, spec.lam
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    out["eq3"] = (
        np.max(np.abs(_eq3(fs, lam)), axis=(1, 2)),
        np.max(np.abs(fs.ricci) + np.abs(fs.hess_f) + abs(lam) * np.abs(fs.g), axis=(1, 2)),
    )
    out["eq5"] = (_eq5(fs, lam, n), np.abs(fs.scalar) + np.abs(fs.laplacian_f) + n * abs(lam))
    out["eq6"] = (bianchi_residuals(fs), np.max(np.abs(fs.grad_scalar), axis=1))
    h = _hamilton(fs, lam)
    if lam == 0:
        h = h - math.fsum(h) / len(h)
    out["eq7norm"] = (h, np.abs(fs.scalar) + fs.grad_f_norm2 + 2 * abs(lam) * np.abs(fs.f))
    out["eq8"] = (np.maximum(fs.scalar**2 / n - fs.ricci_norm2, 0.0), fs.scalar**2)
    out["eq9"] = (
        fs.laplacian_scalar - fs.grad_s_dot_grad_f + 2 * fs.ricci_norm2 - 2 * lam * fs.scalar,
        np.abs(fs.laplacian_scalar) + np.abs(fs.grad_s_dot_grad_f) + 2 * fs.ricci_norm2 + 2 * abs(lam * fs.scalar),
    )
    out["eq10"] = (
        0.5 * fs.laplacian_grad_f_norm2 - fs.hess_f_norm2 + fs.ricci_grad_f,
        0.5 * np.abs(fs.laplacian_grad_f_norm2) + fs.hess_f_norm2 + np.abs(fs.ricci_grad_f),
    )
    return out


def identity_suite(spec: SolitonSpec) -> IdentityReport:
    """Residuals of the soliton equation and its standard consequences.

    Covers the soliton equation, its trace, the contracted Bianchi identity,
    Hamilton's identity in normalized form, the Cauchy-Schwarz bound
    ``|Ric|^2 >= S^2 / n``, the evolution identity for ``S`` and the
    Bochner formula.  Steady inputs check only constancy in Hamilton's
    identity.
    """
    notes: list[str] = []
    spec, c = _auto_normalize(spec, notes)
    pts = spec.points
    tol = spec.tol("identity")
    fields_ = residual_fields(spec)
    entries: dict[str, IdentityEntry] = {}
    for ident in ("eq3", "eq5", "eq6", "eq7norm", "eq9", "eq10"):
        residual, scale = fields_[ident]
        note = "steady: constancy of S + |grad f|^2 only" if ident == "eq7norm" and spec.lam == 0 else ""
        entries[ident] = _entry(ident, residual, scale, pts, tol, note)

    fs = spec.fields
    violation, s2 = fields_["eq8"]
    eq8_tol = spec.tol("eq8")
    rel8 = violation / (1.0 + s2)
    k8 = int(np.argmax(rel8))
    gap = float(np.min(fs.ricci_norm2 - s2 / spec.dim))
    entries["eq8"] = IdentityEntry(
        "eq8",
        float(np.max(violation)),
        float(rel8[k8]),
        tuple(float(v) for v in pts[k8]),
        eq8_tol,
        "pass" if rel8[k8] <= eq8_tol else "fail",
        f"min |Ric|^2 - S^2/n = {gap:.6g}",
    )
    entries = {k: entries[k] for k in IDENTITY_IDS if k in entries}
    return IdentityReport(spec.name, spec.dim, spec.lam, spec.kind, len(pts), c, entries, notes)


@dataclass
class Theorem1Report:
    c_fit: float
    spread: float
    tolerance: float
    hypothesis_holds: bool
    entries: dict[str, IdentityEntry]
    note: str

    def to_dict(self) -> dict:
        return {
            "c_fit": self.c_fit,
            "spread": self.spread,
            "tolerance": self.tolerance,
            "hypothesis_holds": self.hypothesis_holds,
            "identities": {k: e.to_dict() for k, e in self.entries.items()},
            "note": self.note,
        }


def theorem1_pipeline(spec: SolitonSpec, tol: float | None = None) -> Theorem1Report:
    """Test whether ``S - lam f`` is constant; if so, check the norm formulas.

    Under that hypothesis a normalized soliton satisfies
    ``|Ric|^2 = lam^2 (2f - n/2) + lam c``, ``|Hess f|^2 = lam (n lam / 2 - c)``
    and their sum ``|Ric|^2 + |Hess f|^2 = 2 lam^2 f``.
    """
    _require_nonsteady(spec)
    spec, _ = _auto_normalize(spec)
    if tol is None:
        tol = spec.tol("theorem1")
    fs = spec.fields
    n, lam, pts = spec.dim, spec.lam, spec.points
    d = fs.scalar - lam * fs.f
    c_fit = math.fsum(d) / len(d)
    spread = float(np.max(d) - np.min(d))
    holds = spread <= tol * (1.0 + abs(c_fit))
    res_tol = spec.tol("identity")
    if not holds:
        note = f"hypothesis S = lam f + c fails: spread of S - lam f is {spread:.6g}"
        entries = {k: _skipped(k, res_tol, note) for k in ("eq11", "eq12", "eq16")}
        return Theorem1Report(c_fit, spread, tol, False, entries, note)
    ric_pred = lam**2 * (2 * fs.f - n / 2) + lam * c_fit
    hess_pred = lam * (n * lam / 2 - c_fit) * np.ones_like(fs.f)
    sum_pred = 2 * lam**2 * fs.f
    entries = {
        "eq11": _entry("eq11", fs.ricci_norm2 - ric_pred, np.abs(ric_pred) + fs.ricci_norm2, pts, res_tol),
        "eq12": _entry("eq12", fs.hess_f_norm2 - hess_pred, np.abs(hess_pred) + fs.hess_f_norm2, pts, res_tol),
        "eq16": _entry(
            "eq16", fs.ricci_norm2 + fs.hess_f_norm2 - sum_pred, np.abs(sum_pred) + fs.ricci_norm2, pts, res_tol
        ),
    }
    return Theorem1Report(c_fit, spread, tol, True, entries, f"hypothesis holds with c = {c_fit:.12g}")


@dataclass
class TrivialityVerdict:
    verdict: str  # Trivial | NonTrivial | Inconclusive
    criterion_residual: float  # max |S - lam (f + n/2)|
    f_spread: float
    s_spread: float
    scale: float
    tolerance: float
    iff_violation: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "criterion_residual": self.criterion_residual,
            "f_spread": self.f_spread,
            "s_spread": self.s_spread,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "iff_violation": self.iff_violation,
            "notes": list(self.notes),
        }


def classify_triviality(spec: SolitonSpec, tol: float | None = None) -> TrivialityVerdict:
    """Decide triviality by the scalar-curvature criterion and by f-constancy.

    The soliton is Trivial when ``max |S - lam (f + n/2)|`` and the spread
    of ``f`` are both within ``tol * scale`` (``scale = 1 + |lam| (1 + max|f|)``),
    NonTrivial when both exceed it.  Disagreement between the two predicates
    is Inconclusive and raises the iff-violation flag.
    """
    _require_nonsteady(spec)
    notes: list[str] = []
    spec, _ = _auto_normalize(spec, notes)
    if tol is None:
        tol = spec.tol("triviality")
    fs = spec.fields
    n, lam = spec.dim, spec.lam
    eps = float(np.max(np.abs(fs.scalar - lam * (fs.f + n / 2))))
    f_spread = float(np.max(fs.f) - np.min(fs.f))
    s_spread = float(np.max(fs.scalar) - np.min(fs.scalar))
    scale = 1.0 + abs(lam) * (1.0 + float(np.max(np.abs(fs.f))))
    bound = tol * scale
    criterion, constant_f = eps <= bound, f_spread <= bound
    if criterion and constant_f:
        verdict = "Trivial"
    elif not criterion and not constant_f:
        verdict = "NonTrivial"
    else:
        verdict = "Inconclusive"
    if tol != DEFAULT_TOLERANCES["triviality"]:
        notes.append(f"tolerance overridden: {tol:g}")
    return TrivialityVerdict(verdict, eps, f_spread, s_spread, scale, tol, verdict == "Inconclusive", notes)


@dataclass
class PoissonReport:
    hypothesis_residual: float  # max |Lap S - lam (n lam - S)|
    harmonic_residual: float  # max |Lap (S - lam f)|
    algebra_gap: float  # max |Lap(S - lam f) - (Lap S - lam (n lam - S))|
    eq5_residual: float
    algebra_checked: bool
    algebra_ok: bool
    hypothesis_holds: bool
    branch: str  # trivial | non-trivial | hypothesis-not-satisfied
    s_minus_lf_spread: float
    s_minus_lf_mean: float
    conclusion_ok: bool | None
    annotations: list[str]

    @property
    def passed(self) -> bool:
        return self.algebra_ok and self.conclusion_ok is not False

    def to_dict(self) -> dict:
        return {
            "hypothesis_residual": self.hypothesis_residual,
            "harmonic_residual": self.harmonic_residual,
            "algebra_gap": self.algebra_gap,
            "eq5_residual": self.eq5_residual,
            "algebra_checked": self.algebra_checked,
            "algebra_ok": self.algebra_ok,
            "hypothesis_holds": self.hypothesis_holds,
            "branch": self.branch,
            "s_minus_lf_spread": self.s_minus_lf_spread,
            "s_minus_lf_mean": self.s_minus_lf_mean,
            "conclusion_ok": self.conclusion_ok,
            "annotations": list(self.annotations),
        }


def poisson_check(spec: SolitonSpec, tol: float | None = None) -> PoissonReport:
    """Poisson equation ``Lap S = lam (n lam - S)`` and its harmonic consequence.

    ``Lap(S - lam f)`` is computed independently from its own second
    partials; it differs from the Poisson residual by ``-lam`` times the
    trace identity residual, so the two agree whenever the trace identity
    holds.  If the Poisson equation holds on a non-trivial soliton then
    ``S - lam f`` must be constant with constant different from ``n lam / 2``.
    """
    _require_nonsteady(spec)
    if tol is None:
        tol = spec.tol("poisson")
    spec, _ = _auto_normalize(spec)
    fs = spec.fields
    n, lam = spec.dim, spec.lam
    r1 = fs.laplacian_scalar - lam * (n * lam - fs.scalar)
    r2 = GeometryEngine.laplacian_of_s_minus(fs, lam)
    eq5 = float(np.max(np.abs(_eq5(fs, lam, n))))
    gap = float(np.max(np.abs(r2 - r1)))
    alg_tol = spec.tol("poisson_algebra")
    checked = eq5 <= alg_tol
    algebra_ok = (gap <= alg_tol) if checked else True
    scale = 1.0 + abs(lam) * (n * abs(lam) + float(np.max(np.abs(fs.scalar))))
    hyp = float(np.max(np.abs(r1)))
    # the Poisson equation only speaks about solitons, so the soliton equation
    # itself is part of the hypothesis (its trace alone misses e.g. harmonic f)
    eq3 = float(np.max(np.abs(_eq3(fs, lam))))
    holds = hyp <= tol * scale and eq3 <= tol * scale
    d = fs.scalar - lam * fs.f
    d_mean = math.fsum(d) / len(d)
    d_spread = float(np.max(d) - np.min(d))
    annotations = [COMPACTNESS_CAVEAT]
    conclusion: bool | None = None
    if not holds:
        branch = "hypothesis-not-satisfied"
        why = "soliton equation fails" if eq3 > tol * scale else "Lap S != lam (n lam - S)"
        annotations.append(f"Poisson hypothesis not satisfied ({why}); theorem silent")
    else:
        verdict = classify_triviality(spec)
        if verdict.verdict == "Trivial":
            branch = "trivial"
            conclusion = abs(d_mean - n * lam / 2) <= tol * scale and d_spread <= tol * scale
        else:
            branch = "non-trivial"
            constant = d_spread <= tol * scale
            conclusion = constant and abs(d_mean - n * lam / 2) > tol * scale
            annotations.append(
                "non-trivial branch: S - lam f should be a constant different from n lam / 2"
            )
    return PoissonReport(
        hyp,
        float(np.max(np.abs(r2))),
        gap,
        eq5,
        checked,
        algebra_ok,
        holds,
        branch,
        d_spread,
        d_mean,
        conclusion,
        annotations,
    )


def full_report(spec: SolitonSpec) -> tuple[IdentityReport, Theorem1Report | None, TrivialityVerdict | None, PoissonReport | None]:
    """Identity suite plus, for non-steady inputs, the theorem checks merged in.

    Theorem-level outcomes appear as the ``eq11``, ``eq12``, ``eq16``,
    ``thm2`` and ``thm34`` entries of the returned identity report.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormalizationWarning)
        report = identity_suite(spec)
        if spec.lam == 0:
            tol = spec.tol("identity")
            for k in ("eq11", "eq12", "eq16", "thm2", "thm34"):
                report.entries[k] = _skipped(k, tol, "steady soliton: theorem needs lambda != 0")
            return report, None, None, None
        t1 = theorem1_pipeline(spec)
        verdict = classify_triviality(spec)
        poisson = poisson_check(spec)
    report.entries.update(t1.entries)
    report.entries["thm2"] = IdentityEntry(
        "thm2",
        verdict.criterion_residual,
        verdict.criterion_residual / verdict.scale,
        None,
        verdict.tolerance,
        "fail" if verdict.iff_violation else "pass",
        f"verdict {verdict.verdict}; f spread {verdict.f_spread:.6g}",
    )
    report.entries["thm34"] = IdentityEntry(
        "thm34",
        poisson.algebra_gap,
        poisson.algebra_gap / (1.0 + abs(spec.lam)),
        None,
        spec.tol("poisson_algebra"),
        "pass" if poisson.passed else "fail",
        f"branch {poisson.branch}",
    )
    report.notes.append(COMPACTNESS_CAVEAT)
    return report, t1, verdict, poisson

