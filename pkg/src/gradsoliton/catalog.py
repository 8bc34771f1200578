"""Closed-form non-steady gradient Ricci solitons used as test oracles.

Each constructor returns a :class:`Fixture`: a normalized
:class:`~gradsoliton.soliton.SolitonSpec` plus the values its curvature
must take.  Curved fixtures live in conformal charts (stereographic for the
sphere, Poincare ball for hyperbolic space) so one chart suffices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .exprlang import Expr, parse_expr
from .geometry import ChartSpec, MetricField
from .soliton import SolitonSpec

__all__ = [
    "Fixture",
    "gaussian_soliton",
    "gaussian_shrinker",
    "gaussian_expander",
    "einstein_trivial",
    "cylinder_shrinker",
    "FIXTURES",
    "get_fixture",
    "fixture_names",
    "DEFAULT_MARGIN",
]

DEFAULT_MARGIN = 0.1


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    spec: SolitonSpec
    scalar: Expr
    c: float
    trivial: bool
    ricci_norm2: Expr
    hess_norm2: Expr
    provenance: str

    @property
    def kind(self) -> str:
        return self.spec.kind


def _num(x: float) -> str:
    return repr(float(x))


def _sum_squares(names: list[str]) -> str:
    return " + ".join(f"{v}^2" for v in names)


def _coords(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def _grid_count(n: int) -> int:
    # smallest per-axis count giving at least 100 samples
    k = 2
    while k**n < 100:
        k += 1
    return k


def gaussian_soliton(n: int, lam: float, name: str | None = None) -> Fixture:
    """Flat space with ``f = (lam/2) |x|^2``; shrinking for lam > 0, expanding for lam < 0."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if lam == 0:
        raise ValueError("lambda must be non-zero")
    xs = _coords(n)
    chart = ChartSpec.box(n, -2.0, 2.0)
    metric = MetricField.from_strings({(i, i): "1" for i in range(n)}, n)
    f = parse_expr(f"{_num(lam / 2)} * ({_sum_squares(xs)})", n)
    kind = "shrinker" if lam > 0 else "expander"
    spec = SolitonSpec(chart, metric, f, float(lam), _grid_count(n), DEFAULT_MARGIN, name or f"gaussian-{kind}-{n}d")
    return Fixture(
        spec.name,
        spec,
        parse_expr("0", n),
        0.0,
        False,
        parse_expr("0", n),
        parse_expr(_num(n * lam**2), n),
        "flat metric: Ric = 0 and Hess f = lam g; S = 0 and |grad f|^2 = lam^2 |x|^2 = 2 lam f, so c = 0",
    )


def gaussian_shrinker(n: int = 2, lam: float = 1.0) -> Fixture:
    if lam <= 0:
        raise ValueError("a shrinker needs lambda > 0")
    return gaussian_soliton(n, lam)


def gaussian_expander(n: int = 2, lam: float = -1.0) -> Fixture:
    if lam >= 0:
        raise ValueError("an expander needs lambda < 0")
    return gaussian_soliton(n, lam)


def einstein_trivial(kind: str = "sphere", n: int = 2, r: float = 1.0, name: str | None = None) -> Fixture:
    """Round sphere or hyperbolic space of radius ``r`` with constant ``f = n/2``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if r <= 0:
        raise ValueError("radius must be positive")
    xs = _coords(n)
    r2, r4 = r * r, r**4
    if kind == "sphere":
        factor = f"4 * {_num(r4)} / ({_num(r2)} + {_sum_squares(xs)})^2"
        chart = ChartSpec.box(n, -r, r)
        lam = (n - 1) / r2
        note = "stereographic chart of the round sphere; Einstein with Ric = (n-1)/r^2 g"
    elif kind == "hyperbolic":
        factor = f"4 * {_num(r4)} / ({_num(r2)} - ({_sum_squares(xs)}))^2"
        half = r / n**0.5
        validity = parse_expr(f"{_num(r2)} - ({_sum_squares(xs)})", n)
        chart = ChartSpec.box(n, -half, half, validity=validity)
        lam = -(n - 1) / r2
        note = "Poincare ball chart of hyperbolic space; Einstein with Ric = -(n-1)/r^2 g"
    else:
        raise ValueError(f"unknown Einstein fixture kind {kind!r}")
    metric = MetricField.conformal(parse_expr(factor, n), n)
    spec = SolitonSpec(
        chart,
        metric,
        parse_expr(_num(n / 2), n),
        lam,
        _grid_count(n),
        DEFAULT_MARGIN,
        name or f"{kind}-trivial-n{n}" + ("" if r == 1.0 else f"-r{r:g}"),
    )
    s = n * lam
    return Fixture(
        spec.name,
        spec,
        parse_expr(_num(s), n),
        0.0,
        True,
        parse_expr(_num(s * s / n), n),
        parse_expr("0", n),
        note + "; f = n/2 gives S = n lam = 2 lam f, so c = 0",
    )


def cylinder_shrinker(n: int = 3, r: float = 1.0, name: str | None = None) -> Fixture:
    """Round ``S^{n-1}`` of radius ``r`` times a line, ``f = lam t^2/2 + (n-1)/2``."""
    if n < 3:
        raise ValueError("the cylinder needs n >= 3")
    if r <= 0:
        raise ValueError("radius must be positive")
    m = n - 1
    ys = _coords(m)
    t = f"x{n}"
    r2, r4 = r * r, r**4
    factor = parse_expr(f"4 * {_num(r4)} / ({_num(r2)} + {_sum_squares(ys)})^2", n)
    entries = {(i, i): factor for i in range(m)}
    entries[(m, m)] = parse_expr("1", n)
    metric = MetricField(entries, n)
    lam = (n - 2) / r2
    chart = ChartSpec(n, tuple(_coords(n)), tuple([(-r, r)] * m + [(-2.0, 2.0)]))
    f = parse_expr(f"{_num(lam / 2)} * {t}^2 + {_num((n - 1) / 2)}", n)
    spec = SolitonSpec(chart, metric, f, lam, _grid_count(n), DEFAULT_MARGIN, name or f"cylinder-n{n}" + ("" if r == 1.0 else f"-r{r:g}"))
    return Fixture(
        spec.name,
        spec,
        parse_expr(_num((n - 1) * lam), n),
        0.0,
        False,
        parse_expr(_num((n - 1) * lam**2), n),
        parse_expr(_num(lam**2), n),
        "product of a round sphere (Ric = (n-2)/r^2 on that factor) with a flat line;"
        " Hess f = lam dt^2 and S + |grad f|^2 = (n-1) lam + lam^2 t^2 = 2 lam f",
    )


FIXTURES: dict[str, Callable[[], Fixture]] = {
    "gaussian-shrinker-2d": lambda: gaussian_shrinker(2, 1.0),
    "gaussian-expander-2d": lambda: gaussian_expander(2, -1.0),
    "sphere-trivial-n2": lambda: einstein_trivial("sphere", 2, 1.0),
    "hyperbolic-trivial-n3": lambda: einstein_trivial("hyperbolic", 3, 1.0),
    "cylinder-n3": lambda: cylinder_shrinker(3, 1.0),
}


def fixture_names() -> list[str]:
    return list(FIXTURES)


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}") from None
