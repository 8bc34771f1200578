import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradsoliton.catalog import cylinder_shrinker, einstein_trivial, gaussian_expander, gaussian_shrinker, get_fixture
from gradsoliton.exprlang import evaluate, parse_expr
from gradsoliton.geometry import ChartSpec, MetricField
from gradsoliton.soliton import (
    COMPACTNESS_CAVEAT,
    IDENTITY_IDS,
    NormalizationWarning,
    SolitonError,
    SolitonSpec,
    classify_triviality,
    full_report,
    hamilton_constant,
    identity_suite,
    poisson_check,
    soliton_residual,
    theorem1_pipeline,
    trace_identity_residual,
)
from randgeom import perturbed_flat_metric, random_potential


def flat_spec(potential: str, lam: float, n: int = 2, samples=5) -> SolitonSpec:
    return SolitonSpec(
        ChartSpec.box(n, -2, 2),
        MetricField.from_strings({(i, i): "1" for i in range(n)}, n),
        parse_expr(potential, n),
        lam,
        samples,
        0.0,
        "flat",
    )


@pytest.fixture
def negative_control():
    return flat_spec("x1^3", 1.0, samples=np.array([[1.0, 0.0], [0.5, 0.5], [-1.0, 1.0]]))


class TestSpec:
    def test_kind(self):
        assert flat_spec("0", 1).kind == "shrinking"
        assert flat_spec("0", -1).kind == "expanding"
        assert flat_spec("0", 0).kind == "steady"

    def test_dimension_mismatch(self):
        with pytest.raises(SolitonError):
            SolitonSpec(ChartSpec.box(3, -1, 1), MetricField.from_strings({(0, 0): "1", (1, 1): "1"}, 2), parse_expr("0", 3), 1.0)

    def test_point_outside_chart(self):
        chart = ChartSpec.box(2, -1, 1, validity=parse_expr("1 - x1^2 - x2^2", 2))
        spec = SolitonSpec(chart, MetricField.from_strings({(0, 0): "1", (1, 1): "1"}, 2), parse_expr("0", 2), 1.0, np.array([[0.9, 0.9]]))
        with pytest.raises(SolitonError, match="outside the chart"):
            spec.points

    def test_steady_rejected_for_nonsteady_operations(self):
        spec = flat_spec("x1", 0.0)
        for op in (hamilton_constant, theorem1_pipeline, classify_triviality, poisson_check):
            with pytest.raises(SolitonError, match="non-steady"):
                op(spec)

    def test_steady_allowed_for_identities(self):
        # flat space with a linear potential is a steady gradient soliton
        report, t1, verdict, poisson = full_report(flat_spec("x1 + 2*x2", 0.0))
        assert report.passed and t1 is verdict is poisson is None
        assert report.entries["thm2"].status == "skipped"


class TestPointwise:
    def test_gaussian_shrinker_residual_vanishes(self):
        spec = gaussian_shrinker(3, 0.5).spec
        assert np.all(soliton_residual(spec, [0.3, -1.0, 1.2]) == 0)
        assert trace_identity_residual(spec, [0.3, -1.0, 1.2]) == 0

    def test_round_sphere_residual_vanishes(self):
        spec = einstein_trivial("sphere", 3, 1.5).spec
        assert np.max(np.abs(soliton_residual(spec, [0.2, 0.4, -0.1]))) <= 1e-13
        assert abs(trace_identity_residual(spec, [0.2, 0.4, -0.1])) <= 1e-13

    def test_negative_control(self, negative_control):
        r = soliton_residual(negative_control, [1.0, 0.0])
        np.testing.assert_allclose(r, np.diag([5.0, -1.0]), atol=1e-14)
        assert trace_identity_residual(negative_control, [1.0, 0.0]) == pytest.approx(4.0)

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.floats(-3, 3))
    def test_trace_coherence(self, seed, n, lam):
        rng = np.random.default_rng(seed)
        spec = SolitonSpec(
            ChartSpec.box(n, -1, 1), perturbed_flat_metric(rng, n, trig=True), random_potential(rng, n), lam
        )
        p = rng.uniform(-0.8, 0.8, n)
        g_inv = np.linalg.inv(spec.metric.matrix(p))
        lhs = np.trace(g_inv @ soliton_residual(spec, p))
        assert abs(lhs - trace_identity_residual(spec, p)) <= 1e-12


class TestHamilton:
    def test_gaussian_already_normalized(self):
        res = hamilton_constant(gaussian_shrinker(2, 1.0).spec)
        assert abs(res.c) <= 1e-12 and res.shift == 0 and res.constant

    def test_sphere_zero_potential_shifts_to_half_dimension(self):
        spec = einstein_trivial("sphere", 3, 1.0).spec.with_potential(parse_expr("0", 3))
        res = hamilton_constant(spec)
        lam = spec.lam
        assert res.c == pytest.approx(3 * lam, rel=1e-12)
        assert evaluate(res.normalized.potential, [0, 0, 0]) == pytest.approx(1.5, rel=1e-12)

    def test_cylinder(self):
        res = hamilton_constant(cylinder_shrinker(3, 1.0).spec)
        assert abs(res.c) <= 1e-12

    def test_idempotent(self):
        for spec in (gaussian_expander(2).spec, einstein_trivial("hyperbolic", 3, 1.0).spec):
            once = hamilton_constant(spec)
            twice = hamilton_constant(once.normalized)
            assert abs(twice.c) <= 1e-9 * (1 + abs(spec.lam))
            assert twice.normalized.potential == once.normalized.potential

    def test_non_constant_raises_when_strict(self, negative_control):
        with pytest.raises(SolitonError, match="not constant"):
            hamilton_constant(negative_control)
        assert not hamilton_constant(negative_control, strict=False).constant

    def test_auto_normalize_warns(self):
        spec = einstein_trivial("sphere", 2, 1.0).spec.with_potential(parse_expr("0", 2))
        with pytest.warns(NormalizationWarning):
            report = identity_suite(spec)
        assert report.passed
        assert report.normalization_constant == pytest.approx(2.0)


class TestIdentitySuite:
    def test_negative_control_flags_soliton_equation(self, negative_control):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NormalizationWarning)
            report = identity_suite(negative_control)
        e = report.entries["eq3"]
        assert e.status == "fail" and e.max_abs > 0.1
        assert e.worst_point == (1.0, 0.0) or e.worst_point in [tuple(p) for p in negative_control.points]
        assert not report.passed

    def test_worst_point_is_a_sample(self):
        spec = cylinder_shrinker(3).spec
        pts = {tuple(p) for p in spec.points}
        for e in identity_suite(spec).entries.values():
            assert e.worst_point in pts

    def test_pass_iff_both_measures_within_tolerance(self, negative_control):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NormalizationWarning)
            reports = [identity_suite(gaussian_shrinker().spec), identity_suite(negative_control)]
        for report in reports:
            for e in report.entries.values():
                if e.id == "eq8":
                    continue
                assert (e.status == "pass") == (e.max_abs <= e.tolerance and e.max_rel <= e.tolerance)

    def test_sphere_saturates_cauchy_schwarz(self):
        spec = einstein_trivial("sphere", 3, 2.0).spec
        fs = spec.fields
        gap = np.abs(fs.ricci_norm2 - fs.scalar**2 / 3)
        assert np.all(gap <= 1e-9 * fs.scalar**2)

    @pytest.mark.parametrize("fixture", [gaussian_shrinker(2, 1.0), gaussian_expander(2, -1.0), gaussian_expander(3, -0.5)])
    def test_sign_coverage(self, fixture):
        assert identity_suite(fixture.spec).passed

    def test_tolerance_override_changes_outcome(self):
        # a tiny perturbation of the potential is invisible at a loose tolerance
        spec = gaussian_shrinker(2, 1.0).spec
        bent = spec.with_potential(parse_expr("0.5*(x1^2 + x2^2) + 1e-7*x1^3", 2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NormalizationWarning)
            assert not identity_suite(bent).passed
            assert identity_suite(bent.with_tolerances(identity=1e-4)).passed


class TestConstantDifference:
    @pytest.mark.parametrize("kind, n, r", [("sphere", 2, 1.0), ("sphere", 3, 2.0), ("hyperbolic", 3, 1.0)])
    def test_trivial_branch(self, kind, n, r):
        spec = einstein_trivial(kind, n, r).spec
        t1 = theorem1_pipeline(spec)
        assert t1.hypothesis_holds
        assert t1.c_fit == pytest.approx(n * spec.lam / 2, rel=1e-9)
        for e in t1.entries.values():
            assert e.status == "pass" and e.max_abs <= 1e-8

    @pytest.mark.parametrize("fx", [gaussian_shrinker(2), gaussian_expander(2), cylinder_shrinker(3), cylinder_shrinker(4)])
    def test_hypothesis_fails_on_non_trivial(self, fx):
        t1 = theorem1_pipeline(fx.spec)
        assert not t1.hypothesis_holds and t1.spread > 1e-3
        assert all(e.status == "skipped" for e in t1.entries.values())


class TestTriviality:
    @pytest.mark.parametrize("name, expected", [
        ("sphere-trivial-n2", "Trivial"),
        ("hyperbolic-trivial-n3", "Trivial"),
        ("gaussian-shrinker-2d", "NonTrivial"),
        ("gaussian-expander-2d", "NonTrivial"),
        ("cylinder-n3", "NonTrivial"),
    ])
    def test_fixture_verdicts(self, name, expected):
        v = classify_triviality(get_fixture(name).spec)
        assert v.verdict == expected and not v.iff_violation

    def test_gaussian_supporting_values(self):
        v = classify_triviality(gaussian_shrinker(2, 1.0).spec)
        # eps(x) = |x|^2 / 2 + 1, maximised at the sample corners (1.6, 1.6)
        assert v.criterion_residual == pytest.approx(1.6**2 + 1, rel=1e-12)
        assert v.s_spread == 0

    def test_inconclusive_when_predicates_disagree(self):
        # constant f that is not n/2 times anything consistent: flat space, f = 1
        with pytest.warns(NormalizationWarning):
            v = classify_triviality(flat_spec("1", 1.0))
        assert v.verdict == "Inconclusive" and v.iff_violation

    def test_tolerance_override_is_noted(self):
        v = classify_triviality(gaussian_shrinker(2, 1.0).spec, tol=1e6)
        assert v.verdict == "Trivial"
        assert any("overridden" in n for n in v.notes)

    @settings(max_examples=20)
    @given(st.sampled_from(["sphere", "hyperbolic"]), st.integers(2, 4), st.floats(0.5, 3.0))
    def test_iff_flag_silent_on_genuine_solitons(self, kind, n, r):
        spec = einstein_trivial(kind, n, r).spec.with_potential(parse_expr(repr(n / 2), n))
        spec = type(spec)(spec.chart, spec.metric, spec.potential, spec.lam, 3, 0.1)
        assert identity_suite(spec).entries["eq3"].max_abs <= 1e-8
        assert not classify_triviality(spec).iff_violation


class TestPoisson:
    def test_round_sphere_trivial_branch(self):
        p = poisson_check(einstein_trivial("sphere", 2, 1.0).spec)
        assert p.hypothesis_holds and p.branch == "trivial" and p.conclusion_ok
        assert p.hypothesis_residual <= 1e-10
        assert COMPACTNESS_CAVEAT in p.annotations

    def test_gaussian_hypothesis_fails(self):
        p = poisson_check(gaussian_shrinker(2, 1.0).spec)
        # S = 0, so Lap S - lam (n lam - S) = -n lam^2
        assert p.hypothesis_residual == pytest.approx(2.0)
        assert not p.hypothesis_holds and p.branch == "hypothesis-not-satisfied"
        assert p.conclusion_ok is None and p.passed

    def test_algebra_on_fixtures(self):
        for name in ("sphere-trivial-n2", "hyperbolic-trivial-n3", "gaussian-shrinker-2d", "gaussian-expander-2d", "cylinder-n3"):
            p = poisson_check(get_fixture(name).spec)
            assert p.algebra_checked and p.algebra_gap <= 1e-10

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.floats(-2, 2).filter(lambda v: abs(v) > 0.05))
    def test_algebraic_reduction_on_random_data(self, seed, n, lam):
        # Lap(S - lam f) - (Lap S - lam (n lam - S)) = -lam (S + Lap f - n lam)
        rng = np.random.default_rng(seed)
        spec = SolitonSpec(
            ChartSpec.box(n, -1, 1), perturbed_flat_metric(rng, n, trig=True), random_potential(rng, n), lam, 3, 0.1
        )
        from gradsoliton.geometry import GeometryEngine

        fs = spec.fields
        r1 = fs.laplacian_scalar - lam * (n * lam - fs.scalar)
        r2 = GeometryEngine.laplacian_of_s_minus(fs, lam)
        eq5 = fs.scalar + fs.laplacian_f - n * lam
        np.testing.assert_allclose(r2 - r1, -lam * eq5, atol=1e-10)

    def test_perturbed_sphere_potential_is_silent(self):
        spec = einstein_trivial("sphere", 2, 1.0).spec.with_potential(parse_expr("1 + 0.1*x1", 2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NormalizationWarning)
            p = poisson_check(spec)
        # S is untouched, so only the soliton equation can expose the change
        assert p.hypothesis_residual <= 1e-10
        assert not p.hypothesis_holds and p.branch == "hypothesis-not-satisfied"
        assert any("soliton equation fails" in a for a in p.annotations)


class TestFullReport:
    def test_all_ids_present(self):
        report, *_ = full_report(get_fixture("cylinder-n3").spec)
        assert list(report.entries) == list(IDENTITY_IDS)
        d = report.to_dict()
        assert list(d["identities"]) == list(IDENTITY_IDS)
        assert COMPACTNESS_CAVEAT in report.notes
