import math
import numpy as np
import pytest
import sympy
from ftl.algebra import ConjPoly, RationalExpr
from ftl.errors import DomainError, SingularFrameError, TypeExceedsError, UsageError
from ftl.geometry import (
    VectorField,
    build_table,
    capital_lambda,
    decompose_in_frame,
    decompose_symbolic,
    lie_bracket,
    point_type,
    tangential_frame,
)
from ftl.geometry.crgeom import frame_of
from ftl.geometry.domain import from_preset
from ftl.utils import parallel_map
from ftl.selftest import dual_path_suite
from . import oracle

BASE = (1 + 0j, 0j)
OFF_AXIS = (math.sqrt(15) / 4 + 0j, 0.5 + 0j)

z1, zb1, z2, zb2 = (ConjPoly.symbol(name) for name in ("z1", "zb1", "z2", "zb2"))


def test_frame_fields_are_tangent(egg2):
    L, Lb, T = tangential_frame(egg2)
    for field in (L, Lb, T):
        assert field.apply(egg2.rho).is_zero()
    assert Lb == L.conjugate()


def test_frame_requires_z1_dependence():
    with pytest.raises(DomainError):
        frame_of(z2 * zb2 - 1)


def test_quartic_frame(quartic):
    assert quartic.frame.L == VectorField((-2 * z2 * zb1 * zb1, zb1, 0, 0))


def test_bracket_is_antisymmetric(egg2):
    L, Lb, _ = tangential_frame(egg2)
    assert lie_bracket(L, Lb) == -lie_bracket(Lb, L)
    assert lie_bracket(L, L).is_zero()


def test_symbolic_decomposition_reconstructs(sphere):
    frame = sphere.frame
    X = lie_bracket(frame.L, frame.Lb)
    f1, f2, lam, normal = decompose_symbolic(X, frame)
    rebuilt = (
        frame.L.scale(f1)
        + frame.Lb.scale(f2)
        + frame.T.scale(lam)
        + frame.N.scale(normal)
    )
    assert rebuilt == X
    assert normal.is_zero()


def test_first_brackets_match_closed_forms(egg2):
    frame = egg2.frame
    _, _, lam_LT, _ = decompose_symbolic(lie_bracket(frame.L, frame.T), frame)
    _, _, lam_LLb, _ = decompose_symbolic(lie_bracket(frame.L, frame.Lb), frame)
    assert lam_LT == frame.lambda_LT
    assert lam_LLb == frame.lambda_LLb


def test_explicit_step_agrees_with_decomposition(egg2):
    table = build_table(egg2, 3)
    for entry in table.entries:
        if entry.degree < 2 or entry.word[0] != "L":
            continue
        _, _, lam, _ = decompose_symbolic(entry.field, egg2.frame)
        assert entry.lambda_ == lam, entry.label


def test_numeric_decomposition(sphere):
    frame = sphere.frame
    f1, f2, lam, normal = decompose_in_frame(frame.T, frame, BASE)
    assert (f1, f2, lam, normal) == pytest.approx((0, 0, 1, 0))
    with pytest.raises(SingularFrameError):
        decompose_in_frame(frame.T, frame, (0j, 0j))


def test_dual_path_lambda(sphere, egg2):
    result = dual_path_suite([sphere, egg2], np.random.default_rng(5), samples=20)
    assert result.passed, result.detail


def test_table_words(sphere):
    table = build_table(sphere, 2)
    assert table.words() == [("L",), ("Lb",), ("L", "Lb")]
    assert table.entries[-1].label == "[L,Lb]"
    assert table.to_json()["dedup"] == "exact-duplicates-and-negations"


def test_table_growth_and_cache(egg2):
    small, large = build_table(egg2, 3), build_table(egg2, 4)
    assert build_table(egg2, 4) is large
    assert large.entries[: len(small)] == small.entries
    for k in range(1, 5):
        assert len(large.by_degree(k)) <= 2**k


@pytest.mark.parametrize("k_max", [1, 13])
def test_table_degree_limits(sphere, k_max):
    with pytest.raises(UsageError):
        build_table(sphere, k_max)


def test_sphere_capital_lambda(sphere):
    table = build_table(sphere, 2)
    assert capital_lambda(table, 2, BASE) == pytest.approx(1.0)
    # Lambda_2 = 1 / |z1|^2 on the unit sphere
    point = (0.6 + 0j, 0.8 + 0j)
    assert capital_lambda(table, 2, point) == pytest.approx(1 / 0.36)
    with pytest.raises(UsageError):
        capital_lambda(table, 3, BASE)


def test_egg_capital_lambdas_at_base(egg2):
    lam = egg2.table(4).capital_lambdas(*BASE, upto=4)
    assert lam[2] == 0
    assert lam[3] == 0
    assert lam[4] == pytest.approx(4.0)


def test_capital_lambdas_on_arrays(egg2):
    z1s = np.array([1 + 0j, OFF_AXIS[0]])
    z2s = np.array([0j, OFF_AXIS[1]])
    lam = egg2.table(4).capital_lambdas(z1s, z2s, upto=4)
    assert lam.shape == (5, 2)
    assert lam[2, 0] == 0 and lam[2, 1] > 0
    assert np.all(np.diff(lam, axis=0) >= 0)


def test_types_match_oracle(sphere, egg2):
    assert oracle.brute_force_type(oracle.sphere(), (1, 0), 4) == 2
    assert oracle.brute_force_type(oracle.egg(2), (1, 0), 4) == 4
    exact_off_axis = (sympy.sqrt(15) / 4, sympy.Rational(1, 2))
    assert oracle.brute_force_type(oracle.egg(2), exact_off_axis, 4) == 2
    assert sphere.point_type(BASE).tau_z == 2
    assert egg2.point_type(BASE).tau_z == 4
    assert egg2.point_type(OFF_AXIS).tau_z == 2


def test_egg3_type_matches_oracle(egg3):
    assert oracle.brute_force_type(oracle.egg(3), (1, 0), 6) == 6
    report = egg3.point_type(BASE)
    assert report.tau_z == 6
    assert max(report.lambda_values[:4]) <= 1e-12


def test_types_along_the_circle(egg2):
    z1s = np.exp(1j * np.linspace(-0.5, 0.5, 7))
    assert list(egg2.types_at(z1s, np.zeros(7, dtype=complex))) == [4] * 7


def test_type_exceeds_k_max(egg3):
    with pytest.raises(TypeExceedsError) as exc:
        point_type(egg3, BASE, 1e-8, 4)
    assert exc.value.k_max == 4
    assert exc.value.point == BASE


def test_rational_fields_evaluate(sphere):
    field = VectorField((RationalExpr(1, z1), 0, 0, 0))
    assert field.evaluate(2 + 0j, 0j)[0] == pytest.approx(0.5)
    assert not field.is_polynomial()


@pytest.mark.parametrize("name", ["sphere", "egg-m2", "quartic"])
def test_frame_brackets_satisfy_jacobi(name):
    L, Lb, T = tangential_frame(from_preset(name))
    total = (
        lie_bracket(L, lie_bracket(Lb, T))
        + lie_bracket(Lb, lie_bracket(T, L))
        + lie_bracket(T, lie_bracket(L, Lb))
    )
    rng = np.random.default_rng(6)
    for _ in range(10):
        z = rng.uniform(0.2, 0.8, 2) + 1j * rng.uniform(-0.5, 0.5, 2)
        assert np.allclose(total.evaluate(*z), 0, atol=1e-10)


def test_normal_residual_vanishes_on_the_boundary(egg2):
    points = [BASE, OFF_AXIS] + [tuple(p) for p in egg2.patch_points(3)]
    for entry in egg2.table(4).entries:
        for point in points:
            _, _, _, residual = decompose_in_frame(entry.field, egg2.frame, point)
            assert abs(residual) < 1e-10


def test_boundary_guards(egg2):
    inside = (0.5 + 0j, 0j)
    with pytest.raises(DomainError):
        egg2.point_type(inside)
    with pytest.raises(DomainError):
        capital_lambda(egg2.table(4), 4, inside)
    assert capital_lambda(egg2.table(4), 4, BASE) == pytest.approx(4.0)


def test_lazy_fills_happen_once_across_threads():
    domain = from_preset("egg-m2")
    tables = parallel_map(lambda _: domain.table(4), range(8), threads=8)
    assert all(table is tables[0] for table in tables)
    frames = parallel_map(lambda _: domain.frame, range(8), threads=8)
    assert all(frame is frames[0] for frame in frames)
    taus = parallel_map(lambda _: domain.tau_global, range(4), threads=4)
    assert taus == [4, 4, 4, 4]
