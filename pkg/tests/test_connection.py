"""Connection forms: evaluation, curvature, gauge transformation, builtins."""

import numpy as np
import pytest

from holonome.connection import (
    ChartSpec,
    ConnectionForm,
    ConstantMatrixFunction,
    ExprMatrixFunction,
    Transition,
    builtin_connection,
    curvature_at,
    eval_connection,
    gauge_transform,
    is_flat,
)
from holonome.errors import (
    OutsideChartError,
    SingularGaugeError,
    ValidationError,
)
from holonome.exprs import cos, lit, parse, sin, var
from holonome.groups import StructureGroup, frobenius, so2_generator
from holonome.paths import ChartPoint, TangentVector

from oracles import central_gradient

J = so2_generator()
SO2 = StructureGroup("SO", 2)


def point(x, y, chart=0):
    return ChartPoint(chart, [x, y])


def tangent(pt, vx, vy):
    return TangentVector(pt, [vx, vy])


@pytest.fixture(scope="module")
def abelian():
    return builtin_connection("abelian-area(1.5)")


def test_eval_connection_zero(abelian):
    conn = builtin_connection("flat-so2")
    a = eval_connection(conn, point(0.3, 0.1), tangent(point(0.3, 0.1), 1.0, -2.0))
    assert frobenius(a.matrix) == 0.0


def test_eval_connection_direct_contraction():
    lam = 0.7
    chart = ChartSpec(0, 2, [-2, -2], [2, 2],
                      (ConstantMatrixFunction(lam * J, 2), ConstantMatrixFunction(0 * J, 2)))
    conn = ConnectionForm(SO2, (chart,))
    a = eval_connection(conn, point(0.0, 0.0), tangent(point(0.0, 0.0), 1.0, 0.0))
    assert frobenius(a.matrix - lam * J) < 1e-15


def test_eval_connection_linearity(abelian):
    rng = np.random.default_rng(31)
    for _ in range(20):
        x = point(*rng.uniform(-1.5, 1.5, 2))
        v = rng.normal(size=2)
        w = rng.normal(size=2)
        a, b = rng.normal(size=2)
        lhs = eval_connection(abelian, x, TangentVector(x, a * v + b * w)).matrix
        rhs = (
            a * eval_connection(abelian, x, TangentVector(x, v)).matrix
            + b * eval_connection(abelian, x, TangentVector(x, w)).matrix
        )
        assert frobenius(lhs - rhs) < 1e-12


def test_eval_connection_outside_chart(abelian):
    far = point(5.0, 0.0)
    with pytest.raises(OutsideChartError):
        eval_connection(abelian, far, tangent(far, 1.0, 0.0))


def test_curvature_zero_connection():
    conn = builtin_connection("flat-so2")
    f = curvature_at(conn, point(0.7, -0.7))
    assert f.max_norm() == 0.0


def test_curvature_abelian_area_constant(abelian):
    rng = np.random.default_rng(8)
    for _ in range(10):
        x = point(*rng.uniform(-1.8, 1.8, 2))
        f = curvature_at(abelian, x)
        assert frobenius(f.matrix(0, 1) - 1.5 * J) < 1e-12
        assert np.array_equal(f.matrix(1, 0), -f.matrix(0, 1))


def test_curvature_cross_check_with_finite_differences(abelian):
    """F_12 = d1 A_2 - d2 A_1 + [A_1, A_2], derivatives by central fd."""
    chart = abelian.charts[0]
    x = np.array([0.45, -0.3])

    def coeff(mu, y):
        return chart.coefficients[mu].value(np.asarray(y)[None, :])[0]

    d1A2 = np.zeros((2, 2))
    d2A1 = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            d1A2[i, j] = central_gradient(lambda y: coeff(1, y)[i, j], x)[0]
            d2A1[i, j] = central_gradient(lambda y: coeff(0, y)[i, j], x)[1]
    a1, a2 = coeff(0, x), coeff(1, x)
    fd = d1A2 - d2A1 + a1 @ a2 - a2 @ a1
    f = curvature_at(abelian, point(*x))
    assert frobenius(f.matrix(0, 1) - fd) < 1e-9


def test_curvature_pure_gauge_vanishes():
    conn = builtin_connection("pure-gauge")
    rng = np.random.default_rng(77)
    for _ in range(5):
        f = curvature_at(conn, point(*rng.uniform(-1.5, 1.5, 2)))
        assert f.max_norm() <= 1e-9


def test_antisymmetry_recomputed_with_swapped_order(abelian):
    """Recompute F_21 directly from the definition with the roles of the
    indices swapped; it must equal -F_12 within 1e-9."""
    chart = abelian.charts[0]
    x = np.array([[0.2, 0.9]])
    vals, grads = [], []
    for mu in range(2):
        v, g = chart.coefficients[mu].value_and_grad(x)
        vals.append(v[0])
        grads.append(g[0])
    f12 = grads[1][0] - grads[0][1] + vals[0] @ vals[1] - vals[1] @ vals[0]
    f21 = grads[0][1] - grads[1][0] + vals[1] @ vals[0] - vals[0] @ vals[1]
    assert frobenius(f21 + f12) <= 1e-9
    got = curvature_at(abelian, point(0.2, 0.9))
    assert frobenius(got.matrix(0, 1) - f12) <= 1e-9


def test_gauge_transform_identity_is_noop(abelian):
    gauged = gauge_transform(abelian, [[lit(1.0), lit(0.0)], [lit(0.0), lit(1.0)]])
    X = np.random.default_rng(3).uniform(-1.5, 1.5, (20, 2))
    for mu in range(2):
        before = abelian.charts[0].coefficients[mu].value(X)
        after = gauged.charts[0].coefficients[mu].value(X)
        assert np.max(np.abs(before - after)) < 1e-12


def _rotation_gauge():
    w = var(0, 2) * var(1, 2)
    return [[cos(w), lit(-1.0) * sin(w)], [sin(w), cos(w)]]


def test_gauge_transform_conjugates_curvature(abelian):
    gauged = gauge_transform(abelian, _rotation_gauge())
    rng = np.random.default_rng(13)
    gauge_fn = ExprMatrixFunction(_rotation_gauge(), 2)
    for _ in range(20):
        x = rng.uniform(-1.5, 1.5, 2)
        g = gauge_fn.at(x)
        f_before = curvature_at(abelian, point(*x)).matrix(0, 1)
        f_after = curvature_at(gauged, point(*x)).matrix(0, 1)
        assert frobenius(f_after - np.linalg.inv(g) @ f_before @ g) < 1e-8


def test_gauge_transform_roundtrip(abelian):
    w = var(0, 2) * var(1, 2)
    forward = _rotation_gauge()
    inverse = [[cos(w), sin(w)], [lit(-1.0) * sin(w), cos(w)]]
    back = gauge_transform(gauge_transform(abelian, forward), inverse)
    X = np.random.default_rng(4).uniform(-1.5, 1.5, (20, 2))
    for mu in range(2):
        before = abelian.charts[0].coefficients[mu].value(X)
        after = back.charts[0].coefficients[mu].value(X)
        assert np.max(np.abs(before - after)) < 1e-9


def test_gauge_transform_rejects_singular_gauge(abelian):
    with pytest.raises(SingularGaugeError):
        gauge_transform(abelian, [[lit(1e-6), lit(0.0)], [lit(0.0), lit(1e-6)]])


def test_is_flat_reports():
    rep = is_flat(builtin_connection("flat-so2"), samples=5, tol=1e-6)
    assert rep.flat and rep.max_norm == 0.0

    rep = is_flat(builtin_connection("abelian-area(1.5)"), samples=5, tol=1e-6)
    assert not rep.flat
    assert rep.max_norm == pytest.approx(1.5 * np.sqrt(2.0), rel=1e-9)

    rep = is_flat(builtin_connection("pure-gauge"), samples=5, tol=1e-8)
    assert rep.flat


def test_builtin_flat_so2_coefficients_vanish():
    conn = builtin_connection("flat-so2")
    X = np.random.default_rng(1).uniform(-2.0, 2.0, (50, 2))
    for mu in range(2):
        assert np.max(np.abs(conn.charts[0].coefficients[mu].value(X))) == 0.0


@pytest.mark.parametrize(
    "name",
    ["flat-so2", "abelian-area(1.5)", "constant-so3", "levi-civita-s2-stereo",
     "levi-civita-s2-twochart", "pure-gauge"],
)
def test_builtin_coefficients_respect_algebra(name):
    """Skew-symmetry of every coefficient at 100 random domain points."""
    conn = builtin_connection(name)
    rng = np.random.default_rng(55)
    for chart in conn.charts:
        X = rng.uniform(chart.lo, chart.hi, (100, chart.dim))
        for mu in range(chart.dim):
            vals = chart.coefficients[mu].value(X)
            assert np.max(np.abs(vals + np.transpose(vals, (0, 2, 1)))) < 1e-12


def test_builtin_twochart_passes_overlap_check():
    conn = builtin_connection("levi-civita-s2-twochart")
    assert len(conn.charts) == 2
    assert len(conn.transitions) == 2
    mapped = conn.map_point(ChartPoint(0, [2.0, 0.0]), 1)
    assert np.allclose(mapped.coords, [0.5, 0.0])


def test_unknown_builtin():
    with pytest.raises(ValidationError):
        builtin_connection("no-such-connection")
    with pytest.raises(ValidationError):
        builtin_connection("abelian-area(x)")


def test_incompatible_transition_rejected():
    """A transition whose gauge ignores the gauge law must be refused."""
    a1, a2 = lit(0.0), lit(0.0)
    x1, x2 = var(0, 2), var(1, 2)
    r2 = x1**2 + x2**2
    chart0 = ChartSpec(0, 2, [-4, -4], [4, 4],
                       (ExprMatrixFunction([[lit(0.0), lit(0.0)], [lit(0.0), lit(0.0)]], 2),) * 2)
    chart1 = ChartSpec(1, 2, [-4, -4], [4, 4],
                       (ExprMatrixFunction([[lit(0.0), x1], [lit(-1.0) * x1, lit(0.0)]], 2),) * 2)
    gauge = ExprMatrixFunction([[lit(1.0), lit(0.0)], [lit(0.0), lit(1.0)]], 2)
    tr = Transition(0, 1, (x1 / r2, lit(-1.0) * x2 / r2), gauge)
    with pytest.raises(ValidationError):
        ConnectionForm(SO2, (chart0, chart1), (tr,))
