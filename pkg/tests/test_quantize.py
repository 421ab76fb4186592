import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiclassical.errors import CapExceeded, SingularMap
from semiclassical.geometry import LinearMap, MetricSpace
from semiclassical.grid import GridSpec, SampledFunction
from semiclassical.quantize import (
    QuantizedOperator,
    SymplecticLinearMap,
    apply_op_phi,
    bergman_matrix_closed_form,
    functoriality_residual,
    gauge_change_factor,
    gauge_change_report,
    lifted_truncation_residual,
    metaplectic_correction,
    metaplectic_factorization_check,
    op_phi,
    op_phi_via_bargmann,
    op_tilde,
    op_tilde_apply,
)
from semiclassical.wavepacket import PhaseGrid, bergman_kernel


def rotation(t):
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


@pytest.fixture(scope="module")
def small_pg():
    return PhaseGrid.box(MetricSpace.euclidean(1), 6.0, 0.4)


@pytest.fixture(scope="module")
def wide_pg():
    return PhaseGrid.box(MetricSpace.euclidean(1), 9.0, 0.4)


def test_upsilon_values():
    assert metaplectic_correction(LinearMap.on(np.eye(2))) == pytest.approx(1.0)
    assert metaplectic_correction(LinearMap.on([[2.0]])) == pytest.approx(np.sqrt(5 / 8), abs=1e-12)
    assert metaplectic_correction(LinearMap.on(rotation(0.7))) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(SingularMap):
        metaplectic_correction(LinearMap.on([[0.0]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_upsilon_inverse_identity(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, 2))
    if abs(np.linalg.det(a)) < 0.1:
        a += 2 * np.eye(2)
    phi = LinearMap.on(a)
    assert metaplectic_correction(phi.inverse()) == pytest.approx(phi.det * metaplectic_correction(phi), rel=1e-10)


def test_op_phi_identity_and_dilation():
    g = GridSpec.line(12.0, 128)
    assert np.allclose(op_phi(LinearMap.on([[1.0]]), g).matrix, np.eye(g.size))
    u = SampledFunction.from_callable(g, lambda x: np.exp(-0.5 * x**2))
    v = apply_op_phi(u, LinearMap.on([[2.0]]))
    x = g.points()[:, 0]
    assert np.max(np.abs(v.values - np.sqrt(2) * np.exp(-2 * x**2))) < 1e-6
    assert v.norm() == pytest.approx(u.norm(), abs=1e-7)


def test_op_phi_push_convention():
    g = GridSpec.line(12.0, 128)
    u = SampledFunction.from_callable(g, lambda x: np.exp(-0.5 * x**2))
    v = apply_op_phi(u, LinearMap.on([[2.0]]), convention="push_half_density", method="sinc")
    x = g.points()[:, 0]
    assert np.max(np.abs(v.values - np.exp(-0.5 * (x / 2) ** 2) / np.sqrt(2))) < 1e-6


def test_sandwich_identity():
    g = GridSpec.line(12.0, 128)
    pg = PhaseGrid.from_grid(g, xi_max=12.0, x_stride=2)
    u = SampledFunction.from_callable(g, lambda x: (1 + x) * np.exp(-0.5 * (x - 0.3) ** 2))
    phi = LinearMap.on([[1.3]])
    direct = apply_op_phi(u, phi, method="sinc")
    via = op_phi_via_bargmann(phi, u, pg)
    assert (via - direct).norm() / u.norm() < 1e-5


def test_op_tilde_identity_is_projector(wide_pg):
    pg = wide_pg
    v = bergman_kernel(pg.points(), np.array([0.5, -0.4]), gauge="radial")
    ident = SymplecticLinearMap.from_matrix(np.eye(2))
    out = op_tilde_apply(ident, v, pg)
    assert np.linalg.norm(out - v) / np.linalg.norm(v) < 1e-6


def test_op_tilde_rotation_commutes_with_projector(wide_pg):
    pg = wide_pg
    rot = SymplecticLinearMap.from_matrix(rotation(0.6))
    assert rot.correction == pytest.approx(1.0, abs=1e-12)
    m = op_tilde(rot, pg).matrix
    p = bergman_matrix_closed_form(pg, "radial")
    v = bergman_kernel(pg.points(), np.array([0.2, 0.3]), gauge="radial")
    assert np.linalg.norm(p @ (m @ v) - m @ (p @ v)) / np.linalg.norm(v) < 1e-6


def test_op_tilde_matrix_matches_apply(small_pg):
    pg = small_pg
    phi = SymplecticLinearMap.from_matrix(np.diag([1.2, 1 / 1.2]))
    v = bergman_kernel(pg.points(), np.array([0.0, 0.5]), gauge="radial")
    assert np.allclose(op_tilde(phi, pg).matrix @ v, op_tilde_apply(phi, v, pg), atol=1e-12)


def test_op_tilde_cap(small_pg):
    with pytest.raises(CapExceeded):
        op_tilde(SymplecticLinearMap.from_matrix(np.eye(2)), small_pg, cap=100)


def test_op_tilde_base_functoriality():
    pg = PhaseGrid.box(MetricSpace.euclidean(1), 10.0, 0.4)
    v = bergman_kernel(pg.points(), np.array([0.3, -0.2]), gauge="radial")
    a = SymplecticLinearMap.from_base(LinearMap.on([[1.2]]))
    b = SymplecticLinearMap.from_base(LinearMap.on([[0.85]]))
    assert functoriality_residual(a, b, v, pg)["residual"] < 1e-5


def test_op_tilde_general_pair_up_to_phase(small_pg):
    v = bergman_kernel(small_pg.points(), np.array([0.3, -0.2]), gauge="radial")
    a = SymplecticLinearMap.from_matrix(rotation(0.4) @ np.diag([1.2, 1 / 1.2]))
    b = SymplecticLinearMap.from_matrix(np.array([[1.0, 0.3], [0.0, 1.0]]))
    r = functoriality_residual(a, b, v, small_pg)
    assert r["projective_residual"] < 1e-3


def test_gauge_change():
    assert gauge_change_factor(MetricSpace.euclidean(1), MetricSpace.euclidean(1)) == pytest.approx(1.0)
    assert gauge_change_factor(MetricSpace([[1.0]]), MetricSpace([[4.0]])) == pytest.approx(np.sqrt(5 / 2))
    g1 = GridSpec.line(12.0, 160)
    g2 = GridSpec.line(12.0, 160, gram=4.0)
    pg = PhaseGrid.from_grid(g1, xi_max=None, x_stride=2)
    r = gauge_change_report(g1, g2, pg)
    assert r["idempotency_residual"] < 1e-5


def test_factorization_identity_and_hyperbolic():
    r = metaplectic_factorization_check(np.eye(2))
    assert r["residual"] < 1e-6
    r = metaplectic_factorization_check(np.diag([np.e, 1 / np.e]), with_norms=True)
    assert r["residual"] <= 1e-3
    for k in ("lhs_norm_ratio", "k_norm_ratio", "n_norm_ratio"):
        assert abs(r[k] - 1) < 1e-3


def test_lifted_truncation():
    g = GridSpec.line(12.0, 128)
    a = LinearMap.on([[1.3]])
    big = lifted_truncation_residual(a, 40.0, g, pairs=200)
    assert max(big["on_graph_max"], big["off_graph_max"]) < 1e-8
    r = lifted_truncation_residual(LinearMap.on([[1.0]]), 2.0, g, pairs=200)
    assert r["on_graph_max"] < 1e-8
    assert r["decay_ratio"] <= r["gaussian_bound"]


def test_operator_csv_roundtrip(tmp_path):
    m = np.arange(6).reshape(2, 3) * (1 + 0.5j)
    q = QuantizedOperator(m, 1.0)
    q.to_csv(tmp_path / "m.csv")
    assert np.array_equal(QuantizedOperator.from_csv(tmp_path / "m.csv").matrix, m)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.6, 1.6), st.floats(0.6, 1.6), st.floats(0, np.pi))
def test_op_phi_contravariant(s1, s2, t):
    g = GridSpec(MetricSpace.euclidean(2), 8.0, 64)
    a = rotation(t) @ np.diag([s1, 1.0])
    b = np.diag([1.0, s2]) @ rotation(-t)
    u = SampledFunction.from_callable(g, lambda y: np.exp(-0.5 * np.sum((y - 0.3) ** 2, axis=-1)))
    lhs = apply_op_phi(u, LinearMap.on(a @ b), method="sinc")
    rhs = apply_op_phi(apply_op_phi(u, LinearMap.on(a), method="sinc"), LinearMap.on(b), method="sinc")
    assert (lhs - rhs).norm() / u.norm() < 1e-5
