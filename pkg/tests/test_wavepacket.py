import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiclassical.geometry import MetricSpace
from semiclassical.grid import GridSpec, SampledFunction
from semiclassical.wavepacket import (
    PhaseGrid,
    WavePacketParams,
    bargmann,
    bargmann_adjoint,
    bargmann_adjoint_matrix,
    bargmann_matrix,
    bergman_kernel,
    bergman_kernel_numeric,
    bergman_projector_matrix,
    heisenberg_translate,
    wave_packet,
)


@pytest.fixture(scope="module")
def grids():
    g = GridSpec.line(12.0, 128)
    return g, PhaseGrid.from_grid(g, xi_max=12.0, x_stride=2)


def test_packet_value_at_origin():
    g = GridSpec.line(12.0, 128)
    u = wave_packet(WavePacketParams([0.0], [0.0]), g)
    i = np.argmin(np.abs(g.points()[:, 0]))
    assert abs(g.points()[i, 0]) < 1e-12
    assert u.values[i] == pytest.approx(np.pi**-0.25)


@settings(max_examples=20, deadline=None)
@given(st.floats(-4, 4), st.floats(-6, 6), st.sampled_from(["vertical", "radial"]))
def test_packet_normalized(x, xi, gauge):
    g = GridSpec.line(12.0, 128)
    assert wave_packet(WavePacketParams([x], [xi], gauge), g).norm() == pytest.approx(1.0, abs=1e-10)


def test_radial_vertical_ratio():
    g = GridSpec.line(12.0, 128)
    r = wave_packet(WavePacketParams([1.0], [2.0], "radial"), g).values
    v = wave_packet(WavePacketParams([1.0], [2.0], "vertical"), g).values
    mask = np.abs(v) > 1e-8
    assert np.allclose(r[mask] / v[mask], np.exp(1j))


def test_bargmann_of_ground_packet(grids):
    g, pg = grids
    u = wave_packet(WavePacketParams([0.0], [0.0]), g)
    bu = bargmann(u, pg)
    rho = pg.points()
    ref = np.exp(-np.sum(rho**2, axis=1) / 4)
    assert np.max(np.abs(np.abs(bu.values) - ref)) < 1e-6


def test_bargmann_zero_and_isometry(grids):
    g, pg = grids
    assert np.all(bargmann(SampledFunction(g, np.zeros(g.size)), pg).values == 0)
    rng = np.random.default_rng(3)
    x = g.points()[:, 0]
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    u = SampledFunction(g, sum(c[j] * x**j for j in range(4)) * np.exp(-0.5 * (x - 0.4) ** 2))
    assert bargmann(u, pg).norm() ** 2 == pytest.approx(u.norm() ** 2, rel=1e-6)


def test_resolution_of_identity_on_gaussian(grids):
    g, pg = grids
    u = SampledFunction.from_callable(g, lambda x: np.exp(-0.5 * x**2))
    back = bargmann_adjoint(bargmann(u, pg))
    assert (back - u).norm() / u.norm() < 1e-6
    assert np.all(bargmann_adjoint(SampledFunction(pg, np.zeros(pg.size))).values == 0)


def test_adjoint_matrix_is_weighted_transpose(grids):
    g, pg = grids
    b = bargmann_matrix(pg)
    bd = bargmann_adjoint_matrix(pg)
    scale = pg.weight / g.weight
    assert np.max(np.abs(bd - scale * b.conj().T)) < 1e-8 * np.max(np.abs(bd))


def test_bergman_kernel_values():
    rho = np.array([0.3, -1.2])
    assert bergman_kernel(rho, rho) == pytest.approx(1.0)
    assert bergman_kernel([1.0, 0.0], [0.0, 0.0]) == pytest.approx(np.exp(-0.25))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.sampled_from(["vertical", "radial"]))
def test_bergman_kernel_hermitian(v, gauge):
    a, b = np.array(v[:2]), np.array(v[2:])
    k1 = bergman_kernel(a, b, gauge=gauge)
    k2 = bergman_kernel(b, a, gauge=gauge)
    assert k1 == pytest.approx(np.conj(k2), abs=1e-14)


def test_bergman_numeric_matches_closed_form_scaled_metric():
    g = GridSpec.line(12.0, 160, gram=2.0)
    rng = np.random.default_rng(0)
    a = rng.uniform(-3, 3, (8, 2))
    b = rng.uniform(-3, 3, (8, 2))
    for gauge in ("vertical", "radial"):
        num = bergman_kernel_numeric(a, b, g, gauge)
        ref = bergman_kernel(a[:, None], b[None], g.space, gauge)
        assert np.max(np.abs(num - ref)) < 1e-7


def test_projector_fixes_image():
    g = GridSpec.line(8.0, 64)
    pg = PhaseGrid.from_grid(g, xi_max=8.0, x_stride=2)
    p = bergman_projector_matrix(pg)
    u = SampledFunction.from_callable(g, lambda x: (1 + x) * np.exp(-0.5 * x**2))
    bu = bargmann(u, pg).values
    assert np.linalg.norm(p @ bu - bu) / np.linalg.norm(bu) < 1e-6
    assert np.all(p @ np.zeros(pg.size) == 0)


def test_heisenberg_special_cases():
    g = GridSpec.line(12.0, 128)
    u = SampledFunction.from_callable(g, lambda x: np.exp(-0.5 * x**2))
    x = g.points()[:, 0]
    t = heisenberg_translate(u, 1.5, 0.0)
    assert np.max(np.abs(t.values - np.exp(-0.5 * (x - 1.5) ** 2))) < 1e-10
    m = heisenberg_translate(u, 0.0, 2.0)
    assert np.max(np.abs(m.values - np.exp(2j * x) * u.values)) < 1e-10


def test_heisenberg_warns_near_boundary():
    g = GridSpec.line(6.0, 64)
    u = SampledFunction.from_callable(g, lambda x: np.exp(-0.5 * x**2))
    with pytest.warns(UserWarning):
        heisenberg_translate(u, 4.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_heisenberg_composition(v):
    x, xi, x2, xi2 = v
    g = GridSpec.line(12.0, 128)
    u = SampledFunction.from_callable(g, lambda y: (1 + 0.5 * y) * np.exp(-0.5 * y**2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lhs = heisenberg_translate(heisenberg_translate(u, x2, xi2), x, xi)
        rhs = heisenberg_translate(u, x + x2, xi + xi2)
    assert (lhs - rhs * np.exp(1j * xi * x2)).norm() / u.norm() < 1e-7


def test_phase_grid_weight():
    g = GridSpec.line(12.0, 128)
    pg = PhaseGrid.from_grid(g, xi_max=None, x_stride=1)
    assert pg.weight == pytest.approx(g.spacing * (np.pi / 12.0) / (2 * np.pi))
