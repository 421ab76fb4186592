from fractions import Fraction
from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiclassical.errors import DegreeTooHigh, DegreeZero
from semiclassical.grid import GridSpec, SampledFunction
from semiclassical.polytaylor import (
    PolySpace,
    block_pullback,
    coefficient_projector,
    interior_product,
    multi_indices,
    oblique_taylor_projector,
    plateau_cutoff,
    pol_rank,
    poly_add,
    pullback_polynomial,
    symmetric_product,
    taylor_coefficients,
    taylor_functionals,
    taylor_matrix,
    taylor_project,
    taylor_tail,
    truncated_projector_residual,
    weyl_commutator,
)
from semiclassical.wavepacket import PhaseGrid, bargmann_adjoint_matrix, bargmann_matrix

F = Fraction


def test_pol_rank_values():
    assert pol_rank(2, 3) == 4
    assert all(pol_rank(1, k) == 1 for k in range(10))
    brute = [a for a in product(range(3), repeat=3) if sum(a) == 2]
    assert pol_rank(3, 2) == 6 == len(brute)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 7))
def test_pol_rank_formula(d, k):
    assert pol_rank(d, k) == comb(k + d - 1, d - 1) == len(multi_indices(d, k))


def test_graded_lex_order():
    assert multi_indices(2, 2) == [(2, 0), (1, 1), (0, 2)]


def test_polyspace_roundtrip():
    sp = PolySpace(2, 3)
    p = {(3, 0): F(1, 2), (1, 2): F(-3)}
    assert sp.from_vector(sp.to_vector(p, exact=True)) == p


def test_coefficient_projectors_exact():
    for d in (1, 2, 3):
        kmax = 6 if d < 3 else 4
        ts = [coefficient_projector(d, k, kmax) for k in range(kmax + 1)]
        for i, a in enumerate(ts):
            for j, b in enumerate(ts):
                expected = a if i == j else a * 0
                assert np.all(a.dot(b) == expected)


def test_pullback_commutes_with_projectors():
    a = np.array([[F(2), F(1)], [F(-1), F(3)]], dtype=object)
    pb = block_pullback(a, 4)
    for k in range(5):
        t = coefficient_projector(2, k, 4)
        assert np.all(pb.dot(t) == t.dot(pb))


def test_pullback_polynomial():
    # (x + 2y)^2 under x -> x + 2y
    a = np.array([[F(1), F(2)], [F(0), F(1)]], dtype=object)
    p = pullback_polynomial({(2, 0): F(1)}, a)
    assert p == {(2, 0): 1, (1, 1): 4, (0, 2): 4}


@pytest.fixture(scope="module")
def fine_grid():
    return GridSpec.line(4.0, 512)


def test_t0_is_value_at_zero(fine_grid):
    u = SampledFunction.from_callable(fine_grid, lambda x: np.cos(x) + 0.3)
    c, v = taylor_project(u, 0, window=0.25)
    assert c.coeffs[(0,)] == pytest.approx(1.3, abs=1e-8)
    assert np.allclose(v.values, 1.3, atol=1e-8)


def test_sin_linear_coefficient(fine_grid):
    u = SampledFunction.from_callable(fine_grid, np.sin)
    c, _ = taylor_project(u, 1, window=0.25)
    assert abs(c.coeffs[(1,)] - 1) < 1e-8


def test_monomial_is_fixed():
    g = GridSpec.line(4.0, 256)
    for k in range(5):
        u = SampledFunction.from_callable(g, lambda x: x**k)
        c, v = taylor_project(u, k)
        assert c.coeffs == pytest.approx({(k,): 1.0}, abs=1e-8)


def test_tail_of_polynomial_vanishes():
    g = GridSpec.line(4.0, 256)
    u = SampledFunction.from_callable(g, lambda x: 1 - 2 * x + 0.5 * x**2)
    t = taylor_tail(u, 2)
    tc = taylor_coefficients(t, 2)
    assert max(abs(c) for c in tc.coeffs.values()) < 1e-8


def test_tail_of_exponential():
    g = GridSpec.line(4.0, 256)
    u = SampledFunction.from_callable(g, np.exp)
    t = taylor_tail(u, 1, window=0.5)
    # value and slope through the same functionals that built the tail
    low = taylor_coefficients(t, 1, window=0.5)
    assert abs(low.coeffs[(0,)]) < 1e-12 and abs(low.coeffs[(1,)]) < 1e-12
    tc = taylor_coefficients(t, 2, window=0.5)
    assert abs(tc.coeffs[(2,)] - 0.5) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_tail_linear(a, b):
    g = GridSpec.line(4.0, 128)
    u = SampledFunction.from_callable(g, np.sin)
    v = SampledFunction.from_callable(g, lambda x: np.exp(-(x**2)))
    lhs = taylor_tail(u * a + v * b, 1)
    rhs = taylor_tail(u, 1) * a + taylor_tail(v, 1) * b
    assert np.max(np.abs(lhs.values - rhs.values)) < 1e-10 * (1 + abs(a) + abs(b))


def test_taylor_matrix_is_projector():
    g = GridSpec.line(4.0, 128)
    t = taylor_matrix(g, range(3))
    assert np.max(np.abs(t @ t - t)) < 1e-8 * np.max(np.abs(t))


def test_degree_limits():
    g = GridSpec.line(4.0, 64)
    with pytest.raises(DegreeTooHigh):
        taylor_functionals(g, 9)
    with pytest.raises(DegreeTooHigh):
        taylor_functionals(g, 6, window=0.1)


@pytest.fixture(scope="module")
def residual_pg():
    return PhaseGrid.from_grid(GridSpec.line(8.0, 64), xi_max=None, x_stride=1)


def test_truncated_residual_decay(residual_pg):
    norms = [truncated_projector_residual(0, 0, s, residual_pg)["norm"] for s in (3.0, 6.0, 8.0)]
    assert norms[0] / norms[1] >= 10
    assert norms[2] < 1e-6
    assert norms[0] > norms[1] > norms[2]


def test_truncated_residual_box_sized_sigma(residual_pg):
    assert truncated_projector_residual(1, 1, 30.0, residual_pg)["norm"] < 1e-6


@pytest.fixture(scope="module")
def oblique_pg():
    return PhaseGrid.from_grid(GridSpec.line(12.0, 96), xi_max=None, x_stride=2)


def test_oblique_identity_aligner(oblique_pg):
    pg = oblique_pg
    g = pg.grid
    r = oblique_taylor_projector([1.0, 0.0], [0.0, 1.0], 1, pg)
    assert np.allclose(r["aligner"], np.eye(2))
    assert r["idempotency"] < 1e-6 and r["rank"] == 1
    # B T_1 B^dagger with the same localized monomial and tapered functional
    alphas, rows = taylor_functionals(g, 1, taper="gaussian")
    x = g.points()[:, 0]
    mono = plateau_cutoff(g.points(), 0.25 * g.half_width, 0.125 * g.half_width) * x
    c = rows[1] / (rows[1] @ mono)
    b = bargmann_matrix(pg, gauge="radial")
    bd = bargmann_adjoint_matrix(pg, gauge="radial")
    v = np.exp(-0.1 * np.sum(pg.points() ** 2, axis=1)) * (1 + pg.points()[:, 0])
    ref = b @ (mono * (c @ (bd @ v)))
    got = r["left"] @ (r["right"].conj().T @ v)
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-6


@pytest.mark.parametrize("k", [0, 1, 2])
def test_oblique_random_pair(oblique_pg, k):
    rng = np.random.default_rng(k)
    e2 = [rng.uniform(-1, 1), 1.0]
    r = oblique_taylor_projector([1.0, 0.0], e2, k, oblique_pg)
    assert r["idempotency"] < 1e-4
    assert r["rank"] == pol_rank(1, k)


def test_interior_product_examples():
    assert interior_product({(4,): F(1)}, [F(1)]) == {(3,): 4}
    assert interior_product({(1, 1): F(1)}, [F(1), F(0)]) == {(0, 1): 1}
    with pytest.raises(DegreeZero):
        interior_product({(0,): F(1)}, [F(1)])


def test_symmetric_product_examples():
    assert symmetric_product({(0, 0): F(1)}, [F(1), F(0)]) == {(1, 0): 1}
    assert symmetric_product({(3, 0): F(1)}, [F(1), F(0)]) == {(4, 0): 1}


@settings(max_examples=20, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=6), min_size=6, max_size=6))
def test_symmetric_product_bilinear(c):
    p = {(1, 0): c[0], (0, 1): c[1]}
    q = {(2, 0): c[2]}
    u, v = [c[3], c[4]], [c[5], F(1)]
    lhs = symmetric_product(poly_add(p, q), u)
    assert lhs == poly_add(symmetric_product(p, u), symmetric_product(q, u))
    uv = [a + b for a, b in zip(u, v)]
    assert symmetric_product(p, uv) == poly_add(symmetric_product(p, u), symmetric_product(p, v))


def test_monomial_commutator_d1():
    for k in range(6):
        p = {(k,): F(1)}
        first = interior_product(symmetric_product(p, [F(1)]), [F(1)])
        second = symmetric_product(interior_product(p, [F(1)]), [F(1)]) if k else {}
        diff = poly_add(first, {a: -c for a, c in second.items()})
        assert diff == p


def test_weyl_commutator_unit_pairing():
    da = [[0, 1], [-1, 0]]
    for k in range(5):
        r = weyl_commutator([1, 0], [0, 1], 1, da, k)
        assert r["scalar"] == 1 and r["exact"]


def test_weyl_commutator_parallel_vectors():
    r = weyl_commutator([2, 1], [4, 2], F(3, 2), [[0, 1], [-1, 0]], 3)
    assert r["scalar"] == 0 and r["exact"]
    assert all(x == 0 for x in r["matrix"].ravel())


def test_weyl_commutator_rejects_symmetric_da():
    with pytest.raises(ValueError):
        weyl_commutator([1, 0], [0, 1], 1, [[0, 1], [1, 0]], 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 5), st.data())
def test_weyl_commutator_random(d, k, data):
    frac = st.fractions(-9, 9, max_denominator=5)
    up = [[data.draw(frac) for _ in range(d)] for _ in range(d)]
    da = [[up[i][j] - up[j][i] for j in range(d)] for i in range(d)]
    s = [data.draw(frac) for _ in range(d)]
    u = [data.draw(frac) for _ in range(d)]
    r = weyl_commutator(s, u, data.draw(frac), da, k)
    assert r["exact"]
