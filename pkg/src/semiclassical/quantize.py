"""Metaplectic correction, quantized linear maps and the K + N factorization.

For ``phi: (E2, g2) -> (E1, g1)`` (a :class:`~semiclassical.geometry.LinearMap`
with ``domain = E2`` and ``codomain = E1``) the correction is

    Upsilon(phi) = det(1/2 (Id + (phi^{-1})^dagger phi^{-1}))^{1/2},

where the adjoint uses both metrics. Operators on phase space are built from
closed-form Bergman kernels plus quadrature: the kernel of
``Phi^{-o} P`` is ``P(Phi^{-1} a, rho)``, so no interpolation is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, DimMismatch, GridMismatch, SingularMap
from .geometry import (
    LinearMap,
    MetricSpace,
    SymplecticSpace,
    canonical_phase_space,
    metaplectic_split,
)
from .grid import GridSpec, SampledFunction, compose_with_linear, pullback_matrix
from .wavepacket import (
    DEFAULT_MATRIX_CAP,
    PhaseGrid,
    bargmann_adjoint_matrix,
    bargmann_matrix,
    bergman_kernel,
    packet_values,
)

CONVENTIONS = ("pullback", "push_half_density")


def metaplectic_correction(phi: LinearMap) -> float:
    """``Upsilon(phi)`` for a map from ``phi.domain`` to ``phi.codomain``.

    Examples
    --------
    >>> round(metaplectic_correction(LinearMap.on([[2.0]])), 5)
    0.79057

    Raises
    ------
    SingularMap
        If ``phi`` is not invertible.
    """
    phi.check_invertible()
    a_inv = np.linalg.inv(phi.matrix)
    g_dom, g_cod = phi.domain.gram, phi.codomain.gram
    m = np.linalg.solve(g_cod, a_inv.T @ g_dom @ a_inv)
    val = np.linalg.det(0.5 * (np.eye(m.shape[0]) + m))
    return float(np.sqrt(val.real))


@dataclass(frozen=True)
class SymplecticLinearMap:
    """Linear symplectic map of a phase space.

    ``capital_phi`` acts on ``space`` (with its form and metric). When built
    from a base map ``phi`` it equals ``phi^{-1} + phi^*``.
    """

    capital_phi: np.ndarray
    space: SymplecticSpace
    phi: LinearMap | None = None
    residual: float = 0.0

    @classmethod
    def from_base(cls, phi: LinearMap) -> "SymplecticLinearMap":
        big = phi.induced_phase_map()
        space = canonical_phase_space(phi.domain)
        return cls._checked(big.matrix, space, phi)

    @classmethod
    def from_matrix(cls, matrix, space: SymplecticSpace | None = None, tol: float = 1e-10) -> "SymplecticLinearMap":
        m = np.asarray(matrix, dtype=float)
        if space is None:
            space = canonical_phase_space(MetricSpace.euclidean(m.shape[0] // 2))
        return cls._checked(m, space, None, tol)

    @classmethod
    def _checked(cls, m, space, phi, tol: float = 1e-10) -> "SymplecticLinearMap":
        if m.shape != (space.dim, space.dim):
            raise DimMismatch("map does not act on the given space")
        if abs(np.linalg.det(m)) < 1e-12:
            raise SingularMap("symplectic map must be invertible")
        res = float(np.max(np.abs(m.T @ space.omega @ m - space.omega)))
        scale = max(1.0, float(np.max(np.abs(m))) ** 2)
        if res > tol * scale:
            raise ValueError(f"matrix is not symplectic (residual {res:.3e})")
        m = m.copy()
        m.setflags(write=False)
        return cls(m, space, phi, res)

    def as_linear_map(self) -> LinearMap:
        sp = self.space.metric_space
        return LinearMap(sp, sp, self.capital_phi)

    @property
    def correction(self) -> float:
        return metaplectic_correction(self.as_linear_map())

    def compose(self, other: "SymplecticLinearMap") -> "SymplecticLinearMap":
        """``self o other``."""
        return SymplecticLinearMap(self.capital_phi @ other.capital_phi, self.space)

    def inverse(self) -> "SymplecticLinearMap":
        return SymplecticLinearMap(np.linalg.inv(self.capital_phi), self.space)


@dataclass(frozen=True)
class QuantizedOperator:
    """Dense operator with the correction factor and convention it used."""

    matrix: np.ndarray
    correction: float
    convention: str = "pullback"
    meta: dict = field(default_factory=dict)

    def apply(self, values) -> np.ndarray:
        return self.matrix @ np.asarray(values)

    def to_csv(self, path) -> None:
        """Write the dense matrix as ``i, j, re, im`` rows."""
        m = np.asarray(self.matrix)
        i, j = np.indices(m.shape)
        data = np.column_stack([i.ravel(), j.ravel(), m.real.ravel(), m.imag.ravel()])
        np.savetxt(path, data, delimiter=",", header="i,j,re,im", comments="", fmt=["%d", "%d", "%.17g", "%.17g"], encoding="utf-8")

    @classmethod
    def from_csv(cls, path, correction: float = 1.0, convention: str = "pullback") -> "QuantizedOperator":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        i, j = data[:, 0].astype(int), data[:, 1].astype(int)
        m = np.zeros((i.max() + 1, j.max() + 1), dtype=complex)
        m[i, j] = data[:, 2] + 1j * data[:, 3]
        return cls(m, correction, convention)


def _density_factor(phi: LinearMap, convention: str) -> tuple[float, LinearMap]:
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    phi.check_invertible()
    if convention == "pullback":
        return np.sqrt(phi.det), phi
    return 1.0 / np.sqrt(phi.det), phi.inverse()


def apply_op_phi(u: SampledFunction, phi: LinearMap, convention: str = "pullback", method: str = "spline") -> SampledFunction:
    """``|det phi|^{1/2} u o phi`` (or ``|det phi|^{-1/2} u o phi^{-1}``)."""
    c, m = _density_factor(phi, convention)
    v = compose_with_linear(u, m, method)
    return SampledFunction(v.grid, c * v.values, v.boundary_mass)


def op_phi(phi: LinearMap, grid: GridSpec, convention: str = "pullback", method: str = "spline") -> QuantizedOperator:
    """Matrix of ``Op(Phi) = |det phi|^{1/2} phi^o`` on ``grid``.

    Under ``push_half_density`` the operator is ``|det phi|^{-1/2} phi^{-o}``.

    Raises
    ------
    SingularMap
        If ``phi`` is singular.
    """
    c, m = _density_factor(phi, convention)
    mat = c * pullback_matrix(grid, m, method)
    big = phi.induced_phase_map()
    return QuantizedOperator(mat, metaplectic_correction(big), convention, {"method": method})


def op_phi_via_bargmann(phi: LinearMap, u: SampledFunction, pg: PhaseGrid, gauge: str = "vertical") -> SampledFunction:
    """``Upsilon(Phi)^{1/2} B^dagger Phi^{-o} B u`` computed with exact packets.

    ``(Phi^{-o} B u)(rho) = <phi_{Phi^{-1} rho}|u>``, which is evaluated by
    quadrature, so this reproduces ``Op(Phi) u`` without interpolation.
    """
    grid = u.grid
    big = phi.induced_phase_map()
    rho = pg.points()
    pre = rho @ np.linalg.inv(big.matrix).T
    bu = (np.conj(packet_values(pre, grid.points(), grid.space, gauge)) * grid.weight) @ u.values
    out = bargmann_adjoint_matrix(pg, grid, gauge) @ bu
    return SampledFunction(grid, np.sqrt(metaplectic_correction(big)) * out)


def radial_kernel(a, b, omega) -> np.ndarray:
    """``exp(-i/2 Omega(a, b) - |a - b|^2 / 4)`` for all pairs of rows (unit metric)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    om = np.einsum("mi,ij,nj->mn", a, omega, b)
    d2 = np.sum(a**2, 1)[:, None] + np.sum(b**2, 1)[None, :] - 2 * a @ b.T
    return np.exp(-0.5j * om - 0.25 * d2)


def _kernel(a, b, space: SymplecticSpace, gauge: str) -> np.ndarray:
    n = space.dim // 2
    if gauge == "radial":
        if np.allclose(space.metric, np.eye(space.dim)):
            return radial_kernel(a, b, space.omega)
    return bergman_kernel(np.asarray(a)[:, None, :], np.asarray(b)[None, :, :], MetricSpace(space.metric[:n, :n]), gauge)


def op_tilde(
    phi: SymplecticLinearMap,
    pg: PhaseGrid,
    quad: PhaseGrid | None = None,
    gauge: str = "radial",
    cap: int = DEFAULT_MATRIX_CAP,
) -> QuantizedOperator:
    """Matrix of ``Op~(Phi) = Upsilon(Phi)^{1/2} P Phi^{-o} P`` on ``pg``.

    Entry ``(a, b)`` is ``Upsilon^{1/2} sum_c P(a, c) P(Phi^{-1} c, b) w_c w_b``
    with ``c`` running over ``quad`` (default ``pg``), so the matrix acts on
    sampled phase functions by plain matrix-vector products. The radial
    gauge is the default because its kernel is invariant under every linear
    symplectic map; the vertical gauge is only covariant under maps of the
    form ``phi^{-1} + phi^*``.

    Raises
    ------
    CapExceeded
        If ``pg`` exceeds ``cap`` points.
    """
    if pg.size > cap:
        raise CapExceeded(f"{pg.size} phase points exceeds matrix cap {cap}")
    quad = pg if quad is None else quad
    s = pg.points()
    c = quad.points()
    space = phi.space
    pre = c @ np.linalg.inv(phi.capital_phi).T
    left = _kernel(s, c, space, gauge) * quad.weight
    right = _kernel(pre, s, space, gauge) * pg.weight
    ups = phi.correction
    return QuantizedOperator(np.sqrt(ups) * left @ right, ups, "pullback", {"gauge": gauge})


def op_tilde_apply(
    phi: SymplecticLinearMap,
    values,
    pg: PhaseGrid,
    quad: PhaseGrid | None = None,
    gauge: str = "radial",
    chunk: int = 1024,
) -> np.ndarray:
    """Apply ``Op~(Phi)`` to samples on ``pg`` without forming the matrix.

    ``values`` may carry extra trailing columns, which are mapped
    independently. Kernel blocks are generated ``chunk`` rows at a time, so memory stays
    ``O(chunk * max(len(pg), len(quad)))``.
    """
    quad = pg if quad is None else quad
    s = pg.points()
    c = quad.points()
    v = np.asarray(values, dtype=complex)
    pre = c @ np.linalg.inv(phi.capital_phi).T
    mid = np.empty((len(c),) + v.shape[1:], dtype=complex)
    for i in range(0, len(c), chunk):
        mid[i : i + chunk] = _kernel(pre[i : i + chunk], s, phi.space, gauge) @ v * pg.weight
    out = np.empty((len(s),) + v.shape[1:], dtype=complex)
    for i in range(0, len(s), chunk):
        out[i : i + chunk] = _kernel(s[i : i + chunk], c, phi.space, gauge) @ mid * quad.weight
    return np.sqrt(phi.correction) * out


def functoriality_residual(
    a: SymplecticLinearMap,
    b: SymplecticLinearMap,
    values,
    pg: PhaseGrid,
    quad: PhaseGrid | None = None,
) -> dict:
    """Compare ``Op~(A B) v`` with ``Op~(A) Op~(B) v``.

    With ``Phi^{-o}`` acting as a push-forward the composition law is
    covariant. For general symplectic pairs the two sides agree up to a
    unimodular constant (the metaplectic cocycle); it is 1 for maps of the
    form ``phi^{-1} + phi^*``. Both the raw residual and the residual after
    removing the best unimodular phase are returned.
    """
    ab = a.compose(b)
    x = op_tilde_apply(ab, values, pg, quad)
    y = op_tilde_apply(a, op_tilde_apply(b, values, pg, quad), pg, quad)
    c = np.vdot(x, y) / np.vdot(x, x)
    phase = c / abs(c)
    nx = np.linalg.norm(x)
    return {
        "residual": float(np.linalg.norm(y - x) / nx),
        "projective_residual": float(np.linalg.norm(y - phase * x) / nx),
        "phase": float(np.angle(phase)),
    }


def bergman_matrix_closed_form(pg: PhaseGrid, gauge: str = "vertical", cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    """Closed-form ``P`` matrix (kernel times quadrature weight) on ``pg``."""
    if pg.size > cap:
        raise CapExceeded(f"{pg.size} phase points exceeds matrix cap {cap}")
    s = pg.points()
    sp = canonical_phase_space(pg.space)
    return _kernel(s, s, sp, gauge) * pg.weight


def gauge_change_factor(g1: MetricSpace, g2: MetricSpace) -> float:
    """``Upsilon_{g2,g1} = prod_j ((1 + I_j) / 2)^{1/2}``.

    ``I_j`` are the eigenvalues of ``g2`` relative to ``g1``.

    Raises
    ------
    DimMismatch
        If the metrics have different dimensions.
    """
    if g1.dim != g2.dim:
        raise DimMismatch("metrics must have the same dimension")
    moments = np.linalg.eigvals(np.linalg.solve(g1.gram, g2.gram)).real
    return float(np.prod(np.sqrt((1 + moments) / 2)))


def gauge_change_report(grid1: GridSpec, grid2: GridSpec, pg: PhaseGrid, cap: int = DEFAULT_MATRIX_CAP) -> dict:
    """Check ``Id = Upsilon B_{g2}^dagger B_{g1}`` and idempotency of ``P_{g1,g2}``.

    ``grid1`` and ``grid2`` share coordinates but carry the metrics ``g1``
    and ``g2``. The cross projector ``Upsilon B_{g1} B_{g2}^dagger`` is
    tested on a packet vector in ``Im(B_{g1})``.
    """
    if grid1.dim != grid2.dim:
        raise DimMismatch("grids must have the same dimension")
    if not np.allclose(grid1.points(), grid2.points()):
        raise GridMismatch("grids must share coordinates")
    ups = gauge_change_factor(grid1.space, grid2.space)
    rho = pg.points()
    b1 = np.conj(packet_values(rho, grid1.points(), grid1.space)) * grid1.weight
    b2d = packet_values(rho, grid2.points(), grid2.space).T * pg.weight
    ident = ups * (b2d @ b1)
    y = grid1.points()
    u = packet_values(np.zeros((1, 2 * grid1.dim)), y, grid1.space)[0]
    id_res = float(np.linalg.norm(ident @ u - u) / np.linalg.norm(u))
    v = b1 @ u
    pv = ups * (b1 @ (b2d @ v))
    ppv = ups * (b1 @ (b2d @ pv))
    return {
        "upsilon": ups,
        "identity_residual": id_res,
        "projector_fixes_image": float(np.linalg.norm(pv - v) / np.linalg.norm(v)),
        "idempotency_residual": float(np.linalg.norm(ppv - pv) / np.linalg.norm(pv)),
    }


def _square_points(half_width: float, spacing: float) -> tuple[np.ndarray, float]:
    m = int(np.floor(half_width / spacing + 1e-9))
    ax = spacing * np.arange(-m, m + 1)
    g = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    return g, spacing**2


def _factor_matrix(samples, omega, phi_x, ups, quad_spacing, quad_half_width) -> np.ndarray:
    c, w = _square_points(quad_half_width, quad_spacing)
    pre = c @ np.linalg.inv(phi_x).T
    return np.sqrt(ups) * (radial_kernel(samples, c, omega) * (w / (2 * np.pi))) @ radial_kernel(pre, samples, omega)


def _kernel_apply(a, b, omega, v, chunk: int = 1024) -> np.ndarray:
    """``radial_kernel(a, b, omega) @ v`` without forming the full matrix."""
    out = np.empty(len(a), dtype=complex)
    for i in range(0, len(a), chunk):
        out[i : i + chunk] = radial_kernel(a[i : i + chunk], b, omega) @ v
    return out


def _factor_norm(omega, phi_x, ups, quad_spacing, quad_half_width) -> float:
    """``|Op~ v| / |v|`` for ``v = P(., 0)`` on the quadrature grid."""
    c, w = _square_points(quad_half_width, quad_spacing)
    v = radial_kernel(c, np.zeros((1, 2)), omega)[:, 0]
    pre = c @ np.linalg.inv(phi_x).T
    inner = _kernel_apply(pre, c, omega, v) * (w / (2 * np.pi))
    ov = np.sqrt(ups) * _kernel_apply(c, c, omega, inner) * (w / (2 * np.pi))
    return float(np.linalg.norm(ov) / np.linalg.norm(v))


def metaplectic_factorization_check(
    phi,
    sample_half_width: float = 2.0,
    samples_per_axis: int = 5,
    quad_spacing: float = 0.3,
    quad_half_width: float = 12.0,
    with_norms: bool = False,
    cap: int = DEFAULT_MATRIX_CAP,
) -> dict:
    """Compare ``B_F Phi^o B_F^dagger`` with ``Op~(Phi_K) (x) Op~(Phi_N)``.

    ``F = R^2`` with canonical form and unit metric; ``phi`` is a 2x2
    symplectic matrix acting on ``F`` by pull-back. Both sides use radial
    gauge packets and are sampled on the product of two square grids (one on
    ``K``, one on ``N``, in orthonormal coordinates of the split). The
    left side integrates packets over an ``F`` grid and each right factor
    integrates Bergman kernels over a ``K`` (or ``N``) grid, both with
    spacing ``quad_spacing``.

    Returns
    -------
    dict
        ``residual`` (relative Frobenius), ``upsilon_k``, ``upsilon_n``,
        ``upsilon_phi`` and, if requested, unitarity ratios of each side.
    """
    phi = np.asarray(phi, dtype=float)
    f = canonical_phase_space(MetricSpace.euclidean(1))
    if phi.shape != (2, 2):
        raise DimMismatch("factorization check is implemented for F = R^2")
    big = SymplecticLinearMap.from_matrix(phi, f)
    split = metaplectic_split(f)
    parent = split.parent
    tilde = LinearMap.on(phi, f.metric_space).induced_phase_map().matrix
    kb, nb = split.k_basis, split.n_basis
    g2 = parent.metric
    phi_k = kb.T @ g2 @ tilde @ kb
    phi_n = nb.T @ g2 @ tilde @ nb
    om_k = kb.T @ parent.omega @ kb
    om_n = nb.T @ parent.omega @ nb
    ups_k = metaplectic_correction(LinearMap.on(phi_k))
    ups_n = metaplectic_correction(LinearMap.on(phi_n))

    ax = np.linspace(-sample_half_width, sample_half_width, samples_per_axis)
    s = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    m = len(s)
    if m * m > cap:
        raise CapExceeded(f"{m * m} doubled-space samples exceeds cap {cap}")
    rho = np.repeat(s, m, 0) @ kb.T + np.tile(s, (m, 1)) @ nb.T

    z, wz = _square_points(quad_half_width, quad_spacing)
    space_f = MetricSpace.euclidean(2)
    left_pk = packet_values(rho, z, space_f, "radial")
    right_pk = packet_values(rho, z @ phi.T, space_f, "radial")
    lhs = (np.conj(left_pk) * wz) @ right_pk.T

    op_k = _factor_matrix(s, om_k, phi_k, ups_k, quad_spacing, quad_half_width)
    op_n = _factor_matrix(s, om_n, phi_n, ups_n, quad_spacing, quad_half_width)
    rhs = np.kron(op_k, op_n)
    out = {
        "residual": float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)),
        "upsilon_phi": big.correction,
        "upsilon_k": ups_k,
        "upsilon_n": ups_n,
        "quad_spacing": quad_spacing,
        "samples": int(m * m),
    }
    if with_norms:
        ref = packet_values(np.zeros((1, 4)), z, space_f, "radial")[0]
        moved = packet_values(np.zeros((1, 4)), z @ phi.T, space_f, "radial")[0]
        out["lhs_norm_ratio"] = float(np.sqrt(np.sum(np.abs(moved) ** 2) / np.sum(np.abs(ref) ** 2)))
        out["k_norm_ratio"] = _factor_norm(om_k, phi_k, ups_k, quad_spacing, quad_half_width)
        out["n_norm_ratio"] = _factor_norm(om_n, phi_n, ups_n, quad_spacing, quad_half_width)
    return out


def factorization_refinement(phi, spacings=(0.35, 0.3, 0.25, 0.2), **kw) -> list[dict]:
    """Run :func:`metaplectic_factorization_check` over a refinement ladder."""
    return [metaplectic_factorization_check(phi, quad_spacing=h, **kw) for h in spacings]


def lifted_truncation_residual(
    a: LinearMap,
    sigma: float,
    grid: GridSpec,
    pairs: int = 400,
    box: float = 6.0,
    seed: int = 0,
) -> dict:
    """Kernel of ``R = B A_H^o B_chi - B A^o B^dagger`` on a 1-D space.

    The first term has kernel
    ``<phi_0|A^o phi_delta> exp(-i <A^{-T} xi'|x - A x'>) chi_sigma(delta)``
    with ``delta = rho - A~^{-1} rho'``, the second ``<phi_rho'|A^o phi_rho>``.
    Both are evaluated by quadrature on ``grid`` for random pairs in the
    phase box ``[-box, box]^2``. On the graph region ``|delta| <= sigma``
    the difference must vanish; off it the kernel is minus the second term.

    Returns
    -------
    dict
        ``on_graph_max``, ``off_graph_max``, and the decay ratio of the
        largest off-graph kernel in ``[2 sigma, 2 sigma + 1]`` relative to
        ``[sigma, sigma + 1]`` (from an exact radial profile).
    """
    if grid.dim != 1 or a.matrix.shape != (1, 1):
        raise DimMismatch("lifted truncation residual is implemented in dimension 1")
    a.check_invertible()
    s = float(a.matrix[0, 0])
    y = grid.points()
    sp = grid.space
    rng = np.random.default_rng(seed)
    rp = rng.uniform(-box, box, (pairs, 2))
    rh = rng.uniform(-box, box, (pairs, 2))
    ainv_rp = np.stack([s * rp[:, 0], rp[:, 1] / s], 1)
    delta = rh - ainv_rp
    phi0 = packet_values(np.zeros((1, 2)), y, sp)[0]
    t1_core = (np.conj(phi0) * grid.weight) @ packet_values(delta, s * y, sp).T
    phase = np.exp(-1j * (rp[:, 1] / s) * (rh[:, 0] - s * rp[:, 0]))
    dist = np.sqrt(np.einsum("pi,ij,pj->p", delta, np.diag([sp.gram[0, 0], 1 / sp.gram[0, 0]]), delta))
    chi = (dist <= sigma).astype(float)
    term1 = t1_core * phase * chi
    term2 = np.sum(np.conj(packet_values(rp, y, sp)) * packet_values(rh, s * y, sp), axis=1) * grid.weight
    r = term1 - term2
    on = dist <= sigma
    ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)

    def ring_max(r0: float, r1: float) -> float:
        rad = np.linspace(r0, r1, 9)
        pts = np.array([[q * np.cos(t), q * np.sin(t)] for q in rad for t in ang])
        vals = (np.conj(phi0) * grid.weight) @ packet_values(pts, s * y, sp).T
        return float(np.max(np.abs(vals)))

    near = ring_max(sigma, sigma + 1)
    far = ring_max(2 * sigma, 2 * sigma + 1)
    return {
        "on_graph_max": float(np.max(np.abs(r[on]))) if on.any() else 0.0,
        "off_graph_max": float(np.max(np.abs(r[~on]))) if (~on).any() else 0.0,
        "on_graph_count": int(on.sum()),
        "ring_sigma": near,
        "ring_2sigma": far,
        "decay_ratio": far / near if near > 0 else 0.0,
        "gaussian_bound": float(np.exp(-(sigma**2) / 4)),
    }
