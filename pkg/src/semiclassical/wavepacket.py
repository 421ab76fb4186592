"""Gaussian wave packets, the Bargmann transform and Weyl-Heisenberg translations.

Packets in the vertical gauge are

    phi_{x,xi}(y) = pi^{-n/4} exp(i <xi|y - x>) exp(-|y - x|_g^2 / 2),

and the radial gauge multiplies by ``exp(i <xi|x> / 2)``. The Bargmann
transform is ``(B u)(rho) = <phi_rho|u>`` and its adjoint integrates against
``d x d xi / (2 pi)^n``. All brackets are conjugate-linear on the left.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, GridMismatch
from .geometry import MetricSpace
from .grid import GridSpec, SampledFunction, fourier, fourier_adjoint

GAUGES = ("vertical", "radial")
DEFAULT_MATRIX_CAP = 4096


def _check_gauge(gauge: str) -> str:
    if gauge not in GAUGES:
        raise ValueError(f"gauge must be one of {GAUGES}, got {gauge!r}")
    return gauge


@dataclass(frozen=True)
class WavePacketParams:
    """Center ``(x, xi)`` of a packet and its gauge."""

    x: np.ndarray
    xi: np.ndarray
    gauge: str = "vertical"

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if x.shape != xi.shape or not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("x and xi must be finite and of equal length")
        _check_gauge(self.gauge)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def rho(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi])


def packet_values(rho, y, space: MetricSpace, gauge: str = "vertical") -> np.ndarray:
    """Matrix ``phi_rho(y)`` for phase points ``rho`` (P, 2n) and points ``y`` (M, n)."""
    _check_gauge(gauge)
    n = space.dim
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1, n)
    x, xi = rho[:, :n], rho[:, n:]
    d = y[None, :, :] - x[:, None, :]
    q = np.einsum("pmi,ij,pmj->pm", d, space.gram, d)
    ph = np.einsum("pi,pmi->pm", xi, d)
    if gauge == "radial":
        ph = ph + 0.5 * np.sum(xi * x, axis=1)[:, None]
    return np.pi ** (-n / 4) * np.exp(1j * ph - 0.5 * q)


def wave_packet(p: WavePacketParams, grid: GridSpec) -> SampledFunction:
    """Sample the packet centered at ``p`` on ``grid``."""
    if p.x.size != grid.dim:
        raise GridMismatch("packet dimension does not match grid")
    if np.max(np.abs(p.x)) > 0.8 * grid.half_width:
        warnings.warn("packet center is close to the box boundary", stacklevel=2)
    vals = packet_values(p.rho[None, :], grid.points(), grid.space, p.gauge)[0]
    return SampledFunction(grid, vals)


@dataclass(frozen=True)
class PhaseGrid:
    """Product grid over ``E + E*`` with measure ``dx dxi / (2 pi)^n``.

    Parameters
    ----------
    space : MetricSpace
        The base space ``E``.
    x_axis, xi_axis : ndarray
        Uniformly spaced 1-D axes, shared by every coordinate direction.
    grid : GridSpec, optional
        The position grid this phase grid is paired with (for ``B`` and
        ``B^dagger``).
    cap : int
        Upper bound on the number of phase points.
    """

    space: MetricSpace
    x_axis: np.ndarray
    xi_axis: np.ndarray
    grid: GridSpec | None = None
    cap: int = 2**20

    def __post_init__(self):
        for name in ("x_axis", "xi_axis"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1 or a.size < 2:
                raise ValueError(f"{name} must be a 1-D array with at least two points")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.size > self.cap:
            raise CapExceeded(f"phase grid with {self.size} points exceeds cap {self.cap}")

    @classmethod
    def from_grid(
        cls,
        grid: GridSpec,
        xi_max: float | None = 12.0,
        x_stride: int = 2,
        x_margin: float = 0.0,
        cap: int = 2**20,
    ) -> "PhaseGrid":
        """Phase grid matched to a position grid.

        The x spacing is ``x_stride * h`` (centered on 0, covering
        ``[-L - x_margin, L + x_margin]``); the xi spacing is ``pi / L`` and
        ``|xi| <= xi_max`` (the full dual range when ``xi_max`` is None).
        """
        hx = x_stride * grid.spacing
        m = int(np.floor((grid.half_width + x_margin) / hx + 1e-9))
        x_axis = hx * np.arange(-m, m + 1)
        xi_axis = grid.dual().axis
        if xi_max is not None:
            xi_axis = xi_axis[np.abs(xi_axis) <= xi_max + 1e-12]
        return cls(grid.space, x_axis, xi_axis, grid, cap)

    @classmethod
    def box(cls, space: MetricSpace, half_width: float, spacing: float, cap: int = 2**20) -> "PhaseGrid":
        """Symmetric square phase box with equal spacing in x and xi."""
        m = int(np.floor(half_width / spacing + 1e-9))
        ax = spacing * np.arange(-m, m + 1)
        return cls(space, ax, ax.copy(), None, cap)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def shape(self) -> tuple[int, ...]:
        n = self.dim
        return (self.x_axis.size,) * n + (self.xi_axis.size,) * n

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def weight(self) -> float:
        hx = self.x_axis[1] - self.x_axis[0]
        hxi = self.xi_axis[1] - self.xi_axis[0]
        return float((hx * hxi / (2 * np.pi)) ** self.dim)

    def weights(self) -> np.ndarray:
        return np.full(self.size, self.weight)

    def points(self) -> np.ndarray:
        n = self.dim
        axes = np.meshgrid(*([self.x_axis] * n + [self.xi_axis] * n), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def phase_metric(self) -> np.ndarray:
        """Gram matrix of ``g + g^{-1}``."""
        g = self.space.gram
        n = self.dim
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = g
        out[n:, n:] = np.linalg.inv(g)
        return out

    def compatible(self, other) -> bool:
        return (
            isinstance(other, PhaseGrid)
            and self.x_axis.shape == other.x_axis.shape
            and self.xi_axis.shape == other.xi_axis.shape
            and np.allclose(self.x_axis, other.x_axis, rtol=0, atol=1e-14)
            and np.allclose(self.xi_axis, other.xi_axis, rtol=0, atol=1e-14)
            and np.allclose(self.space.gram, other.space.gram, rtol=0, atol=1e-14)
        )

    def to_dict(self) -> dict:
        return {
            "gram": self.space.gram.tolist(),
            "x_axis": [float(self.x_axis[0]), float(self.x_axis[-1]), int(self.x_axis.size)],
            "xi_axis": [float(self.xi_axis[0]), float(self.xi_axis[-1]), int(self.xi_axis.size)],
        }


def _paired_grid(pg: PhaseGrid, grid: GridSpec | None) -> GridSpec:
    g = grid if grid is not None else pg.grid
    if g is None:
        raise GridMismatch("phase grid has no paired position grid")
    if g.dim != pg.dim or not np.allclose(g.space.gram, pg.space.gram):
        raise GridMismatch("position grid and phase grid have different base spaces")
    return g


def bargmann_matrix(pg: PhaseGrid, grid: GridSpec | None = None, gauge: str = "vertical") -> np.ndarray:
    """Matrix of ``B``: entry ``conj(phi_rho(y_j)) w_j``, shape ``(P, N^d)``."""
    g = _paired_grid(pg, grid)
    return np.conj(packet_values(pg.points(), g.points(), g.space, gauge)) * g.weight


def bargmann_adjoint_matrix(pg: PhaseGrid, grid: GridSpec | None = None, gauge: str = "vertical") -> np.ndarray:
    """Matrix of ``B^dagger``: entry ``phi_rho(y_j) w_rho``, shape ``(N^d, P)``."""
    g = _paired_grid(pg, grid)
    return packet_values(pg.points(), g.points(), g.space, gauge).T * pg.weight


def bargmann(u: SampledFunction, pg: PhaseGrid, gauge: str = "vertical") -> SampledFunction:
    """Bargmann transform ``(B u)(rho) = <phi_rho|u>`` on the phase grid.

    Raises
    ------
    GridMismatch
        If ``u`` is not on the grid paired with ``pg``.
    """
    g = _paired_grid(pg, None)
    if not isinstance(u.grid, GridSpec) or not u.grid.compatible(g):
        raise GridMismatch("u is not on the phase grid's position grid")
    return SampledFunction(pg, bargmann_matrix(pg, g, gauge) @ u.values)


def bargmann_adjoint(v: SampledFunction, gauge: str = "vertical") -> SampledFunction:
    """``(B^dagger v)(y) = int phi_rho(y) v(rho) dx dxi / (2 pi)^n``."""
    pg = v.grid
    if not isinstance(pg, PhaseGrid):
        raise GridMismatch("bargmann_adjoint expects a function on a PhaseGrid")
    g = _paired_grid(pg, None)
    return SampledFunction(g, bargmann_adjoint_matrix(pg, g, gauge) @ v.values)


def bergman_kernel(rho_p, rho, space: MetricSpace | None = None, gauge: str = "vertical") -> np.ndarray:
    """Closed-form kernel ``<phi_rho'|phi_rho>`` of the Bergman projector.

    Vertical gauge: ``exp(i/2 <xi' + xi|x' - x> - |rho' - rho|^2 / 4)``;
    radial gauge: ``exp(-i/2 Omega(rho', rho) - |rho' - rho|^2 / 4)``, with
    the norm of ``g + g^{-1}``. Broadcasts over leading axes.
    """
    _check_gauge(gauge)
    rho_p = np.asarray(rho_p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    n = rho.shape[-1] // 2
    g = np.eye(n) if space is None else space.gram
    gi = np.linalg.inv(g)
    dx = rho_p[..., :n] - rho[..., :n]
    dxi = rho_p[..., n:] - rho[..., n:]
    q = np.einsum("...i,ij,...j->...", dx, g, dx) + np.einsum("...i,ij,...j->...", dxi, gi, dxi)
    if gauge == "vertical":
        ph = 0.5 * np.sum((rho_p[..., n:] + rho[..., n:]) * dx, axis=-1)
    else:
        om = np.sum(rho_p[..., n:] * rho[..., :n], axis=-1) - np.sum(rho[..., n:] * rho_p[..., :n], axis=-1)
        ph = -0.5 * om
    return np.exp(1j * ph - 0.25 * q)


def bergman_kernel_numeric(rho_p, rho, grid: GridSpec, gauge: str = "vertical") -> np.ndarray:
    """Quadrature value of ``<phi_rho'|phi_rho>`` on ``grid`` for all pairs."""
    y = grid.points()
    a = packet_values(rho_p, y, grid.space, gauge)
    b = packet_values(rho, y, grid.space, gauge)
    return (np.conj(a) * grid.weight) @ b.T


def bergman_projector_matrix(pg: PhaseGrid, gauge: str = "vertical", cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    """Dense matrix of ``P = B B^dagger`` acting on functions on ``pg``.

    Raises
    ------
    CapExceeded
        If ``pg`` has more than ``cap`` points.
    """
    if pg.size > cap:
        raise CapExceeded(f"{pg.size} phase points exceeds matrix cap {cap}")
    g = _paired_grid(pg, None)
    return bargmann_matrix(pg, g, gauge) @ bargmann_adjoint_matrix(pg, g, gauge)


def heisenberg_translate(u: SampledFunction, x, xi) -> SampledFunction:
    """Weyl-Heisenberg translation ``(T_{x,xi} u)(y) = exp(i <xi|y - x>) u(y - x)``.

    Realized as a modulation by ``exp(i <xi|y>)`` followed by an exact
    Fourier-multiplier shift by ``x``.
    """
    g = u.grid
    if not isinstance(g, GridSpec):
        raise GridMismatch("heisenberg_translate expects a position-space function")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.max(np.abs(x)) > 0.5 * g.half_width:
        warnings.warn("translation moves the support close to the box boundary", stacklevel=2)
    y = g.points()
    m = u.with_values(np.exp(1j * (y @ xi)) * u.values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v = fourier(m)
    k = v.grid.points()
    shifted = v.with_values(np.exp(-1j * (k @ x)) * v.values)
    return fourier_adjoint(shifted)
