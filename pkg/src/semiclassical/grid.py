"""Uniform quadrature grids, sampled functions and the unitary Fourier transform.

A :class:`GridSpec` samples a box ``[-L, L)^d`` of a metric space with
``N`` points per axis, ``x_j = -L + j h`` and ``h = 2L/N`` (so the origin is
the grid point ``j = N/2``). Quadrature weights are ``h^d sqrt(det g)``,
the density induced by ``g``. The dual grid carries
``xi_k = pi k / L`` for ``k`` in ``[-N/2, N/2)`` and weights
``(pi/L)^d / sqrt(det g)``. With these choices the discrete transform

    v_k = (2 pi)^{-d/2} sum_j exp(-i xi_k x_j) u_j w_j

is exactly unitary.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import CapExceeded, GridMismatch, SingularMap
from .geometry import LinearMap, MetricSpace

DEFAULT_CAP = 2**20


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over ``[-L, L)^d`` in coordinates of ``space``.

    Parameters
    ----------
    space : MetricSpace
        Dimension ``d`` (1 or 2) and metric.
    half_width : float
        ``L``.
    points_per_axis : int
        ``N``; must be even and at least 8.
    cap : int
        Upper bound on ``N**d``.
    """

    space: MetricSpace
    half_width: float
    points_per_axis: int
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        n = int(self.points_per_axis)
        if n < 8 or n % 2:
            raise ValueError("points_per_axis must be even and >= 8")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.space.dim > 2:
            raise ValueError("grids are limited to dimension <= 2")
        if n**self.space.dim > self.cap:
            raise CapExceeded(f"{n}**{self.space.dim} points exceeds cap {self.cap}")

    @classmethod
    def line(cls, half_width: float = 12.0, points: int = 128, gram: float = 1.0) -> "GridSpec":
        return cls(MetricSpace([[gram]]), float(half_width), int(points))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    def points(self) -> np.ndarray:
        """Grid points as an ``(N**d, d)`` array in C order."""
        axes = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    @property
    def weight(self) -> float:
        return self.spacing**self.dim * np.sqrt(self.space.det)

    def weights(self) -> np.ndarray:
        return np.full(self.size, self.weight)

    def dual(self) -> "DualGridSpec":
        return DualGridSpec(self)

    def compatible(self, other: "GridSpec") -> bool:
        return (
            self.points_per_axis == other.points_per_axis
            and np.isclose(self.half_width, other.half_width, rtol=0, atol=1e-14)
            and np.allclose(self.space.gram, other.space.gram, rtol=0, atol=1e-14)
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "gram": self.space.gram.tolist(),
            "half_width": self.half_width,
            "points_per_axis": self.points_per_axis,
        }


@dataclass(frozen=True)
class DualGridSpec:
    """Frequency grid ``xi_k = pi k / L``, ``k`` in ``[-N/2, N/2)``."""

    grid: GridSpec

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def spacing(self) -> float:
        return np.pi / self.grid.half_width

    @property
    def axis(self) -> np.ndarray:
        n = self.grid.points_per_axis
        return self.spacing * np.arange(-n // 2, n // 2)

    @property
    def nyquist(self) -> float:
        return np.pi * self.grid.points_per_axis / (2 * self.grid.half_width)

    @property
    def size(self) -> int:
        return self.grid.size

    def points(self) -> np.ndarray:
        axes = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    @property
    def weight(self) -> float:
        return self.spacing**self.dim / np.sqrt(self.grid.space.det)

    def weights(self) -> np.ndarray:
        return np.full(self.size, self.weight)

    def compatible(self, other) -> bool:
        return isinstance(other, DualGridSpec) and self.grid.compatible(other.grid)

    def to_dict(self) -> dict:
        d = self.grid.to_dict()
        d["dual"] = True
        return d


@dataclass(frozen=True)
class SampledFunction:
    """Values of a function on a grid (position or frequency).

    ``boundary_mass`` records the squared L2 mass an operation discarded at
    the box boundary (0 when nothing was cut).
    """

    grid: GridSpec | DualGridSpec
    values: np.ndarray
    boundary_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if v.size != self.grid.size:
            raise GridMismatch(f"expected {self.grid.size} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: GridSpec, func) -> "SampledFunction":
        pts = grid.points()
        return cls(grid, func(pts if grid.dim > 1 else pts[:, 0]))

    @property
    def quad_weights(self) -> np.ndarray:
        return self.grid.weights()

    def norm(self) -> float:
        return float(np.sqrt(np.real(inner_product(self, self))))

    def with_values(self, values, boundary_mass: float = 0.0) -> "SampledFunction":
        return SampledFunction(self.grid, values, boundary_mass)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "SampledFunction":
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def edge_mass(self, width: int = 1) -> float:
        """Squared L2 mass within ``width`` points of the box boundary."""
        g = self.grid.grid if isinstance(self.grid, DualGridSpec) else self.grid
        v = np.abs(self.values.reshape(g.shape)) ** 2
        mask = np.zeros(g.shape, dtype=bool)
        for ax in range(g.dim):
            idx = [slice(None)] * g.dim
            idx[ax] = slice(0, width)
            mask[tuple(idx)] = True
            idx[ax] = slice(g.points_per_axis - width, None)
            mask[tuple(idx)] = True
        return float(np.sum(v[mask]) * self.grid.weight)

    def to_csv(self, path) -> None:
        """Write ``coordinate(s), re, im`` rows plus a JSON header sidecar."""
        path = Path(path)
        pts = self.grid.points()
        cols = [f"x{i}" for i in range(pts.shape[1])] + ["re", "im"]
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for p, v in zip(pts, self.values):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])
        path.with_suffix(".json").write_text(json.dumps(self.grid.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
        g = GridSpec(MetricSpace(header["gram"]), header["half_width"], header["points_per_axis"])
        grid = g.dual() if header.get("dual") else g
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(grid, data[:, -2] + 1j * data[:, -1])


def _check_same(u: SampledFunction, v: SampledFunction) -> None:
    if type(u.grid) is not type(v.grid) or not u.grid.compatible(v.grid):
        raise GridMismatch("functions live on different grids")


def inner_product(u: SampledFunction, v: SampledFunction) -> complex:
    """``<u|v> = sum conj(u_i) v_i w_i`` (conjugate-linear in ``u``).

    Raises
    ------
    GridMismatch
        If the grids differ.
    """
    _check_same(u, v)
    return complex(np.vdot(u.values, v.values) * u.grid.weight)


def _signs(n: int, dim: int) -> np.ndarray:
    k = np.arange(-n // 2, n // 2)
    s = np.where(k % 2 == 0, 1.0, -1.0)
    out = s
    for _ in range(dim - 1):
        out = np.multiply.outer(out, s)
    return out


def _warn_boundary(u: SampledFunction, tol: float = 1e-12) -> None:
    total = max(np.sum(np.abs(u.values) ** 2) * u.grid.weight, 1e-300)
    if u.edge_mass() > tol * total:
        warnings.warn("function does not decay at the box boundary; transform is periodized", stacklevel=3)


def fourier(u: SampledFunction) -> SampledFunction:
    """Unitary Fourier transform onto the dual grid.

    Computes ``(2 pi)^{-d/2} sum_j exp(-i xi_k x_j) u_j w_j`` with a fast
    transform. Since ``x_0 = -L`` the phase ``exp(i pi k)`` is applied
    explicitly.
    """
    if not isinstance(u.grid, GridSpec):
        raise GridMismatch("fourier expects a position-space function")
    g = u.grid
    _warn_boundary(u)
    n, d = g.points_per_axis, g.dim
    arr = u.values.reshape(g.shape)
    spec = np.fft.fftshift(np.fft.fftn(arr), axes=tuple(range(d)))
    spec = spec * _signs(n, d) * g.weight * (2 * np.pi) ** (-d / 2)
    return SampledFunction(g.dual(), spec.ravel())


def fourier_adjoint(v: SampledFunction) -> SampledFunction:
    """Adjoint (= inverse) of :func:`fourier`."""
    if not isinstance(v.grid, DualGridSpec):
        raise GridMismatch("fourier_adjoint expects a frequency-space function")
    g = v.grid.grid
    n, d = g.points_per_axis, g.dim
    arr = v.values.reshape(g.shape) * _signs(n, d)
    arr = np.fft.ifftn(np.fft.ifftshift(arr, axes=tuple(range(d))))
    arr = arr * n**d * v.grid.weight * (2 * np.pi) ** (-d / 2)
    return SampledFunction(g, arr.ravel())


def _spline_eval(grid: GridSpec, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    coords = ((pts + grid.half_width) / grid.spacing).T
    arr = values.reshape(grid.shape)
    re = ndimage.map_coordinates(arr.real, coords, order=3, mode="constant", cval=0.0, prefilter=True)
    im = ndimage.map_coordinates(arr.imag, coords, order=3, mode="constant", cval=0.0, prefilter=True)
    return re + 1j * im


def _sinc_eval(grid: GridSpec, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Band-limited trigonometric interpolation at arbitrary points."""
    u = SampledFunction(grid, values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v = fourier(u)
    dual = grid.dual()
    xi = dual.axis
    c = v.values.reshape(grid.shape) * dual.weight * (2 * np.pi) ** (-grid.dim / 2)
    if grid.dim == 1:
        return np.exp(1j * np.outer(pts[:, 0], xi)) @ c
    out = np.empty(len(pts), dtype=complex)
    for s in range(0, len(pts), 1024):
        p = pts[s : s + 1024]
        e1 = np.exp(1j * np.outer(p[:, 0], xi))
        e2 = np.exp(1j * np.outer(p[:, 1], xi))
        out[s : s + 1024] = np.einsum("pi,ij,pj->p", e1, c, e2)
    return out


INTERPOLATORS = {"spline": _spline_eval, "sinc": _sinc_eval}


def sample_at(u: SampledFunction, pts: np.ndarray, method: str = "spline") -> np.ndarray:
    """Interpolate ``u`` at points ``pts`` of shape ``(m, d)``; zero outside the box."""
    if method not in INTERPOLATORS:
        raise ValueError(f"unknown interpolation method {method!r}")
    g = u.grid
    pts = np.asarray(pts, dtype=float).reshape(-1, g.dim)
    vals = INTERPOLATORS[method](g, u.values, pts)
    upper = g.half_width - g.spacing
    outside = np.any((pts < -g.half_width) | (pts > upper), axis=1)
    vals[outside] = 0.0
    return vals


def compose_with_linear(u: SampledFunction, a: LinearMap, method: str = "spline") -> SampledFunction:
    """Pull-back ``x -> u(a x)`` sampled on ``u``'s grid.

    Image points outside the box take the value 0. The squared L2 mass of
    ``u`` beyond ``L / 1.2`` is reported in ``boundary_mass`` since that is
    the part an expanding map pushes outside the box.

    Raises
    ------
    SingularMap
        If ``|det a| < 1e-12``.
    """
    if not isinstance(u.grid, GridSpec):
        raise GridMismatch("compose_with_linear expects a position-space function")
    if abs(np.linalg.det(a.matrix)) < 1e-12:
        raise SingularMap("cannot compose with a singular map")
    if a.matrix.shape != (u.grid.dim, u.grid.dim):
        raise GridMismatch("map dimension does not match grid")
    g = u.grid
    pts = g.points() @ a.matrix.T
    vals = sample_at(u, pts, method)
    far = np.max(np.abs(g.points()), axis=1) > g.half_width / 1.2
    lost = float(np.sum(np.abs(u.values[far]) ** 2) * g.weight)
    return SampledFunction(g, vals, boundary_mass=lost)


def pullback_matrix(grid: GridSpec, a: LinearMap, method: str = "spline") -> np.ndarray:
    """Dense matrix of :func:`compose_with_linear` on ``grid``."""
    n = grid.size
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(compose_with_linear(SampledFunction(grid, e), a, method).values)
    return np.array(cols).T
