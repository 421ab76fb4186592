"""Transfer operators of linear maps, Ruelle spectra and band structure.

A :class:`TransferModel` acts on functions of ``E = R^d`` by

    u -> e^{t V} |det A^t|^p  u o (A^t)^s

with ``A`` the time-one base map. ``convention="pullback"`` uses ``s = +1``
and ``p = 1/2`` (unitary pull-back), ``"push_half_density"`` uses ``s = -1``
and ``p = -1/2``. The toy flow ``X = -x d/dx`` is the plain pull-back
(``p = 0``) by ``A = e^{-1}``, so ``e^{tX} u = u(e^{-t} x)``.

On ``Pol_k`` the action is exact and block diagonal. On grids it is
discretized by interpolation and sandwiched between Bargmann transforms
and the weight, ``K_t = D(W) B S_t B^dagger D(W)^{-1}``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapExceeded, EigenFailure, NotDiagonalizable, OrderTooLow
from .geometry import LinearMap, MetricSpace
from .grid import GridSpec, pullback_matrix
from .polytaylor import pol_rank, pullback_matrix_on_pol, taylor_matrix
from .sobolev import WeightParams, weight_on_phase_grid
from .wavepacket import DEFAULT_MATRIX_CAP, PhaseGrid, bargmann_matrix

CONVENTIONS = ("pullback", "push_half_density")
TOY_WEIGHT = WeightParams(h0=1.0, gamma=0.5, R=8.0, orientation="frequency_in_numerator")


@dataclass(frozen=True)
class TransferModel:
    """Linear transfer model.

    Parameters
    ----------
    base : array_like
        Time-one map ``A`` (``d x d``).
    convention : str
        ``"pullback"`` or ``"push_half_density"``.
    potential : complex
        Constant twist ``V``; the operator is multiplied by ``e^{t V}``.
    density : bool
        Whether the ``|det A^t|^p`` factor is included.
    """

    base: np.ndarray
    convention: str = "push_half_density"
    potential: complex = 0.0
    density: bool = True
    name: str = "linear"

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.base, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError("base map must be square")
        if abs(np.linalg.det(a)) < 1e-14:
            raise ValueError("base map must be invertible")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "base", a)

    @classmethod
    def toy(cls, potential: complex = 0.0) -> "TransferModel":
        """``e^{t(X + V)}`` with ``X = -x d/dx`` on ``R``."""
        return cls(np.array([[np.exp(-1.0)]]), "pullback", potential, density=False, name="toy")

    @classmethod
    def diagonal_expanding(cls, rates, convention: str = "push_half_density", potential: complex = 0.0) -> "TransferModel":
        """``A = diag(e^{mu_i})`` with all ``mu_i > 0``."""
        rates = np.asarray(rates, dtype=float)
        if np.any(rates <= 0):
            raise ValueError("expanding rates must be positive")
        return cls(np.diag(np.exp(rates)), convention, potential, name="expanding")

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def exponents(self) -> tuple[int, float]:
        """``(s, p)`` of the action ``|det A^t|^p u o (A^t)^s``."""
        s, p = (1, 0.5) if self.convention == "pullback" else (-1, -0.5)
        return s, (p if self.density else 0.0)

    @property
    def is_expanding(self) -> bool:
        return bool(np.max(np.linalg.svd(np.linalg.inv(self.base), compute_uv=False)) < 1)

    def power(self, t: float) -> np.ndarray:
        """``A^t`` through the real logarithm (diagonalizable case) or integer powers."""
        from scipy.linalg import expm, logm

        if float(t).is_integer():
            return np.linalg.matrix_power(self.base, int(t)) if t >= 0 else np.linalg.matrix_power(np.linalg.inv(self.base), int(-t))
        return np.real_if_close(expm(t * logm(self.base)), tol=1e6).real

    def scalar(self, t: float) -> complex:
        _, p = self.exponents
        return np.exp(t * self.potential) * abs(np.linalg.det(self.base)) ** (t * p)

    def grid_map(self, t: float) -> np.ndarray:
        """Matrix ``M`` with ``u -> u o M``."""
        s, _ = self.exponents
        return self.power(s * t)

    def pol_matrix(self, t: float, k: int) -> np.ndarray:
        """Exact action on ``Pol_k`` in the graded lexicographic basis."""
        return self.scalar(t) * pullback_matrix_on_pol(self.grid_map(t), k)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.tolist(),
            "convention": self.convention,
            "potential": [float(np.real(self.potential)), float(np.imag(self.potential))],
            "density": self.density,
        }


def _is_diagonalizable(a: np.ndarray, cond_limit: float = 1e8) -> bool:
    _, vecs = np.linalg.eig(a)
    return bool(np.linalg.cond(vecs) < cond_limit)


def gamma_rates(model: TransferModel, k_max: int, fallback: bool = True) -> list[tuple[float, float]]:
    """Rates ``(gamma_k^-, gamma_k^+)`` of the action on ``Pol_k``, ``k <= k_max``.

    For diagonalizable ``A`` they are the smallest and largest
    ``log |eigenvalue|`` of the time-one action on ``Pol_k``. Otherwise the
    growth rates of ``||M^t||`` and ``||M^{-t}||`` are fitted over
    ``t = 1..8``.

    Raises
    ------
    NotDiagonalizable
        If ``A`` is not diagonalizable and ``fallback`` is False.
    """
    diag = _is_diagonalizable(model.base)
    if not diag and not fallback:
        raise NotDiagonalizable("base map is not diagonalizable")
    out = []
    for k in range(k_max + 1):
        m = model.pol_matrix(1.0, k)
        if diag:
            logs = np.log(np.abs(np.linalg.eigvals(m)))
            out.append((float(logs.min()), float(logs.max())))
        else:
            ts = np.arange(1, 9)
            mi = np.linalg.inv(m)
            up = [np.log(np.linalg.norm(np.linalg.matrix_power(m, t), 2)) for t in ts]
            dn = [np.log(np.linalg.norm(np.linalg.matrix_power(mi, t), 2)) for t in ts]
            out.append((float(-np.polyfit(ts, dn, 1)[0]), float(np.polyfit(ts, up, 1)[0])))
    return out


def rates_monotone(rates) -> bool:
    """``gamma_{k+1}^{+-} <= gamma_k^{+-}`` for all consecutive ``k``."""
    return all(b[0] <= a[0] + 1e-12 and b[1] <= a[1] + 1e-12 for a, b in zip(rates, rates[1:]))


@dataclass
class ToyOperator:
    """``K_t = left @ core @ right`` on the phase grid.

    ``left = D(W) B`` (``P x N``), ``core = S_t`` (``N x N``) and
    ``right = B^dagger D(W)^{-1}`` (``N x P``). The nonzero spectrum of
    ``K_t`` equals that of ``core @ (right @ left) = S_t B^dagger B``,
    which does not depend on the weight.
    """

    left: np.ndarray
    core: np.ndarray
    right: np.ndarray
    pg: PhaseGrid
    t: float
    meta: dict = field(default_factory=dict)

    @property
    def reduced(self) -> np.ndarray:
        """``core @ right @ left``: same nonzero eigenvalues, size ``N x N``."""
        return self.core @ (self.right @ self.left)

    def dense(self, cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
        if self.pg.size > cap:
            raise CapExceeded(f"phase grid has {self.pg.size} points > cap {cap}")
        return self.left @ self.core @ self.right

    def apply(self, v) -> np.ndarray:
        return self.left @ (self.core @ (self.right @ np.asarray(v)))


def default_toy_grids(half_width: float = 12.0, points: int = 96) -> tuple[GridSpec, PhaseGrid]:
    """Position grid and phase grid for the toy runs.

    The phase grid uses every other position node, a margin of 6 beyond the
    box in ``x`` and the full dual frequency range.
    """
    grid = GridSpec.line(half_width, points)
    pg = PhaseGrid.from_grid(grid, xi_max=None, x_stride=2, x_margin=6.0)
    return grid, pg


def transfer_grid_matrix(model: TransferModel, t: float, grid: GridSpec, method: str = "spline") -> np.ndarray:
    """Discretized ``S_t`` on ``grid`` (interpolated composition times scalars)."""
    a = LinearMap.on(model.grid_map(t), MetricSpace(grid.space.gram))
    return model.scalar(t) * pullback_matrix(grid, a, method)


def transfer_operator(
    model: TransferModel,
    t: float,
    grid: GridSpec,
    pg: PhaseGrid,
    w: WeightParams = TOY_WEIGHT,
    method: str = "spline",
) -> ToyOperator:
    """``K_t = D(W) B S_t B^dagger D(W)^{-1}`` in factored form."""
    if t < 0:
        raise ValueError("t must be non-negative")
    b = bargmann_matrix(pg, grid)
    dw = weight_on_phase_grid(w, pg)
    left = dw[:, None] * b
    right = (b.conj().T * pg.weight / grid.weight) / dw[None, :]
    core = transfer_grid_matrix(model, t, grid, method)
    return ToyOperator(left, core, right, pg, t, {"model": model.to_dict(), "weight": w.to_dict()})


def toy_transfer_matrix(
    t: float,
    grid: GridSpec | None = None,
    pg: PhaseGrid | None = None,
    w: WeightParams = TOY_WEIGHT,
    potential: complex = 0.0,
    method: str = "spline",
) -> ToyOperator:
    """Toy operator ``D(W) B e^{t(X + V)} B^dagger D(W)^{-1}``.

    ``e^{tX}`` is composition with ``x -> e^{-t} x`` by cubic-spline
    interpolation on ``grid``. The phase grid may exceed the dense cap: the
    operator is kept factored and :func:`ruelle_eigenvalues` uses the
    reduced ``N x N`` form.
    """
    if grid is None or pg is None:
        grid, pg = default_toy_grids()
    return transfer_operator(TransferModel.toy(potential), t, grid, pg, w, method)


@dataclass
class SpectrumReport:
    """Eigenvalues sorted by modulus with band assignments.

    ``bands[i]`` is the index ``k`` of the prediction matched by eigenvalue
    ``i`` (``-1`` if none). ``floor`` is the largest modulus that is not
    matched to any prediction; eigenvalues above it are resolved.
    """

    t: float
    eigenvalues: np.ndarray
    predicted: list
    bands: list
    floor: float
    residuals: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    def resolved(self, threshold: float = 0.0) -> np.ndarray:
        """Eigenvalues with modulus above ``max(threshold, floor)``."""
        return self.eigenvalues[self.moduli > max(threshold, self.floor)]

    def to_dict(self, top: int | None = 32) -> dict:
        ev = self.eigenvalues if top is None else self.eigenvalues[:top]
        return {
            "t": self.t,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
            "moduli": [float(abs(z)) for z in ev],
            "bands": [int(b) for b in self.bands[: len(ev)]],
            "predicted": [float(p) for p in self.predicted],
            "floor": float(self.floor),
            "residuals": self.residuals,
            "meta": self.meta,
        }

    def to_json(self, path=None, top: int | None = 32) -> str:
        text = json.dumps(self.to_dict(top), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["re", "im", "modulus", "band"])
            for z, b in zip(self.eigenvalues, self.bands):
                wr.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z))), int(b)])


def _eigvals(mat: np.ndarray) -> np.ndarray:
    try:
        ev = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigenFailure("non-finite eigenvalues")
    return ev


def ruelle_eigenvalues(
    opm,
    count: int | None = None,
    t: float = 1.0,
    rates=None,
    rel_tol: float = 5e-3,
    cap: int = DEFAULT_MATRIX_CAP,
) -> SpectrumReport:
    """Eigenvalues of an operator matrix, sorted by modulus.

    Parameters
    ----------
    opm : ndarray or ToyOperator
        Dense matrix (at most ``cap`` rows) or a factored toy operator.
    count : int, optional
        Keep only the ``count`` largest eigenvalues.
    t : float
        Time, used for the predictions ``e^{t gamma_k}``.
    rates : sequence of float, optional
        Predicted generator rates ``gamma_k``; eigenvalues within relative
        ``rel_tol`` of ``e^{t gamma_k}`` are assigned to band ``k``.

    Raises
    ------
    EigenFailure
        If the eigen-solver fails or returns non-finite values.
    CapExceeded
        If a dense matrix exceeds the cap.
    """
    if isinstance(opm, ToyOperator):
        mat = opm.reduced
    else:
        mat = np.asarray(opm)
        if mat.shape[0] > cap:
            raise CapExceeded(f"matrix size {mat.shape[0]} > cap {cap}")
    ev = _eigvals(mat)
    ev = ev[np.argsort(-np.abs(ev), kind="stable")]
    if count is not None:
        ev = ev[:count]
    predicted = [] if rates is None else [float(np.exp(t * g)) for g in rates]
    bands = []
    for z in ev:
        m = abs(z)
        match = [k for k, p in enumerate(predicted) if abs(m - p) <= rel_tol * p]
        bands.append(match[0] if match else -1)
    unmatched = [abs(z) for z, b in zip(ev, bands) if b < 0]
    floor = float(max(unmatched)) if unmatched else 0.0
    residuals = {}
    for k, p in enumerate(predicted):
        cand = [abs(abs(z) - p) / p for z, b in zip(ev, bands) if b == k]
        residuals[f"band_{k}"] = float(min(cand)) if cand else None
    return SpectrumReport(float(t), ev, predicted, bands, floor, residuals)


def toy_rates(k_max: int = 3) -> list[float]:
    """Generator rates ``-k`` of the toy flow on ``x^k``."""
    return [float(-k) for k in range(k_max + 1)]


def _weighted_factors(op: ToyOperator) -> tuple[np.ndarray, np.ndarray]:
    """Factors ``X1, X2`` with ``||K|| = ||R1 M R2^dagger||`` for ``K = left M right``.

    Norms are taken in ``l^2`` of the phase grid with uniform weight, so
    ``right`` is rewritten as ``X2^dagger`` up to the same scale.
    """
    s = np.sqrt(op.pg.weight)
    x1 = s * op.left
    x2 = op.right.conj().T / s
    return x1, x2


def _factored_norm(x1: np.ndarray, mid: np.ndarray, x2: np.ndarray) -> float:
    _, r1 = np.linalg.qr(x1)
    _, r2 = np.linalg.qr(x2)
    return float(np.linalg.norm(r1 @ mid @ r2.conj().T, 2))


def norm_decay_fit(
    model: TransferModel,
    K: int,
    w: WeightParams,
    t_list=(0.5, 1.0, 1.5, 2.0),
    grid: GridSpec | None = None,
    pg: PhaseGrid | None = None,
    epsilon: float = 0.15,
    window: float = 1.0,
) -> dict:
    """Fit the growth rate of ``||K_t (Id - T_[0,K])||`` in the weighted space.

    ``T_[0,K]`` is realized on the phase grid as ``D B T B^dagger D^{-1}``
    with ``T`` the grid Taylor projector, so that

        K_t (Id - T_[0,K]) = D B S_t (Id - B^dagger B T) B^dagger D^{-1}.

    ``K = -1`` removes nothing. The target is ``gamma_{K+1}^+`` of the exact
    action on polynomials, and the fit passes when the slope is at most
    ``target + epsilon``.

    Raises
    ------
    OrderTooLow
        If ``K + 1 >= r`` with ``r = R (1 - gamma) / 2``.
    """
    if K + 1 >= w.order:
        raise OrderTooLow(f"K + 1 = {K + 1} must be below the weight order r = {w.order}")
    if model.dim != 1:
        raise ValueError("grid norm decay is implemented for 1-D models")
    if grid is None or pg is None:
        grid, pg = default_toy_grids()
    t_list = [float(t) for t in t_list]
    b = bargmann_matrix(pg, grid)
    bdb = (b.conj().T * pg.weight / grid.weight) @ b
    proj = taylor_matrix(grid, range(K + 1), window) if K >= 0 else np.zeros((grid.size, grid.size))
    tail = np.eye(grid.size) - bdb @ proj
    norms = []
    x1 = x2 = None
    for t in t_list:
        op = transfer_operator(model, t, grid, pg, w)
        if x1 is None:
            x1, x2 = _weighted_factors(op)
        norms.append(_factored_norm(x1, op.core @ tail, x2))
    slope = float(np.polyfit(t_list, np.log(norms), 1)[0])
    target = gamma_rates(model, K + 1)[K + 1][1]
    return {
        "K": K,
        "t_list": t_list,
        "norms": norms,
        "slope": slope,
        "target": target,
        "epsilon": epsilon,
        "margin": target + epsilon - slope,
        "passes": bool(slope <= target + epsilon),
        "model": model.to_dict(),
        "weight": w.to_dict(),
    }


def band_report(model: TransferModel, t: float = 1.0, k_max: int = 2, tol: float = 1e-8) -> dict:
    """Exact band structure of the action on ``Pol_0 + ... + Pol_{k_max}``.

    Every eigenvalue modulus of the block ``k`` must lie in
    ``[e^{t gamma_k^-}, e^{t gamma_k^+}] (1 -+ tol)``. A gap between bands
    ``k`` and ``k + 1`` is reported when ``e^{t gamma_{k+1}^+} < e^{t gamma_k^-}``.
    """
    rates = gamma_rates(model, k_max)
    bands = []
    ok = True
    for k in range(k_max + 1):
        mod = np.sort(np.abs(_eigvals(model.pol_matrix(t, k))))[::-1]
        lo, hi = np.exp(t * rates[k][0]), np.exp(t * rates[k][1])
        inside = bool(np.all(mod >= lo * (1 - tol)) and np.all(mod <= hi * (1 + tol)))
        ok &= inside
        bands.append({"k": k, "moduli": mod.tolist(), "annulus": [float(lo), float(hi)], "inside": inside, "rank": pol_rank(model.dim, k)})
    gaps = []
    for k in range(k_max):
        lo_k = np.exp(t * rates[k][0])
        hi_next = np.exp(t * rates[k + 1][1])
        if hi_next < lo_k:
            gaps.append({"between": [k, k + 1], "outer": float(lo_k), "inner": float(hi_next)})
    return {
        "t": t,
        "rates": [list(r) for r in rates],
        "bands": bands,
        "all_inside": ok,
        "gaps": gaps,
        "monotone": rates_monotone(rates),
        "model": model.to_dict(),
    }


def band_multiplicity(report: dict, k: int, tol: float = 1e-8) -> int:
    """Number of moduli of band ``k`` within relative ``tol`` of its largest modulus."""
    mod = np.asarray(report["bands"][k]["moduli"])
    return int(np.sum(np.abs(mod - mod[0]) <= tol * mod[0]))


def band_rank_check(d: int, k: int) -> int:
    """Expected multiplicity of band ``k`` (``pol_rank(d, k)``)."""
    return pol_rank(d, k)
