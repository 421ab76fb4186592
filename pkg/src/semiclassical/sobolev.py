"""Anisotropic weights on phase space and the norm ``||u||_{H_W} = ||W B u||``.

The weight is

    W(x, xi) = <h_gamma |x|_g>^R / <h_gamma |xi|_{g^-1}>^R,
    h_gamma(x, xi) = h0 <|(x, xi)|>^(-gamma),  <a> = max(1, |a|).

With ``orientation="frequency_in_numerator"`` numerator and denominator are
swapped (the weight used for the contracting toy model).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import expm, logm

from .errors import GridMismatch
from .geometry import MetricSpace
from .grid import GridSpec, SampledFunction
from .quantize import QuantizedOperator, SymplecticLinearMap
from .wavepacket import PhaseGrid, bargmann_matrix

ORIENTATIONS = ("stable_in_numerator", "frequency_in_numerator")


@dataclass(frozen=True)
class WeightParams:
    """Parameters of the anisotropic weight.

    Parameters
    ----------
    h0 : float
        Semiclassical scale, ``> 0``.
    gamma : float
        Exponent in ``[0, 1)``.
    R : float
        Order parameter, ``>= 0``.
    orientation : str
        ``"stable_in_numerator"`` puts ``|x|`` in the numerator,
        ``"frequency_in_numerator"`` puts ``|xi|`` there.
    """

    h0: float = 0.1
    gamma: float = 0.5
    R: float = 0.0
    orientation: str = "stable_in_numerator"

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not self.R >= 0:
            raise ValueError("R must be non-negative")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")

    @property
    def order(self) -> float:
        """``r = R (1 - gamma) / 2``."""
        return 0.5 * self.R * (1.0 - self.gamma)

    def to_dict(self) -> dict:
        return asdict(self)


def japanese_bracket(a) -> np.ndarray:
    """``<a> = max(1, |a|)``."""
    return np.maximum(1.0, np.abs(a))


def _split_norms(rho: np.ndarray, metric: MetricSpace | None) -> tuple[np.ndarray, np.ndarray]:
    rho = np.asarray(rho, dtype=float)
    n = rho.shape[-1] // 2
    x, xi = rho[..., :n], rho[..., n:]
    if metric is None:
        return np.linalg.norm(x, axis=-1), np.linalg.norm(xi, axis=-1)
    g = metric.gram
    ginv = np.linalg.inv(g)
    nx = np.sqrt(np.einsum("...i,ij,...j->...", x, g, x))
    nxi = np.sqrt(np.einsum("...i,ij,...j->...", xi, ginv, xi))
    return nx, nxi


def h_gamma(w: WeightParams, rho, metric: MetricSpace | None = None) -> np.ndarray:
    """``h0 <|rho|_{g + g^-1}>^(-gamma)``."""
    nx, nxi = _split_norms(rho, metric)
    return w.h0 * japanese_bracket(np.hypot(nx, nxi)) ** (-w.gamma)


def weight(w: WeightParams, rho, metric: MetricSpace | None = None) -> np.ndarray:
    """Evaluate ``W`` at phase points ``rho`` (last axis ``(x, xi)``)."""
    nx, nxi = _split_norms(rho, metric)
    hg = w.h0 * japanese_bracket(np.hypot(nx, nxi)) ** (-w.gamma)
    if w.R == 0:
        return np.ones_like(nx)
    # logs keep large orders finite
    lx = w.R * np.log(japanese_bracket(hg * nx))
    lxi = w.R * np.log(japanese_bracket(hg * nxi))
    if w.orientation == "stable_in_numerator":
        return np.exp(lx - lxi)
    return np.exp(lxi - lx)


def weight_on_phase_grid(w: WeightParams, pg: PhaseGrid) -> np.ndarray:
    return weight(w, pg.points(), MetricSpace(pg.space.gram))


def _map_power(capital_phi: np.ndarray, t: float) -> np.ndarray:
    if t == 0:
        return np.eye(capital_phi.shape[0])
    gen = logm(capital_phi)
    return np.real_if_close(expm(t * gen), tol=1e6).real


def _random_directions(rng, count: int, dim: int) -> np.ndarray:
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def decay_ratio_sampler(
    w: WeightParams,
    phi: SymplecticLinearMap,
    t_list=(1.0, 2.0, 3.0, 4.0),
    sample_count: int = 4000,
    seed: int = 0,
) -> dict:
    """Monte-Carlo check of the decay property of ``W`` along ``Phi^t``.

    For each ``t`` the ratio ``W(Phi^t rho) / W(rho)`` is sampled

    * over all scales (radii log-uniform in ``[1e-2, 1e6]`` plus ``rho = 0``),
      giving ``sup_overall``;
    * beyond the radius ``C_t = e^{lambda t} (10 / h0)^{1/(1-gamma)}`` (radii
      log-uniform in ``[C_t, 10 C_t]``), giving ``M(t)``.

    ``lambda`` is the log of the spectral radius of ``Phi``. The decay rate
    ``Lambda`` is minus the least-squares slope of ``log M(t)``; the target
    is ``lambda (1 - gamma) R / 2``.

    The metric is Euclidean in the coordinates of ``Phi``.
    """
    rng = np.random.default_rng(seed)
    t_list = [float(t) for t in t_list]
    m = np.asarray(phi.capital_phi, dtype=float)
    dim = m.shape[0]
    lam = float(np.log(np.max(np.abs(np.linalg.eigvals(m)))))
    base = (10.0 / w.h0) ** (1.0 / (1.0 - w.gamma))
    sup_overall, outside = [], []
    for t in t_list:
        pt = _map_power(m, t)
        r = np.exp(rng.uniform(np.log(1e-2), np.log(1e6), sample_count))
        rho = r[:, None] * _random_directions(rng, sample_count, dim)
        rho = np.vstack([np.zeros(dim), rho])
        ratio = weight(w, rho @ pt.T) / weight(w, rho)
        sup_overall.append(float(ratio.max()))
        ct = np.exp(lam * t) * base
        r = ct * np.exp(rng.uniform(0.0, np.log(10.0), sample_count))
        rho = r[:, None] * _random_directions(rng, sample_count, dim)
        ratio = weight(w, rho @ pt.T) / weight(w, rho)
        outside.append(float(ratio.max()))
    if len(t_list) >= 2:
        fitted = float(-np.polyfit(t_list, np.log(outside), 1)[0])
    else:
        fitted = float("nan")
    target = 0.5 * lam * (1.0 - w.gamma) * w.R
    return {
        "params": w.to_dict(),
        "lambda": lam,
        "t_list": t_list,
        "sup_overall": max(sup_overall),
        "sup_overall_per_t": sup_overall,
        "sup_outside_per_t": outside,
        "fitted_decay": fitted,
        "target_decay": target,
        "passes": bool(fitted >= 0.8 * target - 1e-12),
        "seed": seed,
        "sample_count": sample_count,
    }


def temperate_sampler(
    w: WeightParams,
    pair_count: int = 10000,
    box: float = 40.0,
    seed: int = 0,
    bins: int = 10,
    metric: MetricSpace | None = None,
) -> dict:
    """Fit ``W(rho')/W(rho) <= C <h_gamma(rho) dist(rho', rho)>^{N0}``.

    Pairs are uniform in the cube ``[-box, box]^{2n}`` (``n`` from ``metric``,
    default 1). The exponent is the slope of an upper-envelope regression:
    ``s = log <h_gamma d>`` is split into ``bins`` bins, the largest
    ``log`` ratio of each bin is kept, and a line is fitted through these
    maxima (``N0 = max(0, slope)``). Then ``C`` is the smallest constant that
    makes the bound hold for every pair.

    Also reported: ``slow_variation``, the largest ``ratio - 1`` over a
    second set of ``pair_count`` pairs ``(rho, rho + delta)`` with ``rho``
    uniform in the cube and ``delta`` uniform in the unit ball.
    """
    rng = np.random.default_rng(seed)
    n = 1 if metric is None else metric.dim
    p = rng.uniform(-box, box, (pair_count, 2 * n))
    q = rng.uniform(-box, box, (pair_count, 2 * n))
    ratio = weight(w, q, metric) / weight(w, p, metric)
    d = np.linalg.norm(q - p, axis=1)
    ls = np.log(japanese_bracket(h_gamma(w, p, metric) * d))
    lr = np.log(ratio)
    xs, ys = [], []
    if ls.max() > 0:
        edges = np.linspace(0.0, ls.max(), bins + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            sel = (ls > a) & (ls <= b)
            if sel.any():
                k = np.argmax(lr[sel])
                xs.append(ls[sel][k])
                ys.append(lr[sel][k])
    n0 = float(max(0.0, np.polyfit(xs, ys, 1)[0])) if len(xs) >= 2 else 0.0
    c = float(np.exp(np.max(lr - n0 * ls)))
    delta = _random_directions(rng, pair_count, 2 * n) * rng.uniform(0.0, 1.0, (pair_count, 1)) ** (1.0 / (2 * n))
    p2 = rng.uniform(-box, box, (pair_count, 2 * n))
    slow = float(np.max(weight(w, p2 + delta, metric) / weight(w, p2, metric) - 1.0))
    return {
        "params": w.to_dict(),
        "N0": n0,
        "C": c,
        "finite": bool(np.isfinite(n0) and np.isfinite(c)),
        "N0_bound": 2.0 * w.R,
        "passes": bool(np.isfinite(c) and n0 <= 2.0 * w.R + 1e-12),
        "slow_variation": slow,
        "box": box,
        "seed": seed,
        "sample_count": pair_count,
    }


def slow_variation_trend(w: WeightParams, h0_list=(0.2, 0.1, 0.05), **kw) -> dict:
    """Slow-variation excess ``max(ratio - 1)`` over ``dist <= 1`` as ``h0`` shrinks."""
    rows = []
    for h0 in h0_list:
        wp = WeightParams(h0=h0, gamma=w.gamma, R=w.R, orientation=w.orientation)
        rows.append({"h0": h0, "excess": temperate_sampler(wp, **kw)["slow_variation"]})
    ex = [r["excess"] for r in rows]
    return {"rows": rows, "decreasing": bool(all(a > b for a, b in zip(ex, ex[1:])))}


def order_sandwich(
    w: WeightParams,
    box: float = 1e4,
    sample_count: int = 20000,
    seed: int = 0,
    dim: int = 1,
) -> dict:
    """Constants in ``C^-1 <|rho|>^{-r} <= W <= C <|rho|>^r`` over a sampled box.

    Radii are log-uniform in ``[1e-2, box]``. ``C`` is finite on any bounded
    box. The asymptotic growth exponent ``max |log W| / log <|rho|>`` over the
    outer decade is reported as ``growth_exponent``, and the local slope of
    ``log W(x, 0)`` against ``log |x|`` over that decade as ``local_slope``.
    The slope tends to ``R (1 - gamma) = 2 r``, so ``C`` grows with the box.
    """
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(np.log(1e-2), np.log(box), sample_count))
    rho = r[:, None] * _random_directions(rng, sample_count, 2 * dim)
    val = weight(w, rho)
    br = japanese_bracket(r)
    order = w.order
    c = float(max(np.max(val / br**order), np.max(br ** (-order) / val)))
    outer = r >= box / 10
    growth = float(np.max(np.abs(np.log(val[outer])) / np.log(br[outer]))) if outer.any() else float("nan")
    axis = np.zeros((2, 2 * dim))
    axis[:, 0] = [box / 10, box]
    lw = np.log(weight(w, axis))
    slope = float(abs(lw[1] - lw[0]) / np.log(10.0))
    return {
        "C": c,
        "finite": bool(np.isfinite(c)),
        "order": order,
        "growth_exponent": growth,
        "local_slope": slope,
        "box": box,
        "seed": seed,
    }


def anisotropic_norm(u: SampledFunction, w: WeightParams, pg: PhaseGrid, gauge: str = "vertical") -> float:
    """``||W B u||_{L^2}`` on the phase grid.

    Raises
    ------
    GridMismatch
        If ``u`` does not live on the grid paired with ``pg``.
    """
    if pg.grid is None or not isinstance(u.grid, GridSpec) or not u.grid.compatible(pg.grid):
        raise GridMismatch("u is not on the phase grid's position grid")
    bu = bargmann_matrix(pg, gauge=gauge) @ u.values
    wv = np.abs(weight_on_phase_grid(w, pg) * bu)
    top = wv.max(initial=0.0)
    if top == 0:
        return 0.0
    # scaled so that tiny or huge amplitudes do not under- or overflow
    return float(top * np.sqrt(np.sum((wv / top) ** 2) * pg.weight))


def weighted_conjugate(opm, w: WeightParams, pg: PhaseGrid):
    """``D(W) M D(W)^{-1}`` for an operator matrix ``M`` on ``pg``.

    Accepts a dense array or a ``QuantizedOperator`` and returns the same
    kind.
    """
    dw = weight_on_phase_grid(w, pg)
    mat = opm.matrix if isinstance(opm, QuantizedOperator) else np.asarray(opm)
    if mat.shape != (pg.size, pg.size):
        raise GridMismatch("operator does not act on this phase grid")
    out = dw[:, None] * mat / dw[None, :]
    if isinstance(opm, QuantizedOperator):
        meta = dict(opm.meta)
        meta["weight"] = w.to_dict()
        return QuantizedOperator(out, opm.correction, opm.convention, meta)
    return out
