"""Homogeneous polynomials, Taylor projectors and the symbol-level Weyl algebra.

Polynomials in ``d`` variables are dicts ``{alpha: coefficient}`` keyed by
exponent tuples. Within a fixed degree the monomials are ordered
lexicographically from ``x_1^k`` downwards (graded lexicographic order).
Exact arithmetic is used whenever the coefficients are ``Fraction`` or
``int``.

On grids, the pairings ``<(1/alpha!) delta_0^(alpha)|u>`` are realized by a
least-squares polynomial fit of total degree ``K + 4`` on the window
``max_i |x_i| <= w`` around the origin.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy.special import erf

from .errors import CapExceeded, DegreeTooHigh, DegreeZero, DimMismatch
from .geometry import SymplecticSpace, canonical_phase_space, lagrangian_aligner, MetricSpace
from .grid import GridSpec, SampledFunction
from .quantize import SymplecticLinearMap, op_tilde_apply
from .wavepacket import DEFAULT_MATRIX_CAP, PhaseGrid, bargmann_adjoint_matrix, bargmann_matrix

MAX_GRID_DEGREE = 8


def multi_indices(d: int, k: int) -> list[tuple[int, ...]]:
    """All ``alpha`` in ``N^d`` with ``|alpha| = k`` in graded lex order."""
    if d < 1 or k < 0:
        raise ValueError("need d >= 1 and k >= 0")
    out = []
    for combo in itertools.combinations_with_replacement(range(d), k):
        alpha = [0] * d
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return sorted(out, reverse=True)


def pol_rank(d: int, k: int) -> int:
    """``dim Pol_k(R^d) = binom(k + d - 1, d - 1)``."""
    if d < 1 or k < 0:
        raise ValueError("need d >= 1 and k >= 0")
    return comb(k + d - 1, d - 1)


@dataclass(frozen=True)
class PolySpace:
    """Homogeneous polynomials of degree ``k`` in ``d`` variables."""

    d: int
    k: int

    @property
    def basis(self) -> list[tuple[int, ...]]:
        return multi_indices(self.d, self.k)

    @property
    def dim(self) -> int:
        return pol_rank(self.d, self.k)

    def index(self) -> dict:
        return {a: i for i, a in enumerate(self.basis)}

    def to_vector(self, p: dict, exact: bool = False) -> np.ndarray:
        """Coefficient vector of the degree-``k`` part of ``p``."""
        zero = Fraction(0) if exact else 0.0
        out = np.array([p.get(a, zero) for a in self.basis], dtype=object if exact else complex)
        return out

    def from_vector(self, v) -> dict:
        return {a: c for a, c in zip(self.basis, v) if c != 0}


def poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for a, c in q.items():
        out[a] = out.get(a, 0) + c
    return {a: c for a, c in out.items() if c != 0}


def poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, c in p.items():
        for b, e in q.items():
            key = tuple(i + j for i, j in zip(a, b))
            out[key] = out.get(key, 0) + c * e
    return {a: c for a, c in out.items() if c != 0}


def linear_form(coeffs) -> dict:
    """Polynomial ``sum_i c_i x_i``."""
    d = len(coeffs)
    out = {}
    for i, c in enumerate(coeffs):
        if c != 0:
            alpha = [0] * d
            alpha[i] = 1
            out[tuple(alpha)] = c
    return out


def pullback_polynomial(p: dict, a) -> dict:
    """``x -> p(A x)`` for a square matrix ``A`` (entries may be Fractions)."""
    a = np.asarray(a, dtype=object)
    d = a.shape[0]
    rows = [linear_form(list(a[i])) for i in range(d)]
    out: dict = {}
    for alpha, c in p.items():
        term = {(0,) * d: c}
        for i, power in enumerate(alpha):
            for _ in range(power):
                term = poly_mul(term, rows[i])
        out = poly_add(out, term)
    return out


def pullback_matrix_on_pol(a, k: int) -> np.ndarray:
    """Matrix of ``p -> p o A`` on ``Pol_k`` (columns: images of basis monomials)."""
    a = np.asarray(a)
    d = a.shape[0]
    sp = PolySpace(d, k)
    exact = a.dtype == object
    cols = [sp.to_vector(pullback_polynomial({alpha: 1}, a), exact=exact) for alpha in sp.basis]
    m = np.array(cols, dtype=object if exact else complex).T
    return m if exact else m.real.astype(float) if np.all(np.isreal(m)) else m


def taylor_block(coeff_matrix_size: int, d: int, k: int, kmax: int) -> np.ndarray:
    """Projector ``T_k`` on the coefficient space of polynomials of degree ``<= kmax``."""
    sizes = [pol_rank(d, j) for j in range(kmax + 1)]
    if sum(sizes) != coeff_matrix_size:
        raise DimMismatch("coefficient size does not match degree range")
    start = sum(sizes[:k])
    out = np.zeros((coeff_matrix_size, coeff_matrix_size), dtype=object)
    out[:] = Fraction(0)
    for i in range(start, start + sizes[k]):
        out[i, i] = Fraction(1)
    return out


def coefficient_projector(d: int, k: int, kmax: int) -> np.ndarray:
    """Exact ``T_k`` on coefficients of polynomials of degree ``<= kmax``."""
    size = sum(pol_rank(d, j) for j in range(kmax + 1))
    return taylor_block(size, d, k, kmax)


def block_pullback(a, kmax: int) -> np.ndarray:
    """Exact pull-back by ``A`` on polynomials of degree ``<= kmax`` (block diagonal)."""
    blocks = [pullback_matrix_on_pol(a, k) for k in range(kmax + 1)]
    size = sum(b.shape[0] for b in blocks)
    out = np.empty((size, size), dtype=object)
    out[:] = Fraction(0)
    pos = 0
    for b in blocks:
        n = b.shape[0]
        out[pos : pos + n, pos : pos + n] = b
        pos += n
    return out


@dataclass(frozen=True)
class TaylorCoefficients:
    """Taylor coefficients ``c_alpha = u^(alpha)(0) / alpha!`` for ``|alpha| <= K``."""

    coeffs: dict

    def degree(self, k: int) -> dict:
        return {a: c for a, c in self.coeffs.items() if sum(a) == k}

    def to_json(self) -> list:
        return [{"alpha": list(a), "re": float(np.real(c)), "im": float(np.imag(c))} for a, c in sorted(self.coeffs.items())]


def _window(grid: GridSpec, window: float) -> np.ndarray:
    return np.max(np.abs(grid.points()), axis=1) <= window + 1e-12


def monomials_on_grid(grid: GridSpec, kmax: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All monomials of degree ``<= kmax`` sampled on ``grid`` (columns)."""
    pts = grid.points()
    alphas = [a for k in range(kmax + 1) for a in multi_indices(grid.dim, k)]
    cols = [np.prod(pts ** np.array(a), axis=1) for a in alphas]
    return alphas, np.array(cols).T


def taylor_functionals(
    grid: GridSpec,
    kmax: int,
    window: float = 1.0,
    taper: str = "box",
) -> tuple[list, np.ndarray]:
    """Rows ``c_alpha`` with ``c_alpha . u`` estimating ``u^(alpha)(0)/alpha!``.

    The estimate comes from a least-squares fit of total degree ``kmax + 4``.
    With ``taper="box"`` the fit uses the points with ``max_i |x_i| <= window``
    (rows are zero outside). With ``taper="gaussian"`` every grid point is
    used with weight ``exp(-|x|^2 / window^2)``, which makes the rows smooth
    and rapidly decaying in frequency. Both satisfy ``c_alpha(x^beta) =
    delta_{alpha beta}`` for ``|beta| <= kmax + 4``.

    Returns the exponent list and a ``(n_alpha, N^d)`` array.

    Raises
    ------
    DegreeTooHigh
        If ``kmax > 8`` or the window holds too few points for the fit.
    """
    if kmax > MAX_GRID_DEGREE:
        raise DegreeTooHigh(f"degree {kmax} exceeds {MAX_GRID_DEGREE}")
    if taper not in ("box", "gaussian"):
        raise ValueError(f"unknown taper {taper!r}")
    fit_alphas, vand = monomials_on_grid(grid, kmax + 4)
    scale = np.array([window ** sum(a) for a in fit_alphas])
    if taper == "box":
        mask = _window(grid, window)
        sw = np.ones(int(mask.sum()))
    else:
        r2 = np.sum(grid.points() ** 2, axis=1)
        mask = r2 <= (8.0 * window) ** 2
        sw = np.exp(-0.5 * r2[mask] / window**2)
    v = vand[mask] / scale * sw[:, None]
    if v.shape[0] < v.shape[1] or np.linalg.matrix_rank(v) < v.shape[1]:
        raise DegreeTooHigh("fit window too small for the requested degree")
    pinv = np.linalg.pinv(v) * sw[None, :]
    n_keep = sum(pol_rank(grid.dim, j) for j in range(kmax + 1))
    rows = np.zeros((n_keep, grid.size))
    rows[:, mask] = pinv[:n_keep] / scale[:n_keep, None]
    return fit_alphas[:n_keep], rows


def taylor_coefficients(u: SampledFunction, kmax: int, window: float = 1.0) -> TaylorCoefficients:
    alphas, rows = taylor_functionals(u.grid, kmax, window)
    vals = rows @ u.values
    return TaylorCoefficients({a: complex(c) for a, c in zip(alphas, vals)})


def taylor_project(u: SampledFunction, k: int, window: float = 1.0) -> tuple[TaylorCoefficients, SampledFunction]:
    """``T_k u = sum_{|alpha| = k} c_alpha x^alpha`` sampled on ``u``'s grid."""
    tc = taylor_coefficients(u, k, window)
    sl = TaylorCoefficients(tc.degree(k))
    pts = u.grid.points()
    vals = np.zeros(u.grid.size, dtype=complex)
    for a, c in sl.coeffs.items():
        vals += c * np.prod(pts ** np.array(a), axis=1)
    return sl, u.with_values(vals)


def taylor_tail(u: SampledFunction, kmax: int, window: float = 1.0) -> SampledFunction:
    """``T^{>= K+1} u = u - sum_{k <= K} T_k u``."""
    return u.with_values(u.values - taylor_matrix(u.grid, range(kmax + 1), window) @ u.values)


def taylor_matrix(grid: GridSpec, degrees, window: float = 1.0) -> np.ndarray:
    """Dense matrix of ``sum_{k in degrees} T_k`` on ``grid``."""
    degrees = list(degrees)
    if not degrees:
        return np.zeros((grid.size, grid.size))
    kmax = max(degrees)
    alphas, rows = taylor_functionals(grid, kmax, window)
    pts = grid.points()
    out = np.zeros((grid.size, grid.size))
    for a, r in zip(alphas, rows):
        if sum(a) in degrees:
            out += np.outer(np.prod(pts ** np.array(a), axis=1), r)
    return out


def chi_multiplier(pg: PhaseGrid, sigma: float) -> np.ndarray:
    """Indicator of ``|rho|_{g + g^{-1}} <= sigma`` on the phase grid."""
    pts = pg.points()
    q = np.einsum("pi,ij,pj->p", pts, pg.phase_metric(), pts)
    return (np.sqrt(q) <= sigma).astype(float)


def truncated_projector_residual(
    k: int,
    k_prime: int,
    sigma: float,
    pg: PhaseGrid,
    window: float = 1.0,
) -> dict:
    """Operator norm of ``R_sigma = Op(chi)(T_k' Op(chi) T_k - T_k delta) Op(chi)``.

    ``Op(chi) = B^dagger M_chi B`` with the sharp indicator of the ball of
    radius ``sigma``. The grid is the one paired with ``pg``.

    Raises
    ------
    CapExceeded
        If the position grid has more than 4096 points.
    """
    grid = pg.grid
    if grid is None or grid.dim != 1:
        raise DimMismatch("truncated projector residual needs a 1-D paired grid")
    if grid.size > DEFAULT_MATRIX_CAP:
        raise CapExceeded("grid too large for dense residual")
    b = bargmann_matrix(pg)
    bd = bargmann_adjoint_matrix(pg)
    opchi = bd @ (chi_multiplier(pg, sigma)[:, None] * b)
    tk = taylor_matrix(grid, [k], window)
    tkp = taylor_matrix(grid, [k_prime], window)
    inner = tkp @ opchi @ tk - (tk if k == k_prime else 0.0)
    r = opchi @ inner @ opchi
    return {"norm": float(np.linalg.norm(r, 2)), "sigma": sigma, "k": k, "k_prime": k_prime}


def plateau_cutoff(x: np.ndarray, half_width: float, softness: float) -> np.ndarray:
    """Analytic plateau ``prod_i (erf((x_i + a)/s) - erf((x_i - a)/s)) / 2``.

    Equal to 1 up to ``exp(-((a - |x|)/s)^2)`` inside ``|x_i| < a`` and
    Gaussian-small outside. Its spectrum decays like ``exp(-s^2 xi^2 / 4)``,
    so it stays inside a bounded frequency box.
    """
    val = 0.5 * (erf((x + half_width) / softness) - erf((x - half_width) / softness))
    return np.prod(val, axis=-1) if val.ndim > 1 else val


def lowrank_singular_values(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Singular values of ``left @ right^dagger`` from thin QR factors."""
    _, rl = np.linalg.qr(left)
    _, rr = np.linalg.qr(right)
    return np.linalg.svd(rl @ rr.conj().T, compute_uv=False)


def lowrank_norm(left: np.ndarray, right: np.ndarray) -> float:
    """Operator 2-norm of ``left @ right^dagger``."""
    return float(lowrank_singular_values(left, right)[0])


def oblique_taylor_projector(
    e1,
    e2,
    k: int,
    pg: PhaseGrid,
    window: float = 1.0,
    cutoff: tuple[float, float] = (0.25, 0.125),
    cap: int = DEFAULT_MATRIX_CAP,
) -> dict:
    """``T~ = Op~(S) B T_k B^dagger Op~(S)^dagger`` on a 1-D model.

    ``S`` is the Lagrangian aligner of ``E1`` and ``E2`` in ``F = R^2``.
    Taylor polynomials live on ``E1``, which must be the position axis.
    Radial-gauge packets are used so that ``Op~(S)`` is unitary.

    ``T_k`` has rank ``pol_rank(1, k) = 1``, so ``T~ = U V^dagger`` is kept
    in factored form: ``U = Op~(S) B x^k`` and ``V = Op~(S) B c_k^dagger``.
    Idempotency and rank are computed from the factors. The dense matrix
    is included when ``len(pg) <= cap``.

    Monomials are not square integrable, so ``x^k`` is multiplied by the
    analytic plateau of half-width ``cutoff[0] * L`` and softness
    ``cutoff[1] * L`` (see ``plateau_cutoff``). The realized projector is
    ``M (C M)^{-1} C`` with ``M`` the localized monomials and ``C`` the
    Gaussian-tapered Taylor functionals, an exact projector onto ``span M``.

    Raises
    ------
    NotTransverse
        If ``E2`` is not transverse to ``E1``.
    """
    grid = pg.grid
    if grid is None or grid.dim != 1:
        raise DimMismatch("oblique projector needs a 1-D paired grid")
    f = canonical_phase_space(MetricSpace(grid.space.gram))
    e1 = np.asarray(e1, dtype=float).reshape(2, 1)
    if abs(e1[1, 0]) > 1e-12:
        raise DimMismatch("E1 must be the position axis of the phase grid")
    s = lagrangian_aligner(f, e1, np.asarray(e2, dtype=float).reshape(2, 1))
    b = bargmann_matrix(pg, gauge="radial")
    alphas, rows = taylor_functionals(grid, k, window, taper="gaussian")
    pts = grid.points()
    sel = [i for i, a in enumerate(alphas) if sum(a) == k]
    chi = plateau_cutoff(pts, cutoff[0] * grid.half_width, cutoff[1] * grid.half_width)
    mono = np.array([chi * np.prod(pts ** np.array(alphas[i]), axis=1) for i in sel]).T
    # T_k ~ M (C M)^{-1} C projects onto the localized monomials exactly
    coup = rows[sel] @ mono
    # (c B^dagger)^dagger = B c^T rescaled from grid to phase-grid weights
    func = (np.linalg.inv(coup) @ rows[sel]).T.astype(complex) / grid.weight
    phi = SymplecticLinearMap.from_matrix(s, f)
    left = op_tilde_apply(phi, b @ mono, pg)
    right = op_tilde_apply(phi, b @ func, pg) * pg.weight
    gram = right.conj().T @ left
    sv = lowrank_singular_values(left, right)
    out = {
        "left": left,
        "right": right,
        "aligner": s,
        "idempotency": float(lowrank_norm(left @ (gram - np.eye(len(sel))), right) / sv[0]),
        "rank": int(np.sum(sv > 1e-6 * sv[0])),
    }
    if pg.size <= cap:
        out["matrix"] = left @ right.conj().T
    return out


def _as_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def interior_product(p: dict, s) -> dict:
    """``k iota_s p``: the directional derivative ``d/dsigma . s`` of ``p``.

    Raises
    ------
    DegreeZero
        If ``p`` is a constant (degree 0).
    """
    if not p:
        return {}
    degs = {sum(a) for a in p}
    if degs == {0}:
        raise DegreeZero("interior product of a constant")
    out: dict = {}
    for alpha, c in p.items():
        for i, si in enumerate(s):
            if alpha[i] == 0 or si == 0:
                continue
            beta = list(alpha)
            beta[i] -= 1
            key = tuple(beta)
            out[key] = out.get(key, 0) + c * alpha[i] * si
    return {a: c for a, c in out.items() if c != 0}


def symmetric_product(p: dict, u_star) -> dict:
    """``u* v p``: multiplication by the linear form ``sum_i u*_i sigma_i``."""
    if not p:
        return {}
    return poly_mul(linear_form(list(u_star)), p)


def dual_vector(u, omega, d_a) -> list:
    """Components of ``u~*(v) = omega dA(v, u)``."""
    d_a = np.asarray(d_a, dtype=object)
    n = d_a.shape[0]
    return [omega * sum(d_a[i, j] * u[j] for j in range(n)) for i in range(n)]


def _op_matrix(op, d: int, k_in: int, k_out: int) -> np.ndarray:
    src, dst = PolySpace(d, k_in), PolySpace(d, k_out)
    idx = dst.index()
    m = np.empty((dst.dim, src.dim), dtype=object)
    m[:] = Fraction(0)
    for j, alpha in enumerate(src.basis):
        for beta, c in op({alpha: Fraction(1)}).items():
            m[idx[beta], j] += c
    return m


def weyl_commutator(s, u, omega, d_a, k: int) -> dict:
    """``[k iota_s, u v]`` as an exact matrix on ``Pol_k``.

    ``u v`` multiplies by ``u~*`` with ``u~*(v) = omega dA(v, u)``, so the
    commutator equals ``omega dA(s, u) Id``. On ``Pol_0`` the term
    ``u v (iota_s p)`` is zero. Inputs are converted to ``Fraction``.

    Returns
    -------
    dict
        ``matrix`` (object array of Fractions), ``scalar`` (the expected
        value ``omega dA(s, u)``) and ``exact`` (whether the matrix equals
        ``scalar * Id`` exactly).
    """
    d_a = np.array([[_as_fraction(x) for x in row] for row in np.asarray(d_a, dtype=object)], dtype=object)
    if d_a.shape[0] != d_a.shape[1] or np.any(d_a + d_a.T != 0):
        raise ValueError("dA must be antisymmetric")
    d = d_a.shape[0]
    s = [_as_fraction(x) for x in s]
    u = [_as_fraction(x) for x in u]
    omega = _as_fraction(omega)
    us = dual_vector(u, omega, d_a)
    mult_k = _op_matrix(lambda p: symmetric_product(p, us), d, k, k + 1)
    der_k1 = _op_matrix(lambda p: interior_product(p, s), d, k + 1, k)
    first = der_k1.dot(mult_k)
    if k == 0:
        second = np.zeros_like(first)
        second[:] = Fraction(0)
    else:
        der_k = _op_matrix(lambda p: interior_product(p, s), d, k, k - 1)
        mult_k1 = _op_matrix(lambda p: symmetric_product(p, us), d, k - 1, k)
        second = mult_k1.dot(der_k)
    comm = first - second
    scalar = omega * sum(s[i] * d_a[i, j] * u[j] for i in range(d) for j in range(d))
    n = comm.shape[0]
    ident = np.empty((n, n), dtype=object)
    ident[:] = Fraction(0)
    for i in range(n):
        ident[i, i] = scalar
    return {"matrix": comm, "scalar": scalar, "exact": bool(np.all(comm == ident))}
