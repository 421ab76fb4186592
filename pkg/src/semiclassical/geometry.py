"""Finite-dimensional linear algebra of metrics and symplectic forms.

Conventions
-----------
A phase point of ``F = E + E*`` is stored as the stacked coordinate vector
``(x, xi)`` where ``xi`` holds the components of a covector in the dual
basis. The canonical form is

    Omega((x1, xi1), (x2, xi2)) = <xi1|x2> - <xi2|x1>,

so its Gram matrix is ``[[0, -I], [I, 0]]``. For a bilinear form with Gram
matrix ``B`` the flat map ``u -> B(u, .)`` has matrix ``B.T``. The complex
structure is therefore ``J = G^{-1} Omega.T`` and satisfies

    g(u, v) = Omega(u, J v),    Omega(u, v) = g(J u, v).

The dual space ``E*`` carries the inverse metric ``g^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DegenerateForm, DimMismatch, NotLagrangian, NotTransverse, SingularMap

DEFAULT_TOL = 1e-10


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    return m


@dataclass(frozen=True)
class MetricSpace:
    """Real vector space ``R^n`` with an SPD Gram matrix.

    Parameters
    ----------
    gram : array_like
        ``n x n`` symmetric positive-definite matrix of the metric ``g``.
    """

    gram: np.ndarray

    def __post_init__(self):
        g = _as_matrix(self.gram, "gram")
        if g.shape[0] != g.shape[1]:
            raise ValueError("gram must be square")
        if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise ValueError("gram must be symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise ValueError("gram must be positive definite")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)

    @classmethod
    def euclidean(cls, n: int) -> "MetricSpace":
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.gram))

    def dual(self) -> "MetricSpace":
        """The dual space with the inverse metric."""
        return MetricSpace(np.linalg.inv(self.gram))

    def inner(self, u, v) -> np.ndarray:
        """``g(u, v)`` for vectors (last axis) ``u`` and ``v``."""
        return np.einsum("...i,ij,...j->...", np.asarray(u), self.gram, np.asarray(v))

    def norm(self, u) -> np.ndarray:
        return np.sqrt(np.abs(self.inner(u, u)))


@dataclass(frozen=True)
class SymplecticSpace:
    """Even-dimensional space with symplectic form, metric and ``J``.

    Use :func:`symplectic_space` or :func:`canonical_phase_space` to build
    one; ``j`` is always derived as ``metric^{-1} @ omega.T``.
    """

    omega: np.ndarray
    metric: np.ndarray
    j: np.ndarray

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    @property
    def metric_space(self) -> MetricSpace:
        return MetricSpace(self.metric)

    def form(self, u, v) -> np.ndarray:
        """``Omega(u, v)`` broadcast over leading axes."""
        return np.einsum("...i,ij,...j->...", np.asarray(u), self.omega, np.asarray(v))

    @property
    def flat(self) -> np.ndarray:
        """Matrix of the flat map ``u -> Omega(u, .)``."""
        return self.omega.T


def symplectic_space(omega, metric) -> SymplecticSpace:
    """Assemble a :class:`SymplecticSpace` and derive ``J``.

    Raises
    ------
    DegenerateForm
        If ``omega`` is not antisymmetric or is singular, or if the
        dimension is odd.
    """
    om = _as_matrix(omega, "omega")
    g = MetricSpace(metric).gram
    if om.shape != g.shape:
        raise DimMismatch("omega and metric must have the same shape")
    if om.shape[0] % 2:
        raise DegenerateForm("a symplectic space must have even dimension")
    if np.max(np.abs(om + om.T)) > DEFAULT_TOL * max(1.0, np.max(np.abs(om))):
        raise DegenerateForm("omega must be antisymmetric")
    if abs(np.linalg.det(om)) < 1e-12:
        raise DegenerateForm("omega is degenerate")
    j = np.linalg.solve(g, om.T)
    for a in (om, j):
        a.setflags(write=False)
    return SymplecticSpace(om, g, j)


def canonical_omega(n: int) -> np.ndarray:
    """Gram matrix of the canonical form on ``R^n + (R^n)*``."""
    z = np.zeros((n, n))
    e = np.eye(n)
    return np.block([[z, -e], [e, z]])


def canonical_phase_space(e: MetricSpace) -> SymplecticSpace:
    """Return ``F = E + E*`` with canonical form and metric ``g + g^{-1}``.

    Examples
    --------
    >>> f = canonical_phase_space(MetricSpace([[4.0]]))
    >>> f.metric
    array([[4.  , 0.  ],
           [0.  , 0.25]])
    """
    n = e.dim
    metric = linalg.block_diag(e.gram, np.linalg.inv(e.gram))
    return symplectic_space(canonical_omega(n), metric)


def check_compatibility(s: SymplecticSpace) -> dict:
    """Residuals of the compatible-triple identities.

    Returns a dict with the max-abs residuals of ``J^2 + Id``,
    ``g(Ju, Jv) - g(u, v)`` and ``Omega(Ju, Jv) - Omega(u, v)`` (as matrices,
    i.e. over all basis pairs).
    """
    j, g, om = s.j, s.metric, s.omega
    n = s.dim
    return {
        "j_squared": float(np.max(np.abs(j @ j + np.eye(n)))),
        "metric_invariance": float(np.max(np.abs(j.T @ g @ j - g))),
        "form_invariance": float(np.max(np.abs(j.T @ om @ j - om))),
    }


def _orthonormalize(basis: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Columns of ``basis`` orthonormalized for ``gram`` (same span)."""
    m = basis.T @ gram @ basis
    c = np.linalg.cholesky(m)
    return basis @ np.linalg.inv(c).T


def _check_lagrangian(s: SymplecticSpace, basis: np.ndarray, tol: float) -> None:
    if basis.shape != (s.dim, s.dim // 2):
        raise NotLagrangian(f"need {s.dim // 2} basis vectors of length {s.dim}")
    if np.linalg.matrix_rank(basis, tol=tol) < s.dim // 2:
        raise NotLagrangian("basis vectors are linearly dependent")
    b = _orthonormalize(basis, s.metric)
    if np.max(np.abs(b.T @ s.omega @ b)) > tol:
        raise NotLagrangian("Omega does not vanish on the subspace")


def lagrangian_orthocomplement(s: SymplecticSpace, e_basis, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Basis of the g-orthogonal complement of a Lagrangian subspace.

    The result is ``J @ e_basis``; it spans ``E^{perp_g}``, which is again
    Lagrangian.

    Raises
    ------
    NotLagrangian
        If ``Omega`` restricted to ``span(e_basis)`` exceeds ``tol``.
    """
    e = np.atleast_2d(np.asarray(e_basis, dtype=float))
    if e.shape[0] != s.dim:
        e = e.T
    _check_lagrangian(s, e, tol)
    je = s.j @ e
    scale = max(1.0, np.max(np.abs(e)) * np.max(np.abs(je)))
    if np.max(np.abs(e.T @ s.metric @ je)) > tol * scale:
        raise NotLagrangian("J(E) is not g-orthogonal to E; the triple is not compatible")
    return je


@dataclass(frozen=True)
class MetaplecticSplit:
    """Orthogonal splitting ``F + F* = K + N`` over a symplectic space ``F``.

    ``K = {(nu, flat(nu))}`` and ``N = {(zeta, -flat(zeta))}``, where
    ``flat`` is the flat map of the form on ``F``. The basis matrices are
    orthonormal for the metric of the doubled space.
    """

    base: SymplecticSpace
    parent: SymplecticSpace
    k_basis: np.ndarray
    n_basis: np.ndarray
    proj_k: np.ndarray
    proj_n: np.ndarray
    residuals: dict = field(default_factory=dict)

    def components(self, v) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(nu, zeta)`` with ``v = (nu, flat nu) + (zeta, -flat zeta)``."""
        v = np.asarray(v, dtype=float)
        m = self.base.dim
        x, xi = v[..., :m], v[..., m:]
        w = np.linalg.solve(self.base.flat, xi.T).T if xi.ndim > 1 else np.linalg.solve(self.base.flat, xi)
        return 0.5 * (x + w), 0.5 * (x - w)

    def k_coordinates(self, v) -> np.ndarray:
        """Coordinates of the K-component in the orthonormal ``k_basis``."""
        return np.asarray(v) @ self.parent.metric @ self.k_basis

    def n_coordinates(self, v) -> np.ndarray:
        return np.asarray(v) @ self.parent.metric @ self.n_basis


def metaplectic_split(f: SymplecticSpace, tol: float = DEFAULT_TOL) -> MetaplecticSplit:
    """Split the doubled space ``F + F*`` into ``K`` and ``N``.

    The doubled space is ``canonical_phase_space(F as a metric space)``.
    Restricted to ``K`` the doubled form and metric equal ``2 Omega`` and
    ``2 g`` through ``(nu, flat nu) -> nu``; on ``N`` they are ``-2 Omega``
    and ``2 g``. These and the orthogonality residuals are reported in
    ``residuals``.

    Raises
    ------
    DegenerateForm
        If the flat map of ``f`` is not invertible.
    """
    m = f.dim
    w = f.flat
    if abs(np.linalg.det(w)) < 1e-12:
        raise DegenerateForm("flat map of Omega is not invertible")
    parent = canonical_phase_space(MetricSpace(f.metric))
    eye = np.eye(m)
    k_raw = np.vstack([eye, w])
    n_raw = np.vstack([eye, -w])
    winv = np.linalg.inv(w)
    proj_k = 0.5 * np.block([[eye, winv], [w, eye]])
    proj_n = np.eye(2 * m) - proj_k
    om2, g2 = parent.omega, parent.metric
    k_b = _orthonormalize(k_raw, g2)
    n_b = _orthonormalize(n_raw, g2)
    res = {
        "omega_orthogonality": float(np.max(np.abs(k_raw.T @ om2 @ n_raw))),
        "metric_orthogonality": float(np.max(np.abs(k_raw.T @ g2 @ n_raw))),
        "idempotent": float(max(np.max(np.abs(proj_k @ proj_k - proj_k)), np.max(np.abs(proj_k @ proj_n)))),
        "k_form": float(np.max(np.abs(k_raw.T @ om2 @ k_raw - 2 * f.omega))),
        "k_metric": float(np.max(np.abs(k_raw.T @ g2 @ k_raw - 2 * f.metric))),
        "n_form": float(np.max(np.abs(n_raw.T @ om2 @ n_raw + 2 * f.omega))),
        "n_metric": float(np.max(np.abs(n_raw.T @ g2 @ n_raw - 2 * f.metric))),
    }
    for a in (k_b, n_b, proj_k, proj_n):
        a.setflags(write=False)
    return MetaplecticSplit(f, parent, k_b, n_b, proj_k, proj_n, res)


def symplectic_residual(s: SymplecticSpace, mat) -> float:
    """``max |M^T Omega M - Omega|``."""
    mat = np.asarray(mat, dtype=float)
    return float(np.max(np.abs(mat.T @ s.omega @ mat - s.omega)))


def lagrangian_aligner(f: SymplecticSpace, e1_basis, e2_basis, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Symplectic ``S`` fixing ``E1`` pointwise and sending ``E1^{perp_g}`` to ``E2``.

    ``E1`` is given a g-orthonormal basis ``e``; the dual basis ``f`` of
    ``E2`` with ``Omega(e_i, f_j) = delta_ij`` is the image of ``J e``.

    Raises
    ------
    NotLagrangian
        If either basis does not span a Lagrangian subspace.
    NotTransverse
        If ``E1`` and ``E2`` intersect (smallest singular value of the
        stacked normalized bases below ``tol``).
    """
    e1 = np.asarray(e1_basis, dtype=float).reshape(f.dim, -1)
    e2 = np.asarray(e2_basis, dtype=float).reshape(f.dim, -1)
    _check_lagrangian(f, e1, tol)
    _check_lagrangian(f, e2, tol)
    e = _orthonormalize(e1, f.metric)
    f2 = _orthonormalize(e2, f.metric)
    sv = np.linalg.svd(np.hstack([e, f2]), compute_uv=False)
    if sv[-1] < tol:
        raise NotTransverse("E1 and E2 are not transverse")
    pairing = e.T @ f.omega @ f2
    dual = f2 @ np.linalg.inv(pairing)
    src = np.hstack([e, f.j @ e])
    dst = np.hstack([e, dual])
    return dst @ np.linalg.inv(src)


@dataclass(frozen=True)
class LinearMap:
    """Invertible linear map ``domain -> codomain`` between metric spaces."""

    domain: MetricSpace
    codomain: MetricSpace
    matrix: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.matrix, "matrix")
        if a.shape != (self.codomain.dim, self.domain.dim):
            raise DimMismatch("matrix shape does not match domain/codomain")
        if not np.all(np.isfinite(a)):
            raise SingularMap("matrix has non-finite entries")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def on(cls, matrix, space: MetricSpace | None = None) -> "LinearMap":
        """Endomorphism of ``space`` (Euclidean by default)."""
        a = _as_matrix(matrix, "matrix")
        sp = space if space is not None else MetricSpace.euclidean(a.shape[0])
        return cls(sp, sp, a)

    @property
    def det(self) -> float:
        """``|det|`` measured with the metric densities of both spaces."""
        a = self.matrix
        return float(abs(np.linalg.det(a)) * np.sqrt(self.codomain.det / self.domain.det))

    @property
    def cond(self) -> float:
        return float(np.linalg.cond(self.matrix))

    def check_invertible(self, tol: float = 1e-12) -> None:
        if abs(np.linalg.det(self.matrix)) < tol or not np.isfinite(self.cond):
            raise SingularMap("linear map is singular")

    def inverse(self) -> "LinearMap":
        self.check_invertible()
        return LinearMap(self.codomain, self.domain, np.linalg.inv(self.matrix))

    def compose(self, other: "LinearMap") -> "LinearMap":
        """``self o other``."""
        return LinearMap(other.domain, self.codomain, self.matrix @ other.matrix)

    def induced_phase_map(self) -> "LinearMap":
        """``Phi = phi^{-1} + phi^*`` from ``codomain + codomain*`` to ``domain + domain*``.

        With coordinates ``(y, eta)`` this is ``(A^{-1} y, A^T eta)``.
        """
        self.check_invertible()
        a = self.matrix
        src = MetricSpace(linalg.block_diag(self.codomain.gram, np.linalg.inv(self.codomain.gram)))
        dst = MetricSpace(linalg.block_diag(self.domain.gram, np.linalg.inv(self.domain.gram)))
        return LinearMap(src, dst, linalg.block_diag(np.linalg.inv(a), a.T))
