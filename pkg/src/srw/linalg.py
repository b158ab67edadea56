"""Symmetric linear algebra kernels: eigendecomposition, spectrahedron
projection and Mahalanobis-type cost matrices.

Symmetric matrices are represented as plain ``numpy`` arrays normalized
through :func:`symmetrize`, which makes ``A[i, j] == A[j, i]`` hold exactly
(floating-point addition is commutative). Matrices constrained to the set
``R = {0 <= Omega <= I, tr(Omega) = k}`` are wrapped in :class:`OmegaMatrix`.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput

__all__ = [
    "EigenDecomposition",
    "OmegaMatrix",
    "symmetrize",
    "eig_sym",
    "capped_simplex_projection",
    "project_spectrahedron",
    "top_k_projector",
    "mahalanobis_cost",
]


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a.T) / 2``, exactly symmetric entrywise."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    Column ``l`` of ``eigenvectors`` is paired with ``eigenvalues[l]``.
    The basis inside a degenerate eigenspace is implementation-defined;
    downstream code must only rely on invariant quantities (traces, inner
    products, projectors).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True, eq=False)
class OmegaMatrix:
    """Symmetric matrix constrained to ``{0 <= Omega <= I, tr(Omega) = k}``.

    Construction checks shape, symmetry and the trace; the eigenvalue bounds
    are guaranteed by the constructing operations (capped-simplex projection,
    convex combinations of projectors) and can be re-checked with
    :meth:`is_feasible`.
    """

    matrix: np.ndarray
    k: int

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInput("omega must be a square matrix")
        if not np.isfinite(m).all():
            raise InvalidInput("omega entries must be finite")
        d = m.shape[0]
        if not 1 <= self.k <= d:
            raise InvalidInput(f"k must be in [1, {d}], got {self.k}")
        if m.size and abs(m - m.T).max() > 1e-10 * (1.0 + abs(m).max()):
            raise InvalidInput("omega must be symmetric")
        if abs(np.trace(m) - self.k) > 1e-8 * max(1.0, self.k):
            raise InvalidInput("trace of omega must equal k")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_feasible(self, atol: float = 1e-8) -> bool:
        """Check the spectral bounds ``0 <= eigenvalues <= 1`` up to atol."""
        w = np.linalg.eigvalsh(self.matrix)
        return bool(w[0] >= -atol and w[-1] <= 1.0 + atol)


def eig_sym(a: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Deterministic for a fixed input: each eigenvector is normalized so that
    its largest-magnitude component is positive.

    Parameters
    ----------
    a : array-like, shape (d, d)
        Symmetric matrix with finite entries.

    Returns
    -------
    EigenDecomposition
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput("expected a square matrix")
    if not np.isfinite(m).all():
        raise InvalidInput("matrix entries must be finite")
    if m.size and abs(m - m.T).max() > 1e-8 * (1.0 + abs(m).max()):
        raise InvalidInput("matrix is not symmetric")
    w, u = np.linalg.eigh(m)
    w = w[::-1].copy()
    u = u[:, ::-1]
    cols = np.arange(u.shape[1])
    signs = np.sign(u[np.abs(u).argmax(axis=0), cols])
    signs[signs == 0.0] = 1.0
    return EigenDecomposition(eigenvalues=w, eigenvectors=np.ascontiguousarray(u * signs))


def capped_simplex_projection(values: np.ndarray, k: int) -> np.ndarray:
    """Euclidean projection of a vector onto ``{0 <= p <= 1, sum(p) = k}``.

    The KKT conditions reduce the projection to ``p = clip(values - mu, 0, 1)``
    where the shift ``mu`` is the root of the piecewise-linear nonincreasing
    function ``g(mu) = sum(clip(values - mu, 0, 1)) - k``. The root is located
    exactly by scanning the sorted breakpoints; entries landing exactly on a
    cap are clamped to the boundary.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise InvalidInput("expected a vector")
    if not np.isfinite(v).all():
        raise InvalidInput("entries must be finite")
    d = v.size
    if not 0 <= k <= d:
        raise InvalidInput(f"budget k must be in [0, {d}], got {k}")
    if k == 0:
        return np.zeros(d)
    if k == d:
        return np.ones(d)
    bps = np.unique(np.concatenate([v - 1.0, v]))
    gv = np.clip(v[None, :] - bps[:, None], 0.0, 1.0).sum(axis=1)
    # gv is nonincreasing along bps, from g(min(v)-1) = d down to g(max(v)) = 0,
    # so a bracket around k always exists.
    i = int(np.searchsorted(-gv, -float(k), side="left"))
    if gv[i] == k:
        mu = bps[i]
    else:
        lo, hi = bps[i - 1], bps[i]
        slope = (gv[i] - gv[i - 1]) / (hi - lo)
        mu = lo + (k - gv[i - 1]) / slope
    return np.clip(v - mu, 0.0, 1.0)


def project_spectrahedron(a: np.ndarray, k: int) -> OmegaMatrix:
    """Frobenius projection of a symmetric matrix onto R.

    Eigendecomposes ``a``, projects the spectrum onto the capped simplex
    ``{0 <= p <= 1, sum(p) = k}`` and recomposes in the same eigenbasis.
    Exact in finitely many steps; no inner tolerance.
    """
    decomp = eig_sym(a)
    d = decomp.eigenvalues.size
    if not 1 <= k <= d:
        raise InvalidInput(f"k must be in [1, {d}], got {k}")
    p = capped_simplex_projection(decomp.eigenvalues, k)
    u = decomp.eigenvectors
    return OmegaMatrix(symmetrize((u * p) @ u.T), k)


def top_k_projector(decomp: EigenDecomposition, k: int) -> OmegaMatrix:
    """Orthogonal projector onto the span of the leading k eigenvectors.

    Maximizes ``<Omega | V>`` over R for the decomposed matrix V, with value
    equal to the sum of the k largest eigenvalues.
    """
    d = decomp.eigenvalues.size
    if not 1 <= k <= d:
        raise InvalidInput(f"k must be in [1, {d}], got {k}")
    uk = decomp.eigenvectors[:, :k]
    return OmegaMatrix(symmetrize(uk @ uk.T), k)


def mahalanobis_cost(x: np.ndarray, y: np.ndarray, omega) -> np.ndarray:
    """Pairwise costs ``C[i, j] = (x_i - y_j)^T Omega (x_i - y_j)``.

    Parameters
    ----------
    x : array, shape (n, d)
    y : array, shape (m, d)
    omega : OmegaMatrix or array, shape (d, d)
        Symmetric PSD weight matrix. ``Omega = I`` gives squared Euclidean
        costs.

    Returns
    -------
    array, shape (n, m)
        Nonnegative costs; rounding noise below zero is clamped to 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = omega.matrix if isinstance(omega, OmegaMatrix) else np.asarray(omega, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise InvalidInput("point arrays must be 2-D with a common dimension")
    d = x.shape[1]
    if w.shape != (d, d):
        raise InvalidInput(f"omega must have shape ({d}, {d}), got {w.shape}")
    xw = x @ w
    qx = np.einsum("ij,ij->i", xw, x)
    qy = np.einsum("ij,ij->i", y @ w, y)
    c = qx[:, None] + qy[None, :] - 2.0 * (xw @ y.T)
    return np.maximum(c, 0.0)
