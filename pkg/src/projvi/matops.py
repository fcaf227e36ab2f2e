"""Dense matrix decompositions and the maps derived from them.

Every routine takes and returns 2-D ``float64`` arrays.  The LAPACK drivers
behind :mod:`numpy.linalg` do the heavy lifting; this module pins down the
conventions (sign fixes, ordering, tolerances) the manifold code relies on.
"""

import numpy as np

from .errors import NonFinite, NotPositiveDefinite, RankDeficient, TooFarFromManifold

# relative tolerances
RANK_TOL_QR = 1e-12
RANK_TOL_POLAR = 1e-10
SPD_TOL = 1e-12
SERIES_RADIUS = 0.5

_SERIES_COEFFS = (1.0, -0.5, 3.0 / 8.0, -5.0 / 16.0)


def as_matrix(Y, name="matrix"):
    """Return ``Y`` as a finite 2-D float64 array (1-D input becomes a column)."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return Y


def qr_positive(Y):
    """Thin QR factorization with a strictly positive diagonal in ``R``.

    Parameters
    ----------
    Y : array_like, shape (n, m), n >= m
        Matrix of full column rank.

    Returns
    -------
    Q : ndarray, shape (n, m)
        Orthonormal columns.
    R : ndarray, shape (m, m)
        Upper triangular with ``diag(R) > 0``.

    Raises
    ------
    RankDeficient
        If some ``|R_ii|`` falls below ``1e-12 * ||Y||_F``.
    """
    Y = as_matrix(Y, "Y")
    n, m = Y.shape
    if n < m:
        raise RankDeficient(f"qr_positive needs n >= m, got {n}x{m}")
    Q, R = np.linalg.qr(Y, mode="reduced")
    d = np.diag(R)
    scale = np.linalg.norm(Y)
    if scale == 0.0 or np.min(np.abs(d)) < RANK_TOL_QR * scale:
        raise RankDeficient("matrix is numerically rank deficient")
    signs = np.where(d < 0.0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def qf(Y):
    """Q factor of :func:`qr_positive`."""
    return qr_positive(Y)[0]


def sym_eig(S):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    The input is symmetrized first, so roundoff-level asymmetry (as produced by
    forming ``Y.T @ Y``) is tolerated.
    """
    S = as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"sym_eig needs a square matrix, got {S.shape}")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return w, V


def svd_thin(Y):
    """Thin SVD ``Y = U @ diag(s) @ V.T`` with singular values descending.

    Returns ``(U, Sigma, V)`` where ``Sigma`` is the square diagonal matrix and
    ``V`` (not ``V.T``) is orthogonal.
    """
    Y = as_matrix(Y, "Y")
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    return U, np.diag(s), Vt.T


def inv_sqrt_spd(S):
    """Inverse square root ``V diag(lam**-0.5) V.T`` of an SPD matrix."""
    w, V = sym_eig(S)
    if w[-1] <= 0.0 or w[0] <= SPD_TOL * w[-1]:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[0]:.3e} not positive relative to largest {w[-1]:.3e}"
        )
    M = (V * (1.0 / np.sqrt(w))) @ V.T
    return 0.5 * (M + M.T)


def _check_polar_rank(s):
    if s[0] == 0.0 or s[-1] <= RANK_TOL_POLAR * s[0]:
        raise RankDeficient("matrix is numerically rank deficient")


def polar_factor(Y, method="svd"):
    """Orthonormal polar factor of a full-column-rank matrix.

    This is the Frobenius-nearest point of the Stiefel manifold.  ``method``
    selects the route: ``"svd"`` computes ``U @ V.T``, ``"inv_sqrt"`` computes
    ``Y @ (Y.T Y)^{-1/2}``.
    """
    Y = as_matrix(Y, "Y")
    if method == "svd":
        U, s, Vt = np.linalg.svd(Y, full_matrices=False)
        _check_polar_rank(s)
        return U @ Vt
    if method == "inv_sqrt":
        try:
            return Y @ inv_sqrt_spd(Y.T @ Y)
        except NotPositiveDefinite as exc:
            raise RankDeficient(str(exc)) from None
    raise ValueError(f"unknown polar method {method!r}")


def polar_factor_series(Y, order=3):
    """Approximate polar factor from the truncated binomial series.

    With ``E = Y.T Y - I`` this returns ``Y (I - E/2 + 3E^2/8 - 5E^3/16)``
    truncated after ``order`` correction terms.  Only valid close to the
    manifold; ``||E||_F >= 0.5`` raises :class:`TooFarFromManifold`.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"series order must be 1, 2 or 3, got {order}")
    Y = as_matrix(Y, "Y")
    m = Y.shape[1]
    eye = np.eye(m)
    E = Y.T @ Y - eye
    E = 0.5 * (E + E.T)
    if np.linalg.norm(E) >= SERIES_RADIUS:
        raise TooFarFromManifold(f"||Y^T Y - I||_F = {np.linalg.norm(E):.3e} >= {SERIES_RADIUS}")
    M = eye.copy()
    Ek = eye
    for c in _SERIES_COEFFS[1 : order + 1]:
        Ek = Ek @ E
        M = M + c * Ek
    return Y @ M
