"""Objective functions on the sphere and the Stiefel manifold, with oracles."""

from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional

import numpy as np

from . import manifold as mf
from . import matops
from .errors import ShapeInvalid, ShapeMismatch, SingularCrossProduct

SYM_TOL = 1e-12
# brute-force the Brockett column pairing up to this many columns
BRUTE_FORCE_MAX_M = 4


def _check_symmetric(A, name="A"):
    A = matops.as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ShapeInvalid(f"{name} must be square, got {A.shape}")
    scale = max(np.linalg.norm(A), 1.0)
    if np.linalg.norm(A - A.T) > SYM_TOL * scale:
        raise ShapeInvalid(f"{name} is not symmetric")
    return A


@dataclass(frozen=True)
class Rayleigh:
    """``f(x) = -x^T A x`` on the unit sphere; minimized by a top eigenvector."""

    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _check_symmetric(self.A))

    @property
    def shape(self):
        return (self.A.shape[0], 1)


@dataclass(frozen=True)
class Brockett:
    """``f(X) = tr(X^T A X N)`` with ``N = diag(mu)``, ``0 <= mu_1 <= ... <= mu_m``."""

    A: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        A = _check_symmetric(self.A)
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim == 2:
            if np.any(mu != np.diag(np.diag(mu))):
                raise ShapeInvalid("N must be diagonal")
            mu = np.diag(mu).copy()
        if mu.ndim != 1 or not 1 <= mu.size <= A.shape[0]:
            raise ShapeInvalid(f"N must have between 1 and {A.shape[0]} diagonal entries")
        if np.any(mu < 0.0) or np.any(np.diff(mu) < 0.0):
            raise ShapeInvalid("diagonal of N must be nonnegative and ascending")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "mu", mu)

    @property
    def shape(self):
        return (self.A.shape[0], self.mu.size)


@dataclass(frozen=True)
class Procrustes:
    """``f(X) = ||A X - B||_F^2`` on ``St(m, n)`` with ``A`` l-by-n, ``B`` l-by-m.

    ``x_true`` optionally records a known global minimizer (a noiseless
    generated instance); it is only used by :func:`oracle`.
    """

    A: np.ndarray
    B: np.ndarray
    x_true: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        A = matops.as_matrix(self.A, "A")
        B = matops.as_matrix(self.B, "B")
        l, n = A.shape
        lb, m = B.shape
        # l > m is relaxed to l >= m so square balanced instances are allowed
        if lb != l or not (l >= n >= m):
            raise ShapeInvalid(f"Procrustes needs A l×n, B l×m with l >= n >= m; got {A.shape}, {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def shape(self):
        return (self.A.shape[1], self.B.shape[1])

    @property
    def balanced(self):
        return self.A.shape[1] == self.B.shape[1]


@dataclass(frozen=True)
class Oracle:
    f_star: float
    X_star: Optional[np.ndarray]
    method: str


def default_manifold(P, **options):
    """The manifold a problem lives on (sphere for Rayleigh, Stiefel otherwise)."""
    n, m = P.shape
    if isinstance(P, Rayleigh):
        return mf.Sphere(n, **options)
    return mf.Stiefel(n, m, **options)


def _check_point(P, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and P.shape[1] == 1:
        X = X[:, None]
    if X.shape != P.shape:
        raise ShapeMismatch(f"point has shape {X.shape}, problem expects {P.shape}")
    return X


def value(P, X):
    X = _check_point(P, X)
    if isinstance(P, Rayleigh):
        return -float(np.sum(X * (P.A @ X)))
    if isinstance(P, Brockett):
        return float(np.sum(X * (P.A @ X) * P.mu))
    R = P.A @ X - P.B
    return float(np.sum(R * R))


def euclidean_grad(P, X):
    """Gradient of the natural extension of ``f`` to the ambient space."""
    X = _check_point(P, X)
    if isinstance(P, Rayleigh):
        return -2.0 * (P.A @ X)
    if isinstance(P, Brockett):
        return 2.0 * (P.A @ X) * P.mu
    return 2.0 * (P.A.T @ (P.A @ X - P.B))


def riemannian_grad(P, M, X):
    return mf.riemannian_grad(M, X, euclidean_grad(P, X))


def brockett_pairing(eigenvalues, mu):
    """Column order for the Brockett minimizer.

    Returns ``idx`` such that column ``j`` of the minimizer is the eigenvector
    of ``eigenvalues[idx[j]]``.  By the rearrangement inequality the smallest
    eigenvalue goes with the largest ``mu``.
    """
    return list(range(len(mu)))[::-1]


def _brockett_brute_force(w, mu):
    m = len(mu)
    best = None
    for perm in permutations(range(m)):
        val = float(np.dot(w[list(perm)], mu))
        if best is None or val < best[0]:
            best = (val, list(perm))
    return best


def oracle(P, M=None, reference_iters=None, seed=0):
    """Optimal value (and a minimizer when one is known in closed form).

    Unbalanced Procrustes instances without a recorded ``x_true`` fall back to
    :func:`numerical_oracle`, which needs ``reference_iters``.
    """
    if isinstance(P, Rayleigh):
        w, V = matops.sym_eig(P.A)
        x = V[:, -1:].copy()
        return Oracle(-float(w[-1]), x, "eigendecomposition")
    if isinstance(P, Brockett):
        m = P.mu.size
        w, V = matops.sym_eig(P.A)
        idx = brockett_pairing(w[:m], P.mu)
        if m <= BRUTE_FORCE_MAX_M:
            val, perm = _brockett_brute_force(w[:m], P.mu)
            rule_val = float(np.dot(w[idx], P.mu))
            if rule_val > val + 1e-12 * max(1.0, abs(val)):
                # closed-form pairing disagrees with enumeration; trust enumeration
                idx = perm
        X = V[:, idx].copy()
        return Oracle(value(P, X), X, "eigendecomposition")
    if P.balanced:
        U, S, V = matops.svd_thin(P.B.T @ P.A)
        s = np.diag(S)
        if s[-1] <= 1e-12 * max(s[0], 1e-300):
            raise SingularCrossProduct("B^T A is singular; the balanced minimizer is not unique")
        X = (U @ V.T).T
        return Oracle(value(P, X), X, "svd")
    if P.x_true is not None:
        X = np.asarray(P.x_true, dtype=np.float64)
        return Oracle(value(P, X), X, "construction")
    if reference_iters is None:
        return None
    return numerical_oracle(P, M or default_manifold(P), reference_iters, seed=seed)


def numerical_oracle(P, M, max_iter, h=None, seed=0, starts=4):
    """Best value found by long Riemannian gradient descent runs from several starts."""
    if h is None:
        L = 2.0 * np.linalg.norm(P.A, 2) ** 2 if isinstance(P, Procrustes) else 2.0 * np.linalg.norm(P.A, 2)
        h = 0.1 / max(L, 1e-12)
    best = None
    for s in range(starts):
        X = mf.random_point(M, seed + s)
        for _ in range(max_iter):
            X = mf.retract(M, X, -h * riemannian_grad(P, M, X))
        f = value(P, X)
        if best is None or f < best[0]:
            best = (f, X)
    return Oracle(best[0], best[1], "numerical")


def log_spectrum(n, kappa=1e3, top=1.0):
    """``n`` log-spaced eigenvalues from ``top / kappa`` up to ``top``."""
    return top * np.logspace(-np.log10(kappa), 0.0, n)


def random_orthogonal(n, seed):
    rng = np.random.default_rng(seed)
    return matops.qf(rng.standard_normal((n, n)))


def gen_symmetric(n, spectrum, seed):
    """``Q diag(spectrum) Q^T`` for a seeded random orthogonal ``Q``."""
    if n < 2:
        raise ShapeInvalid("n must be at least 2")
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.shape != (n,):
        raise ShapeInvalid(f"spectrum must have {n} entries")
    Q = random_orthogonal(n, seed)
    A = (Q * spectrum) @ Q.T
    return 0.5 * (A + A.T)


def gen_procrustes(l, n, m, seed, sigma=0.0):
    """Seeded ``(A, B, X0)`` with ``B = A X0 + sigma * noise``."""
    if not (l >= n >= m >= 1 and l > m):
        raise ShapeInvalid(f"need l >= n >= m >= 1 and l > m, got l={l}, n={n}, m={m}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((l, n))
    X0 = matops.polar_factor(rng.standard_normal((n, m)))
    B = A @ X0
    if sigma > 0.0:
        B = B + sigma * rng.standard_normal((l, m))
    return A, B, X0
