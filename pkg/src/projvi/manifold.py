"""Geometry of the unit sphere and the Stiefel manifold as embedded submanifolds.

Points, tangent vectors and momenta are all plain ``(n, m)`` arrays in the
ambient space; sphere points are ``(n, 1)`` columns so that ``St(1, n)`` and
``S^{n-1}`` share one representation.  The metric is always the Frobenius
inner product inherited from the embedding.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import matops
from .errors import AntipodalPoints, DegenerateInput, RankDeficient, ShapeMismatch

SPHERE = "sphere"
STIEFEL = "stiefel"

SPHERE_PROJECTIONS = ("normalize",)
STIEFEL_PROJECTIONS = ("polar", "qf", "polar_series")
SPHERE_RETRACTIONS = ("exponential", "projective")
STIEFEL_RETRACTIONS = ("polar", "qf")

# below this angle the sphere exp/log/transport use Taylor-guarded coefficients
SMALL_ANGLE = 1e-8
ANTIPODAL_TOL = 1e-8


@dataclass(frozen=True)
class ManifoldSpec:
    """Which manifold, plus the point projection and retraction to use on it."""

    kind: str
    n: int
    m: int = 1
    point_projection: str = ""
    retraction: str = ""
    series_order: int = 3

    def __post_init__(self):
        if self.kind == SPHERE:
            if self.m != 1 or self.n < 2:
                raise ValueError(f"sphere needs n >= 2 and m == 1, got n={self.n}, m={self.m}")
            projections, retractions = SPHERE_PROJECTIONS, SPHERE_RETRACTIONS
            defaults = ("normalize", "exponential")
        elif self.kind == STIEFEL:
            if not self.n >= self.m >= 1:
                raise ValueError(f"Stiefel needs n >= m >= 1, got n={self.n}, m={self.m}")
            projections, retractions = STIEFEL_PROJECTIONS, STIEFEL_RETRACTIONS
            defaults = ("polar", "polar")
        else:
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if not self.point_projection:
            object.__setattr__(self, "point_projection", defaults[0])
        if not self.retraction:
            object.__setattr__(self, "retraction", defaults[1])
        if self.point_projection not in projections:
            raise ValueError(f"{self.kind} does not support projection {self.point_projection!r}")
        if self.retraction not in retractions:
            raise ValueError(f"{self.kind} does not support retraction {self.retraction!r}")
        if self.series_order not in (1, 2, 3):
            raise ValueError(f"series order must be 1, 2 or 3, got {self.series_order}")

    @property
    def shape(self):
        return (self.n, self.m)

    @property
    def is_sphere(self):
        return self.kind == SPHERE


def Sphere(n, retraction="exponential"):
    return ManifoldSpec(SPHERE, n, 1, "normalize", retraction)


def Stiefel(n, m, point_projection="polar", retraction="polar", series_order=3):
    return ManifoldSpec(STIEFEL, n, m, point_projection, retraction, series_order)


def _check_shape(M, Y, name="input"):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1 and M.m == 1:
        Y = Y[:, None]
    if Y.shape != M.shape:
        raise ShapeMismatch(f"{name} has shape {Y.shape}, expected {M.shape}")
    return Y


def _sym(S):
    return 0.5 * (S + S.T)


def project_point(M, Y):
    """Map an ambient matrix onto the manifold with ``M.point_projection``."""
    Y = _check_shape(M, Y)
    if M.is_sphere:
        nrm = np.linalg.norm(Y)
        if not nrm > 0.0:
            raise DegenerateInput("cannot normalize the zero vector")
        return Y / nrm
    try:
        if M.point_projection == "polar":
            return matops.polar_factor(Y)
        if M.point_projection == "qf":
            return matops.qf(Y)
        return matops.polar_factor_series(Y, M.series_order)
    except RankDeficient as exc:
        raise DegenerateInput(str(exc)) from None


def project_tangent(M, X, Z):
    """Orthogonal projection of ``Z`` onto the tangent space at ``X``."""
    X = _check_shape(M, X, "point")
    Z = _check_shape(M, Z, "vector")
    return Z - X @ _sym(X.T @ Z)


def riemannian_grad(M, X, g_euclid):
    """Riemannian gradient from the Euclidean gradient of any smooth extension."""
    return project_tangent(M, X, g_euclid)


def sphere_exp(x, v):
    """Exponential map of the sphere (columns ``x`` on the sphere, ``v`` tangent)."""
    theta = np.linalg.norm(v)
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return (1.0 - 0.5 * t2) * x + (1.0 - t2 / 6.0) * v
    return np.cos(theta) * x + (np.sin(theta) / theta) * v


def sphere_log(x, y):
    """Inverse of :func:`sphere_exp` along the minimal geodesic."""
    c = float(np.clip(np.sum(x * y), -1.0, 1.0))
    w = y - c * x
    s = np.linalg.norm(w)
    theta = np.arctan2(s, c)
    if theta < SMALL_ANGLE:
        return (1.0 + theta * theta / 6.0) * w
    return (theta / s) * w


def retract(M, X, xi):
    """Retraction ``R_X(xi)`` selected by ``M.retraction``; ``R_X(0) == X``."""
    X = _check_shape(M, X, "point")
    xi = _check_shape(M, xi, "tangent")
    if not np.any(xi):
        return X.copy()
    if M.retraction == "exponential":
        return sphere_exp(X, xi)
    if M.retraction == "projective":
        Y = X + xi
        return Y / np.linalg.norm(Y)
    if M.retraction == "polar":
        S = np.eye(M.m) + xi.T @ xi
        return (X + xi) @ matops.inv_sqrt_spd(S)
    return matops.qf(X + xi)


def _sphere_parallel_transport(x, y, w):
    if np.sum(x * y) <= -1.0 + ANTIPODAL_TOL:
        raise AntipodalPoints("parallel transport between antipodal points is ambiguous")
    v = sphere_log(x, y)
    theta = np.linalg.norm(v)
    if theta < SMALL_ANGLE:
        a = -0.5 + theta * theta / 24.0
        b = 1.0 - theta * theta / 6.0
    else:
        a = (np.cos(theta) - 1.0) / (theta * theta)
        b = np.sin(theta) / theta
    vw = np.sum(v * w)
    return w + (a * vw) * v - (b * vw) * x


def transport(M, X, Y, w):
    """Move the tangent vector ``w`` at ``X`` to the tangent space at ``Y``.

    On the sphere with the exponential retraction this is exact parallel
    transport along the minimal geodesic; everywhere else it is the tangent
    projection at ``Y``.
    """
    X = _check_shape(M, X, "point")
    Y = _check_shape(M, Y, "point")
    w = _check_shape(M, w, "tangent")
    if M.retraction == "exponential":
        return _sphere_parallel_transport(X, Y, w)
    return project_tangent(M, Y, w)


def constraint_violation(M, Y):
    """Distance-like measure of how far ``Y`` is from satisfying the constraint."""
    Y = _check_shape(M, Y)
    if M.is_sphere:
        return abs(float(np.linalg.norm(Y)) - 1.0)
    return float(np.linalg.norm(Y.T @ Y - np.eye(M.m)))


def random_point(M, seed):
    """Seeded point: the projection of a standard Gaussian matrix.

    The truncated-series projection is only valid near the manifold, so the
    exact polar factor stands in for it here.
    """
    if M.point_projection == "polar_series":
        M = replace(M, point_projection="polar")
    rng = np.random.default_rng(seed)
    while True:
        try:
            return project_point(M, rng.standard_normal(M.shape))
        except DegenerateInput:
            continue


def random_tangent(M, X, seed, norm=1.0):
    """Seeded tangent vector at ``X`` with Frobenius norm ``norm``."""
    X = _check_shape(M, X, "point")
    if norm == 0.0:
        return np.zeros(M.shape)
    rng = np.random.default_rng(seed)
    while True:
        G = rng.standard_normal(M.shape)
        Z = project_tangent(M, X, G)
        nz = np.linalg.norm(Z)
        # a draw almost normal to the tangent space leaves only roundoff behind
        if nz > 1e-8 * np.linalg.norm(G):
            return Z * (norm / nz)
