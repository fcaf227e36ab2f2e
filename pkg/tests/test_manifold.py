import numpy as np
import pytest

from projvi import manifold as mf
from projvi.errors import AntipodalPoints, DegenerateInput, ShapeMismatch, TooFarFromManifold

SPHERE_RETRACTIONS = ["exponential", "projective"]
STIEFEL_COMBOS = [(p, r) for p in ("polar", "qf", "polar_series") for r in ("polar", "qf")]


def all_specs(n=6, m=3):
    specs = [mf.Sphere(n, r) for r in SPHERE_RETRACTIONS]
    specs += [mf.Stiefel(n, m, p, r) for p, r in STIEFEL_COMBOS]
    return specs


def e(i, n):
    v = np.zeros((n, 1))
    v[i] = 1.0
    return v


def test_manifold_validation():
    with pytest.raises(ValueError):
        mf.ManifoldSpec("sphere", 1)
    with pytest.raises(ValueError):
        mf.Stiefel(2, 3)
    with pytest.raises(ValueError):
        mf.Sphere(3, "polar")
    with pytest.raises(ValueError):
        mf.Stiefel(3, 2, "normalize")
    assert mf.Stiefel(4, 2).retraction == "polar"


# ---------------------------------------------------------------- projections


def test_project_point_sphere():
    np.testing.assert_allclose(mf.project_point(mf.Sphere(2), [3.0, 4.0]), [[0.6], [0.8]])
    with pytest.raises(DegenerateInput):
        mf.project_point(mf.Sphere(3), np.zeros(3))


@pytest.mark.parametrize("proj", ["polar", "qf", "polar_series"])
def test_project_point_fixes_stiefel_points(proj):
    M = mf.Stiefel(7, 3, proj)
    X = mf.random_point(mf.Stiefel(7, 3), 4)
    np.testing.assert_allclose(mf.project_point(M, X), X, atol=1e-14)


def test_project_point_st1n_is_sphere_normalization():
    Y = np.array([[3.0], [4.0]])
    a = mf.project_point(mf.Stiefel(2, 1, "polar"), Y)
    b = mf.project_point(mf.Sphere(2), Y)
    np.testing.assert_allclose(a, [[0.6], [0.8]], atol=1e-15)
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_project_point_errors():
    with pytest.raises(DegenerateInput):
        mf.project_point(mf.Stiefel(3, 2), [[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(TooFarFromManifold):
        mf.project_point(mf.Stiefel(3, 2, "polar_series"), 3 * np.eye(3)[:, :2])
    with pytest.raises(ShapeMismatch):
        mf.project_point(mf.Stiefel(3, 2), np.ones((2, 3)))


def test_project_tangent_examples():
    M = mf.Sphere(4)
    x = mf.random_point(M, 0)
    np.testing.assert_allclose(mf.project_tangent(M, x, x), 0.0, atol=1e-15)
    Z = mf.random_tangent(M, x, 1)
    np.testing.assert_allclose(mf.project_tangent(M, x, Z), Z, atol=1e-15)
    # I is symmetric so P_I(I) = I - (I + I)/2 = 0
    S = mf.Stiefel(2, 2)
    np.testing.assert_allclose(mf.project_tangent(S, np.eye(2), np.eye(2)), 0.0, atol=1e-15)
    with pytest.raises(ShapeMismatch):
        mf.project_tangent(S, np.eye(2), np.ones((3, 2)))


@pytest.mark.parametrize("M", all_specs(), ids=lambda M: f"{M.kind}-{M.point_projection}-{M.retraction}")
def test_projection_idempotent_selfadjoint(M):
    rng = np.random.default_rng(1)
    for seed in range(20):
        X = mf.random_point(M, seed)
        Z, W = rng.standard_normal(M.shape), rng.standard_normal(M.shape)
        PZ = mf.project_tangent(M, X, Z)
        np.testing.assert_allclose(mf.project_tangent(M, X, PZ), PZ, atol=1e-12)
        lhs = np.sum(PZ * W)
        rhs = np.sum(Z * mf.project_tangent(M, X, W))
        assert abs(lhs - rhs) <= 1e-10
        if M.is_sphere:
            assert abs(np.sum(X * PZ)) <= 1e-10
        else:
            S = X.T @ PZ
            assert np.linalg.norm(S + S.T) <= 1e-9


# ---------------------------------------------------------------- retractions


@pytest.mark.parametrize("M", all_specs(), ids=lambda M: f"{M.kind}-{M.point_projection}-{M.retraction}")
def test_retract_zero_is_identity(M):
    X = mf.random_point(M, 3)
    np.testing.assert_array_equal(mf.retract(M, X, np.zeros(M.shape)), X)


def test_sphere_exp_quarter_circle():
    M = mf.Sphere(3)
    y = mf.retract(M, e(0, 3), (np.pi / 2) * e(1, 3))
    np.testing.assert_allclose(y, e(1, 3), atol=1e-15)


def test_stiefel_polar_retraction_is_polar_projection():
    # for tangent xi, (X + xi)^T (X + xi) = I + xi^T xi, so the closed form is
    # the polar factor of X + xi; it fixes X + xi exactly when that is orthonormal
    M = mf.Stiefel(5, 2)
    X = mf.random_point(M, 0)
    for seed in range(5):
        xi = mf.random_tangent(M, X, seed, 0.5)
        Z = mf.retract(M, X, xi)
        np.testing.assert_allclose(Z, mf.project_point(M, X + xi), atol=1e-13)
        assert mf.constraint_violation(M, Z) < 1e-12
    np.testing.assert_array_equal(mf.retract(M, X, np.zeros((5, 2))), X)


@pytest.mark.parametrize("M", all_specs(), ids=lambda M: f"{M.kind}-{M.point_projection}-{M.retraction}")
def test_retraction_first_order(M):
    ts = np.array([1e-2, 1e-3, 1e-4])
    for seed in range(5):
        X = mf.random_point(M, seed)
        xi = mf.random_tangent(M, X, seed + 100, 1.0)
        errs = np.array([np.linalg.norm((mf.retract(M, X, t * xi) - X) / t - xi) for t in ts])
        if np.all(errs < 1e-12):
            continue
        slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
        assert slope >= 0.9
        assert np.all(np.isfinite(errs / ts))


@pytest.mark.parametrize("M", all_specs(), ids=lambda M: f"{M.kind}-{M.point_projection}-{M.retraction}")
def test_retraction_lands_on_manifold(M):
    for seed in range(10):
        X = mf.random_point(M, seed)
        xi = mf.random_tangent(M, X, seed + 7, 2.0)
        assert mf.constraint_violation(M, mf.retract(M, X, xi)) <= 1e-10


# ---------------------------------------------------------------- transport


def test_transport_identity_both_kinds():
    for M in (mf.Sphere(4, "exponential"), mf.Sphere(4, "projective"), mf.Stiefel(4, 2)):
        X = mf.random_point(M, 0)
        w = mf.random_tangent(M, X, 1)
        np.testing.assert_allclose(mf.transport(M, X, X, w), w, atol=1e-15)


def test_parallel_transport_along_geodesic():
    M = mf.Sphere(3)
    alpha = 1.7
    w = mf.transport(M, e(0, 3), e(1, 3), alpha * e(1, 3))
    np.testing.assert_allclose(w, -alpha * e(0, 3), atol=1e-15)


def test_parallel_transport_normal_direction_unchanged():
    M = mf.Sphere(3)
    w = mf.transport(M, e(0, 3), e(1, 3), 0.4 * e(2, 3))
    np.testing.assert_allclose(w, 0.4 * e(2, 3), atol=1e-15)


def test_parallel_transport_isometry():
    M = mf.Sphere(10)
    for seed in range(30):
        x = mf.random_point(M, seed)
        y = mf.retract(M, x, mf.random_tangent(M, x, seed + 1, 0.1 + seed / 10))
        u = mf.random_tangent(M, x, seed + 2)
        w = mf.random_tangent(M, x, seed + 3, 2.0)
        Tu, Tw = mf.transport(M, x, y, u), mf.transport(M, x, y, w)
        assert abs(np.linalg.norm(Tw) - np.linalg.norm(w)) <= 1e-10
        assert abs(np.sum(Tu * Tw) - np.sum(u * w)) <= 1e-10
        assert abs(np.sum(y * Tw)) <= 1e-10


def test_parallel_transport_matches_exp_derivative():
    # transporting the initial velocity gives the velocity of the geodesic at its end
    M = mf.Sphere(5)
    x = mf.random_point(M, 0)
    v = mf.random_tangent(M, x, 1, 0.8)
    y = mf.retract(M, x, v)
    d = 1e-6
    vel = (mf.sphere_exp(x, (1 + d) * v) - mf.sphere_exp(x, (1 - d) * v)) / (2 * d)
    np.testing.assert_allclose(mf.transport(M, x, y, v), vel, atol=1e-8)


def test_parallel_transport_small_angle_is_smooth():
    M = mf.Sphere(4)
    x = mf.random_point(M, 0)
    w = mf.random_tangent(M, x, 1)
    for eps in (1e-6, 1e-9, 1e-12):
        y = mf.retract(M, x, mf.random_tangent(M, x, 2, eps))
        Tw = mf.transport(M, x, y, w)
        assert np.linalg.norm(Tw - w) <= 10 * eps
        assert abs(np.sum(y * Tw)) <= 1e-12


def test_antipodal_points():
    M = mf.Sphere(3)
    with pytest.raises(AntipodalPoints):
        mf.transport(M, e(0, 3), -e(0, 3), e(1, 3))


def test_projection_transport_on_stiefel():
    M = mf.Stiefel(6, 2)
    X, Y = mf.random_point(M, 0), mf.random_point(M, 1)
    w = mf.random_tangent(M, X, 2)
    Tw = mf.transport(M, X, Y, w)
    np.testing.assert_allclose(Tw, mf.project_tangent(M, Y, w))


def test_sphere_log_inverts_exp():
    M = mf.Sphere(6)
    for seed in range(10):
        x = mf.random_point(M, seed)
        v = mf.random_tangent(M, x, seed + 1, 0.5 + seed * 0.25)
        np.testing.assert_allclose(mf.sphere_log(x, mf.sphere_exp(x, v)), v, atol=1e-12)


# ---------------------------------------------------------------- misc


def test_constraint_violation_examples():
    M = mf.Sphere(3)
    assert mf.constraint_violation(M, mf.random_point(M, 0)) <= 1e-12
    assert mf.constraint_violation(M, 2 * e(0, 3)) == pytest.approx(1.0)
    S = mf.Stiefel(2, 2)
    assert mf.constraint_violation(S, 2 * np.eye(2)) == pytest.approx(3 * np.sqrt(2))


def test_random_point_and_tangent_deterministic():
    for M in all_specs():
        X1, X2 = mf.random_point(M, 9), mf.random_point(M, 9)
        np.testing.assert_array_equal(X1, X2)
        assert mf.constraint_violation(M, X1) <= 1e-10
        T1, T2 = mf.random_tangent(M, X1, 3, 2.5), mf.random_tangent(M, X1, 3, 2.5)
        np.testing.assert_array_equal(T1, T2)
        assert np.linalg.norm(T1) == pytest.approx(2.5)
        np.testing.assert_array_equal(mf.random_tangent(M, X1, 3, 0.0), 0.0)


def test_st1n_matches_sphere():
    n = 8
    S, T = mf.Sphere(n, "projective"), mf.Stiefel(n, 1, "polar", "polar")
    rng = np.random.default_rng(0)
    for seed in range(20):
        x = mf.random_point(S, seed)
        np.testing.assert_allclose(mf.random_point(T, seed), x, atol=1e-12)
        Z = rng.standard_normal((n, 1))
        np.testing.assert_allclose(mf.project_point(T, Z), mf.project_point(S, Z), atol=1e-12)
        np.testing.assert_allclose(mf.project_tangent(T, x, Z), mf.project_tangent(S, x, Z), atol=1e-12)
        xi = mf.project_tangent(S, x, Z)
        y = mf.retract(S, x, xi)
        np.testing.assert_allclose(mf.retract(T, x, xi), y, atol=1e-12)
        np.testing.assert_allclose(mf.transport(T, x, y, xi), mf.transport(S, x, y, xi), atol=1e-12)
        assert abs(mf.constraint_violation(T, 1.5 * x) - mf.constraint_violation(S, 1.5 * x)) <= 1e-12 + 1.25
