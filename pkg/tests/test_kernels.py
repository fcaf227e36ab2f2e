import math
import os
import subprocess
import sys

import numpy as np
import pytest

from projvi import _kernels_py, kernels
from projvi import integrators as it
from projvi import manifold as mf
from projvi import problems as pr
from projvi.integrators import BregmanParams, Method, StopCriteria

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")

CODES = {
    Method.EL_I: kernels.EL_I,
    Method.EL_II: kernels.EL_II,
    Method.HTVI_DIRECT: kernels.HTVI,
    Method.HTVI_ADAPTIVE: kernels.HTVI,
    Method.RGD: kernels.RGD,
}


def instance(n=40, seed=0):
    A = pr.gen_symmetric(n, pr.log_spectrum(n, 1e3), seed)
    P = pr.Rayleigh(A)
    return P, mf.random_point(mf.Sphere(n), seed + 1), pr.oracle(P).f_star


def params_for(method):
    return BregmanParams(p=4.0, p_ring=2.0 if method is Method.HTVI_ADAPTIVE else None, h=0.01)


@pytest.mark.parametrize("retraction", ["exponential", "projective"])
@pytest.mark.parametrize("method", list(Method))
def test_kernel_matches_generic(method, retraction):
    P, x0, fs = instance()
    M = mf.Sphere(P.A.shape[0], retraction)
    stop = StopCriteria(1500)
    a = it.run(method, P, M, params_for(method), x0, stop, record_every=50, f_star=fs, backend="kernel")
    b = it.run(method, P, M, params_for(method), x0, stop, record_every=50, f_star=fs, backend="generic")
    assert [r.k for r in a.records] == [r.k for r in b.records]
    assert a.reason == b.reason and a.iterations == b.iterations
    for ra, rb in zip(a.records, b.records):
        assert abs(ra.f_value - rb.f_value) <= 1e-12
        assert abs(ra.t - rb.t) <= 1e-12 * max(1.0, abs(rb.t))
        assert abs(ra.constraint_violation - rb.constraint_violation) <= 1e-13
    np.testing.assert_allclose(a.final_point, b.final_point, atol=1e-10)


def _raw(impl, method, x0, P, fs, max_iter=2000, record_every=10):
    prm = params_for(method).for_method(method)
    return impl.sphere_rayleigh_run(
        np.ascontiguousarray(P.A), np.ascontiguousarray(x0[:, 0]), np.zeros(x0.shape[0]),
        CODES[method], 0 if method.is_htvi or method is Method.RGD else 1,
        prm.q_frak_0 if method.is_htvi else 0.0,
        prm.p, prm.p_ring, prm.C, prm.zeta, prm.lam, prm.h, prm.c_max, False, True,
        max_iter, record_every, fs, 1e-10, math.nan,
    )


@needs_compiled
@pytest.mark.parametrize("method", list(Method))
def test_compiled_matches_fallback(method):
    from projvi import _kernels

    P, x0, fs = instance()
    a = _raw(_kernels, method, x0, P, fs)
    b = _raw(_kernels_py, method, x0, P, fs)
    n_a, n_b = a[5], b[5]
    assert n_a == n_b and a[6] == b[6] and a[7] == b[7]
    for i in range(4):
        np.testing.assert_allclose(np.asarray(a[i])[:n_a], np.asarray(b[i])[:n_b], rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(a[8], b[8], atol=1e-11)


@needs_compiled
def test_compiled_coefficients_match_fallback():
    from projvi import _kernels

    for k in (1, 2, 5, 17, 1000):
        assert _kernels.el_coefficients(k, 4.0, 1.5, 1.0, 1.0, 0.01, 1e8) == pytest.approx(
            _kernels_py.el_coefficients(k, 4.0, 1.5, 1.0, 1.0, 0.01, 1e8), rel=1e-15)
    for q in (1.0, 2.5, 1e3):
        assert _kernels.htvi_coefficients(q, 4.0, 2.0, 1.0, 0.01, 1e8) == pytest.approx(
            _kernels_py.htvi_coefficients(q, 4.0, 2.0, 1.0, 0.01, 1e8), rel=1e-15)


def test_env_var_forces_fallback():
    code = "import projvi.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, PROJVI_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_default_backend_is_compiled():
    code = "import projvi.kernels as k; print(k.BACKEND)"
    env = {k: v for k, v in os.environ.items() if k != "PROJVI_PURE_PYTHON"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "compiled"


@pytest.mark.parametrize("impl", ["fallback", "selected"])
def test_kernel_antipodal_transport_reported(impl):
    # at k = 10 with p = 4, b = 1/2, so the first step has length h * b * |v0| = pi
    # and parallel transport to the antipode is undefined
    mod = _kernels_py if impl == "fallback" else kernels
    A = np.diag([1.0, 2.0])
    x0 = np.array([1.0, 0.0])
    v0 = np.array([0.0, 2.0 * math.pi / 0.01])
    out = mod.sphere_rayleigh_run(A, x0, v0, kernels.EL_I, 10, 0.0, 4.0, 4.0, 1.0, 1.0, 1.0, 0.01,
                                  1e8, False, True, 5, 1, math.nan, math.nan, math.nan)
    assert out[7] == kernels.STATUS_ANTIPODAL
    assert out[6] == 0
    np.testing.assert_array_equal(out[8], x0)
