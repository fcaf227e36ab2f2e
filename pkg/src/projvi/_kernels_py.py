"""Pure-Python (numpy) implementation of the fused sphere kernels.

This is the fallback for ``_kernels.pyx`` and must keep the same signature and
the same arithmetic, step for step.
"""

import math

import numpy as np

EL_I, EL_II, HTVI, RGD = 0, 1, 2, 3
STATUS_MAX_ITER, STATUS_CONVERGED, STATUS_DIVERGED, STATUS_ANTIPODAL = 0, 1, 2, 3

SMALL_ANGLE = 1e-8
ANTIPODAL_TOL = 1e-8


def _pow(x, y):
    try:
        return x**y
    except OverflowError:
        return math.inf


def el_coefficients(k, p, C, zeta, lam, h, c_max):
    b = 1.0 - (zeta * p + lam) / (lam * k)
    c = min(C * p * p * _pow(k * h, p - 2.0), c_max)
    return b, c


def htvi_coefficients(t, p, p_ring, C, h, c_max):
    ratio = p_ring / p
    gc = min(p * p / p_ring * h * C * _pow(t, 2.0 * p - ratio), c_max * h)
    qc = p * p / p_ring * h * _pow(t, -p - ratio)
    dt = p / p_ring * h * _pow(t, 1.0 - ratio)
    return gc, qc, dt


def _exp(x, v):
    theta = math.sqrt(np.dot(v, v))
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return (1.0 - 0.5 * t2) * x + (1.0 - t2 / 6.0) * v
    return math.cos(theta) * x + (math.sin(theta) / theta) * v


def _retract(x, v, exponential):
    if exponential:
        return _exp(x, v)
    y = x + v
    return y / math.sqrt(np.dot(y, y))


def _parallel_transport(x, y, w):
    c = min(max(float(np.dot(x, y)), -1.0), 1.0)
    u = y - c * x
    s = math.sqrt(np.dot(u, u))
    theta = math.atan2(s, c)
    if theta < SMALL_ANGLE:
        v = (1.0 + theta * theta / 6.0) * u
    else:
        v = (theta / s) * u
    theta = math.sqrt(np.dot(v, v))
    if theta < SMALL_ANGLE:
        a = -0.5 + theta * theta / 24.0
        b = 1.0 - theta * theta / 6.0
    else:
        a = (math.cos(theta) - 1.0) / (theta * theta)
        b = math.sin(theta) / theta
    vw = float(np.dot(v, w))
    return w + (a * vw) * v - (b * vw) * x


def sphere_rayleigh_run(
    A,
    x0,
    v0,
    code,
    k0,
    t0,
    p,
    p_ring,
    C,
    zeta,
    lam,
    h,
    c_max,
    project_momentum,
    exponential,
    max_iter,
    record_every,
    f_star,
    f_tol,
    grad_tol,
):
    """Run one optimizer on ``f(x) = -x^T A x`` over the unit sphere.

    ``v0`` is the initial velocity (EL) or momentum (HTVI) and is ignored by
    RGD.  ``k0`` is the Euler-Lagrange iteration index of ``x0`` and ``t0``
    the initial HTVI time variable.  NaN disables ``f_star``, ``f_tol`` and
    ``grad_tol``.

    Returns ``(k, t, f, grad_norm, violation, n_records, steps, status, x)``.
    """
    x = np.array(x0, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    cap = max_iter // record_every + 2
    ks = np.zeros(cap, dtype=np.int64)
    ts = np.zeros(cap)
    fs = np.zeros(cap)
    gs = np.zeros(cap)
    vs = np.zeros(cap)
    n_rec = 0
    check_f = not math.isnan(f_tol)
    check_g = not math.isnan(grad_tol)

    t = t0
    kk = k0
    steps = 0
    Ax = A @ x
    xAx = float(np.dot(x, Ax))
    f = -xAx
    g = -2.0 * Ax + (2.0 * xAx) * x
    gn = math.sqrt(np.dot(g, g))
    viol = abs(math.sqrt(np.dot(x, x)) - 1.0)
    status = STATUS_MAX_ITER
    while True:
        if check_f and f - f_star <= f_tol:
            status = STATUS_CONVERGED
            break
        if check_g and gn <= grad_tol:
            status = STATUS_CONVERGED
            break
        if steps >= max_iter:
            status = STATUS_MAX_ITER
            break

        t_new = t
        v_new = v
        if code == HTVI:
            gc, qc, dt = htvi_coefficients(t, p, p_ring, C, h, c_max)
            v_new = v - gc * g
            if project_momentum:
                v_new = v_new - float(np.dot(x, v_new)) * x
            y = x + qc * v_new
            x_new = y / math.sqrt(np.dot(y, y))
            t_new = t + dt
        elif code == RGD:
            x_new = _retract(x, -h * g, exponential)
        else:
            b, c = el_coefficients(kk, p, C, zeta, lam, h, c_max)
            if code == EL_I:
                gg = g
            else:
                z = _retract(x, (h * b) * v, exponential)
                Az = A @ z
                gz = -2.0 * Az + (2.0 * float(np.dot(z, Az))) * z
                gg = gz - float(np.dot(x, gz)) * x
            a = b * v - (h * c) * gg
            a = a - float(np.dot(x, a)) * x
            x_new = _retract(x, h * a, exponential)
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x_new))):
                status = STATUS_DIVERGED
                break
            if exponential:
                if float(np.dot(x, x_new)) <= -1.0 + ANTIPODAL_TOL:
                    status = STATUS_ANTIPODAL
                    break
                v_new = _parallel_transport(x, x_new, a)
            else:
                v_new = a - float(np.dot(x_new, a)) * x_new
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new)) and math.isfinite(t_new)):
            status = STATUS_DIVERGED
            break

        Ax = A @ x_new
        xAx = float(np.dot(x_new, Ax))
        g_new = -2.0 * Ax + (2.0 * xAx) * x_new
        gn_new = math.sqrt(np.dot(g_new, g_new))
        if not (math.isfinite(xAx) and math.isfinite(gn_new)):
            status = STATUS_DIVERGED
            break
        steps += 1
        kk += 1
        x, v, t, g, gn, f = x_new, v_new, t_new, g_new, gn_new, -xAx
        viol = abs(math.sqrt(np.dot(x, x)) - 1.0)
        if steps % record_every == 0:
            ks[n_rec] = steps
            ts[n_rec] = t if code == HTVI else steps * h
            fs[n_rec] = f
            gs[n_rec] = gn
            vs[n_rec] = viol
            n_rec += 1

    if n_rec == 0 or ks[n_rec - 1] != steps:
        ks[n_rec] = steps
        ts[n_rec] = t if code == HTVI else steps * h
        fs[n_rec] = f
        gs[n_rec] = gn
        vs[n_rec] = viol
        n_rec += 1
    return ks, ts, fs, gs, vs, n_rec, steps, status, x
