# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled fused sphere kernels; mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, atan2, fabs, isnan, isfinite, pow
from libc.stdlib cimport malloc, free

cnp.import_array()

EL_I, EL_II, HTVI, RGD = 0, 1, 2, 3
STATUS_MAX_ITER, STATUS_CONVERGED, STATUS_DIVERGED, STATUS_ANTIPODAL = 0, 1, 2, 3

cdef enum:
    C_EL_I = 0
    C_EL_II = 1
    C_HTVI = 2
    C_RGD = 3

cdef enum:
    S_MAX_ITER = 0
    S_CONVERGED = 1
    S_DIVERGED = 2
    S_ANTIPODAL = 3

cdef double SMALL_ANGLE = 1e-8
cdef double ANTIPODAL_TOL = 1e-8


def el_coefficients(double k, double p, double C, double zeta, double lam, double h, double c_max):
    cdef double b, c
    _el_coeffs(k, p, C, zeta, lam, h, c_max, &b, &c)
    return b, c


def htvi_coefficients(double t, double p, double p_ring, double C, double h, double c_max):
    cdef double gc, qc, dt
    _htvi_coeffs(t, p, p_ring, C, h, c_max, &gc, &qc, &dt)
    return gc, qc, dt


cdef inline void _el_coeffs(double k, double p, double C, double zeta, double lam, double h,
                            double c_max, double* b, double* c) nogil:
    b[0] = 1.0 - (zeta * p + lam) / (lam * k)
    c[0] = C * p * p * pow(k * h, p - 2.0)
    if c[0] > c_max:
        c[0] = c_max


cdef inline void _htvi_coeffs(double t, double p, double p_ring, double C, double h,
                              double c_max, double* gc, double* qc, double* dt) nogil:
    cdef double ratio = p_ring / p
    gc[0] = p * p / p_ring * h * C * pow(t, 2.0 * p - ratio)
    if gc[0] > c_max * h:
        gc[0] = c_max * h
    qc[0] = p * p / p_ring * h * pow(t, -p - ratio)
    dt[0] = p / p_ring * h * pow(t, 1.0 - ratio)


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) nogil:
    # four independent partial sums hide the add latency of a single chain
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t i, m = n - n % 4
    for i in range(0, m, 4):
        s0 += a[i] * b[i]
        s1 += a[i + 1] * b[i + 1]
        s2 += a[i + 2] * b[i + 2]
        s3 += a[i + 3] * b[i + 3]
    for i in range(m, n):
        s0 += a[i] * b[i]
    return (s0 + s1) + (s2 + s3)


cdef inline void _matvec(const double* A, const double* x, double* out, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _dot(A + i * n, x, n)


cdef inline bint _all_finite(const double* a, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    for i in range(n):
        if not isfinite(a[i]):
            return False
    return True


cdef inline void _rayleigh_grad(const double* A, const double* x, double* Ax, double* g,
                                double* xAx, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    _matvec(A, x, Ax, n)
    xAx[0] = _dot(x, Ax, n)
    for i in range(n):
        g[i] = -2.0 * Ax[i] + (2.0 * xAx[0]) * x[i]


cdef inline void _retract(const double* x, const double* v, double* out, bint exponential,
                          Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    cdef double theta, t2, cs, sn, nrm
    if exponential:
        theta = sqrt(_dot(v, v, n))
        if theta < SMALL_ANGLE:
            t2 = theta * theta
            cs = 1.0 - 0.5 * t2
            sn = 1.0 - t2 / 6.0
        else:
            cs = cos(theta)
            sn = sin(theta) / theta
        for i in range(n):
            out[i] = cs * x[i] + sn * v[i]
    else:
        for i in range(n):
            out[i] = x[i] + v[i]
        nrm = sqrt(_dot(out, out, n))
        for i in range(n):
            out[i] = out[i] / nrm


cdef inline void _parallel_transport(const double* x, const double* y, const double* w,
                                     double* u, double* out, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    cdef double c = _dot(x, y, n)
    cdef double s, theta, scale, a, b, vw
    if c > 1.0:
        c = 1.0
    if c < -1.0:
        c = -1.0
    for i in range(n):
        u[i] = y[i] - c * x[i]
    s = sqrt(_dot(u, u, n))
    theta = atan2(s, c)
    if theta < SMALL_ANGLE:
        scale = 1.0 + theta * theta / 6.0
    else:
        scale = theta / s
    for i in range(n):
        u[i] = scale * u[i]
    theta = sqrt(_dot(u, u, n))
    if theta < SMALL_ANGLE:
        a = -0.5 + theta * theta / 24.0
        b = 1.0 - theta * theta / 6.0
    else:
        a = (cos(theta) - 1.0) / (theta * theta)
        b = sin(theta) / theta
    vw = _dot(u, w, n)
    for i in range(n):
        out[i] = w[i] + (a * vw) * u[i] - (b * vw) * x[i]


def sphere_rayleigh_run(
    double[:, ::1] A,
    double[::1] x0,
    double[::1] v0,
    int code,
    long k0,
    double t0,
    double p,
    double p_ring,
    double C,
    double zeta,
    double lam,
    double h,
    double c_max,
    bint project_momentum,
    bint exponential,
    long max_iter,
    long record_every,
    double f_star,
    double f_tol,
    double grad_tol,
):
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t cap = max_iter // record_every + 2
    cdef Py_ssize_t i
    if x0.shape[0] != n or v0.shape[0] != n or A.shape[1] != n:
        raise ValueError("shape mismatch between A, x0 and v0")

    ks_arr = np.zeros(cap, dtype=np.int64)
    ts_arr = np.zeros(cap)
    fs_arr = np.zeros(cap)
    gs_arr = np.zeros(cap)
    vs_arr = np.zeros(cap)
    x_arr = np.array(x0, dtype=np.float64)
    cdef long long[::1] ks = ks_arr
    cdef double[::1] ts = ts_arr
    cdef double[::1] fs = fs_arr
    cdef double[::1] gs = gs_arr
    cdef double[::1] vs = vs_arr
    cdef double[::1] xv = x_arr

    cdef double* work = <double*> malloc(11 * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* x = work
    cdef double* v = work + n
    cdef double* Ax = work + 2 * n
    cdef double* g = work + 3 * n
    cdef double* x_new = work + 4 * n
    cdef double* v_new = work + 5 * n
    cdef double* g_new = work + 6 * n
    cdef double* a = work + 7 * n
    cdef double* z = work + 8 * n
    cdef double* gz = work + 9 * n
    cdef double* tmp = work + 10 * n
    cdef const double* Ap = &A[0, 0]

    cdef bint check_f = not isnan(f_tol)
    cdef bint check_g = not isnan(grad_tol)
    cdef double t = t0, t_new, kk = <double> k0
    cdef long steps = 0
    cdef Py_ssize_t n_rec = 0
    cdef double xAx, f, gn, viol, gn_new, zAz, d
    cdef double gc, qc, dt, b, c, nrm
    cdef int status = S_MAX_ITER
    cdef const double* gg

    for i in range(n):
        x[i] = x0[i]
        v[i] = v0[i]

    with nogil:
        _rayleigh_grad(Ap, x, Ax, g, &xAx, n)
        f = -xAx
        gn = sqrt(_dot(g, g, n))
        viol = fabs(sqrt(_dot(x, x, n)) - 1.0)
        while True:
            if check_f and f - f_star <= f_tol:
                status = S_CONVERGED
                break
            if check_g and gn <= grad_tol:
                status = S_CONVERGED
                break
            if steps >= max_iter:
                status = S_MAX_ITER
                break

            t_new = t
            for i in range(n):
                v_new[i] = v[i]
            if code == C_HTVI:
                _htvi_coeffs(t, p, p_ring, C, h, c_max, &gc, &qc, &dt)
                for i in range(n):
                    v_new[i] = v[i] - gc * g[i]
                if project_momentum:
                    d = _dot(x, v_new, n)
                    for i in range(n):
                        v_new[i] = v_new[i] - d * x[i]
                for i in range(n):
                    tmp[i] = x[i] + qc * v_new[i]
                nrm = sqrt(_dot(tmp, tmp, n))
                for i in range(n):
                    x_new[i] = tmp[i] / nrm
                t_new = t + dt
            elif code == C_RGD:
                for i in range(n):
                    tmp[i] = -h * g[i]
                _retract(x, tmp, x_new, exponential, n)
            else:
                _el_coeffs(kk, p, C, zeta, lam, h, c_max, &b, &c)
                if code == C_EL_I:
                    gg = g
                else:
                    for i in range(n):
                        tmp[i] = (h * b) * v[i]
                    _retract(x, tmp, z, exponential, n)
                    _rayleigh_grad(Ap, z, Ax, gz, &zAz, n)
                    d = _dot(x, gz, n)
                    for i in range(n):
                        gz[i] = gz[i] - d * x[i]
                    gg = gz
                for i in range(n):
                    a[i] = b * v[i] - (h * c) * gg[i]
                d = _dot(x, a, n)
                for i in range(n):
                    a[i] = a[i] - d * x[i]
                for i in range(n):
                    tmp[i] = h * a[i]
                _retract(x, tmp, x_new, exponential, n)
                if not (_all_finite(a, n) and _all_finite(x_new, n)):
                    status = S_DIVERGED
                    break
                if exponential:
                    if _dot(x, x_new, n) <= -1.0 + ANTIPODAL_TOL:
                        status = S_ANTIPODAL
                        break
                    _parallel_transport(x, x_new, a, tmp, v_new, n)
                else:
                    d = _dot(x_new, a, n)
                    for i in range(n):
                        v_new[i] = a[i] - d * x_new[i]
            if not (_all_finite(x_new, n) and _all_finite(v_new, n) and isfinite(t_new)):
                status = S_DIVERGED
                break

            _rayleigh_grad(Ap, x_new, Ax, g_new, &xAx, n)
            gn_new = sqrt(_dot(g_new, g_new, n))
            if not (isfinite(xAx) and isfinite(gn_new)):
                status = S_DIVERGED
                break
            steps += 1
            kk += 1.0
            for i in range(n):
                x[i] = x_new[i]
                v[i] = v_new[i]
                g[i] = g_new[i]
            t = t_new
            gn = gn_new
            f = -xAx
            viol = fabs(sqrt(_dot(x, x, n)) - 1.0)
            if steps % record_every == 0:
                ks[n_rec] = steps
                ts[n_rec] = t if code == C_HTVI else steps * h
                fs[n_rec] = f
                gs[n_rec] = gn
                vs[n_rec] = viol
                n_rec += 1

        if n_rec == 0 or ks[n_rec - 1] != steps:
            ks[n_rec] = steps
            ts[n_rec] = t if code == C_HTVI else steps * h
            fs[n_rec] = f
            gs[n_rec] = gn
            vs[n_rec] = viol
            n_rec += 1
        for i in range(n):
            xv[i] = x[i]

    free(work)
    return ks_arr, ts_arr, fs_arr, gs_arr, vs_arr, n_rec, steps, status, x_arr
