"""Accelerated optimizers on embedded manifolds and the loop that drives them.

Four steppers share one interface:

* ``el_step``   -- semi-implicit Euler discretization of the Bregman
  Euler-Lagrange equations (versions I and II),
* ``htvi_step`` -- projected Hamiltonian Taylor variational integrator, Direct
  (``p_ring == p``) or time-Adaptive (``p_ring < p``),
* ``rgd_step``  -- plain Riemannian gradient descent.

:func:`run` iterates a stepper, applies stopping rules and records a trace.
"""

import enum
import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from . import kernels
from . import manifold as mf
from . import problems as pb
from .errors import ConfigInvalid, NonFinite, ProjviError


class Method(str, enum.Enum):
    EL_I = "EL-I"
    EL_II = "EL-II"
    HTVI_DIRECT = "HTVI-Direct"
    HTVI_ADAPTIVE = "HTVI-Adaptive"
    RGD = "RGD"

    @property
    def is_htvi(self):
        return self in (Method.HTVI_DIRECT, Method.HTVI_ADAPTIVE)

    @property
    def is_el(self):
        return self in (Method.EL_I, Method.EL_II)


@dataclass(frozen=True)
class BregmanParams:
    """Parameters of the Bregman dynamics and of their discretization.

    ``p_ring`` defaults to ``p`` (the Direct approach).  ``c_max`` caps the
    polynomially growing gradient coefficient; pass ``math.inf`` to disable it.
    """

    p: float = 4.0
    p_ring: Optional[float] = None
    C: float = 1.0
    zeta: float = 1.0
    lam: float = 1.0
    h: float = 0.01
    q_frak_0: float = 1.0
    c_max: float = 1e8
    project_momentum: bool = False

    def __post_init__(self):
        if self.p_ring is None:
            object.__setattr__(self, "p_ring", self.p)
        checks = [
            (self.p > 0, "p must be > 0"),
            (0 < self.p_ring <= self.p, "p_ring must satisfy 0 < p_ring <= p"),
            (self.C > 0, "C must be > 0"),
            (self.zeta >= 1, "zeta must be >= 1"),
            (0 < self.lam <= 1, "lambda must lie in (0, 1]"),
            (self.h > 0, "h must be > 0"),
            (self.q_frak_0 > 0, "q_frak_0 must be > 0"),
            (self.c_max > 0, "c_max must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigInvalid(msg)
        for name in ("p", "p_ring", "C", "zeta", "lam", "h", "q_frak_0"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigInvalid(f"{name} must be finite")

    def check_method(self, method):
        method = Method(method)
        if method.is_htvi and (self.zeta != 1.0 or self.lam != 1.0):
            raise ConfigInvalid("HTVI updates are only defined for zeta = lambda = 1")
        return self

    def for_method(self, method):
        """Validated copy specialized to ``method`` (Direct forces ``p_ring = p``)."""
        method = Method(method)
        params = replace(self, p_ring=self.p) if method is Method.HTVI_DIRECT else self
        return params.check_method(method)

    def el_coefficients(self, k):
        """``(b_k, c_k)`` of the Euler-Lagrange scheme with the cap applied."""
        return el_coefficients(k, self.p, self.C, self.zeta, self.lam, self.h, self.c_max)

    def htvi_coefficients(self, q_frak):
        """``(gradient coefficient, position coefficient, time increment)``."""
        return htvi_coefficients(q_frak, self.p, self.p_ring, self.C, self.h, self.c_max)


# the coefficient formulas live in the kernels so every backend shares them
el_coefficients = kernels.el_coefficients
htvi_coefficients = kernels.htvi_coefficients


@dataclass(frozen=True)
class ELState:
    k: int
    X: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class HTVIState:
    k: int
    q: np.ndarray
    r: np.ndarray
    q_frak: float


@dataclass(frozen=True)
class StopCriteria:
    max_iter: int
    f_tol: Optional[float] = None
    grad_tol: Optional[float] = None

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigInvalid("max_iter must be an integer >= 1")
        for name in ("f_tol", "grad_tol"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigInvalid(f"{name} must be > 0 when given")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    t: float
    f_value: float
    error: Optional[float]
    constraint_violation: float
    grad_norm: float


@dataclass
class RunResult:
    method: str
    records: List[TraceRecord]
    reason: str
    iterations: int
    final_point: np.ndarray
    message: str = ""


def _require_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFinite("non-finite entry in iterate")


def el_step(s, P, M, params, version=1):
    """One semi-implicit Euler-Lagrange step; returns the next :class:`ELState`."""
    if s.k < 1:
        raise ValueError("Euler-Lagrange iteration starts at k = 1")
    h = params.h
    b, c = params.el_coefficients(s.k)
    X, V = s.X, s.V
    if version == 1:
        g = pb.riemannian_grad(P, M, X)
    elif version == 2:
        Z = mf.retract(M, X, (h * b) * V)
        g = mf.project_tangent(M, X, pb.riemannian_grad(P, M, Z))
    else:
        raise ValueError(f"version must be 1 or 2, got {version}")
    a = mf.project_tangent(M, X, b * V - (h * c) * g)
    _require_finite(a)
    X1 = mf.retract(M, X, h * a)
    V1 = mf.transport(M, X, X1, a)
    _require_finite(X1, V1)
    return ELState(s.k + 1, X1, V1)


def htvi_step(s, P, M, params):
    """One projected HTVI step (Direct when ``params.p_ring == params.p``)."""
    gc, qc, dt = params.htvi_coefficients(s.q_frak)
    g = pb.riemannian_grad(P, M, s.q)
    r = s.r - gc * g
    if params.project_momentum:
        r = mf.project_tangent(M, s.q, r)
    _require_finite(r)
    q = mf.project_point(M, s.q + qc * r)
    q_frak = s.q_frak + dt
    _require_finite(q)
    if not math.isfinite(q_frak):
        raise NonFinite("time variable overflowed")
    return HTVIState(s.k + 1, q, r, q_frak)


def rgd_step(X, P, M, h):
    """One Riemannian gradient descent step ``R_X(-h grad f(X))``."""
    X1 = mf.retract(M, X, -h * pb.riemannian_grad(P, M, X))
    _require_finite(X1)
    return X1


def initial_state(method, M, params, init):
    """Wrap a bare starting point into the state ``method`` iterates on.

    Velocities and momenta start at zero and the time variable at
    ``params.q_frak_0``.  States are passed through unchanged.
    """
    method = Method(method)
    if isinstance(init, (ELState, HTVIState)):
        return init
    X = np.asarray(init, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if method.is_el:
        return ELState(1, X, np.zeros_like(X))
    if method.is_htvi:
        return HTVIState(0, X, np.zeros_like(X), float(params.q_frak_0))
    return X


def _point(state):
    if isinstance(state, ELState):
        return state.X
    if isinstance(state, HTVIState):
        return state.q
    return state


def _observe(P, M, state, k, t, f_star):
    X = _point(state)
    f = pb.value(P, X)
    g = pb.riemannian_grad(P, M, X)
    err = None if f_star is None else f - f_star
    return TraceRecord(k, t, f, err, mf.constraint_violation(M, X), float(np.linalg.norm(g)))


def _use_kernel(backend, P, M, state):
    if backend == "generic":
        return False
    eligible = isinstance(P, pb.Rayleigh) and M.is_sphere
    if backend == "kernel" and not eligible:
        raise ConfigInvalid("the fused kernel only covers the Rayleigh quotient on the sphere")
    return eligible


def run(method, P, M, params, init, stop, record_every=1, f_star=None, backend="auto"):
    """Iterate ``method`` from ``init`` until a stopping rule fires.

    Records every ``record_every``-th iterate plus the final one.  Divergence
    and stepper errors end the run with reason ``"diverged"`` (or ``"error"``)
    and a partial trace instead of raising.

    ``backend`` is ``"auto"`` (fused kernel for the Rayleigh quotient on the
    sphere, generic steppers otherwise), ``"kernel"`` or ``"generic"``.
    """
    method = Method(method)
    params = params.for_method(method)
    if record_every < 1:
        raise ConfigInvalid("record_every must be >= 1")
    if stop.f_tol is not None and f_star is None:
        raise ConfigInvalid("f_tol needs an oracle value f_star")
    state = initial_state(method, M, params, init)
    if _use_kernel(backend, P, M, state):
        return _run_kernel(method, P, M, params, state, stop, record_every, f_star)
    return _run_generic(method, P, M, params, state, stop, record_every, f_star)


def _time(method, state, k, h):
    if isinstance(state, HTVIState):
        return state.q_frak
    return k * h


def _run_generic(method, P, M, params, state, stop, record_every, f_star):
    if method.is_htvi:
        step = lambda s: htvi_step(s, P, M, params)
    elif method is Method.RGD:
        step = lambda s: rgd_step(s, P, M, params.h)
    else:
        version = 1 if method is Method.EL_I else 2
        step = lambda s: el_step(s, P, M, params, version)

    k = 0
    rec = _observe(P, M, state, k, _time(method, state, k, params.h), f_star)
    records = []
    message = ""
    while True:
        if stop.f_tol is not None and rec.error <= stop.f_tol:
            reason = "converged"
            break
        if stop.grad_tol is not None and rec.grad_norm <= stop.grad_tol:
            reason = "converged"
            break
        if k >= stop.max_iter:
            reason = "max_iter"
            break
        try:
            nxt = step(state)
        except NonFinite as exc:
            reason, message = "diverged", str(exc)
            break
        except ProjviError as exc:
            reason, message = "error", f"{type(exc).__name__}: {exc}"
            break
        k += 1
        nrec = _observe(P, M, nxt, k, _time(method, nxt, k, params.h), f_star)
        if not (math.isfinite(nrec.f_value) and math.isfinite(nrec.grad_norm)):
            reason, message = "diverged", "objective overflowed"
            break
        state, rec = nxt, nrec
        if k % record_every == 0:
            records.append(rec)
    if not records or records[-1].k != rec.k:
        records.append(rec)
    return RunResult(method.value, records, reason, k, _point(state), message)


_KERNEL_CODES = {
    Method.EL_I: kernels.EL_I,
    Method.EL_II: kernels.EL_II,
    Method.HTVI_DIRECT: kernels.HTVI,
    Method.HTVI_ADAPTIVE: kernels.HTVI,
    Method.RGD: kernels.RGD,
}

_REASONS = {
    kernels.STATUS_MAX_ITER: "max_iter",
    kernels.STATUS_CONVERGED: "converged",
    kernels.STATUS_DIVERGED: "diverged",
    kernels.STATUS_ANTIPODAL: "error",
}


def _run_kernel(method, P, M, params, state, stop, record_every, f_star):
    if isinstance(state, ELState):
        x0, v0, k0, t0 = state.X, state.V, state.k, 0.0
    elif isinstance(state, HTVIState):
        x0, v0, k0, t0 = state.q, state.r, state.k, state.q_frak
    else:
        x0, v0, k0, t0 = state, np.zeros_like(state), 0, 0.0
    nan = math.nan
    out = kernels.sphere_rayleigh_run(
        np.ascontiguousarray(P.A),
        np.ascontiguousarray(x0[:, 0]),
        np.ascontiguousarray(v0[:, 0]),
        _KERNEL_CODES[method],
        k0,
        t0,
        params.p,
        params.p_ring,
        params.C,
        params.zeta,
        params.lam,
        params.h,
        params.c_max,
        bool(params.project_momentum),
        M.retraction == "exponential",
        int(stop.max_iter),
        int(record_every),
        nan if f_star is None else float(f_star),
        nan if stop.f_tol is None else float(stop.f_tol),
        nan if stop.grad_tol is None else float(stop.grad_tol),
    )
    ks, ts, fs, gs, vs, n_rec, steps, status, x_final = out
    records = [
        TraceRecord(
            int(ks[i]),
            float(ts[i]),
            float(fs[i]),
            None if f_star is None else float(fs[i]) - f_star,
            float(vs[i]),
            float(gs[i]),
        )
        for i in range(n_rec)
    ]
    message = ""
    if status == kernels.STATUS_DIVERGED:
        message = "non-finite entry in iterate"
    elif status == kernels.STATUS_ANTIPODAL:
        message = "AntipodalPoints: parallel transport between antipodal points is ambiguous"
    return RunResult(method.value, records, _REASONS[status], int(steps), x_final[:, None], message)
