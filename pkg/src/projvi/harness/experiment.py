"""Build problems from configs, run methods, and summarize the outcomes."""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import manifold as mf
from .. import problems as pb
from ..errors import ConfigInvalid, IOFailure, ProjviError
from ..integrators import run
from .config import _label_slug


@dataclass(frozen=True)
class Instance:
    """A fully materialized experiment: problem, manifold, start and oracle."""

    problem: object
    manifold: mf.ManifoldSpec
    x0: np.ndarray
    oracle: Optional[pb.Oracle]


@dataclass
class RunSummary:
    label: str
    method: str
    iterations: int
    final_f: float
    final_error: Optional[float]
    iterations_to_tolerance: Optional[int]
    wall_time: float
    reason: str
    message: str = ""


def read_matrix(path, key):
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except FileNotFoundError:
        raise IOFailure(f"{key}: matrix file not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise IOFailure(f"{key}: cannot parse matrix file {path}: {exc}") from None
    if M.size == 0 or not np.all(np.isfinite(M)):
        raise ConfigInvalid(f"{key}: matrix file {path} is empty or has non-finite entries")
    return M


def _int(spec, key, where="problem"):
    if key not in spec:
        raise ConfigInvalid(f"{where}.{key} is required")
    val = spec[key]
    if isinstance(val, bool) or not isinstance(val, int) or val < 1:
        raise ConfigInvalid(f"{where}.{key} must be a positive integer, got {val!r}")
    return val


def _symmetric_matrix(cfg, spec):
    if "matrix_csv" in spec:
        return read_matrix(cfg.resolve(spec["matrix_csv"]), "problem.matrix_csv")
    n = _int(spec, "n")
    seed = spec.get("seed", 0)
    if "spectrum" in spec:
        spectrum = np.asarray(spec["spectrum"], dtype=np.float64)
        if spectrum.shape != (n,):
            raise ConfigInvalid(f"problem.spectrum must list exactly n={n} values")
    else:
        spectrum = pb.log_spectrum(n, float(spec.get("kappa", 1e3)), float(spec.get("top", 1.0)))
    return pb.gen_symmetric(n, spectrum, seed)


def build_problem(cfg):
    """Problem instance described by ``cfg.problem``."""
    spec = cfg.problem
    kind = spec["kind"]
    try:
        if kind == "rayleigh":
            return pb.Rayleigh(_symmetric_matrix(cfg, spec))
        if kind == "brockett":
            A = _symmetric_matrix(cfg, spec)
            if "N" in spec:
                mu = spec["N"]
            else:
                mu = list(range(1, _int(spec, "m") + 1))
            return pb.Brockett(A, mu)
        if "A_csv" in spec or "B_csv" in spec:
            if not ("A_csv" in spec and "B_csv" in spec):
                raise ConfigInvalid("problem needs both A_csv and B_csv")
            A = read_matrix(cfg.resolve(spec["A_csv"]), "problem.A_csv")
            B = read_matrix(cfg.resolve(spec["B_csv"]), "problem.B_csv")
            return pb.Procrustes(A, B)
        n, m = _int(spec, "n"), _int(spec, "m")
        l = spec.get("l", n + 1 if n == m else n)
        A, B, X0 = pb.gen_procrustes(l, n, m, spec.get("seed", 0), float(spec.get("sigma", 0.0)))
        return pb.Procrustes(A, B, x_true=X0 if float(spec.get("sigma", 0.0)) == 0.0 else None)
    except ProjviError as exc:
        if isinstance(exc, (ConfigInvalid, IOFailure)):
            raise
        raise ConfigInvalid(f"problem: {exc}") from None


def build_manifold(cfg, P):
    spec = cfg.manifold
    n, m = P.shape
    kind = spec.get("kind", "sphere" if isinstance(P, pb.Rayleigh) else "stiefel")
    if isinstance(P, pb.Rayleigh) and kind != "sphere":
        # St(1, n) is the sphere; allow running the Rayleigh quotient there
        if kind != "stiefel":
            raise ConfigInvalid(f"manifold.kind must be sphere or stiefel, got {kind!r}")
    elif not isinstance(P, pb.Rayleigh) and kind != "stiefel":
        raise ConfigInvalid(f"manifold.kind must be stiefel for {cfg.problem['kind']}")
    try:
        if kind == "sphere":
            if spec.get("projection", "normalize") != "normalize":
                raise ValueError("sphere only supports projection 'normalize'")
            return mf.Sphere(n, spec.get("retraction", "exponential"))
        return mf.Stiefel(
            n,
            m,
            spec.get("projection", "polar"),
            spec.get("retraction", "polar"),
            spec.get("series_order", 3),
        )
    except ValueError as exc:
        raise ConfigInvalid(f"manifold: {exc}") from None


def build_instance(cfg):
    P = build_problem(cfg)
    M = build_manifold(cfg, P)
    if "point_csv" in cfg.init:
        X0 = read_matrix(cfg.resolve(cfg.init["point_csv"]), "init.point_csv")
        if X0.shape == (1, M.n) and M.m == 1:
            X0 = X0.T
        if X0.shape != M.shape:
            raise ConfigInvalid(f"init.point_csv has shape {X0.shape}, expected {M.shape}")
        if mf.constraint_violation(M, X0) > 1e-10:
            X0 = mf.project_point(M, X0)
    else:
        X0 = mf.random_point(M, cfg.init.get("seed", 0))
    ref = cfg.problem.get("reference_iters")
    try:
        orc = pb.oracle(P, M, reference_iters=ref, seed=cfg.problem.get("seed", 0))
    except ProjviError as exc:
        raise ConfigInvalid(f"problem: {exc}") from None
    return Instance(P, M, X0, orc)


def run_method(inst, mcfg, stop, record_every, backend="auto"):
    """Run one configured method; returns ``(RunResult, wall seconds)``."""
    f_star = None if inst.oracle is None else inst.oracle.f_star
    if stop.f_tol is not None and f_star is None:
        raise ConfigInvalid("stop.f_tol needs an oracle; this problem has none (set problem.reference_iters)")
    start = time.perf_counter()
    result = run(mcfg.method, inst.problem, inst.manifold, mcfg.params, inst.x0, stop,
                 record_every, f_star, backend)
    return result, time.perf_counter() - start


def _task(args):
    return run_method(*args)


def run_all(cfg, inst, jobs=1):
    """Run every method of ``cfg`` on ``inst``, in parallel when ``jobs > 1``."""
    tasks = [
        (inst, m, cfg.stop, m.record_every or cfg.record_every, cfg.backend)
        for m in cfg.methods
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]


def iterations_to_tolerance(records, tol):
    if tol is None:
        return None
    for rec in records:
        if rec.error is not None and rec.error <= tol:
            return rec.k
    return None


def summarize(mcfg, result, wall, tol):
    last = result.records[-1]
    return RunSummary(
        label=mcfg.label,
        method=mcfg.method.value,
        iterations=result.iterations,
        final_f=last.f_value,
        final_error=last.error,
        iterations_to_tolerance=iterations_to_tolerance(result.records, tol),
        wall_time=wall,
        reason=result.reason,
        message=result.message,
    )


def trace_name(label, suffix=""):
    return f"trace_{_label_slug(label)}{suffix}.csv"
