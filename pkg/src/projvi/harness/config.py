"""Experiment configuration: JSON parsing and validation.

Relative file paths inside a config are resolved against the directory that
holds the config file.  Unknown keys are rejected so typos surface early.
"""

import json
import math
import os
import re
from dataclasses import dataclass, field, replace
from typing import List, Optional

from ..errors import ConfigInvalid, IOFailure
from ..integrators import BregmanParams, Method, StopCriteria

PROBLEM_KINDS = ("rayleigh", "brockett", "procrustes")
PROBLEM_KEYS = {
    "kind", "n", "m", "l", "seed", "kappa", "top", "spectrum", "matrix_csv", "N",
    "A_csv", "B_csv", "sigma", "reference_iters",
}
MANIFOLD_KEYS = {"kind", "projection", "retraction", "series_order"}
INIT_KEYS = {"seed", "point_csv"}
STOP_KEYS = {"max_iter", "f_tol", "grad_tol"}
METHOD_KEYS = {
    "method", "label", "p", "p_ring", "C", "zeta", "lambda", "h", "q_frak_0", "c_max",
    "project_momentum", "record_every",
}
TOP_KEYS = {
    "problem", "manifold", "init", "methods", "stop", "record_every", "output", "tolerance",
    "backend",
}
SWEEP_PARAMS = ("p", "h", "p_ring")


@dataclass(frozen=True)
class MethodConfig:
    method: Method
    label: str
    params: BregmanParams
    record_every: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    manifold: dict
    init: dict
    methods: List[MethodConfig]
    stop: StopCriteria
    record_every: int = 1
    output: str = "out"
    tolerance: Optional[float] = None
    backend: str = "auto"
    base_dir: str = "."
    source: str = field(default="", compare=False)

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def with_record_every(self, record_every):
        methods = [replace(m, record_every=None) for m in self.methods]
        return replace(self, record_every=record_every, methods=methods)


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigInvalid(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigInvalid(f"unknown key {where}.{unknown[0]}")


def _number(obj, key, where, default=None, integer=False, allow_none=False):
    val = obj.get(key, default)
    if val is None:
        if allow_none or default is None and key not in obj:
            return None
        raise ConfigInvalid(f"{where}.{key} must be a number")
    if isinstance(val, str) and val.lower() in ("inf", "infinity"):
        val = math.inf
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigInvalid(f"{where}.{key} must be a number, got {val!r}")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigInvalid(f"{where}.{key} must be an integer, got {val!r}")
        return int(val)
    return float(val)


def _label_slug(label):
    return re.sub(r"[^A-Za-z0-9_.=+-]+", "_", label).strip("_") or "method"


def parse_method(entry, index):
    where = f"methods[{index}]"
    _check_keys(entry, METHOD_KEYS, where)
    if "method" not in entry:
        raise ConfigInvalid(f"{where}.method is required")
    try:
        method = Method(entry["method"])
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise ConfigInvalid(f"{where}.method must be one of {choices}, got {entry['method']!r}") from None
    kwargs = {}
    for key, name in (("p", "p"), ("p_ring", "p_ring"), ("C", "C"), ("zeta", "zeta"),
                      ("lambda", "lam"), ("h", "h"), ("q_frak_0", "q_frak_0")):
        if key in entry:
            kwargs[name] = _number(entry, key, where)
    if "c_max" in entry:
        c_max = entry["c_max"]
        kwargs["c_max"] = math.inf if c_max is None else _number(entry, "c_max", where)
    if "project_momentum" in entry:
        if not isinstance(entry["project_momentum"], bool):
            raise ConfigInvalid(f"{where}.project_momentum must be true or false")
        kwargs["project_momentum"] = entry["project_momentum"]
    try:
        params = BregmanParams(**kwargs).for_method(method)
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"{where}: {exc}") from None
    record_every = _number(entry, "record_every", where, integer=True)
    if record_every is not None and record_every < 1:
        raise ConfigInvalid(f"{where}.record_every must be >= 1")
    label = entry.get("label", method.value)
    if not isinstance(label, str) or not label:
        raise ConfigInvalid(f"{where}.label must be a non-empty string")
    return MethodConfig(method, label, params, record_every)


def parse_config(data, base_dir=".", source=""):
    """Validate a decoded JSON config and build an :class:`ExperimentConfig`."""
    _check_keys(data, TOP_KEYS, "config")
    for key in ("problem", "methods", "stop"):
        if key not in data:
            raise ConfigInvalid(f"config.{key} is required")

    problem = data["problem"]
    _check_keys(problem, PROBLEM_KEYS, "problem")
    kind = problem.get("kind")
    if kind not in PROBLEM_KINDS:
        raise ConfigInvalid(f"problem.kind must be one of {', '.join(PROBLEM_KINDS)}, got {kind!r}")

    manifold = data.get("manifold", {})
    _check_keys(manifold, MANIFOLD_KEYS, "manifold")
    init = data.get("init", {"seed": 0})
    _check_keys(init, INIT_KEYS, "init")

    stop = data["stop"]
    _check_keys(stop, STOP_KEYS, "stop")
    if "max_iter" not in stop:
        raise ConfigInvalid("stop.max_iter is required")
    try:
        stop_criteria = StopCriteria(
            _number(stop, "max_iter", "stop", integer=True),
            _number(stop, "f_tol", "stop", allow_none=True),
            _number(stop, "grad_tol", "stop", allow_none=True),
        )
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"stop: {exc}") from None

    entries = data["methods"]
    if not isinstance(entries, list) or not entries:
        raise ConfigInvalid("config.methods must be a non-empty list")
    methods = [parse_method(e, i) for i, e in enumerate(entries)]
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigInvalid("methods[].label values must be unique")
    slugs = [_label_slug(lbl) for lbl in labels]
    if len(set(slugs)) != len(slugs):
        raise ConfigInvalid("methods[].label values collide after filename sanitizing")

    record_every = _number(data, "record_every", "config", default=1, integer=True)
    if record_every < 1:
        raise ConfigInvalid("config.record_every must be >= 1")
    tolerance = _number(data, "tolerance", "config", allow_none=True)
    if tolerance is not None and not tolerance > 0:
        raise ConfigInvalid("config.tolerance must be > 0")
    backend = data.get("backend", "auto")
    if backend not in ("auto", "kernel", "generic"):
        raise ConfigInvalid(f"config.backend must be auto, kernel or generic, got {backend!r}")
    output = data.get("output", "out")
    if not isinstance(output, str):
        raise ConfigInvalid("config.output must be a path string")

    return ExperimentConfig(
        problem=dict(problem),
        manifold=dict(manifold),
        init=dict(init),
        methods=methods,
        stop=stop_criteria,
        record_every=record_every,
        output=output,
        tolerance=tolerance,
        backend=backend,
        base_dir=base_dir,
        source=source,
    )


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise IOFailure(f"config file not found: {path}") from None
    except OSError as exc:
        raise IOFailure(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config file {path} is not valid JSON: {exc}") from None
    return parse_config(data, os.path.dirname(os.path.abspath(path)), path)


def override_param(cfg, param, value):
    """Copy of ``cfg`` with ``param`` set to ``value`` in every method."""
    if param not in SWEEP_PARAMS:
        raise ConfigInvalid(f"sweep parameter must be one of {', '.join(SWEEP_PARAMS)}, got {param!r}")
    name = {"p": "p", "h": "h", "p_ring": "p_ring"}[param]
    methods = []
    for m in cfg.methods:
        base = m.params
        if name == "p" and m.method is Method.HTVI_DIRECT:
            changes = {"p": value, "p_ring": value}
        elif name == "p_ring" and m.method is not Method.HTVI_ADAPTIVE:
            changes = {}
        else:
            changes = {name: value}
        try:
            params = replace(base, **changes).for_method(m.method)
        except ConfigInvalid as exc:
            raise ConfigInvalid(f"sweep {param}={value} invalid for {m.label}: {exc}") from None
        methods.append(replace(m, params=params))
    return replace(cfg, methods=methods)
