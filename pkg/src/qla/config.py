"""Experiment configuration: TOML file plus command-line overrides, validated up front.

One experiment per file.  Top-level keys::

    problem   "kdv" | "maxwell"
    variant   KdV variant name (kdv only; default "UnitaryV1")
    a         KdV nonlinear coefficient the scheme should realize (kdv only)
    epsilon   lattice spacing, in (0, 1)
    N         site count (kdv)            Nx, Ny   grid extents (maxwell)
    steps     number of time steps        t_end    alternative: physical end time
    cadence   steps between diagnostics rows and snapshots (default: steps)
    output    output directory (default "run")
    workers   worker threads (QLA_WORKERS and --workers take precedence)
    vy_form   V_Y row-3 form (maxwell; default the certified "VY")

Tables: ``[initial]`` (``kind`` = soliton | plane-wave | gaussian-pulse | file),
``[index]`` (maxwell; ``profile`` + parameters, per-axis ``[index.x]`` etc.,
or ``file``), ``[converge]`` (``eps`` list, ``t_end``, ``length``, ``ny``).
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, MutableMapping, Optional, Sequence, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .kdv import A_PER_GAIN
from .maxwell import PROFILES
from .schemes import KDV_VARIANTS, VY_FORMS

__all__ = ["RunConfig", "load_config", "parse_override", "validate"]

PROBLEMS = ("kdv", "maxwell")
INITIAL_KINDS = {
    "kdv": ("soliton", "file"),
    "maxwell": ("plane-wave", "gaussian-pulse", "file"),
}
DEFAULT_A = {"UnitaryV1": 4.0, "UnitaryV2": 4.0, "NonUnitaryPotential": 1.0}

_TOP = {
    "kdv": {"problem", "variant", "a", "epsilon", "N", "steps", "t_end", "cadence", "output", "workers",
            "initial", "converge"},
    "maxwell": {"problem", "epsilon", "Nx", "Ny", "steps", "t_end", "cadence", "output", "workers", "vy_form",
                "initial", "index", "converge"},
}
_INITIAL = {
    "soliton": {"kind", "c", "x0"},
    "plane-wave": {"kind", "mode", "amplitude", "polarization"},
    "gaussian-pulse": {"kind", "x0", "y0", "width", "amplitude", "polarization"},
    "file": {"kind", "path"},
}
_PROFILE_KEYS = {
    "uniform": {"n"},
    "linear-ramp": {"n0", "slope", "axis"},
    "tanh-interface": {"n1", "n2", "center", "width", "axis"},
    "gaussian-lens": {"n0", "dn", "x0", "y0", "sigma"},
}
_PROFILE_REQUIRED = {
    "uniform": set(),
    "linear-ramp": {"slope"},
    "tanh-interface": {"n1", "n2", "center", "width"},
    "gaussian-lens": {"dn", "x0", "y0", "sigma"},
}
_INDEX_COMMON = {"profile", "file", "floor", "derivative_mode", "x", "y", "z"}
_CONVERGE = {"eps", "t_end", "length", "ny"}


@dataclass
class RunConfig:
    """Validated experiment description; ``raw`` is the merged key tree echoed into the manifest."""

    problem: str
    epsilon: float
    dims: Tuple[int, ...]
    steps: int
    cadence: int
    output: Path
    workers: Optional[int]
    initial: Dict[str, Any]
    variant: Optional[str] = None
    a: Optional[float] = None
    vy_form: str = "VY"
    index: Dict[str, Any] = field(default_factory=dict)
    converge: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)


def parse_override(text: str) -> Tuple[List[str], Any]:
    """``section.key=value``; the value is read as a TOML value, else kept as a bare string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value", key=text)
    key, value = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key", key=text)
    try:
        parsed = tomllib.loads(f"v = {value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    return key.split("."), parsed


def _set(tree: MutableMapping, path: Sequence[str], value) -> None:
    node = tree
    for p in path[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {'.'.join(path)}: {p} is not a table", key=".".join(path))
        node = nxt
    node[path[-1]] = value


def load_config(path: Optional[os.PathLike], overrides: Sequence[str] = (), problem: Optional[str] = None) -> RunConfig:
    """Read ``path`` (optional), apply ``key=value`` overrides in order, validate."""
    tree: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                tree = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found", key="config") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}", key="config") from None
    for ov in overrides:
        keys, value = parse_override(ov)
        _set(tree, keys, value)
    if problem is not None:
        if tree.get("problem", problem) != problem:
            raise ConfigError(f"config is for problem {tree['problem']!r}, command is {problem!r}", key="problem")
        tree["problem"] = problem
    return validate(tree)


# scalar checks ---------------------------------------------------------------

def _num(tree, key, name=None, default=None, lo=None, hi=None, lo_open=False, hi_open=False, required=False):
    name = name or key
    if key not in tree:
        if required:
            raise ConfigError(f"missing required key {name!r}", key=name)
        return default
    v = tree[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}", key=name)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite, got {v}", key=name)
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{name} must be {'>' if lo_open else '>='} {lo}, got {v}", key=name)
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(f"{name} must be {'<' if hi_open else '<='} {hi}, got {v}", key=name)
    return v


def _int(tree, key, name=None, default=None, lo=None, required=False):
    name = name or key
    if key not in tree:
        if required:
            raise ConfigError(f"missing required key {name!r}", key=name)
        return default
    v = tree[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}", key=name)
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}, got {v}", key=name)
    return v


def _str(tree, key, name=None, default=None, choices=None, required=False):
    name = name or key
    if key not in tree:
        if required:
            raise ConfigError(f"missing required key {name!r}", key=name)
        return default
    v = tree[key]
    if not isinstance(v, str):
        raise ConfigError(f"{name} must be a string, got {v!r}", key=name)
    if choices is not None and v not in choices:
        raise ConfigError(f"{name} must be one of {list(choices)}, got {v!r}", key=name)
    return v


def _table(tree, key) -> Dict[str, Any]:
    v = tree.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(f"{key} must be a table", key=key)
    return v


def _unknown(tree: Mapping, allowed, prefix="") -> None:
    for k in tree:
        if k not in allowed:
            raise ConfigError(f"unknown key {prefix}{k!r}", key=f"{prefix}{k}")


# sections --------------------------------------------------------------------

def _initial(tree, problem) -> Dict[str, Any]:
    ini = _table(tree, "initial")
    default_kind = "soliton" if problem == "kdv" else "gaussian-pulse"
    kind = _str(ini, "kind", "initial.kind", default_kind, INITIAL_KINDS[problem])
    _unknown(ini, _INITIAL[kind], "initial.")
    out: Dict[str, Any] = {"kind": kind}
    if kind == "soliton":
        out["c"] = _num(ini, "c", "initial.c", 0.5, lo=0.0)
        out["x0"] = _num(ini, "x0", "initial.x0", None)
    elif kind == "plane-wave":
        out["mode"] = _int(ini, "mode", "initial.mode", 1, lo=0)
        out["amplitude"] = _num(ini, "amplitude", "initial.amplitude", 1.0)
        out["polarization"] = _str(ini, "polarization", "initial.polarization", "y", ("y", "z"))
    elif kind == "gaussian-pulse":
        out["x0"] = _num(ini, "x0", "initial.x0", None)
        out["y0"] = _num(ini, "y0", "initial.y0", None)
        out["width"] = _num(ini, "width", "initial.width", 0.5, lo=0.0, lo_open=True)
        out["amplitude"] = _num(ini, "amplitude", "initial.amplitude", 1.0)
        out["polarization"] = _str(ini, "polarization", "initial.polarization", "y", ("y", "z"))
    else:
        out["path"] = _str(ini, "path", "initial.path", required=True)
    return out


def _profile(tab, prefix) -> Dict[str, Any]:
    kind = _str(tab, "profile", prefix + "profile", "uniform", PROFILES)
    params = {}
    for k, v in tab.items():
        if k in ("profile",) or k in _INDEX_COMMON:
            continue
        if k not in _PROFILE_KEYS[kind]:
            raise ConfigError(f"unknown key {prefix}{k!r} for profile {kind}", key=prefix + k)
        params[k] = _num(tab, k, prefix + k)
    for k in _PROFILE_REQUIRED[kind]:
        if k not in params:
            raise ConfigError(f"profile {kind} needs {prefix}{k}", key=prefix + k)
    if "axis" in params and params["axis"] not in (0.0, 1.0):
        raise ConfigError(f"{prefix}axis must be 0 or 1", key=prefix + "axis")
    return {"profile": kind, "params": params}


def _index(tree) -> Dict[str, Any]:
    idx = _table(tree, "index")
    for k in idx:
        if k not in _INDEX_COMMON and not any(k in s for s in _PROFILE_KEYS.values()):
            raise ConfigError(f"unknown key 'index.{k}'", key=f"index.{k}")
    out: Dict[str, Any] = {
        "floor": _num(idx, "floor", "index.floor", 1e-3, lo=0.0, lo_open=True),
        "derivative_mode": _str(idx, "derivative_mode", "index.derivative_mode", "analytic",
                                ("analytic", "central-difference")),
    }
    if "file" in idx:
        extra = set(idx) - {"file", "floor", "derivative_mode"}
        if extra:
            k = sorted(extra)[0]
            raise ConfigError(f"index.file cannot be combined with index.{k}", key=f"index.{k}")
        out["file"] = _str(idx, "file", "index.file")
        return out
    axes = [a for a in "xyz" if a in idx]
    if axes:
        if len(axes) != 3:
            missing = [a for a in "xyz" if a not in idx][0]
            raise ConfigError(f"per-axis index needs index.x, index.y and index.z; missing index.{missing}",
                              key=f"index.{missing}")
        shared = set(idx) - {"x", "y", "z", "floor", "derivative_mode"}
        if shared:
            k = sorted(shared)[0]
            raise ConfigError(f"index.{k} cannot be combined with per-axis tables", key=f"index.{k}")
        out["axes"] = [_profile(_table(idx, a), f"index.{a}.") for a in "xyz"]
    else:
        out["axes"] = [_profile(idx, "index.")] * 3
    return out


def _converge(tree, problem) -> Dict[str, Any]:
    cv = _table(tree, "converge")
    if not cv:
        return {}
    _unknown(cv, _CONVERGE, "converge.")
    out: Dict[str, Any] = {}
    if "eps" in cv:
        eps = cv["eps"]
        if not isinstance(eps, list) or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in eps):
            raise ConfigError("converge.eps must be a list of numbers", key="converge.eps")
        for e in eps:
            if not 0.0 < e < 1.0:
                raise ConfigError(f"converge.eps entries must lie in (0, 1), got {e}", key="converge.eps")
        out["eps"] = [float(e) for e in eps]
    out["t_end"] = _num(cv, "t_end", "converge.t_end", None, lo=0.0, lo_open=True)
    out["length"] = _num(cv, "length", "converge.length", None, lo=0.0, lo_open=True)
    if problem == "maxwell":
        out["ny"] = _int(cv, "ny", "converge.ny", 4, lo=4)
    elif "ny" in cv:
        raise ConfigError("converge.ny applies to maxwell only", key="converge.ny")
    return out


def validate(tree: Mapping[str, Any]) -> RunConfig:
    """Check every key and range; nothing large is allocated here."""
    problem = _str(tree, "problem", choices=PROBLEMS, required=True)
    _unknown(tree, _TOP[problem])
    eps = _num(tree, "epsilon", default=0.05, lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    variant = a = None
    vy_form = "VY"
    index: Dict[str, Any] = {}
    if problem == "kdv":
        variant = _str(tree, "variant", default="UnitaryV1", choices=KDV_VARIANTS)
        a = _num(tree, "a", default=DEFAULT_A[variant], lo=0.0, lo_open=True)
        dims: Tuple[int, ...] = (_int(tree, "N", default=4096, lo=4),)
        dt = eps ** 3
    else:
        dims = (_int(tree, "Nx", default=128, lo=4), _int(tree, "Ny", default=128, lo=4))
        vy_form = _str(tree, "vy_form", default="VY", choices=VY_FORMS)
        index = _index(tree)
        dt = eps ** 2
    if "steps" in tree and "t_end" in tree:
        raise ConfigError("give either steps or t_end, not both", key="t_end")
    if "t_end" in tree:
        steps = int(round(_num(tree, "t_end", lo=0.0) / dt))
    else:
        steps = _int(tree, "steps", default=0, lo=0)
    cadence = _int(tree, "cadence", default=max(steps, 1), lo=1)
    workers = _int(tree, "workers", default=None, lo=1)
    output = Path(_str(tree, "output", default="run"))
    initial = _initial(tree, problem)
    converge = _converge(tree, problem)
    return RunConfig(
        problem=problem, epsilon=eps, dims=dims, steps=steps, cadence=cadence, output=output,
        workers=workers, initial=initial, variant=variant, a=a, vy_form=vy_form, index=index,
        converge=converge, raw=dict(tree),
    )


def gain_for(cfg: RunConfig) -> float:
    return cfg.a / A_PER_GAIN[cfg.variant]
