"""``qla`` command line: ``kdv run|converge``, ``maxwell run|converge``, ``verify <name>``.

Exit codes: 0 ok, 1 certification failure, 2 configuration error, 3 numeric abort.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
import warnings
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _accel
from .config import RunConfig, gain_for, load_config
from .errors import ConfigError, NumericAbort
from .io import (
    DiagnosticsWriter,
    read_snapshot,
    snapshot_name,
    snapshot_step,
    version_string,
    write_manifest,
    write_snapshot,
)
from .kdv import KdvScheme, SolitonParams, diagnostics as kdv_diagnostics, soliton_profile
from .lattice import AmplitudeField, l2_norm
from .maxwell import (
    IndexProfile,
    MaxwellScheme,
    RefractiveIndexField,
    em_diagnostics,
    gaussian_pulse,
    load_index_grid,
    plane_wave,
)
from .oracles import maxwell_1d_spectral

EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3

KDV_COLUMNS = ["step", "time", "mass", "l2", "peak", "linf_error", "l2_error"]
MAXWELL_COLUMNS = ["step", "time", "energy", "l2", "div_d", "div_b", "norm_drift"]


# problem setup ---------------------------------------------------------------

class Problem:
    """Scheme, initial state and per-tick diagnostics for one validated config."""

    def __init__(self, cfg: RunConfig, workers: int):
        self.cfg = cfg
        self.workers = workers
        eps = cfg.epsilon
        if cfg.problem == "kdv":
            self.scheme = KdvScheme(cfg.variant, eps, cfg.dims[0], gain=gain_for(cfg), workers=workers)
            self.columns = KDV_COLUMNS
            self.soliton: Optional[SolitonParams] = None
            ini = cfg.initial
            if ini["kind"] == "soliton":
                x0 = ini["x0"] if ini["x0"] is not None else 0.25 * self.scheme.length
                self.soliton = SolitonParams(self.scheme.a, self.scheme.b, ini["c"], x0)
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    from .kdv import soliton_init
                    self.initial = soliton_init(self.soliton, self.scheme).data
                for w in caught:
                    print(f"warning: {w.message}", file=sys.stderr)
            else:
                self.initial = _load_initial(ini["path"], (2, *cfg.dims), eps)
        else:
            self.scheme = MaxwellScheme(eps, build_index(cfg), cfg.index["derivative_mode"], cfg.vy_form, workers)
            self.columns = MAXWELL_COLUMNS
            ini = cfg.initial
            lx = cfg.dims[0] * eps
            if ini["kind"] == "plane-wave":
                f = plane_wave(cfg.dims, eps, ini["mode"], ini["amplitude"], ini["polarization"])
            elif ini["kind"] == "gaussian-pulse":
                x0 = ini["x0"] if ini["x0"] is not None else 0.5 * lx
                f = gaussian_pulse(cfg.dims, eps, x0, ini["width"], ini["amplitude"], ini["polarization"], ini["y0"])
            else:
                f = AmplitudeField(_load_initial(ini["path"], (6, *cfg.dims), eps), eps)
            self.initial = f.data
        self.initial_norm = l2_norm(AmplitudeField(self.initial, eps))

    @property
    def dt(self) -> float:
        return self.scheme.dt

    def advance(self, flat: np.ndarray, steps: int, start: int) -> np.ndarray:
        return self.scheme.advance(flat, steps, workers=self.workers, start=start)

    def flat(self, data: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(data.reshape(data.shape[0], -1))

    def shaped(self, flat: np.ndarray) -> np.ndarray:
        return flat.reshape((flat.shape[0], *self.cfg.dims))

    def diagnostics(self, flat: np.ndarray, step: int) -> Dict[str, float]:
        t = step * self.dt
        field = AmplitudeField(self.shaped(flat), self.cfg.epsilon)
        with np.errstate(over="ignore", invalid="ignore"):
            if self.cfg.problem == "kdv":
                rec = kdv_diagnostics(field, self.soliton, t)
            else:
                rec = em_diagnostics(field, self.scheme, self.initial_norm)
        rec.update(step=step, time=t)
        return rec


def _load_initial(path, shape, eps) -> np.ndarray:
    if not Path(path).exists():
        raise ConfigError(f"initial state file {path} not found", key="initial.path")
    data = read_snapshot(path, one_d=len(shape) == 2)
    if data.shape != tuple(shape):
        raise ConfigError(f"initial state {path} has shape {data.shape}, config needs {tuple(shape)}",
                          key="initial.path")
    if not np.all(np.isfinite(data)):
        raise ConfigError(f"initial state {path} has non-finite values", key="initial.path")
    return data


def build_index(cfg: RunConfig) -> RefractiveIndexField:
    idx = cfg.index
    if "file" in idx:
        if not Path(idx["file"]).exists():
            raise ConfigError(f"index grid {idx['file']} not found", key="index.file")
        field = load_index_grid(idx["file"], idx["floor"])
        if field.dims != tuple(cfg.dims):
            raise ConfigError(f"index grid is {field.dims}, config grid is {tuple(cfg.dims)}", key="index.file")
        return field
    profiles = [IndexProfile(a["profile"], a["params"]) for a in idx["axes"]]
    return RefractiveIndexField.from_profiles(cfg.dims, cfg.epsilon, profiles, idx["floor"])


def resolve_workers(flag: Optional[int], cfg: Optional[RunConfig]) -> int:
    """Flag, then ``QLA_WORKERS``, then the config file, then 1."""
    if flag is not None:
        n = flag
    elif os.environ.get("QLA_WORKERS"):
        try:
            n = int(os.environ["QLA_WORKERS"])
        except ValueError:
            raise ConfigError(f"QLA_WORKERS must be an integer, got {os.environ['QLA_WORKERS']!r}",
                              key="QLA_WORKERS") from None
    elif cfg is not None and cfg.workers is not None:
        n = cfg.workers
    else:
        n = 1
    if n < 1:
        raise ConfigError(f"worker count must be >= 1, got {n}", key="workers")
    return _accel.set_workers(n)


# run -------------------------------------------------------------------------

def _manifest(cfg: RunConfig, workers: int, started: float, **extra) -> Dict[str, object]:
    out = {
        "version": version_string(),
        "backend": _accel.BACKEND,
        "workers": workers,
        "config": cfg.raw,
        "resolved": {
            "problem": cfg.problem,
            "epsilon": cfg.epsilon,
            "dims": list(cfg.dims),
            "steps": cfg.steps,
            "cadence": cfg.cadence,
            "initial": cfg.initial,
        },
        "wall_time_s": time.perf_counter() - started,
    }
    if cfg.problem == "kdv":
        out["resolved"].update(variant=cfg.variant, a=cfg.a, gain=gain_for(cfg), dt=cfg.epsilon ** 3)
    else:
        out["resolved"].update(vy_form=cfg.vy_form, index=cfg.index, dt=cfg.epsilon ** 2)
    out.update(extra)
    return out


def cmd_run(cfg: RunConfig, workers: int, resume: Optional[str] = None) -> int:
    started = time.perf_counter()
    prob = Problem(cfg, workers)
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    start = 0
    flat = prob.flat(prob.initial)
    if resume is not None:
        start = snapshot_step(resume)
        data = _load_initial(resume, (prob.initial.shape[0], *cfg.dims), cfg.epsilon)
        flat = prob.flat(data)
        if start > cfg.steps:
            raise ConfigError(f"resume step {start} is beyond steps = {cfg.steps}", key="steps")
    snapshots: List[str] = []

    def snap(step: int, state: np.ndarray) -> None:
        name = snapshot_name(step)
        write_snapshot(out / name, prob.shaped(state))
        snapshots.append(name)

    status, code, note, done = "ok", EXIT_OK, None, None
    if resume is None:
        snap(0, flat)
    writer = None
    if cfg.steps > 0:
        writer = DiagnosticsWriter(out / "diagnostics.csv", prob.columns, append=resume is not None)
        if resume is None:
            writer.write(prob.diagnostics(flat, 0))
    step = start
    try:
        while step < cfg.steps:
            n = min(cfg.cadence - step % cfg.cadence, cfg.steps - step)
            flat = prob.advance(flat, n, step)
            step += n
            writer.write(prob.diagnostics(flat, step))
            snap(step, flat)
    except NumericAbort as exc:
        good = exc.step - 1 if exc.step is not None else step
        if exc.last_good is not None:
            snap(good, exc.last_good)
        status, code, note, done = "numeric-abort", EXIT_ABORT, str(exc), good
        print(f"numeric abort: {exc}; last good state at step {good} written", file=sys.stderr)
    finally:
        if writer is not None:
            writer.close()
    write_manifest(out / "manifest.json", _manifest(
        cfg, workers, started, status=status, exit_code=code, steps_done=step if done is None else done,
        snapshots=snapshots, resumed_from=str(resume) if resume else None, message=note,
    ))
    if code == EXIT_OK:
        print(f"{cfg.problem} run: {cfg.steps - start} steps written to {out}")
    return code


# converge --------------------------------------------------------------------

def fit_order(eps: Sequence[float], err: Sequence[float], amplitude: float) -> Tuple[float, List[bool]]:
    """Log-log slope; the coarsest point is dropped if its error exceeds 10% of the amplitude."""
    order = np.argsort(eps)[::-1]
    use = [True] * len(eps)
    coarsest = int(order[0])
    if err[coarsest] > 0.1 * amplitude:
        use[coarsest] = False
    e = np.array([eps[i] for i in range(len(eps)) if use[i]])
    r = np.array([err[i] for i in range(len(err)) if use[i]])
    if e.size < 2 or np.any(r <= 0):
        return math.nan, use
    return float(np.polyfit(np.log(e), np.log(r), 1)[0]), use


def _converge_case(cfg: RunConfig, eps: float) -> RunConfig:
    """The same experiment at lattice spacing ``eps``: fixed physical domain and end time."""
    cv = cfg.converge
    length = cv["length"]
    n = int(round(length / eps))
    if abs(n * eps - length) > 1e-9 * length:
        print(f"note: eps={eps} does not divide length {length}; using N={n} (domain {n * eps!r})", file=sys.stderr)
    dims = (n,) if cfg.problem == "kdv" else (n, cv["ny"])
    steps = int(round(cv["t_end"] / (eps ** 3 if cfg.problem == "kdv" else eps ** 2)))
    return RunConfig(**{**cfg.__dict__, "epsilon": eps, "dims": dims, "steps": steps, "cadence": max(steps, 1)})


def _check_maxwell_converge(cfg: RunConfig) -> Tuple[float, float]:
    idx = cfg.index
    if "file" in idx or any(a["profile"] != "uniform" for a in idx["axes"]):
        raise ConfigError("maxwell converge compares with the 1D uniform-medium reference; index must be uniform",
                          key="index.profile")
    ini = cfg.initial
    if ini["kind"] == "file" or (ini["kind"] == "gaussian-pulse" and ini["y0"] is not None):
        raise ConfigError("maxwell converge needs x-only initial data (plane-wave or gaussian-pulse without y0)",
                          key="initial.kind")
    ny = idx["axes"][1]["params"].get("n", 1.0)
    nz = idx["axes"][2]["params"].get("n", 1.0)
    return ny, nz


def cmd_converge(cfg: RunConfig, workers: int, eps_list: Optional[Sequence[float]]) -> int:
    started = time.perf_counter()
    eps_values = list(eps_list) if eps_list else cfg.converge.get("eps", [])
    if len(eps_values) < 3:
        raise ConfigError(f"convergence study needs at least 3 epsilon values, got {len(eps_values)}",
                          key="converge.eps")
    if len(set(eps_values)) != len(eps_values):
        raise ConfigError("converge.eps has repeated values", key="converge.eps")
    for k in ("t_end", "length"):
        if cfg.converge.get(k) is None:
            raise ConfigError(f"missing required key 'converge.{k}'", key=f"converge.{k}")
    if cfg.problem == "maxwell":
        speeds = _check_maxwell_converge(cfg)
    elif cfg.initial["kind"] != "soliton":
        raise ConfigError("kdv converge measures the error against the soliton; initial.kind must be soliton",
                          key="initial.kind")
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    amplitude = 0.0
    for eps in eps_values:
        sub = _converge_case(cfg, eps)
        prob = Problem(sub, workers)
        flat = prob.flat(prob.initial)
        try:
            final = prob.advance(flat, sub.steps, 0)
        except NumericAbort as exc:
            print(f"numeric abort at eps={eps}: {exc}", file=sys.stderr)
            write_manifest(out / "manifest.json", _manifest(cfg, workers, started, status="numeric-abort",
                                                            exit_code=EXIT_ABORT, message=str(exc), eps=eps))
            return EXIT_ABORT
        t = sub.steps * prob.dt
        if sub.problem == "kdv":
            rec = prob.diagnostics(final, sub.steps)
            amp = prob.soliton.amplitude
            linf, l2 = rec["linf_error"], rec["l2_error"]
        else:
            ref = maxwell_1d_spectral(prob.initial[:, :, 0], sub.dims[0] * eps, t, *speeds)
            err = prob.shaped(final) - ref[:, :, None]
            amp = float(np.max(np.abs(prob.initial)))
            linf = float(np.max(np.abs(err)))
            l2 = float(np.sqrt(np.sum(err * err) * eps * eps))
        amplitude = max(amplitude, amp)
        rows.append({"eps": eps, "N": sub.dims[0], "steps": sub.steps, "time": t, "linf_error": linf, "l2_error": l2})
        print(f"eps={eps!r} N={sub.dims[0]} steps={sub.steps} linf_error={linf:.6e}")
    order, used = fit_order([r["eps"] for r in rows], [r["linf_error"] for r in rows], amplitude)
    with DiagnosticsWriter(out / "convergence.csv", ["eps", "N", "steps", "time", "linf_error", "l2_error", "in_fit"]) as w:
        for r, u in zip(rows, used):
            w.write({**r, "in_fit": int(u)})
    print(f"fitted order {order:.3f} over {sum(used)} points")
    write_manifest(out / "manifest.json", _manifest(
        cfg, workers, started, status="ok", exit_code=EXIT_OK, eps=eps_values, fitted_order=order,
        in_fit=used, amplitude=amplitude,
    ))
    return EXIT_OK


# verify ----------------------------------------------------------------------

def cmd_verify(name: str, output: Optional[str]) -> int:
    from .verify import VERIFY_NAMES, verify_kdv, verify_maxwell

    if name not in VERIFY_NAMES:
        raise ConfigError(f"unknown verify target {name!r}; expected one of {sorted(VERIFY_NAMES)}", key="name")
    if name == "maxwell":
        res = verify_maxwell()
        text, ok = res.to_text(), res.passed
    else:
        rep = verify_kdv(VERIFY_NAMES[name])
        text, ok = rep.to_text(), rep.passed
    print(text, end="")
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text)
    return EXIT_OK if ok else EXIT_CERT


# argument parsing -------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="TOML experiment file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (dotted for tables), repeatable")
    p.add_argument("--output", "-o", help="output directory")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--cadence", type=int)
    p.add_argument("--workers", type=int, help="worker threads (overrides QLA_WORKERS)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qla", description="Qubit lattice algorithms for KdV and 2D Maxwell.")
    sub = ap.add_subparsers(dest="problem", required=True)
    for problem in ("kdv", "maxwell"):
        pp = sub.add_parser(problem)
        ps = pp.add_subparsers(dest="action", required=True)
        run = ps.add_parser("run", help="time-step one experiment")
        _add_common(run)
        run.add_argument("--resume", metavar="SNAPSHOT", help="continue from a snapshot written by a previous run")
        conv = ps.add_parser("converge", help="error against the reference over several eps at fixed end time")
        _add_common(conv)
        conv.add_argument("--eps", help="comma-separated eps list (overrides converge.eps)")
        conv.add_argument("--t-end", type=float)
        if problem == "kdv":
            for a in (run, conv):
                a.add_argument("--variant")
    ver = sub.add_parser("verify", help="symbolic continuum-limit certification")
    ver.add_argument("name", help="kdv-v1 | kdv-v2 | kdv-nonunitary | maxwell")
    ver.add_argument("--output", "-o", help="also write the report to this file")
    return ap


def _flag_overrides(args) -> List[str]:
    ov = list(args.overrides)
    for flag, key in (("output", "output"), ("epsilon", "epsilon"), ("steps", "steps"), ("cadence", "cadence"),
                      ("variant", "variant")):
        v = getattr(args, flag, None)
        if v is not None:
            ov.append(f"{key}={v!r}" if isinstance(v, str) else f"{key}={v}")
    if getattr(args, "t_end", None) is not None:
        ov.append(f"converge.t_end={args.t_end}")
    return ov


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.problem == "verify":
            return cmd_verify(args.name, args.output)
        cfg = load_config(args.config, _flag_overrides(args), problem=args.problem)
        workers = resolve_workers(args.workers, cfg)
        if args.action == "run":
            return cmd_run(cfg, workers, args.resume)
        eps = None
        if args.eps:
            try:
                eps = [float(e) for e in args.eps.split(",") if e.strip()]
            except ValueError:
                raise ConfigError(f"--eps must be a comma-separated list of numbers, got {args.eps!r}",
                                  key="converge.eps") from None
            for e in eps:
                if not 0.0 < e < 1.0:
                    raise ConfigError(f"eps entries must lie in (0, 1), got {e}", key="converge.eps")
        return cmd_converge(cfg, workers, eps)
    except ConfigError as exc:
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"configuration error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
