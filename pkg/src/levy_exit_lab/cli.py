"""Command line front end.

    levy-exit-lab run study.yaml [--seed N] [--threads N] [--out-dir DIR]
    levy-exit-lab plotdata out/report.json --series exit-ball
    levy-exit-lab example tempered-stable

LEVY_EXIT_LAB_THREADS and LEVY_EXIT_LAB_OUT_DIR override the spec file;
command line flags override both.
"""

from __future__ import annotations

import argparse
import importlib
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import verify as vf
from ._numerics import log_grid
from .characteristics import CharacteristicProfile, build_profile
from .domains import make_domain
from .io import atomic_write_text, csv_text, dumps_json, read_json, write_csv, write_rows
from .model import FAMILIES, ModelError, make_model
from .renewal import condition_A_profile, renewal_V
from .simulate import SimConfig, exit_place_tail, exit_time, hit_ball_prob, survival_curve

log = logging.getLogger("levy_exit_lab")

TASKS = ("characteristics", "renewal", "simulate", "verify")
DEPENDS = {"characteristics": (), "renewal": (), "simulate": (), "verify": ("renewal",)}
EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class SpecError(ValueError):
    def __init__(self, message: str, source: str = "<spec>", line: int | None = None):
        self.message, self.source, self.line = message, source, line
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {message}")


# ---------------------------------------------------------------------------
# Validation with line context


class _Spec:
    """Parsed YAML plus the composed node tree, used to attach line numbers to errors."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            self.node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise SpecError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", source,
                            None if mark is None else mark.line + 1) from None
        if not isinstance(self.data, dict):
            raise SpecError("top level must be a mapping", source, 1)

    def line(self, path: tuple) -> int | None:
        node = self.node
        for key in path:
            nxt = None
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == str(key):
                        nxt = v
                        break
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                nxt = node.value[key]
            if nxt is None:
                break
            node = nxt
        return None if node is None else node.start_mark.line + 1

    def fail(self, path: tuple, message: str):
        label = ".".join(str(p) for p in path)
        raise SpecError(f"{label}: {message}" if label else message, self.source, self.line(path))


def _get(spec: _Spec, obj: dict, path: tuple, key: str, kind=None, default=Ellipsis):
    if not isinstance(obj, dict):
        spec.fail(path, "expected a mapping")
    if key not in obj:
        if default is Ellipsis:
            spec.fail(path, f"missing required field '{key}'")
        return default
    v = obj[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            spec.fail(path + (key,), "expected a number")
        try:
            v = float(v)
        except ValueError:
            spec.fail(path + (key,), "expected a number")
    elif kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            spec.fail(path + (key,), "expected an integer")
    elif kind is list:
        if not isinstance(v, list) or not v:
            spec.fail(path + (key,), "expected a non-empty list")
    elif kind is dict:
        if not isinstance(v, dict):
            spec.fail(path + (key,), "expected a mapping")
    elif kind is str:
        if not isinstance(v, str):
            spec.fail(path + (key,), "expected a string")
    return v


def _floats(spec, obj, path, key, default=Ellipsis, ndim=1):
    v = _get(spec, obj, path, key, default=default)
    if v is default and default is not Ellipsis:
        return v
    try:
        arr = np.asarray(v, float)
    except (TypeError, ValueError):
        spec.fail(path + (key,), "expected numbers")
    if ndim == 1:
        arr = np.atleast_1d(arr)
    elif ndim == 2:
        arr = np.atleast_2d(arr)
    if arr.ndim != ndim or arr.size == 0 or not np.all(np.isfinite(arr)):
        spec.fail(path + (key,), f"expected a finite {'list' if ndim == 1 else 'list of points'}")
    return arr


def _resolve_callables(params: dict) -> dict:
    """'module:attr' strings stand for Python callables (custom and subordinate families)."""
    out = dict(params)
    for k in ("nu", "phi"):
        v = out.get(k)
        if isinstance(v, str) and ":" in v:
            mod, attr = v.split(":", 1)
            out[k] = getattr(importlib.import_module(mod), attr)
    return out


_GRID_DEFAULTS = {"profile": (1e-3, 1e3, 4), "renewal": (1e-6, 1e4, 8)}
_SIM_FIELDS = {f.name for f in fields(SimConfig)} - {"seed", "threads"}


def _sim_config(spec, obj, path, base: SimConfig) -> SimConfig:
    if obj is None:
        return base
    if not isinstance(obj, dict):
        spec.fail(path, "expected a mapping of simulation settings")
    kw = {}
    for k, v in obj.items():
        if k not in _SIM_FIELDS:
            spec.fail(path + (k,), f"unknown simulation setting (known: {sorted(_SIM_FIELDS)})")
        kw[k] = _get(spec, obj, path, k, int if k in ("n", "companion_every", "block", "max_steps") else float)
    try:
        return base.replace(**kw)
    except (ValueError, TypeError) as exc:
        spec.fail(path, str(exc))


@dataclass
class RunSpec:
    model: Any
    model_spec: dict
    tasks: tuple
    grids: dict
    config: SimConfig
    domains: dict
    simulate: list
    verify: list
    out_dir: Path
    seed: int
    source: str = ""
    notes: list = field(default_factory=list)


_SIM_QUANTITIES = {"exit-time": ("domain", "x"), "survival": ("domain", "x", "t"),
                   "exit-tail": ("domain", "x", "r"), "hitting": ("R", "x", "horizon")}

_CHECKS = {
    "psi-star": (),
    "condition-A": ("r",),
    "exit-ball": (),
    "exit-c11": ("domain", "x"),
    "exit-tail": ("domain", "x", "r"),
    "survival": ("kind", "t"),
    "hitting": ("R", "x", "horizon"),
    "barriers": ("r", "delta"),
    "harmonic": ("x1",),
    "dynkin-exit-time": ("points",),
    "position-tail": ("r",),
    "exit-time-lower": ("r",),
}


def load_spec(path, *, seed: int | None = None, threads: int | None = None, out_dir: str | None = None) -> RunSpec:
    """Parse and validate a spec file; every task input is resolved here."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc.strerror}", str(path)) from None
    spec = _Spec(text, str(path))
    data = spec.data
    known = {"model", "tasks", "grids", "sim", "domains", "simulate", "verify", "seed", "threads", "out_dir"}
    for k in data:
        if k not in known:
            spec.fail((k,), f"unknown top-level field (known: {sorted(known)})")

    m = _get(spec, data, (), "model", dict)
    family = _get(spec, m, ("model",), "family", str)
    if family not in FAMILIES:
        spec.fail(("model", "family"), f"unknown family (known: {sorted(FAMILIES)})")
    dim = _get(spec, m, ("model",), "dimension", int)
    params = _get(spec, m, ("model",), "params", dict, default={}) or {}
    try:
        model = make_model(family, _resolve_callables(params), dimension=dim)
    except (ModelError, ImportError, AttributeError) as exc:
        spec.fail(("model",), str(exc))

    tasks = _get(spec, data, (), "tasks", default="all")
    if tasks == "all" or tasks == ["all"]:
        tasks = list(TASKS)
    if not isinstance(tasks, list):
        spec.fail(("tasks",), "expected 'all' or a list of tasks")
    for i, t in enumerate(tasks):
        if t not in TASKS:
            spec.fail(("tasks", i), f"unknown task (known: {list(TASKS)})")
    tasks = tuple(t for t in TASKS if t in tasks)

    grids = {}
    g = _get(spec, data, (), "grids", dict, default={}) or {}
    for name, (lo, hi, per) in _GRID_DEFAULTS.items():
        sub = _get(spec, g, ("grids",), name, dict, default={}) or {}
        p = ("grids", name)
        lo = _get(spec, sub, p, "lo", float, default=lo)
        hi = _get(spec, sub, p, "hi", float, default=hi)
        per = _get(spec, sub, p, "per_decade", int, default=per)
        if not (0 < lo < hi and per >= 1):
            spec.fail(p, "need 0 < lo < hi and per_decade >= 1")
        grids[name] = (lo, hi, per)
    scal = _floats(spec, g, ("grids",), "scaling", default=None)
    if scal is None:
        scal = np.array([1e-3, 1e3])
    if scal.size != 2 or not 0 < scal[0] < scal[1]:
        spec.fail(("grids", "scaling"), "expected [lo, hi] with 0 < lo < hi")
    grids["scaling"] = (float(scal[0]), float(scal[1]))

    seed_v = _get(spec, data, (), "seed", int, default=0)
    if seed is not None:
        seed_v = seed
    if not 0 <= seed_v < 2 ** 64:
        spec.fail(("seed",), "seed must fit in 64 bits")
    th = _get(spec, data, (), "threads", int, default=1)
    env_th = os.environ.get("LEVY_EXIT_LAB_THREADS")
    if env_th:
        try:
            th = int(env_th)
        except ValueError:
            raise SpecError("LEVY_EXIT_LAB_THREADS must be an integer", "environment") from None
    if threads is not None:
        th = threads
    if th < 1:
        raise SpecError("threads must be positive", str(path))
    od = _get(spec, data, (), "out_dir", str, default="levy-exit-lab-out")
    od = out_dir or os.environ.get("LEVY_EXIT_LAB_OUT_DIR") or od

    config = _sim_config(spec, data.get("sim"), ("sim",), SimConfig(seed=seed_v, threads=th))

    domains = {}
    dm = _get(spec, data, (), "domains", dict, default={}) or {}
    for name, dspec in dm.items():
        if not isinstance(dspec, dict):
            spec.fail(("domains", name), "expected a mapping")
        try:
            dom = make_domain(dspec)
        except (KeyError, ValueError, TypeError) as exc:
            spec.fail(("domains", name), f"invalid domain: {exc}")
        if dom.dimension != dim:
            spec.fail(("domains", name), f"domain dimension {dom.dimension} differs from model dimension {dim}")
        domains[name] = dom

    def domain_ref(obj, p):
        ref = _get(spec, obj, p, "domain", str)
        if ref not in domains:
            spec.fail(p + ("domain",), f"unknown domain '{ref}' (declared: {sorted(domains)})")
        return domains[ref]

    def points(obj, p, key="x"):
        pts = _floats(spec, obj, p, key, ndim=2)
        if pts.shape[1] != dim:
            spec.fail(p + (key,), f"points must have {dim} coordinates")
        return pts

    sims = []
    for i, item in enumerate(_get(spec, data, (), "simulate", list, default=[]) or []):
        p = ("simulate", i)
        q = _get(spec, item, p, "quantity", str)
        if q not in _SIM_QUANTITIES:
            spec.fail(p + ("quantity",), f"unknown quantity (known: {sorted(_SIM_QUANTITIES)})")
        for k in _SIM_QUANTITIES[q]:
            _get(spec, item, p, k)
        entry = {"name": str(item.get("name", f"{q}-{i}")), "quantity": q,
                 "config": _sim_config(spec, item.get("sim"), p + ("sim",), config), "x": points(item, p)}
        if q == "hitting":
            entry["R"] = _get(spec, item, p, "R", float)
            entry["config"] = entry["config"].replace(horizon=_get(spec, item, p, "horizon", float))
            if np.any(np.linalg.norm(entry["x"], axis=1) <= entry["R"]):
                spec.fail(p + ("x",), "hitting needs |x| > R")
        else:
            entry["domain"] = domain_ref(item, p)
            if q == "exit-time" and not entry["domain"].bounded:
                spec.fail(p + ("domain",), "exit-time needs a bounded domain")
        if q == "survival":
            entry["t"] = _floats(spec, item, p, "t")
        if q == "exit-tail":
            entry["r"] = _floats(spec, item, p, "r")
        sims.append(entry)

    checks = []
    for i, item in enumerate(_get(spec, data, (), "verify", list, default=[]) or []):
        p = ("verify", i)
        name = _get(spec, item, p, "check", str)
        if name not in _CHECKS:
            spec.fail(p + ("check",), f"unknown check (known: {sorted(_CHECKS)})")
        for k in _CHECKS[name]:
            _get(spec, item, p, k)
        cfg = _sim_config(spec, item.get("sim"), p + ("sim",), config)
        entry = {"check": name, "config": cfg, "args": {}}
        a = entry["args"]
        if name == "psi-star":
            a["u"] = _floats(spec, item, p, "u", default=None)
        elif name in ("condition-A", "position-tail", "exit-time-lower"):
            a["r"] = _floats(spec, item, p, "r")
        elif name == "exit-ball":
            a["r"] = _get(spec, item, p, "r", float, default=1.0)
            a["delta_fracs"] = _floats(spec, item, p, "delta_fracs", default=np.array([0.9, 0.5, 0.1, 0.02]))
            if np.any(a["delta_fracs"] <= 0) or np.any(a["delta_fracs"] > 1):
                spec.fail(p + ("delta_fracs",), "fractions must lie in (0, 1]")
        elif name == "exit-c11":
            a["domain"] = domain_ref(item, p)
            if not a["domain"].bounded:
                spec.fail(p + ("domain",), "exit-c11 needs a bounded domain")
            a["x"] = points(item, p)
        elif name == "exit-tail":
            a["domain"] = domain_ref(item, p)
            a["x"] = points(item, p)[0]
            a["r"] = _floats(spec, item, p, "r")
            if np.any(np.linalg.norm(a["x"]) > a["r"] / 2):
                spec.fail(p + ("r",), "need |x| <= r/2 for every r")
        elif name == "survival":
            kind = _get(spec, item, p, "kind", str)
            a["kind"] = kind
            a["t"] = _floats(spec, item, p, "t")
            if kind == "half-line":
                a["params"] = {"xs": _floats(spec, item, p, "x")}
            elif kind == "ball":
                a["params"] = {"r": _get(spec, item, p, "r", float), "deltas": _floats(spec, item, p, "delta")}
            elif kind == "ball-complement":
                a["params"] = {"R": _get(spec, item, p, "R", float), "deltas": _floats(spec, item, p, "delta")}
            elif kind == "c11-sandwich":
                a["params"] = {"domain": domain_ref(item, p), "x": points(item, p)[0]}
            else:
                spec.fail(p + ("kind",), "unknown survival kind (half-line, ball, ball-complement, c11-sandwich)")
        elif name == "hitting":
            a["R"] = _get(spec, item, p, "R", float)
            a["x"] = _floats(spec, item, p, "x")
            entry["config"] = cfg.replace(horizon=_get(spec, item, p, "horizon", float))
            if np.any(a["x"] <= a["R"]):
                spec.fail(p + ("x",), "need |x| > R")
        elif name == "barriers":
            a["r"] = _get(spec, item, p, "r", float)
            a["delta"] = _floats(spec, item, p, "delta")
            if np.any(a["delta"] <= 0) or np.any(a["delta"] >= a["r"] / 4):
                spec.fail(p + ("delta",), "delta must lie in (0, r/4)")
            a["side"] = _get(spec, item, p, "side", str, default="both")
        elif name == "harmonic":
            a["x1"] = _floats(spec, item, p, "x1")
        elif name == "dynkin-exit-time":
            a["radius"] = _get(spec, item, p, "radius", float, default=1.0)
            a["points"] = points(item, p, "points")
        checks.append(entry)

    if "simulate" in tasks and not sims:
        spec.fail(("simulate",), "task 'simulate' requested but no simulate entries given")
    if "verify" in tasks and not checks:
        spec.fail(("verify",), "task 'verify' requested but no verify entries given")
    return RunSpec(model, {"family": family, "dimension": dim, "params": params}, tasks, grids, config,
                   domains, sims, checks, Path(od), seed_v, str(path))


# ---------------------------------------------------------------------------
# Task execution


def _task_characteristics(rs: RunSpec, state: dict) -> list:
    lo, hi, per = rs.grids["profile"]
    prof = build_profile(rs.model, log_grid(lo, hi, per), u_range=rs.grids["scaling"])
    prof.to_csv(rs.out_dir / "profile.csv")
    prof.to_json(rs.out_dir / "profile.json")
    lines = [f"profile: {prof.grid.size} radii in [{lo:g}, {hi:g}]"]
    if prof.wlsc is not None:
        lines.append(f"lower scaling: alpha={prof.wlsc.alpha:.4g} c={prof.wlsc.constant:.4g}")
    if prof.wusc is not None:
        lines.append(f"upper scaling: alpha={prof.wusc.alpha:.4g} C={prof.wusc.constant:.4g}")
    return lines


def _task_renewal(rs: RunSpec, state: dict) -> list:
    lo, hi, per = rs.grids["renewal"]
    table = renewal_V(rs.model, log_grid(lo, hi, per))
    state["renewal"] = table
    table.to_csv(rs.out_dir / "renewal.csv")
    table.to_json(rs.out_dir / "renewal.json")
    plo, phi_, pper = rs.grids["profile"]
    rr = log_grid(max(plo, lo * 1e4), min(phi_, hi / 5.0), pper)
    prof = build_profile(rs.model, rr, table=table)
    prof.to_csv(rs.out_dir / "profile_v.csv")
    prof.to_json(rs.out_dir / "profile_v.json")
    cond = condition_A_profile(table, rr)
    write_rows(rs.out_dir / "condition_A.csv", ["r", "H", "concave", "log_concave"],
               [[c.r, c.H, int(c.concave), int(c.log_concave)] for c in cond])
    band = float(np.max(prof.hV2) / np.min(prof.hV2))
    return [f"renewal: method={table.method}", f"h V^2 max/min on [{rr[0]:g}, {rr[-1]:g}] = {band:.4g}",
            f"H_r max = {max(c.H for c in cond):.4g}"]


def _task_simulate(rs: RunSpec, state: dict) -> list:
    renewal = state.get("renewal")
    out, rows, lines = [], [], []
    for e in rs.simulate:
        q, cfg = e["quantity"], e["config"]
        ests = []
        for x in e["x"]:
            if q == "exit-time":
                ests.append(exit_time(rs.model, e["domain"], x, cfg, renewal=renewal))
            elif q == "survival":
                ests.extend(survival_curve(rs.model, e["domain"], x, e["t"], cfg, renewal=renewal))
            elif q == "exit-tail":
                ests.extend(exit_place_tail(rs.model, e["domain"], x, float(r), cfg, renewal=renewal) for r in e["r"])
            else:
                ests.append(hit_ball_prob(rs.model, e["R"], x, cfg, renewal=renewal))
        out.append({"name": e["name"], "quantity": q, "estimates": [m.to_dict() for m in ests]})
        for m in ests:
            rows.append([e["name"], q, " ".join(f"{v:.17g}" for v in m.inputs["x"]),
                         m.inputs.get("t", m.inputs.get("r", math.nan)), m.mean, m.stderr, m.bias_band, m.n])
        lines.append(f"{e['name']}: {len(ests)} estimates")
    atomic_write_text(rs.out_dir / "simulate.json", dumps_json({"kind": "simulation-results", "results": out}))
    write_rows(rs.out_dir / "simulate.csv", ["name", "quantity", "x", "t_or_r", "mean", "stderr", "bias_band", "n"],
               rows)
    return lines


def _run_check(rs: RunSpec, entry: dict, renewal) -> vf.BoundCheck:
    m, cfg, a = rs.model, entry["config"], entry["args"]
    name = entry["check"]
    if name == "psi-star":
        return vf.check_psi_star(m, a["u"])
    if name == "condition-A":
        return vf.check_condition_A(m, a["r"], renewal=renewal)
    if name == "exit-ball":
        return vf.check_exit_ball(m, a["r"], tuple(a["delta_fracs"]), cfg, renewal=renewal)
    if name == "exit-c11":
        return vf.check_exit_c11(m, a["domain"], a["x"], cfg, renewal=renewal)
    if name == "exit-tail":
        return vf.check_exit_tail(m, a["domain"], a["x"], a["r"], cfg, renewal=renewal)
    if name == "survival":
        return vf.check_survival(m, a["kind"], dict(a["params"], ts=a["t"]), cfg, renewal=renewal)
    if name == "hitting":
        return vf.check_hitting(m, a["R"], a["x"], cfg, renewal=renewal)
    if name == "barriers":
        return vf.check_barriers(m, a["r"], a["delta"], cfg, renewal=renewal, side=a["side"])
    if name == "harmonic":
        return vf.check_harmonic_halfspace(m, a["x1"], cfg, renewal=renewal)
    if name == "dynkin-exit-time":
        return vf.check_dynkin_exit_time(m, a["radius"], a["points"], cfg)
    if name == "position-tail":
        return vf.check_position_tail(m, a["r"], n=cfg.n, seed=cfg.seed, renewal=renewal)
    return vf.check_exit_time_lower(m, a["r"], cfg, renewal=renewal)


def _task_verify(rs: RunSpec, state: dict) -> list:
    renewal = state.get("renewal")
    checks = [_run_check(rs, e, renewal) for e in rs.verify]
    report = vf.Report(checks, {"model": rs.model.spec(), "seed": rs.seed})
    report.to_json(rs.out_dir / "report.json")
    report.to_csv(rs.out_dir / "report.csv")
    state["report"] = report
    lines = []
    for c in checks:
        flag = "  HARD FAILURE" if c.hard_failure else ""
        lines.append(f"{c.name}: {c.verdict}{flag}")
        for h in c.hard:
            if not h.holds:
                lines.append(f"  violated: {h.name} ({h.value:.6g} > {h.bound:.6g})")
    return lines


_RUNNERS = {"characteristics": _task_characteristics, "renewal": _task_renewal,
            "simulate": _task_simulate, "verify": _task_verify}


def execute(rs: RunSpec) -> int:
    """Run the tasks of a validated spec; returns the process exit code."""
    rs.out_dir.mkdir(parents=True, exist_ok=True)
    state: dict = {}
    status: dict = {}
    summary = [f"levy-exit-lab run: {rs.source}",
               f"model: {rs.model_spec['family']} d={rs.model_spec['dimension']} params={rs.model_spec['params']}",
               f"seed: {rs.seed}", ""]
    for task in rs.tasks:
        missing = [d for d in DEPENDS[task] if d in rs.tasks and status.get(d) != "ok"]
        if missing:
            status[task] = "skipped"
            summary.append(f"[{task}] skipped: dependency {', '.join(missing)} failed")
            continue
        try:
            lines = _RUNNERS[task](rs, state)
            status[task] = "ok"
            summary.append(f"[{task}] ok")
            summary.extend("  " + ln for ln in lines)
        except Exception as exc:  # partial-failure policy: record and continue
            log.exception("task %s failed", task)
            status[task] = "failed"
            summary.append(f"[{task}] failed: {type(exc).__name__}: {exc}")
    hard = bool(state.get("report") is not None and state["report"].hard_failure)
    summary.append("")
    summary.append("hard assertion violated" if hard else "no hard assertion violated")
    atomic_write_text(rs.out_dir / "summary.txt", "\n".join(summary) + "\n")
    atomic_write_text(rs.out_dir / "status.json", dumps_json({"tasks": status, "hard_failure": hard}))
    print("\n".join(summary))
    return EXIT_FAIL if hard or any(v != "ok" for v in status.values()) else EXIT_OK


# ---------------------------------------------------------------------------
# Plot data


def plot_series(report: dict, series: str, check: str | None = None) -> tuple[list, list]:
    """Long-format (x, series, value) rows for a profile or a verification report."""
    kind = report.get("kind")
    if kind == "characteristic-profile":
        prof = CharacteristicProfile.from_dict(report)
        cols = prof.columns()
        if series == "h-vs-Vsq":
            if prof.hV2 is None:
                raise KeyError("profile has no h V^2 column; use the renewal task output profile_v.json")
            return ["r", "series", "value"], [[r, "hV2", v] for r, v in zip(prof.grid, prof.hV2)]
        if series not in cols or series == "r":
            raise KeyError(f"unknown series '{series}' (known: h-vs-Vsq, {', '.join(k for k in cols if k != 'r')})")
        return ["r", "series", "value"], [[r, series, v] for r, v in zip(prof.grid, cols[series])]
    if kind != "verification-report":
        raise KeyError("not a profile or verification report")
    rep = vf.Report.from_dict(report)
    names = [c.name for c in rep.checks]
    if series == "ratio":
        pick = [c for c in rep.checks if check is None or c.name == check]
        if not pick:
            raise KeyError(f"unknown check '{check}' (known: {names})")
        c = pick[0]
        if "observed" not in c.series or c.lhs is None or c.rhs is None:
            raise KeyError(f"check '{c.name}' has no observed/lower/upper series")
        x = c.series.get("t", c.grid) if c.grid_label == "index" else c.grid
        rows = []
        for lab, vals in (("observed", c.series["observed"]), ("lower", c.lhs), ("upper", c.rhs)):
            rows.extend([xv, lab, v] for xv, v in zip(x, vals))
        return [c.grid_label if c.grid_label != "index" else "t", "series", "value"], rows
    pick = [c for c in rep.checks if c.name == series]
    if not pick:
        raise KeyError(f"unknown series '{series}' (known: ratio, {', '.join(names)})")
    c = pick[0]
    xname = c.grid_label
    x = c.grid
    if xname == "index" and "t" in c.series:
        xname, x = "t", c.series["t"]
    rows = []
    dist = c.series.get("dist")
    for key, vals in c.series.items():
        if key in ("t", "dist") or vals is None or np.size(vals) != np.size(x):
            continue
        for i, (xv, v) in enumerate(zip(x, vals)):
            label = key if dist is None else f"{key}[x={dist[i]:g}]"
            rows.append([xv, label, v])
    return [xname, "series", "value"], rows


# ---------------------------------------------------------------------------
# Entry point


def example_spec(family: str) -> str:
    try:
        return resources.files("levy_exit_lab").joinpath("specs", f"{family}.yaml").read_text()
    except FileNotFoundError:
        raise KeyError(f"no example for '{family}' (known: {sorted(FAMILIES)})") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levy-exit-lab", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a study described by a YAML spec")
    run.add_argument("spec")
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int)
    run.add_argument("--out-dir")
    pd = sub.add_parser("plotdata", help="long-format CSV series from a report or profile")
    pd.add_argument("report")
    pd.add_argument("--series", required=True)
    pd.add_argument("--check", help="check name for the 'ratio' series")
    pd.add_argument("--out-dir", help="write <report>_<series>.csv here instead of stdout")
    ex = sub.add_parser("example", help="print a commented example spec")
    ex.add_argument("family", choices=sorted(FAMILIES))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "run":
        try:
            rs = load_spec(args.spec, seed=args.seed, threads=args.threads, out_dir=args.out_dir)
        except SpecError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        return execute(rs)
    if args.command == "plotdata":
        try:
            header, rows = plot_series(read_json(args.report), args.series, args.check)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read report: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_INVALID
        cols = {h: [r[i] for r in rows] for i, h in enumerate(header)}
        out_dir = args.out_dir or os.environ.get("LEVY_EXIT_LAB_OUT_DIR")
        if out_dir:
            dest = Path(out_dir) / f"{Path(args.report).stem}_{args.series}.csv"
            dest.parent.mkdir(parents=True, exist_ok=True)
            write_csv(dest, cols)
            print(dest)
        else:
            sys.stdout.write(csv_text(cols))
        return EXIT_OK
    sys.stdout.write(example_spec(args.family))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
