"""Command-line scenario runner.

    hpz <subcommand> --config scenario.json --out results/ [--seed N] [--threads N]
                     [--format csv|json|both]
    hpz compare RUN_A RUN_B [--out diff.json]

Exit status: 0 on success, 1 on configuration or evaluation errors, 2 when a
validation suite fails.  ``HPZ_CONFIG`` replaces the ``--config`` path.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ConfigError, DivergenceError, FitWindowError, HPZError
from .evolution import (FitLaw, InitialState, StateKind, attenuation, commutator_curve,
                        exact_reference, fit_decoherence_time, spatial_density, variance_report)
from .fluctuations import divergence_scan, exact_diffusion_coefficients, msd, x_moments
from .kernel import diffusion_coefficients, green, local_coefficients
from .model import PhysicalConfig
from .output import read_csv, write_csv, write_json

ENV_CONFIG = "HPZ_CONFIG"
CONFIG_DIR = Path(__file__).resolve().parent / "configs"
SUBCOMMANDS = ("coefficients", "fluctuations", "spread", "cat", "reference", "divergence", "validate")


# --------------------------------------------------------------------------
# scenario files

@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_points: int
    spacing: str = "linear"

    def __post_init__(self):
        if not (self.t_end > self.t_start >= 0):
            raise ConfigError("time_grid: need t_end > t_start >= 0")
        if self.n_points < 2:
            raise ConfigError("time_grid.n_points must be at least 2")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("time_grid.spacing must be 'linear' or 'log'")
        if self.spacing == "log" and self.t_start <= 0:
            raise ConfigError("time_grid: log spacing needs t_start > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.t_start, self.t_end, self.n_points)
        return np.linspace(self.t_start, self.t_end, self.n_points)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    physical: PhysicalConfig
    state: InitialState | None
    time_grid: TimeGrid | None
    output: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    seed: int = 0
    raw: dict = field(default_factory=dict)


_TOP_KEYS = {"name", "physical", "state", "time_grid", "output", "divergence", "validate", "seed",
             "description"}


def _field(doc: dict, key: str, where: str, kind=float, default=...):
    if key not in doc or doc[key] is None:
        if default is ...:
            raise ConfigError(f"{where}: missing required key '{key}'")
        return default
    val = doc[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{where}.{key} must be a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{where}.{key} must be an integer, got {val!r}")
        return val
    if not isinstance(val, kind):
        raise ConfigError(f"{where}.{key} has the wrong type: {val!r}")
    return val


def _parse_state(doc: Any, config: PhysicalConfig) -> InitialState:
    if not isinstance(doc, dict):
        raise ConfigError("state must be a JSON object")
    unknown = sorted(set(doc) - {"kind", "sigma", "x0", "d"})
    if unknown:
        raise ConfigError(f"state: unknown key(s) {unknown}")
    kind = _field(doc, "kind", "state", str)
    try:
        kind = StateKind(kind)
    except ValueError:
        raise ConfigError(f"state.kind must be one of {[k.value for k in StateKind]}, got {kind!r}")
    sigma = _field(doc, "sigma", "state")
    try:
        if kind is StateKind.GAUSSIAN:
            return InitialState.gaussian(sigma, _field(doc, "x0", "state", default=0.0), config.hbar)
        if kind is StateKind.THERMAL_GAUSSIAN:
            return InitialState.thermal_gaussian(sigma, config, _field(doc, "x0", "state", default=0.0))
        d = _field(doc, "d", "state")
        if kind is StateKind.CAT:
            return InitialState.cat(d, sigma, config.hbar)
        return InitialState.thermal_cat(d, sigma, config)
    except HPZError as exc:
        raise ConfigError(f"state: {exc}") from exc


def parse_scenario(doc: Any) -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {unknown}")
    name = _field(doc, "name", "scenario", str, default="unnamed")
    if "physical" not in doc:
        raise ConfigError("scenario: missing required key 'physical'")
    try:
        physical = PhysicalConfig.from_dict(doc["physical"])
    except ConfigError as exc:
        raise ConfigError(f"physical: {exc}") from exc
    state = _parse_state(doc["state"], physical) if doc.get("state") is not None else None
    tg = None
    if doc.get("time_grid") is not None:
        g = doc["time_grid"]
        if not isinstance(g, dict):
            raise ConfigError("time_grid must be a JSON object")
        tg = TimeGrid(_field(g, "t_start", "time_grid", default=0.0), _field(g, "t_end", "time_grid"),
                      _field(g, "n_points", "time_grid", int),
                      _field(g, "spacing", "time_grid", str, default="linear"))
    out = doc.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output must be a JSON object")
    seed = _field(doc, "seed", "scenario", int, default=0)
    sections = {k: doc[k] for k in ("divergence", "validate") if doc.get(k) is not None}
    return ScenarioSpec(name, physical, state, tg, out, sections, seed, doc)


def bundled_config(name: str) -> Path:
    """Path of a canonical scenario shipped with the package."""
    path = CONFIG_DIR / (name if name.endswith(".json") else f"{name}.json")
    if not path.exists():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return path


def load_scenario(path: str | Path) -> ScenarioSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(doc)


# --------------------------------------------------------------------------
# subcommands; each returns (tables, summary, ok)

Table = tuple[list[str], list[list[float]]]


def _need(sc: ScenarioSpec, what: str):
    if what == "time_grid" and sc.time_grid is None:
        raise ConfigError("this subcommand needs a 'time_grid' section")
    if what == "state" and sc.state is None:
        raise ConfigError("this subcommand needs a 'state' section")


def _provenance(config: PhysicalConfig) -> dict:
    return {"cutoff": config.cutoff, "regime": config.regime.value}


def cmd_coefficients(sc: ScenarioSpec, args) -> tuple[dict[str, Table], dict, bool]:
    _need(sc, "time_grid")
    cfg = sc.physical
    cols = ["t", "G", "Gdot", "Gddot", "two_gamma", "omega_sq", "f", "h", "f_exact", "h_exact"]
    rows = []
    for t in sc.time_grid.values():
        t = float(t)
        ge = green(cfg, t)
        lc = local_coefficients(cfg, t)
        om2 = math.nan if lc.omega_sq.distributional else float(lc.omega_sq)
        if t > 0:
            dc = diffusion_coefficients(cfg, t)
            de = exact_diffusion_coefficients(cfg, t)
            fh = [dc.f, dc.h, de.f, de.h]
        else:
            fh = [math.nan] * 4
        rows.append([t, ge.g, ge.g1, ge.g2, lc.two_gamma, om2] + fh)
    summary = {"columns": cols, "note": "omega_sq is nan where it carries a delta weight",
               "regularization": _provenance(cfg)}
    return {"coefficients": (cols, rows)}, summary, True


def cmd_fluctuations(sc: ScenarioSpec, args):
    _need(sc, "time_grid")
    cfg = sc.physical
    # cutoff_flag is 1 on rows whose values depend on the configured cutoff
    cols = ["t", "s", "s_dot", "X2", "V2", "XV_sym", "cutoff_flag"]
    rows = []
    for t in sc.time_grid.values():
        d = msd(cfg, float(t))
        mo = x_moments(cfg, float(t))
        rows.append([float(t), d.s, d.s1, mo.xx, mo.vv, mo.xv_sym, float(mo.cutoff is not None)])
    summary = {"columns": cols, "regularization": _provenance(cfg)}
    return {"fluctuations": (cols, rows)}, summary, True


def _density_slices(sc: ScenarioSpec) -> Table | None:
    xg = sc.output.get("x_grid")
    times = sc.output.get("density_times")
    if not xg or not times:
        return None
    x = np.linspace(_field(xg, "x_min", "output.x_grid"), _field(xg, "x_max", "output.x_grid"),
                    _field(xg, "n", "output.x_grid", int))
    cols = ["x"] + [f"P_t={float(t):.6g}" for t in times]
    dens = [spatial_density(sc.state, sc.physical, float(t)) for t in times]
    rows = [[float(xi)] + [float(d.pdf(xi)) for d in dens] for xi in x]
    return cols, rows


def cmd_spread(sc: ScenarioSpec, args):
    _need(sc, "time_grid")
    _need(sc, "state")
    cols = ["t", "mean", "variance"]
    rows, norm = [], 0.0
    for t in sc.time_grid.values():
        d = spatial_density(sc.state, sc.physical, float(t))
        rows.append([float(t), d.mean, d.variance])
        norm = max(norm, abs(d.normalization - 1))
    tables = {"spread": (cols, rows)}
    sl = _density_slices(sc)
    if sl:
        tables["density"] = sl
    return tables, {"max_normalization_error": norm, "regularization": _provenance(sc.physical)}, True


def cmd_cat(sc: ScenarioSpec, args):
    _need(sc, "time_grid")
    _need(sc, "state")
    cols = ["t", "a"]
    rows = [[float(t), attenuation(sc.state, sc.physical, float(t)).a] for t in sc.time_grid.values()]
    summary: dict[str, Any] = {"regularization": _provenance(sc.physical),
                               "plateau": sc.state.overlap}
    try:
        tau, law = fit_decoherence_time(sc.state, sc.physical)
        summary.update(tau_d=tau, fit_law=law.value)
    except FitWindowError as exc:
        summary.update(tau_d=None, fit_law=None, fit_error=str(exc))
    tables = {"attenuation": (cols, rows)}
    sl = _density_slices(sc)
    if sl:
        tables["density"] = sl
    return tables, summary, True


def cmd_reference(sc: ScenarioSpec, args):
    _need(sc, "time_grid")
    _need(sc, "state")
    cfg, st = sc.physical, sc.state
    cols = ["t", "C", "hbar_G", "s", "w_sq", "a_exact", "variance", "a"]
    rows = []
    for t in sc.time_grid.values():
        t = float(t)
        ref = exact_reference(st, cfg, t)
        hg = cfg.hbar * green(cfg, t).g
        var = variance_report(st, cfg, t)
        a = attenuation(st, cfg, t).a if st.is_pair else math.nan
        rows.append([t, ref.commutator, hg, ref.s, ref.w_sq,
                     math.nan if ref.a_exact is None else ref.a_exact, var, a])
    return {"reference": (cols, rows)}, {"regularization": _provenance(cfg)}, True


def cmd_divergence(sc: ScenarioSpec, args):
    sec = sc.sections.get("divergence")
    if not isinstance(sec, dict):
        raise ConfigError("this subcommand needs a 'divergence' section")
    t_probe = _field(sec, "t_probe", "divergence")
    cutoffs = _field(sec, "cutoffs", "divergence", list)
    mode = _field(sec, "mode", "divergence", str, default="auto")
    try:
        scan = divergence_scan(sc.physical, t_probe, cutoffs, mode)
    except ValueError as exc:
        raise ConfigError(f"divergence: {exc}") from exc
    expected = sc.physical.hbar / (math.pi * sc.physical.zeta)
    rows = [[float(c), float(x)] for c, x in zip(scan.cutoffs, scan.xx)]
    summary = {"slope": scan.slope, "expected_slope": expected,
               "relative_error": abs(scan.slope / expected - 1), "mode": scan.mode,
               "max_residual": scan.residual, "t_probe": t_probe}
    return {"divergence": (["cutoff", "X2"], rows)}, summary, True


def cmd_validate(sc: ScenarioSpec, args):
    from .oracle.pde import PhaseSpaceGrid
    from .oracle.suites import SUITES, mc_suite, moments_suite, pde_suite

    _need(sc, "state")
    sec = sc.sections.get("validate") or {}
    suites = sec.get("suites", list(SUITES))
    bad = sorted(set(suites) - set(SUITES))
    if bad:
        raise ConfigError(f"validate.suites: unknown suite(s) {bad}")
    t_final = float(sec.get("t_final", 1.0))
    reports, tables = [], {}
    if "moments" in suites:
        reports.append(moments_suite(sc.physical, sc.state, t_final))
    if "pde" in suites:
        g = sec.get("grid")
        grid = None if g is None else PhaseSpaceGrid(**g)
        rep = pde_suite(sc.physical, sc.state, t_final, grid)
        tables["pde_density"] = (["x", "pde", "exact"],
                                 [list(r) for r in zip(rep.data["x"], rep.data["pde_density"],
                                                       rep.data["exact_density"])])
        reports.append(rep)
    if "mc" in suites:
        mc = sec.get("mc", {})
        mc_cfg = sc.physical
        if "physical" in mc:
            mc_cfg = PhysicalConfig.from_dict(mc["physical"])
        reports.append(mc_suite(mc_cfg, sc.state if mc_cfg is sc.physical else
                                InitialState.gaussian(sc.state.sigma, sc.state.x0, mc_cfg.hbar),
                                mc.get("t", [t_final]), int(mc.get("samples", 100_000)),
                                args.seed if args.seed is not None else sc.seed,
                                int(mc.get("J", 400)), float(mc.get("cutoff", 400.0)), args.threads))
    ok = all(r.ok for r in reports)
    summary = {"reports": [r.to_dict() for r in reports], "ok": ok}
    return tables, summary, ok


COMMANDS: dict[str, Callable] = {
    "coefficients": cmd_coefficients, "fluctuations": cmd_fluctuations, "spread": cmd_spread,
    "cat": cmd_cat, "reference": cmd_reference, "divergence": cmd_divergence,
    "validate": cmd_validate,
}


# --------------------------------------------------------------------------
# driver

def run(subcommand: str, config_path: str, out_dir: str, seed: int | None = None, threads: int = 1,
        fmt: str = "both") -> int:
    args = argparse.Namespace(seed=seed, threads=threads, format=fmt)
    start = time.perf_counter()
    try:
        sc = load_scenario(config_path)
        tables, summary, ok = COMMANDS[subcommand](sc, args)
    except (ConfigError, DivergenceError, HPZError) as exc:
        print(f"hpz {subcommand}: error: {exc}", file=sys.stderr)
        return 1
    out = Path(out_dir)
    files = []
    if fmt in ("csv", "both"):
        for name, (cols, rows) in tables.items():
            write_csv(out / f"{name}.csv", cols, rows)
            files.append(f"{name}.csv")
    doc = {"scenario": sc.name, "subcommand": subcommand, "summary": summary,
           "units": {"hbar": sc.physical.hbar, "boltzmann": sc.physical.units.boltzmann,
                     "note": "all quantities in the units of the configured mass, friction and hbar"}}
    if fmt in ("json", "both"):
        if fmt == "json":
            doc["data"] = {name: {"columns": c, "rows": r} for name, (c, r) in tables.items()}
        write_json(out / "summary.json", doc)
        files.append("summary.json")
    manifest = {
        "subcommand": subcommand, "config_path": str(config_path), "config": sc.raw,
        "code_version": __version__, "seed": seed if seed is not None else sc.seed,
        "threads": threads, "format": fmt, "outputs": files,
        "wall_clock_seconds": time.perf_counter() - start,
    }
    write_json(out / "manifest.json", manifest)
    if not ok:
        print(f"hpz {subcommand}: validation failed; see {out / 'summary.json'}", file=sys.stderr)
        return 2
    return 0


def compare(run_a: str, run_b: str) -> dict:
    """Column-wise differences between two runs of the same subcommand."""
    ma = json.loads((Path(run_a) / "manifest.json").read_text())
    mb = json.loads((Path(run_b) / "manifest.json").read_text())
    if ma["subcommand"] != mb["subcommand"]:
        raise ConfigError(f"runs used different subcommands: {ma['subcommand']} vs {mb['subcommand']}")
    report: dict[str, Any] = {"subcommand": ma["subcommand"], "files": {}}
    for name in sorted(set(ma["outputs"]) & set(mb["outputs"])):
        if not name.endswith(".csv"):
            continue
        ha, da = read_csv(Path(run_a) / name)
        hb, db = read_csv(Path(run_b) / name)
        if ha != hb or da.shape != db.shape or not np.array_equal(da[:, 0], db[:, 0]):
            raise ConfigError(f"{name}: grids or columns differ between the runs")
        cols = {}
        for j, col in enumerate(ha[1:], start=1):
            diff = np.abs(da[:, j] - db[:, j])
            scale = np.maximum(np.abs(da[:, j]), np.abs(db[:, j]))
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(scale > 0, diff / scale, 0.0)
            cols[col] = {"max_abs": float(np.nanmax(diff)) if diff.size else 0.0,
                         "max_rel": float(np.nanmax(rel)) if rel.size else 0.0}
        report["files"][name] = cols
    return report


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hpz", description="Exact quantum Brownian motion scenarios")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help=f"scenario JSON (overridden by ${ENV_CONFIG})")
        sp.add_argument("--out", default="hpz-out", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--format", choices=("csv", "json", "both"), default="both")
    cp = sub.add_parser("compare")
    cp.add_argument("run_a")
    cp.add_argument("run_b")
    cp.add_argument("--out", default=None, help="write the diff report here instead of stdout")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "compare":
        try:
            rep = compare(args.run_a, args.run_b)
        except (ConfigError, OSError, KeyError) as exc:
            print(f"hpz compare: error: {exc}", file=sys.stderr)
            return 1
        if args.out:
            write_json(args.out, rep)
        else:
            print(json.dumps(rep, indent=2, sort_keys=True))
        return 0
    path = os.environ.get(ENV_CONFIG) or args.config
    if not path:
        print(f"hpz {args.command}: error: no config given (--config or ${ENV_CONFIG})", file=sys.stderr)
        return 1
    if args.seed is not None and args.seed < 0:
        print("hpz: error: --seed must be non-negative", file=sys.stderr)
        return 1
    return run(args.command, path, args.out, args.seed, args.threads, args.format)


if __name__ == "__main__":
    sys.exit(main())
