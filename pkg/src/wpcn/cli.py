"""Batch experiment runner.

Usage::

    wpcn run EXPERIMENT.json [--output DIR] [--threads N] [--seed S]

The experiment file is JSON::

    {
      "mode": "sweep-dp",            # solve-once | sweep-users | sweep-dp | compare-solvers
      "scenario": {"n_users": 4, "d_p": 5, ...},      # ScenarioConfig fields
      "sweep": [1, 2, 3],            # K values or d_p values (sweep modes)
      "d_ps": 10,                    # sweep-dp only: d_s = d_ps - d_p
      "solvers": ["fast"],           # subset of fast, reference
      "timing": true,                # false leaves wall_time_s empty
      "output": "sweep.csv"          # relative to the experiment file
    }

``solve-once`` may carry an explicit ``"instance"`` block instead of drawing
channels::

    {"p_max_w": 1, "noise_power_w": 1, "harvest_eff": 0.5, "snr_gap": 1,
     "dl": [[[1, 0]]], "ul": [[1.4142135623730951, 0]]}

where complex numbers are ``[re, im]`` pairs and ``dl`` has one row per user.

Exit codes: 0 ok, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel_sim import SOLVERS, ScenarioConfig, TrialResult, run_monte_carlo, summarize
from .model import ChannelSet, SystemParams, ValidationError

MODES = ("solve-once", "sweep-users", "sweep-dp", "compare-solvers")
HEADER = ("mode,K,Nt,alpha,d_p,d_s,p_max_dbm,seed,trial,solver,"
          "tau0,sum_rate_bpshz,wall_time_s,flags")
SUMMARY_HEADER = ("mode,sweep_value,solver,n_ok,n_failed,"
                  "mean_sum_rate_bpshz,std_error,mean_wall_time_s")
DEFAULT_SOLVERS = {
    "solve-once": ["fast"],
    "sweep-users": ["fast", "reference"],
    "sweep-dp": ["fast"],
    "compare-solvers": ["fast", "reference"],
}
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Instance:
    params: SystemParams
    channels: ChannelSet


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str
    scenario: ScenarioConfig
    sweep: tuple = ()
    d_ps: float | None = None
    solvers: tuple = ("fast",)
    timing: bool = True
    output: Path = Path("results.csv")
    instance: Instance | None = None


@dataclass(frozen=True)
class Row:
    mode: str
    sweep_value: float
    k: int
    nt: int
    alpha: float | None
    d_p: float | None
    d_s: float | None
    p_max_dbm: float
    seed: int
    solver: str
    result: TrialResult


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def _complex_list(value, field):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}: expected numbers or [re, im] pairs") from exc
    if arr.ndim >= 1 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def _parse_instance(block: dict) -> Instance:
    known = {"p_max_w", "noise_power_w", "harvest_eff", "snr_gap", "dl", "ul"}
    _reject_unknown(block, known, "instance")
    try:
        ul = _complex_list(block["ul"], "instance.ul").reshape(-1)
        dl = _complex_list(block["dl"], "instance.dl")
        if dl.ndim == 1:
            dl = dl[None, :]
        params = SystemParams(
            n_antennas=dl.shape[1], n_users=dl.shape[0],
            p_max=float(block.get("p_max_w", 1.0)),
            noise_power=block.get("noise_power_w", 1.0),
            harvest_eff=block.get("harvest_eff", 0.5),
            snr_gap=float(block.get("snr_gap", 1.0)),
        )
        return Instance(params, ChannelSet.from_gains(params, dl, ul))
    except KeyError as exc:
        raise ConfigError(f"instance.{exc.args[0]}: missing required field") from exc
    except ValidationError as exc:
        raise ConfigError(f"instance: {exc}") from exc


def _reject_unknown(block, known, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(block) - set(known))
    if extra:
        raise ConfigError(f"{where}.{extra[0]}: unknown field")


def _parse_scenario(block: dict) -> ScenarioConfig:
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    _reject_unknown(block, fields, "scenario")
    kwargs = {}
    for name, value in block.items():
        want = int if fields[name].type in ("int", int) else float
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"scenario.{name}: expected a number, got {value!r}")
        if want is int and float(value) != int(value):
            raise ConfigError(f"scenario.{name}: expected an integer, got {value!r}")
        kwargs[name] = want(value)
    try:
        return ScenarioConfig(**kwargs)
    except ValidationError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def parse_spec(text: str, base_dir: Path = Path(".")) -> ExperimentSpec:
    """Parse and validate an experiment file; raises ConfigError with a located message."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    known = {"mode", "scenario", "sweep", "d_ps", "solvers", "timing", "output", "instance"}
    _reject_unknown(raw, known, "spec")
    mode = raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")
    scenario = _parse_scenario(raw.get("scenario", {}))
    solvers = raw.get("solvers", DEFAULT_SOLVERS[mode])
    if not isinstance(solvers, list) or not solvers or any(s not in SOLVERS for s in solvers):
        raise ConfigError(f"solvers: expected a nonempty list drawn from {sorted(SOLVERS)}")
    sweep = raw.get("sweep", [])
    if not isinstance(sweep, list) or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                          for v in sweep):
        raise ConfigError("sweep: expected a list of numbers")
    if mode in ("sweep-users", "sweep-dp") and not sweep:
        raise ConfigError("sweep: must be nonempty in sweep modes")
    if mode == "sweep-users" and any(float(v) != int(v) or v < 1 for v in sweep):
        raise ConfigError("sweep: user counts must be positive integers")
    d_ps = raw.get("d_ps")
    if mode == "sweep-dp":
        if any(v <= 0 for v in sweep):
            raise ConfigError("sweep: d_p values must be > 0")
        if d_ps is not None and any(v >= d_ps for v in sweep):
            raise ConfigError("sweep: every d_p must be below d_ps")
    elif d_ps is not None:
        raise ConfigError("d_ps: only valid in sweep-dp mode")
    timing = raw.get("timing", True)
    if not isinstance(timing, bool):
        raise ConfigError("timing: expected true or false")
    output = raw.get("output", "results.csv")
    if not isinstance(output, str) or not output:
        raise ConfigError("output: expected a file path")
    instance = None
    if "instance" in raw:
        if mode != "solve-once":
            raise ConfigError("instance: only valid in solve-once mode")
        instance = _parse_instance(raw["instance"])
    return ExperimentSpec(mode, scenario, tuple(sweep), d_ps, tuple(solvers), timing,
                          base_dir / output, instance)


def _scenarios(spec: ExperimentSpec):
    sc = spec.scenario
    if spec.mode == "sweep-users":
        return [(float(k), sc.with_(n_users=int(k))) for k in spec.sweep]
    if spec.mode == "sweep-dp":
        out = []
        for dp in spec.sweep:
            d_s = spec.d_ps - dp if spec.d_ps is not None else sc.d_s
            out.append((float(dp), sc.with_(d_p=float(dp), d_s=float(d_s))))
        return out
    return [(0.0, sc)]


def _solve_instance(spec: ExperimentSpec) -> list[Row]:
    inst = spec.instance
    p = inst.params
    rows = []
    for name in spec.solvers:
        t0 = time.perf_counter()
        try:
            sol = SOLVERS[name](p, inst.channels)
            res = TrialResult(sol.sum_rate, sol.tau0, time.perf_counter() - t0, 0,
                              "degenerate" if sol.degenerate else "")
        except (ArithmeticError, ValueError) as exc:
            res = TrialResult(math.nan, math.nan, time.perf_counter() - t0, 0,
                              f"error:{type(exc).__name__}")
        rows.append(Row(spec.mode, 0.0, p.n_users, p.n_antennas, None, None, None,
                        10 * math.log10(p.p_max) + 30, spec.scenario.seed, name, res))
    return rows


def execute(spec: ExperimentSpec, threads: int = 1) -> list[Row]:
    """Run every (sweep value, solver) combination; rows sorted by (value, trial, solver)."""
    if spec.instance is not None:
        return _solve_instance(spec)
    rows = []
    for value, sc in _scenarios(spec):
        for name in spec.solvers:
            results, _ = run_monte_carlo(sc, name, threads=threads)
            rows.extend(Row(spec.mode, value, sc.n_users, sc.n_antennas, sc.path_loss_exp,
                            sc.d_p, sc.d_s, sc.p_max_dbm, sc.seed, name, r) for r in results)
    order = {name: i for i, name in enumerate(sorted(SOLVERS))}
    rows.sort(key=lambda r: (r.sweep_value, r.result.trial_index, order[r.solver]))
    return rows


def format_csv(rows, timing: bool = True) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for r in rows:
        res = r.result
        wall = _fmt(res.solver_wall_time) if timing else ""
        fields = [r.mode, _fmt(r.k), _fmt(r.nt), _fmt(r.alpha), _fmt(r.d_p), _fmt(r.d_s),
                  _fmt(r.p_max_dbm), _fmt(r.seed), _fmt(res.trial_index), r.solver,
                  _fmt(res.tau0), _fmt(res.sum_rate), wall, res.flags]
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def summary_rows(rows):
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r.sweep_value, r.solver), []).append(r.result)
    return [(value, solver, summarize(res)) for (value, solver), res in sorted(groups.items())]


def format_summary_csv(mode: str, rows, timing: bool = True) -> str:
    buf = io.StringIO()
    buf.write(SUMMARY_HEADER + "\n")
    for value, solver, s in summary_rows(rows):
        wall = _fmt(s.mean_wall_time) if timing else ""
        buf.write(",".join([mode, _fmt(value), solver, _fmt(s.n_ok), _fmt(s.n_failed),
                            _fmt(s.mean), _fmt(s.std_error), wall]) + "\n")
    return buf.getvalue()


def emit_csv(rows, path: Path, timing: bool = True) -> Path:
    """Write the per-trial CSV (UTF-8, ``\\n`` line endings)."""
    if not rows:
        raise ValueError("no results to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows, timing))
    return path


def _human_summary(spec: ExperimentSpec, rows) -> str:
    label = {"sweep-users": "K", "sweep-dp": "d_p"}.get(spec.mode)
    lines = [f"{spec.mode}: {len(rows)} rows"]
    for value, solver, s in summary_rows(rows):
        head = f"{label}={_fmt(value)} " if label else ""
        line = (f"  {head}{solver:9s} mean sum-rate {s.mean:.6g} bps/Hz"
                f" (se {s.std_error:.2g}, n={s.n_ok}")
        if s.n_failed:
            line += f", failed={s.n_failed}"
        line += ")"
        if spec.timing:
            line += f", mean solve time {s.mean_wall_time * 1e3:.3g} ms"
        lines.append(line)
    return "\n".join(lines)


def run(spec_file, output: str | None = None, threads: int = 1, seed: int | None = None,
        stdout=None, stderr=None) -> int:
    """Execute an experiment file; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    spec_file = Path(spec_file)
    try:
        text = spec_file.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {spec_file}: {exc}", file=stderr)
        return EXIT_CONFIG
    try:
        spec = parse_spec(text, spec_file.parent)
        if seed is not None:
            spec = dataclasses.replace(spec, scenario=spec.scenario.with_(seed=seed))
        if threads < 1:
            raise ConfigError("--threads: must be >= 1")
    except (ConfigError, ValidationError) as exc:
        print(f"{spec_file}: config error: {exc}", file=stderr)
        return EXIT_CONFIG
    if output is not None:
        spec = dataclasses.replace(spec, output=Path(output) / spec.output.name)
    try:
        rows = execute(spec, threads=threads)
        path = emit_csv(rows, spec.output, spec.timing)
        summary_path = path.with_name(path.stem + "_summary.csv")
        with open(summary_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_summary_csv(spec.mode, rows, spec.timing))
    except (OSError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_RUNTIME
    print(_human_summary(spec, rows), file=stdout)
    print(f"wrote {path} and {summary_path}", file=stdout)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wpcn", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment file")
    p_run.add_argument("spec_file")
    p_run.add_argument("--output", metavar="DIR", help="directory for the CSV files")
    p_run.add_argument("--threads", type=int, default=1, metavar="N")
    p_run.add_argument("--seed", type=int, metavar="S", help="overrides scenario.seed")
    args = parser.parse_args(argv)
    return run(args.spec_file, args.output, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
