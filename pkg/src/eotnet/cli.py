"""Batch benchmark harness.

Loads a scenario (preset or YAML file), runs the selected filter over Monte
Carlo realizations, and writes metrics.csv / summary.txt / assumptions.txt
into the output directory.  Sweeps repeat this per consensus-iteration or
measurement-rate setting and add a combined comparison file.  Outputs are
deterministic for a fixed seed; EOT_THREADS caps the worker pool.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .consensus import metropolis_weights
from .diagnostics import (
    AssumptionTrace,
    check_assumptions,
    evaluate_run,
    summarize_metrics,
    write_metrics_csv,
)
from .linearization import kinematic_measurement_matrix
from .scenario import PRESETS, build_scenario_run, load_config, preset_text, resolve_network
from .trackers import FilterConfig, FilterKind, params_from_scenario, run_filter

__all__ = ["RunSpec", "run", "sweep", "main"]


@dataclass(frozen=True)
class RunSpec:
    """Everything one benchmark invocation needs."""

    scenario: str | Path
    filter_kind: FilterKind
    out_dir: Path
    consensus_iters: int | None = None
    poisson_rate: float | None = None
    fixed_count: int | None = None
    runs: int | None = None
    seed: int | None = None
    omega: float | None = None  # None -> node count


def _load_with_overrides(spec: RunSpec):
    config = load_config(spec.scenario)
    overrides = {}
    if spec.poisson_rate is not None:
        overrides.update(meas_law="poisson", meas_rate=float(spec.poisson_rate), meas_count=0)
    if spec.fixed_count is not None:
        overrides.update(meas_law="fixed", meas_count=int(spec.fixed_count), meas_rate=0.0)
    if spec.runs is not None:
        overrides["runs"] = int(spec.runs)
    if spec.seed is not None:
        overrides["seed"] = int(spec.seed)
    if overrides:
        config = config.with_overrides(**overrides)
    if config.runs < 1:
        raise ValueError("at least one Monte Carlo run is required")
    return config


def _worker(payload):
    """Run one Monte Carlo realization; executed in the worker pool."""
    (run_idx, config, net, params, filter_config, pi, child, with_trace) = payload
    trace = AssumptionTrace() if with_trace else None
    scn = build_scenario_run(config, net, child)
    record = run_filter(scn, net, params, filter_config, pi, trace=trace)
    rows = [(run_idx, step, node, metric, value)
            for step, node, metric, value in evaluate_run(record, scn, config.shape)]
    return run_idx, rows, record.step_seconds, trace


def _pool_size(runs: int) -> int:
    cap = os.environ.get("EOT_THREADS", "").strip()
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(runs, limit))


def run(spec: RunSpec) -> int:
    """Execute one scenario x filter benchmark and write its artifacts."""
    config = _load_with_overrides(spec)
    net = resolve_network(config)
    pi = metropolis_weights(net)
    filter_config = FilterConfig(
        kind=spec.filter_kind,
        consensus_iters=spec.consensus_iters if spec.consensus_iters is not None else 1,
        omega=spec.omega,
    )
    params = params_from_scenario(config, net)
    children = np.random.SeedSequence(config.seed).spawn(config.runs)
    payloads = [
        (idx, config, net, params, filter_config, pi, child, idx == 0)
        for idx, child in enumerate(children)
    ]

    workers = _pool_size(config.runs)
    if workers == 1:
        results = [_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, payloads))

    results.sort(key=lambda r: r[0])
    rows = [row for _, run_rows, _, _ in results for row in run_rows]
    step_seconds = np.concatenate([secs for _, _, secs, _ in results])
    trace = results[0][3]

    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "metrics.csv", rows)

    omega_val = filter_config.omega if filter_config.omega is not None else float(net.size)
    report = check_assumptions(
        fx=params.fx,
        h=kinematic_measurement_matrix(config.kinematic_dim),
        q_cov=config.cxw,
        pi=pi,
        rounds=filter_config.consensus_iters,
        omega=omega_val if spec.filter_kind is FilterKind.CM else 1.0,
        trace=trace,
    )
    (out / "assumptions.txt").write_text(report.as_text() + "\n")

    lines = [
        f"scenario: {config.name}",
        f"filter: {spec.filter_kind.value}",
        f"runs: {config.runs}",
        f"seed: {config.seed}",
        f"steps: {config.steps}",
        f"consensus iterations: {filter_config.consensus_iters}",
        f"omega: {omega_val:g}" + ("" if filter_config.omega is not None else " (node count)"),
        f"measurements: {config.meas_law} "
        + (f"count={config.meas_count}" if config.meas_law == "fixed"
           else f"rate={config.meas_rate:g}"),
        f"mean wall time per tracking step: {step_seconds.mean():.6f} s",
        "",
        "metric means +/- std over all (run, step, node) samples:",
    ]
    for metric, (mean, std, count) in summarize_metrics(rows).items():
        lines.append(f"  {metric:10s} {mean:.6g} +/- {std:.6g}  (n={count})")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return 0


def sweep(spec: RunSpec, values, which: str) -> int:
    """Run one artifact set per sweep value plus a combined comparison CSV."""
    if not values:
        raise ValueError("sweep list must not be empty")
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    combined = []
    for value in values:
        if which == "L":
            sub = replace(spec, consensus_iters=int(value), out_dir=out / f"L_{int(value)}")
            label = f"L={int(value)}"
        else:
            sub = replace(spec, poisson_rate=float(value), out_dir=out / f"lambda_{value:g}")
            label = f"lambda={value:g}"
        run(sub)
        rows = _read_metrics(Path(sub.out_dir) / "metrics.csv")
        for metric, (mean, std, count) in summarize_metrics(rows).items():
            combined.append((label, metric, mean, std, count))
    with open(out / "combined.csv", "w", newline="\n") as fh:
        fh.write("setting,metric,mean,std,count\n")
        for label, metric, mean, std, count in combined:
            fh.write(f"{label},{metric},{mean:.9g},{std:.9g},{count}\n")
    return 0


def _read_metrics(path: Path):
    rows = []
    with open(path) as fh:
        next(fh)
        for line in fh:
            run_idx, step, node, metric, value = line.rstrip("\n").split(",")
            rows.append((int(run_idx), int(step), int(node), metric, float(value)))
    return rows


def _parse_sweep_list(text: str, kind):
    try:
        values = [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad sweep list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("sweep list must not be empty")
    return values


def _parse_omega(text: str):
    if text.strip().upper() == "G":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("omega must be 'G' or a number") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eotnet",
        description="Extended object tracking benchmark over sensor networks.",
    )
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=PRESETS, help="preset scenario")
    src.add_argument("--config", type=Path, help="scenario YAML file")
    parser.add_argument("--filter", choices=[k.value for k in FilterKind],
                        help="tracker to run")
    parser.add_argument("--L", type=int, default=None, dest="consensus_iters",
                        help="consensus iterations per measurement index")
    parser.add_argument("--lambda", type=float, default=None, dest="poisson_rate",
                        help="Poisson measurement rate override")
    parser.add_argument("--fixed-n", type=int, default=None, dest="fixed_count",
                        help="fixed measurement count override")
    parser.add_argument("--runs", type=int, default=None, help="Monte Carlo runs")
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed")
    parser.add_argument("--omega", type=_parse_omega, default=None,
                        help="measurement-consensus weight: 'G' (node count) or a number")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--sweep-L", type=lambda t: _parse_sweep_list(t, int),
                        default=None, help="comma-separated consensus iteration sweep")
    parser.add_argument("--sweep-lambda", type=lambda t: _parse_sweep_list(t, float),
                        default=None, help="comma-separated Poisson rate sweep")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the scenario config and exit")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    source = args.scenario if args.scenario else args.config
    if args.dump_config:
        try:
            if args.scenario:
                sys.stdout.write(preset_text(args.scenario))
            else:
                sys.stdout.write(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 0

    if args.filter is None:
        parser.error("--filter is required unless --dump-config is given")
    if args.out is None:
        parser.error("--out is required unless --dump-config is given")
    if args.poisson_rate is not None and args.fixed_count is not None:
        parser.error("--lambda and --fixed-n are mutually exclusive")
    if args.sweep_L is not None and args.sweep_lambda is not None:
        parser.error("only one sweep may be given")

    kind = FilterKind(args.filter)
    if kind is not FilterKind.CEOT and args.consensus_iters is not None \
            and args.consensus_iters < 1:
        parser.error("--L must be >= 1 for distributed filters")

    spec = RunSpec(
        scenario=source,
        filter_kind=kind,
        out_dir=args.out,
        consensus_iters=args.consensus_iters,
        poisson_rate=args.poisson_rate,
        fixed_count=args.fixed_count,
        runs=args.runs,
        seed=args.seed,
        omega=args.omega,
    )
    try:
        if args.sweep_L is not None:
            return sweep(spec, args.sweep_L, "L")
        if args.sweep_lambda is not None:
            return sweep(spec, args.sweep_lambda, "lambda")
        return run(spec)
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
