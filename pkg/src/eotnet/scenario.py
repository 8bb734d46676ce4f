"""Ground-truth generation, per-node measurement synthesis, and presets.

A scenario is described by a YAML config (shape, trajectory, noise levels,
priors, network, Monte Carlo settings).  Presets s1/s2/s3 ship with the
package: a stationary high-noise rectangle, a moving ellipse, and a moving
rectangle.  Truth generation is deterministic; measurement synthesis is fully
determined by the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .consensus import NodeKind, SensorNetwork, build_network
from .geometry import Extent, KinematicState, sample_measurements, wrap_angle

__all__ = [
    "TrajectorySpec",
    "ScenarioConfig",
    "ScenarioRun",
    "PRESETS",
    "load_config",
    "preset_text",
    "generate_truth",
    "generate_measurements",
    "build_scenario_run",
    "benchmark_network",
    "resolve_network",
]

PRESETS = ("s1", "s2", "s3")

KMH_TO_MPS = 1000.0 / 3600.0


@dataclass(frozen=True)
class TrajectorySpec:
    """Either a fixed pose or a constant-speed waypoint course."""

    kind: str  # "stationary" | "waypoints"
    position: np.ndarray | None = None
    orientation: float = 0.0
    waypoints: np.ndarray | None = None
    speed_mps: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    shape: str  # "ellipse" | "rectangle"
    semi_axes: tuple[float, float]
    steps: int
    scan_time: float
    kinematic_dim: int
    trajectory: TrajectorySpec
    meas_law: str  # "fixed" | "poisson"
    meas_count: int
    meas_rate: float
    ch: np.ndarray
    cv: np.ndarray
    cxw: np.ndarray
    cpw: np.ndarray
    prior_mode: str  # "fixed" | "sampled"
    x0_mean: np.ndarray | None
    cx0: np.ndarray
    p0_mean: np.ndarray | None
    cp0: np.ndarray
    network: str | dict = "benchmark"
    runs: int = 1
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class ScenarioRun:
    """One realized scenario: truth, per-node measurements, and priors.

    measurements[k][s] is the (n, 2) detection array of node s at step k;
    communication nodes always carry empty arrays.
    """

    truth: tuple[tuple[KinematicState, Extent], ...]
    measurements: tuple[tuple[np.ndarray, ...], ...]
    x0: np.ndarray
    cx0: np.ndarray
    p0: np.ndarray
    cp0: np.ndarray
    seed: object


def _matrix(spec, name: str) -> np.ndarray:
    """Parse a config matrix: a flat list means a diagonal matrix."""
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 1:
        return np.diag(arr)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr
    raise ValueError(f"{name} must be a flat diagonal list or a square matrix")


def _parse_config(data: dict, name_hint: str) -> ScenarioConfig:
    try:
        traj_data = data["trajectory"]
        kind = traj_data["kind"]
        if kind == "stationary":
            traj = TrajectorySpec(
                kind="stationary",
                position=np.asarray(traj_data["position"], dtype=float),
                orientation=float(traj_data["orientation"]),
            )
        elif kind == "waypoints":
            waypoints = np.asarray(traj_data["waypoints"], dtype=float)
            if waypoints.ndim != 2 or waypoints.shape[0] < 2 or waypoints.shape[1] != 2:
                raise ValueError("waypoint trajectories need at least 2 planar points")
            traj = TrajectorySpec(
                kind="waypoints",
                waypoints=waypoints,
                speed_mps=float(traj_data["speed_kmh"]) * KMH_TO_MPS,
            )
        else:
            raise ValueError(f"unknown trajectory kind {kind!r}")

        meas = data["measurements"]
        law = meas["law"]
        if law == "fixed":
            count, rate = int(meas["count"]), 0.0
            if count < 1:
                raise ValueError("fixed measurement count must be >= 1")
        elif law == "poisson":
            count, rate = 0, float(meas["rate"])
            if rate <= 0.0:
                raise ValueError("poisson measurement rate must be > 0")
        else:
            raise ValueError(f"unknown measurement law {law!r}")

        priors = data["priors"]
        shape = data["shape"]
        if shape not in ("ellipse", "rectangle"):
            raise ValueError(f"unknown shape {shape!r}")
        axes = tuple(float(v) for v in data["semi_axes"])
        if len(axes) != 2 or min(axes) <= 0:
            raise ValueError("semi_axes must be two positive lengths")

        return ScenarioConfig(
            name=str(data.get("name", name_hint)),
            shape=shape,
            semi_axes=axes,
            steps=int(data["steps"]),
            scan_time=float(data["scan_time"]),
            kinematic_dim=int(data["kinematic_dim"]),
            trajectory=traj,
            meas_law=law,
            meas_count=count,
            meas_rate=rate,
            ch=_matrix(data["noise"]["multiplicative_cov"], "multiplicative_cov"),
            cv=_matrix(data["noise"]["measurement_cov"], "measurement_cov"),
            cxw=_matrix(data["process"]["kinematic_cov"], "process kinematic_cov"),
            cpw=_matrix(data["process"]["extent_cov"], "process extent_cov"),
            prior_mode=str(priors.get("mode", "fixed")),
            x0_mean=(np.asarray(priors["kinematic_mean"], dtype=float)
                     if priors.get("kinematic_mean") is not None else None),
            cx0=_matrix(priors["kinematic_cov"], "prior kinematic_cov"),
            p0_mean=(np.asarray(priors["extent_mean"], dtype=float)
                     if priors.get("extent_mean") is not None else None),
            cp0=_matrix(priors["extent_cov"], "prior extent_cov"),
            network=data.get("network", "benchmark"),
            runs=int(data.get("runs", 1)),
            seed=int(data.get("seed", 0)),
            raw=data,
        )
    except KeyError as exc:
        raise ValueError(f"scenario config is missing key {exc}") from exc


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return resources.files("eotnet.data").joinpath(f"{name}.yaml").read_text()


def load_config(source: str | Path) -> ScenarioConfig:
    """Load a scenario config from a preset name or a YAML file path."""
    if isinstance(source, str) and source in PRESETS:
        return _parse_config(yaml.safe_load(preset_text(source)), source)
    path = Path(source)
    with path.open() as fh:
        return _parse_config(yaml.safe_load(fh), path.stem)


def benchmark_network() -> SensorNetwork:
    """The fixed 20-node benchmark network (6 sensors, 14 relays, R = 2000 m)."""
    data = json.loads(resources.files("eotnet.data").joinpath("benchmark_network.json").read_text())
    sensors = set(data["sensor_nodes"])
    kinds = [NodeKind.SENSOR if i in sensors else NodeKind.COMMUNICATION
             for i in range(len(data["positions"]))]
    return build_network(data["positions"], kinds, data["comm_radius"])


def resolve_network(config: ScenarioConfig) -> SensorNetwork:
    if config.network == "benchmark":
        return benchmark_network()
    spec = config.network
    sensors = set(spec["sensor_nodes"])
    kinds = [NodeKind.SENSOR if i in sensors else NodeKind.COMMUNICATION
             for i in range(len(spec["positions"]))]
    return build_network(spec["positions"], kinds, spec["comm_radius"])


def _waypoint_pose(waypoints: np.ndarray, arc: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and unit heading at a given arc length along the polyline.

    Beyond the last waypoint the course continues along the final heading.
    At a waypoint the outgoing segment's heading applies.
    """
    segments = np.diff(waypoints, axis=0)
    lengths = np.linalg.norm(segments, axis=1)
    if (lengths <= 0).any():
        raise ValueError("consecutive waypoints must be distinct")
    headings = segments / lengths[:, None]
    remaining = arc
    for seg in range(len(lengths)):
        if remaining < lengths[seg] or seg == len(lengths) - 1:
            return waypoints[seg] + remaining * headings[seg], headings[seg]
        remaining -= lengths[seg]
    raise AssertionError("unreachable")


def generate_truth(config: ScenarioConfig) -> tuple[tuple[KinematicState, Extent], ...]:
    """Deterministic ground-truth sequence for the configured trajectory."""
    l1, l2 = config.semi_axes
    out = []
    traj = config.trajectory
    extra = config.kinematic_dim - 2
    if extra not in (0, 2):
        raise ValueError("kinematic dimension must be 2 (position) or 4 (position+velocity)")
    if traj.kind == "stationary":
        state = KinematicState(traj.position, np.zeros(extra))
        ext = Extent(traj.orientation, l1, l2)
        return tuple((state, ext) for _ in range(config.steps))
    step_len = traj.speed_mps * config.scan_time
    for k in range(config.steps):
        pos, heading = _waypoint_pose(traj.waypoints, k * step_len)
        vel = traj.speed_mps * heading
        state = KinematicState(pos, vel[:extra] if extra else np.zeros(0))
        out.append((state, Extent(wrap_angle(float(np.arctan2(heading[1], heading[0]))), l1, l2)))
    return tuple(out)


def generate_measurements(
    truth,
    net: SensorNetwork,
    config: ScenarioConfig,
    seed,
) -> ScenarioRun:
    """Synthesize per-node detections and realize the priors for one run.

    The draw order (priors, then step-by-step node-by-node counts and
    detections) is fixed, so equal seeds give bit-identical runs.
    """
    rng = np.random.default_rng(seed)
    x0, p0 = _realize_priors(truth, config, rng)
    sensor_set = set(net.sensor_nodes)
    empty = np.zeros((0, 2))
    steps = []
    for state, ext in truth:
        per_node = []
        for s in range(net.size):
            if s not in sensor_set:
                per_node.append(empty)
                continue
            if config.meas_law == "fixed":
                n = config.meas_count
            else:
                n = int(rng.poisson(config.meas_rate))
            per_node.append(sample_measurements(state, ext, config.ch, config.cv, n, rng))
        steps.append(tuple(per_node))
    return ScenarioRun(
        truth=tuple(truth),
        measurements=tuple(steps),
        x0=x0,
        cx0=config.cx0.copy(),
        p0=p0,
        cp0=config.cp0.copy(),
        seed=seed,
    )


def _realize_priors(truth, config: ScenarioConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    state0, ext0 = truth[0]
    x_mean = config.x0_mean if config.x0_mean is not None else state0.as_array()
    p_mean = config.p0_mean if config.p0_mean is not None else ext0.as_array()
    if x_mean.size != config.kinematic_dim:
        raise ValueError("prior kinematic mean has the wrong dimension")
    if config.prior_mode == "fixed":
        return x_mean.copy(), p_mean.copy()
    if config.prior_mode != "sampled":
        raise ValueError(f"unknown prior mode {config.prior_mode!r}")
    from ._linalg import sqrt_psd  # local import to keep module load light

    x0 = x_mean + sqrt_psd(config.cx0) @ rng.standard_normal(x_mean.size)
    p0 = p_mean + sqrt_psd(config.cp0) @ rng.standard_normal(3)
    p0[0] = wrap_angle(p0[0])
    p0[1:] = np.maximum(p0[1:], 1e-3)
    return x0, p0


def build_scenario_run(config: ScenarioConfig, net: SensorNetwork, seed) -> ScenarioRun:
    """Truth plus measurements in one call."""
    return generate_measurements(generate_truth(config), net, config, seed)
