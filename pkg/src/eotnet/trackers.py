"""Sequential extended-object trackers: centralized and two consensus variants.

All three filters process each scan's measurement batch sequentially.  At
measurement index i, both linear models are built from the index i-1 estimates
(the extent update consumes the previous kinematic estimate and vice versa),
the information states are corrected, and for the distributed variants the
network exchanges either posterior information pairs (CI) or innovation
contributions (CM) through synchronous averaging rounds.  After the batch, a
standard information-form prediction advances both states.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from ._linalg import spd_inv, spd_solve, sym
from .consensus import ConsensusMatrix, SensorNetwork, consensus_rounds
from .geometry import Extent, shape_matrix, shape_row_jacobians, wrap_angle
from .info_filter import (
    InformationState,
    InnovationPair,
    correct,
    from_moments,
    innovation,
    predict,
    to_moments,
)
from .linearization import (
    centered_pseudo_measurement,
    extent_measurement_matrix,
    extent_noise_moments,
    kinematic_measurement_matrix,
    pseudo_measurement,
)

__all__ = [
    "FilterKind",
    "NodeEstimate",
    "FilterConfig",
    "TrackerParams",
    "TrackRecord",
    "ncv_transition",
    "params_from_scenario",
    "initial_estimate",
    "predict_estimate",
    "ceot_correct",
    "ceot_step",
    "ci_correct",
    "ci_step",
    "cm_correct",
    "cm_step",
    "run_filter",
    "fuse_nodes",
]


class FilterKind(enum.Enum):
    CEOT = "ceot"
    CI = "ci"
    CM = "cm"


@dataclass(frozen=True)
class NodeEstimate:
    """Information states for the kinematics and the extent on one node."""

    kin: InformationState
    ext: InformationState


@dataclass(frozen=True)
class FilterConfig:
    """Which filter to run and its consensus settings.

    omega None means the node-count compensation |G|, which makes the
    measurement-consensus filter match the centralized filter exactly when
    averaging is complete.
    """

    kind: FilterKind
    consensus_iters: int = 1
    omega: float | None = None

    def __post_init__(self):
        if self.kind is not FilterKind.CEOT and self.consensus_iters < 1:
            raise ValueError("distributed filters need at least one consensus iteration")


@dataclass(frozen=True)
class TrackerParams:
    """Models shared by every node: noises, transitions, and the axis floor."""

    ch: np.ndarray
    cv_by_node: tuple[np.ndarray, ...]
    fx: np.ndarray
    fp: np.ndarray
    wwx: np.ndarray
    wwp: np.ndarray
    min_axis: float = 1e-3


def ncv_transition(x_dim: int, scan_time: float) -> np.ndarray:
    """Nearly-constant-velocity transition (identity for a position-only state)."""
    if x_dim == 2:
        return np.eye(2)
    if x_dim == 4:
        f = np.eye(4)
        f[0, 2] = scan_time
        f[1, 3] = scan_time
        return f
    raise ValueError("kinematic dimension must be 2 or 4")


def params_from_scenario(config, net: SensorNetwork) -> TrackerParams:
    """Assemble tracker models from a scenario config (shared noise per node)."""
    return TrackerParams(
        ch=np.asarray(config.ch, dtype=float),
        cv_by_node=tuple(np.asarray(config.cv, dtype=float) for _ in range(net.size)),
        fx=ncv_transition(config.kinematic_dim, config.scan_time),
        fp=np.eye(3),
        wwx=spd_inv(np.asarray(config.cxw, dtype=float), name="kinematic process covariance"),
        wwp=spd_inv(np.asarray(config.cpw, dtype=float), name="extent process covariance"),
    )


def initial_estimate(x0, cx0, p0, cp0, min_axis: float = 1e-3) -> NodeEstimate:
    est = NodeEstimate(kin=from_moments(x0, cx0), ext=from_moments(p0, cp0))
    return NodeEstimate(kin=est.kin, ext=_sanitize_extent(est.ext, min_axis))


def _sanitize_extent(ext: InformationState, min_axis: float) -> InformationState:
    """Re-anchor the extent mean after a write: wrap the orientation into
    (-pi, pi] and clamp semi-axes to the floor.  No-op while the estimate is
    already in range, so the information state is normally left untouched."""
    p = spd_solve(ext.omega, ext.q, name="extent information matrix")
    in_range = (-np.pi < p[0] <= np.pi) and p[1] >= min_axis and p[2] >= min_axis
    if in_range:
        return ext
    fixed = np.array([wrap_angle(p[0]), max(p[1], min_axis), max(p[2], min_axis)])
    return InformationState(q=ext.omega @ fixed, omega=ext.omega)


@dataclass(frozen=True)
class _LinPoint:
    """Shared pieces of both linear models at one node's current estimates."""

    x_hat: np.ndarray
    cx_pos: np.ndarray  # position block of the kinematic covariance
    p_ext: Extent
    cp: np.ndarray
    h: np.ndarray
    base_noise: np.ndarray  # scattering + extent-spread terms, without Cv
    m_mat: np.ndarray


def _lin_point(est: NodeEstimate, ch: np.ndarray, min_axis: float) -> _LinPoint:
    x_hat, cx = to_moments(est.kin)
    p_vec, cp = to_moments(est.ext)
    p_ext = Extent.from_array(p_vec, min_axis)
    s_mat = shape_matrix(p_ext)
    jac = shape_row_jacobians(p_ext)
    scatter = s_mat @ ch @ s_mat.T
    spread = np.array([
        [np.trace(cp @ jac[n].T @ ch @ jac[m]) for n in range(2)]
        for m in range(2)
    ])
    return _LinPoint(
        x_hat=x_hat,
        cx_pos=cx[:2, :2],
        p_ext=p_ext,
        cp=cp,
        h=kinematic_measurement_matrix(x_hat.size),
        base_noise=sym(scatter + spread),
        m_mat=extent_measurement_matrix(p_ext, ch),
    )


def _node_innovations(lp: _LinPoint, y: np.ndarray, cv: np.ndarray):
    """Innovation pairs of one detection for the kinematics and the extent,
    both evaluated at the same pre-update linearization point."""
    rx = sym(lp.base_noise + cv)
    vx = spd_inv(rx, name="kinematic measurement noise")
    kin_pair = innovation(lp.h, vx, y)
    cy = sym(lp.cx_pos + rx)
    _, rp = extent_noise_moments(cy, lp.m_mat, lp.cp, lp.p_ext)
    vp = spd_inv(rp, name="extent pseudo-measurement noise")
    y_quad = pseudo_measurement(y, lp.x_hat)
    y_tilde = centered_pseudo_measurement(y_quad, cy, lp.m_mat, lp.p_ext)
    ext_pair = innovation(lp.m_mat, vp, y_tilde)
    return kin_pair, ext_pair


def _zero_pairs(x_dim: int) -> tuple[InnovationPair, InnovationPair]:
    return (
        InnovationPair(np.zeros(x_dim), np.zeros((x_dim, x_dim))),
        InnovationPair(np.zeros(3), np.zeros((3, 3))),
    )


def _batch_length(batches) -> int:
    return max((len(b) for b in batches), default=0)


def ceot_correct(
    est: NodeEstimate,
    batches,
    cvs,
    params: TrackerParams,
) -> NodeEstimate:
    """Centralized sequential correction over aligned per-sensor batches.

    At each index the center fuses one detection from every sensor that still
    has measurements left by summing their innovation pairs; sensors with
    shorter batches simply stop contributing.
    """
    if len(batches) != len(cvs):
        raise ValueError("one measurement noise covariance per batch is required")
    x_dim = est.kin.dim
    for i in range(_batch_length(batches)):
        lp = _lin_point(est, params.ch, params.min_axis)
        kin_total, ext_total = _zero_pairs(x_dim)
        for batch, cv in zip(batches, cvs):
            if i >= len(batch):
                continue
            kin_pair, ext_pair = _node_innovations(lp, batch[i], cv)
            kin_total = kin_total + kin_pair
            ext_total = ext_total + ext_pair
        est = NodeEstimate(
            kin=correct(est.kin, kin_total),
            ext=_sanitize_extent(correct(est.ext, ext_total), params.min_axis),
        )
    return est


def predict_estimate(est: NodeEstimate, params: TrackerParams) -> NodeEstimate:
    return NodeEstimate(
        kin=predict(est.kin, params.fx, params.wwx),
        ext=_sanitize_extent(predict(est.ext, params.fp, params.wwp), params.min_axis),
    )


def ceot_step(est, batches, cvs, params) -> NodeEstimate:
    """One scan: sequential correction over the batches, then prediction."""
    return predict_estimate(ceot_correct(est, batches, cvs, params), params)


def _consensus_states(ests, pi, rounds: int, min_axis: float) -> list[NodeEstimate]:
    """Average the four information quantities jointly over the network."""
    qx = consensus_rounds([e.kin.q for e in ests], pi, rounds)
    ox = consensus_rounds([e.kin.omega for e in ests], pi, rounds)
    qp = consensus_rounds([e.ext.q for e in ests], pi, rounds)
    op = consensus_rounds([e.ext.omega for e in ests], pi, rounds)
    return [
        NodeEstimate(
            kin=InformationState(qx[s], ox[s]),
            ext=_sanitize_extent(InformationState(qp[s], op[s]), min_axis),
        )
        for s in range(len(ests))
    ]


def ci_correct(
    ests,
    batches,
    net: SensorNetwork,
    pi: ConsensusMatrix | np.ndarray,
    rounds: int,
    params: TrackerParams,
) -> list[NodeEstimate]:
    """Information-consensus correction: per measurement index, sensor nodes
    apply their local correction, communication nodes pass through, and the
    posterior information pairs are averaged for the configured rounds."""
    ests = list(ests)
    sensors = set(net.sensor_nodes)
    for i in range(_batch_length(batches)):
        for s in sensors:
            batch = batches[s]
            if i >= len(batch):
                continue
            lp = _lin_point(ests[s], params.ch, params.min_axis)
            kin_pair, ext_pair = _node_innovations(lp, batch[i], params.cv_by_node[s])
            ests[s] = NodeEstimate(
                kin=correct(ests[s].kin, kin_pair),
                ext=_sanitize_extent(correct(ests[s].ext, ext_pair), params.min_axis),
            )
        ests = _consensus_states(ests, pi, rounds, params.min_axis)
    return ests


def ci_step(ests, batches, net, pi, rounds, params) -> list[NodeEstimate]:
    ests = ci_correct(ests, batches, net, pi, rounds, params)
    return [predict_estimate(e, params) for e in ests]


def cm_correct(
    ests,
    batches,
    net: SensorNetwork,
    pi: ConsensusMatrix | np.ndarray,
    rounds: int,
    params: TrackerParams,
    omega: float | None = None,
) -> list[NodeEstimate]:
    """Measurement-consensus correction: per measurement index, innovation
    pairs (zero on communication nodes) are averaged over the network and
    every node corrects with the compensation weight omega (default: node
    count, which restores the centralized innovation sum under complete
    averaging)."""
    ests = list(ests)
    n = net.size
    if omega is None:
        omega = float(n)
    sensors = set(net.sensor_nodes)
    x_dim = ests[0].kin.dim
    for i in range(_batch_length(batches)):
        dqx = np.zeros((n, x_dim))
        dox = np.zeros((n, x_dim, x_dim))
        dqp = np.zeros((n, 3))
        dop = np.zeros((n, 3, 3))
        for s in sensors:
            batch = batches[s]
            if i >= len(batch):
                continue
            lp = _lin_point(ests[s], params.ch, params.min_axis)
            kin_pair, ext_pair = _node_innovations(lp, batch[i], params.cv_by_node[s])
            dqx[s], dox[s] = kin_pair.dq, kin_pair.domega
            dqp[s], dop[s] = ext_pair.dq, ext_pair.domega
        dqx = consensus_rounds(dqx, pi, rounds)
        dox = consensus_rounds(dox, pi, rounds)
        dqp = consensus_rounds(dqp, pi, rounds)
        dop = consensus_rounds(dop, pi, rounds)
        ests = [
            NodeEstimate(
                kin=correct(ests[s].kin, InnovationPair(dqx[s], dox[s]), weight=omega),
                ext=_sanitize_extent(
                    correct(ests[s].ext, InnovationPair(dqp[s], dop[s]), weight=omega),
                    params.min_axis,
                ),
            )
            for s in range(n)
        ]
    return ests


def cm_step(ests, batches, net, pi, rounds, params, omega=None) -> list[NodeEstimate]:
    ests = cm_correct(ests, batches, net, pi, rounds, params, omega)
    return [predict_estimate(e, params) for e in ests]


@dataclass(frozen=True)
class TrackRecord:
    """Per-step, per-node moment outputs of one tracked run.

    The centralized filter records a single pseudo-node.  Outputs are taken
    after the scan's correction, before the prediction to the next scan.
    """

    kind: FilterKind
    x_mean: np.ndarray  # (steps, nodes, x_dim)
    x_cov: np.ndarray  # (steps, nodes, x_dim, x_dim)
    p_mean: np.ndarray  # (steps, nodes, 3)
    p_cov: np.ndarray  # (steps, nodes, 3, 3)
    step_seconds: np.ndarray  # (steps,)

    @property
    def steps(self) -> int:
        return self.x_mean.shape[0]

    @property
    def nodes(self) -> int:
        return self.x_mean.shape[1]


def run_filter(
    scn_run,
    net: SensorNetwork,
    params: TrackerParams,
    config: FilterConfig,
    pi: ConsensusMatrix | np.ndarray | None = None,
    trace=None,
) -> TrackRecord:
    """Drive one filter over a realized scenario run.

    For the distributed filters a consensus matrix is required.  An optional
    trace object (record_rx / record_omega) collects observed noise and
    information-matrix spectra for the stability assumption checks.
    """
    steps = len(scn_run.measurements)
    x_dim = scn_run.x0.size
    distributed = config.kind is not FilterKind.CEOT
    if distributed and pi is None:
        raise ValueError("distributed filters need a consensus matrix")
    nodes = net.size if distributed else 1
    first = initial_estimate(scn_run.x0, scn_run.cx0, scn_run.p0, scn_run.cp0, params.min_axis)
    ests = [first] * nodes

    x_mean = np.zeros((steps, nodes, x_dim))
    x_cov = np.zeros((steps, nodes, x_dim, x_dim))
    p_mean = np.zeros((steps, nodes, 3))
    p_cov = np.zeros((steps, nodes, 3, 3))
    seconds = np.zeros(steps)
    sensors = list(net.sensor_nodes)

    for k, batches in enumerate(scn_run.measurements):
        t0 = time.perf_counter()
        if trace is not None:
            _record_noise_spectra(trace, ests, sensors, params, distributed)
        if config.kind is FilterKind.CEOT:
            ests = [
                ceot_correct(
                    ests[0],
                    [batches[s] for s in sensors],
                    [params.cv_by_node[s] for s in sensors],
                    params,
                )
            ]
        elif config.kind is FilterKind.CI:
            ests = ci_correct(ests, batches, net, pi, config.consensus_iters, params)
        else:
            ests = cm_correct(ests, batches, net, pi, config.consensus_iters, params,
                              config.omega)
        for s, est in enumerate(ests):
            x_mean[k, s], x_cov[k, s] = to_moments(est.kin)
            p_mean[k, s], p_cov[k, s] = to_moments(est.ext)
            if trace is not None:
                trace.record_omega(est.kin.omega)
        if k + 1 < steps:
            ests = [predict_estimate(e, params) for e in ests]
        seconds[k] = time.perf_counter() - t0

    return TrackRecord(
        kind=config.kind,
        x_mean=x_mean,
        x_cov=x_cov,
        p_mean=p_mean,
        p_cov=p_cov,
        step_seconds=seconds,
    )


def _record_noise_spectra(trace, ests, sensors, params, distributed):
    for s in sensors:
        est = ests[s] if distributed else ests[0]
        lp = _lin_point(est, params.ch, params.min_axis)
        trace.record_rx(sym(lp.base_noise + params.cv_by_node[s]))


def fuse_nodes(means: np.ndarray, covs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Information-weighted fusion of per-node estimates into one summary
    (sum of information matrices against the sum of information vectors)."""
    omegas = [spd_inv(c, name="node covariance") for c in covs]
    total = sym(sum(omegas))
    q = sum(om @ m for om, m in zip(omegas, means))
    cov = spd_inv(total, name="fused information")
    return cov @ q, cov
