"""Extended object tracking information filters over sensor networks.

A library and benchmark for jointly estimating the kinematics and the
elliptical/rectangular extent of a single object from multi-detection scans,
either at a fusion center or distributed across a network through
consensus on information or consensus on measurements.
"""

from .consensus import (
    ConsensusMatrix,
    NodeKind,
    SensorNetwork,
    build_network,
    check_primitive,
    consensus_rounds,
    metropolis_weights,
)
from .diagnostics import (
    MetricSeries,
    AssumptionReport,
    AssumptionTrace,
    acee,
    bounded_mse_experiment,
    check_assumptions,
    evaluate_run,
    gwd,
    nees,
    nees_bounds,
    ospa_vertices,
)
from .geometry import (
    Extent,
    KinematicState,
    ShapeKind,
    extent_vertices,
    sample_measurements,
    shape_matrix,
    shape_row_jacobians,
    wrap_angle,
)
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
    LinearizedExtentModel,
    LinearizedKinematicModel,
    centered_pseudo_measurement,
    extent_measurement_matrix,
    extent_noise_moments,
    kinematic_measurement_matrix,
    kinematic_noise_cov,
    linearize_extent,
    linearize_kinematic,
    pseudo_measurement,
    residual_cov,
)
from .scenario import (
    ScenarioConfig,
    ScenarioRun,
    build_scenario_run,
    generate_measurements,
    generate_truth,
    load_config,
    benchmark_network,
    resolve_network,
)
from .trackers import (
    FilterConfig,
    FilterKind,
    NodeEstimate,
    TrackerParams,
    TrackRecord,
    ceot_correct,
    ceot_step,
    ci_correct,
    ci_step,
    cm_correct,
    cm_step,
    fuse_nodes,
    initial_estimate,
    ncv_transition,
    params_from_scenario,
    predict_estimate,
    run_filter,
)

__version__ = "0.1.0"
