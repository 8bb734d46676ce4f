import numpy as np
import pytest

from eotnet.consensus import check_primitive, metropolis_weights
from eotnet.scenario import (
    PRESETS,
    TrajectorySpec,
    build_scenario_run,
    generate_measurements,
    generate_truth,
    load_config,
    benchmark_network,
    preset_text,
    resolve_network,
)


def test_presets_load_and_match_parameter_tables():
    s1 = load_config("s1")
    assert s1.kinematic_dim == 2
    assert np.allclose(s1.cv, np.diag([3.0, 9.0]))
    assert np.allclose(s1.ch, np.eye(2) / 3)
    assert np.allclose(s1.x0_mean, [1.0, 1.0])
    assert np.allclose(s1.p0_mean, [0.0, 2.0, 12.0])
    assert np.allclose(s1.cx0, np.eye(2))
    assert np.allclose(s1.cp0, np.diag([1.0, 4.0, 9.0]))
    assert s1.meas_law == "fixed" and s1.meas_count == 100
    assert s1.trajectory.orientation == pytest.approx(np.pi / 4)
    assert s1.semi_axes == (4.0, 9.0)

    s2 = load_config("s2")
    assert s2.scan_time == 10.0
    assert np.allclose(s2.cv, np.diag([200.0, 8.0]))
    assert np.allclose(s2.ch, np.eye(2) / 4)
    assert np.allclose(s2.cxw, np.diag([100.0, 100.0, 1.0, 1.0]))
    assert np.allclose(s2.cpw, np.diag([0.05, 1.0, 1.0]))
    assert np.allclose(s2.cx0, np.diag([100.0, 100.0, 10.0, 10.0]))
    assert np.allclose(s2.cp0, np.diag([0.36, 70.0, 40.0]))
    assert s2.meas_law == "poisson" and s2.meas_rate == 5.0
    assert s2.semi_axes == (170.0, 40.0)
    assert s2.trajectory.speed_mps == pytest.approx(50000.0 / 3600.0)

    s3 = load_config("s3")
    assert s3.shape == "rectangle"
    assert np.allclose(s3.cv, np.eye(2))
    assert np.allclose(s3.cpw, np.diag([0.05, 0.01, 0.001]))
    assert s3.semi_axes == (10.0, 5.0)


def test_preset_text_round_trip(tmp_path):
    text = preset_text("s2")
    path = tmp_path / "custom.yaml"
    path.write_text(text.replace("steps: 40", "steps: 7"))
    config = load_config(path)
    assert config.steps == 7
    assert config.name == "s2"


def test_unknown_preset():
    with pytest.raises(ValueError):
        preset_text("s9")


def test_stationary_truth_constant():
    config = load_config("s1").with_overrides(steps=5)
    truth = generate_truth(config)
    assert len(truth) == 5
    first_state, first_ext = truth[0]
    for state, ext in truth:
        assert np.array_equal(state.as_array(), first_state.as_array())
        assert ext == first_ext
    assert first_ext.alpha == pytest.approx(np.pi / 4)
    assert (first_ext.l1, first_ext.l2) == (4.0, 9.0)


def test_straight_course_spacing():
    config = load_config("s2").with_overrides(trajectory=TrajectorySpec(
        kind="waypoints",
        waypoints=np.array([[0.0, 0.0], [10000.0, 0.0]]),
        speed_mps=50000.0 / 3600.0,
    ))
    truth = generate_truth(config)
    positions = np.array([state.m for state, _ in truth])
    gaps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
    assert np.allclose(gaps, 50000.0 / 3600.0 * 10.0, atol=1e-9)


def test_waypoint_truth_heading_and_velocity():
    config = load_config("s2")
    truth = generate_truth(config)
    positions = np.array([state.m for state, _ in truth])
    # arc length along the course advances one step length per scan, so all
    # chord gaps except the corner-straddling one equal the step length
    gaps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
    step = 50000.0 / 3600.0 * 10.0
    off = np.flatnonzero(~np.isclose(gaps, step, atol=1e-9))
    assert len(off) <= 1  # only the corner chord is shorter
    assert np.all(gaps[off] < step)
    # first leg heads +x, after the turn +y
    alphas = np.array([ext.alpha for _, ext in truth])
    assert alphas[0] == pytest.approx(0.0)
    assert alphas[-1] == pytest.approx(np.pi / 2)
    assert set(np.round(alphas, 12)) <= {0.0, round(np.pi / 2, 12)}
    # velocities follow the heading
    v0 = truth[0][0].mdot
    assert np.allclose(v0, [50000.0 / 3600.0, 0.0])


def test_waypoint_truth_extends_past_last_waypoint():
    config = load_config("s2").with_overrides(steps=200)
    truth = generate_truth(config)
    assert len(truth) == 200
    # tail keeps the final heading
    assert truth[-1][1].alpha == pytest.approx(np.pi / 2)
    assert truth[-1][0].m[1] > truth[-2][0].m[1]


def test_generate_measurements_counts_and_empty_relays():
    config = load_config("s1")
    net = benchmark_network()
    run = build_scenario_run(config, net, seed=123)
    assert len(run.measurements) == 1
    per_node = run.measurements[0]
    for s in range(net.size):
        if s in net.sensor_nodes:
            assert per_node[s].shape == (100, 2)
        else:
            assert per_node[s].shape == (0, 2)


def test_poisson_counts_mean():
    config = load_config("s2").with_overrides(steps=1)
    net = benchmark_network()
    counts = []
    truth = generate_truth(config)
    rng_seed = np.random.SeedSequence(42)
    for child in rng_seed.spawn(1700):
        run = generate_measurements(truth, net, config, child)
        counts.extend(len(run.measurements[0][s]) for s in net.sensor_nodes)
    counts = np.array(counts, dtype=float)
    assert counts.size >= 10_000
    tol = 3.0 * np.sqrt(5.0 / counts.size)
    assert abs(counts.mean() - 5.0) < tol


def test_same_seed_bit_identical():
    config = load_config("s2").with_overrides(steps=3)
    net = benchmark_network()
    a = build_scenario_run(config, net, seed=99)
    b = build_scenario_run(config, net, seed=99)
    assert np.array_equal(a.x0, b.x0)
    assert np.array_equal(a.p0, b.p0)
    for step_a, step_b in zip(a.measurements, b.measurements):
        for node_a, node_b in zip(step_a, step_b):
            assert np.array_equal(node_a, node_b)
    c = build_scenario_run(config, net, seed=100)
    assert not np.array_equal(a.x0, c.x0)


def test_measurement_covariance_at_true_pose():
    # large-sample covariance approaches S Ch S.T + Cv at the true pose
    from eotnet.geometry import shape_matrix

    config = load_config("s1").with_overrides(meas_count=60_000)
    net = benchmark_network()
    run = build_scenario_run(config, net, seed=5)
    node = net.sensor_nodes[0]
    ys = run.measurements[0][node]
    _, ext = run.truth[0]
    s_mat = shape_matrix(ext)
    expected = s_mat @ config.ch @ s_mat.T + config.cv
    assert np.allclose(np.cov(ys.T), expected, rtol=0.05, atol=0.05 * np.abs(expected).max())


def test_fixed_prior_mode_uses_configured_means():
    config = load_config("s1")
    net = benchmark_network()
    run = build_scenario_run(config, net, seed=1)
    assert np.array_equal(run.x0, [1.0, 1.0])
    assert np.array_equal(run.p0, [0.0, 2.0, 12.0])


def test_sampled_priors_center_on_truth():
    config = load_config("s2").with_overrides(steps=1)
    net = benchmark_network()
    draws = np.array([build_scenario_run(config, net, seed=i).x0 for i in range(300)])
    truth0 = generate_truth(config)[0][0].as_array()
    spread = np.sqrt(np.diag(config.cx0))
    assert np.all(np.abs(draws.mean(0) - truth0) < 4 * spread / np.sqrt(300))


def test_benchmark_network_consensus_is_primitive():
    net = benchmark_network()
    assert check_primitive(metropolis_weights(net))


def test_resolve_inline_network():
    config = load_config("s1").with_overrides(network={
        "positions": [[0.0, 0.0], [500.0, 0.0], [1000.0, 0.0]],
        "sensor_nodes": [0, 2],
        "comm_radius": 600.0,
    })
    net = resolve_network(config)
    assert net.size == 3
    assert net.sensor_nodes == (0, 2)


def test_config_validation_errors(tmp_path):
    bad = preset_text("s1").replace("law: fixed", "law: nonsense")
    path = tmp_path / "bad.yaml"
    path.write_text(bad)
    with pytest.raises(ValueError):
        load_config(path)
    missing = "\n".join(line for line in preset_text("s1").splitlines()
                        if not line.startswith("steps"))
    path2 = tmp_path / "missing.yaml"
    path2.write_text(missing)
    with pytest.raises(ValueError, match="missing"):
        load_config(path2)


def test_all_presets_parse():
    for name in PRESETS:
        config = load_config(name)
        assert config.runs >= 1
