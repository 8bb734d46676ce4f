import numpy as np
import pytest

from eotnet.info_filter import (
    InformationState,
    InnovationPair,
    correct,
    from_moments,
    innovation,
    predict,
    to_moments,
)
from oracles import kalman_predict_moments


def random_pd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T + n * np.eye(n))


def test_innovation_identity():
    pair = innovation(np.eye(2), np.eye(2), np.array([1.0, 2.0]))
    assert np.allclose(pair.dq, [1.0, 2.0])
    assert np.allclose(pair.domega, np.eye(2))


def test_innovation_zero_measurement():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(2, 4))
    v = random_pd(rng, 2)
    pair = innovation(a, v, np.zeros(2))
    assert np.allclose(pair.dq, 0.0)
    assert np.allclose(pair.domega, a.T @ v @ a)


def test_innovation_scalar_case():
    pair = innovation(np.array([[2.0]]), np.array([[3.0]]), np.array([5.0]))
    assert pair.dq == pytest.approx(30.0)
    assert pair.domega == pytest.approx(12.0)


def test_innovation_dimension_mismatch():
    with pytest.raises(ValueError):
        innovation(np.eye(2), np.eye(3), np.zeros(2))
    with pytest.raises(ValueError):
        innovation(np.eye(2), np.eye(2), np.zeros(3))


def test_correct_weight_zero_is_identity():
    rng = np.random.default_rng(1)
    info = from_moments(rng.normal(size=3), random_pd(rng, 3))
    pair = innovation(np.eye(3), random_pd(rng, 3), rng.normal(size=3))
    out = correct(info, pair, weight=0.0)
    assert np.array_equal(out.q, info.q)
    assert np.allclose(out.omega, info.omega)


def test_corrections_commute_and_sum():
    rng = np.random.default_rng(2)
    info = from_moments(rng.normal(size=2), random_pd(rng, 2))
    p1 = innovation(np.eye(2), random_pd(rng, 2), rng.normal(size=2))
    p2 = innovation(np.eye(2), random_pd(rng, 2), rng.normal(size=2))
    seq = correct(correct(info, p1), p2)
    swapped = correct(correct(info, p2), p1)
    summed = correct(info, p1 + p2)
    assert np.allclose(seq.q, swapped.q)
    assert np.allclose(seq.q, summed.q)
    assert np.allclose(seq.omega, summed.omega)


def test_correct_information_monotone():
    rng = np.random.default_rng(3)
    info = from_moments(rng.normal(size=3), random_pd(rng, 3))
    pair = innovation(rng.normal(size=(2, 3)), random_pd(rng, 2), rng.normal(size=2))
    out = correct(info, pair, weight=0.7)
    assert np.linalg.eigvalsh(out.omega - info.omega).min() >= -1e-12


def test_predict_scalar():
    info = InformationState(q=np.array([1.0]), omega=np.array([[1.0]]))
    out = predict(info, np.array([[1.0]]), np.array([[1.0]]))
    assert out.omega[0, 0] == pytest.approx(0.5)  # covariance 2 = P + Q


def test_predict_matches_covariance_form():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = rng.integers(2, 6)
        x = rng.normal(size=n)
        cov = random_pd(rng, n)
        f = rng.normal(size=(n, n)) + np.eye(n)
        q_cov = random_pd(rng, n)
        info = from_moments(x, cov)
        out = predict(info, f, np.linalg.inv(q_cov))
        x_ref, cov_ref = kalman_predict_moments(x, cov, f, q_cov)
        x_out, cov_out = to_moments(out)
        assert np.allclose(x_out, x_ref, rtol=1e-10, atol=1e-10 * np.abs(x_ref).max())
        assert np.allclose(cov_out, cov_ref, rtol=1e-10, atol=1e-10 * np.abs(cov_ref).max())


def test_predict_tiny_process_noise_limit():
    rng = np.random.default_rng(5)
    x = rng.normal(size=4)
    info = from_moments(x, random_pd(rng, 4))
    f = np.eye(4)
    f[0, 2] = f[1, 3] = 2.0
    out = predict(info, f, 1e8 * np.eye(4))
    x_out, _ = to_moments(out)
    assert np.allclose(x_out, f @ x, atol=1e-4)


def test_predict_singular_gram_raises():
    info = InformationState(q=np.zeros(2), omega=np.zeros((2, 2)))
    with pytest.raises(np.linalg.LinAlgError, match="cond"):
        predict(info, np.zeros((2, 2)), np.zeros((2, 2)))


def test_moments_round_trip():
    rng = np.random.default_rng(6)
    assert np.allclose(to_moments(from_moments([1.0, -2.0], np.eye(2)))[0], [1.0, -2.0])
    for _ in range(100):
        n = rng.integers(1, 6)
        x = rng.normal(size=n)
        cov = random_pd(rng, n)
        x2, cov2 = to_moments(from_moments(x, cov))
        assert np.allclose(x2, x, rtol=1e-10, atol=1e-12)
        assert np.allclose(cov2, cov, rtol=1e-10, atol=1e-12)
        assert np.abs(cov2 - cov2.T).max() < 1e-12


def test_moments_singular_raises():
    with pytest.raises(np.linalg.LinAlgError):
        to_moments(InformationState(q=np.zeros(2), omega=np.zeros((2, 2))))
    with pytest.raises(np.linalg.LinAlgError):
        from_moments(np.zeros(2), np.zeros((2, 2)))


def test_symmetry_through_chained_cycles():
    rng = np.random.default_rng(7)
    info = from_moments(rng.normal(size=3), random_pd(rng, 3))
    f = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
    ww = np.linalg.inv(random_pd(rng, 3))
    a = rng.normal(size=(2, 3))
    v = np.linalg.inv(random_pd(rng, 2))
    for _ in range(1000):
        info = correct(info, innovation(a, v, rng.normal(size=2)))
        info = predict(info, f, ww)
        assert np.abs(info.omega - info.omega.T).max() < 1e-12
    assert np.isfinite(info.q).all()


def test_information_state_validation():
    with pytest.raises(ValueError):
        InformationState(q=np.zeros(2), omega=np.zeros((3, 3)))
