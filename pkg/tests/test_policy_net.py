import math

import numpy as np
import pytest

from mctspo import (NetworkShape, ParameterVector, forward, forward_batch,
                    init_from_seed, jvp_batch, jvp_outputs)
from mctspo.policy_net import _unpack
from mctspo.rng import MasterRng


def random_params(shape: NetworkShape, seed: int, scale: float = 0.7) -> ParameterVector:
    rng = np.random.default_rng(seed)
    return ParameterVector(scale * rng.standard_normal(shape.parameter_count), shape)


def fd_jvp(params: ParameterVector, obs, direction, h=1e-5):
    """Central-difference oracle for the directional derivative."""
    plus = ParameterVector(params.values + h * direction, params.shape)
    minus = ParameterVector(params.values - h * direction, params.shape)
    return (forward(plus, obs) - forward(minus, obs)) / (2 * h)


def test_parameter_count_formula_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n_hidden = int(rng.integers(0, 4))
        hidden = tuple(int(rng.integers(1, 12)) for _ in range(n_hidden))
        shape = NetworkShape(int(rng.integers(1, 6)), hidden, int(rng.integers(1, 4)))
        # enumeration: total length of all unpacked weight and bias blocks
        flat = np.zeros(shape.parameter_count)
        enumerated = sum(w.size + b.size for w, b in _unpack(flat, shape))
        assert shape.parameter_count == enumerated
        assert len(init_from_seed(shape, 1)) == enumerated


def test_parameter_count_example():
    assert NetworkShape(2, (16,), 1).parameter_count == 2 * 16 + 16 + 16 * 1 + 1 == 65


def test_init_is_deterministic_and_seed_sensitive():
    shape = NetworkShape(3, (8, 4), 2)
    a = init_from_seed(shape, 7)
    b = init_from_seed(shape, 7)
    assert np.array_equal(a.values, b.values)
    c = init_from_seed(shape, 8)
    assert not np.array_equal(a.values, c.values)


def test_init_biases_zero_and_weight_scale():
    shape = NetworkShape(64, (64,), 64)
    params = init_from_seed(shape, 123)
    for w, b in params.layers:
        assert np.all(b == 0.0)
        # weights ~ N(0, 1/fan_in): loose two-sided check on the sample std
        assert 0.8 / math.sqrt(w.shape[1]) < w.std() < 1.2 / math.sqrt(w.shape[1])


def test_zero_network_outputs_zero():
    shape = NetworkShape(4, (8, 8), 2)
    zero = ParameterVector(np.zeros(shape.parameter_count), shape)
    for obs in ([0.0, 0.0, 0.0, 0.0], [1.0, -2.0, 0.5, 3.0]):
        assert np.all(forward(zero, np.array(obs)) == 0.0)


def test_single_layer_hand_evaluation():
    shape = NetworkShape(1, (), 1)
    params = ParameterVector(np.array([1.0, 0.0]), shape)  # w=1, b=0
    out = forward(params, np.array([0.5]))
    assert out.shape == (1,)
    assert out[0] == pytest.approx(math.tanh(0.5), abs=1e-15)


def test_outputs_respect_action_bounds():
    shape = NetworkShape(3, (6,), 2, action_bounds=(1.0, 2.5))
    rng = np.random.default_rng(5)
    for i in range(20):
        params = random_params(shape, i, scale=3.0)
        out = forward(params, rng.uniform(-5, 5, 3))
        assert abs(out[0]) <= 1.0 and abs(out[1]) <= 2.5


def test_forward_dimension_mismatch_raises():
    shape = NetworkShape(3, (4,), 1)
    params = init_from_seed(shape, 0)
    with pytest.raises(ValueError):
        forward(params, np.zeros(2))
    with pytest.raises(ValueError):
        forward_batch(params, np.zeros((5, 2)))
    with pytest.raises(ValueError):
        ParameterVector(np.zeros(10), shape)


def test_forward_batch_matches_forward():
    shape = NetworkShape(3, (5, 4), 2)
    params = random_params(shape, 9)
    obs = np.random.default_rng(1).uniform(-2, 2, (7, 3))
    batched = forward_batch(params, obs)
    stacked = np.stack([forward(params, o) for o in obs])
    np.testing.assert_allclose(batched, stacked, rtol=1e-14)


def test_jvp_zero_direction_and_linearity():
    shape = NetworkShape(4, (8,), 2)
    params = random_params(shape, 2)
    obs = np.array([0.2, -0.4, 1.0, 0.3])
    d = np.random.default_rng(3).standard_normal(len(params))
    assert np.all(jvp_outputs(params, obs, np.zeros(len(params))) == 0.0)
    np.testing.assert_allclose(jvp_outputs(params, obs, 2 * d),
                               2 * jvp_outputs(params, obs, d), rtol=1e-12)


def test_jvp_matches_finite_differences():
    shape = NetworkShape(4, (8,), 2)
    rng = np.random.default_rng(10)
    worst = 0.0
    for i in range(100):
        params = random_params(shape, i)
        obs = rng.uniform(-1, 1, 4)
        d = rng.standard_normal(len(params))
        d /= np.linalg.norm(d)
        err = np.max(np.abs(jvp_outputs(params, obs, d) - fd_jvp(params, obs, d)))
        worst = max(worst, err)
    assert worst < 1e-6


def test_jvp_linear_output_head():
    shape = NetworkShape(3, (6,), 2, squash_output=False)
    rng = np.random.default_rng(4)
    params = random_params(shape, 11)
    obs = rng.uniform(-1, 1, (5, 3))
    d = rng.standard_normal(len(params))
    d /= np.linalg.norm(d)
    got = jvp_batch(params, obs, d)
    want = np.stack([fd_jvp(params, o, d) for o in obs])
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_jvp_direction_dimension_mismatch_raises():
    shape = NetworkShape(3, (4,), 1)
    params = init_from_seed(shape, 0)
    with pytest.raises(ValueError):
        jvp_outputs(params, np.zeros(3), np.zeros(len(params) - 1))


def test_network_shape_validation():
    with pytest.raises(ValueError):
        NetworkShape(0, (4,), 1)
    with pytest.raises(ValueError):
        NetworkShape(2, (0,), 1)
    with pytest.raises(ValueError):
        NetworkShape(2, (4,), 2, action_bounds=(1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        NetworkShape(2, (4,), 1, action_bounds=(-1.0,))


def test_network_shape_dict_round_trip():
    shape = NetworkShape(2, (32, 32), 1, action_bounds=(1.0,), squash_output=True)
    assert NetworkShape.from_dict(shape.to_dict()) == shape


def test_parameter_vector_is_immutable():
    shape = NetworkShape(2, (), 1)
    params = init_from_seed(shape, 1)
    with pytest.raises(ValueError):
        params.values[0] = 5.0


def test_evaluation_reproducible_under_fixed_stream():
    # same (shape, seed, input) triple evaluated through independent paths
    shape = NetworkShape(2, (16,), 1)
    seeds = [MasterRng(77).next_uint64() for _ in range(3)]
    obs = np.array([0.1, -0.2])
    first = [forward(init_from_seed(shape, s), obs)[0] for s in seeds]
    second = [forward(init_from_seed(shape, s), obs)[0] for s in seeds]
    assert first == second
