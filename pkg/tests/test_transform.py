import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privctrl import plant as pl
from privctrl import transform as tr
from privctrl.linalg import norm2


class ScriptedRng:
    """Returns queued arrays from ``uniform`` so a singular draw can be forced."""

    def __init__(self, draws):
        self.draws = list(draws)

    def uniform(self, lo, hi, size):
        return np.asarray(self.draws.pop(0), dtype=float).reshape(size)


def test_singular_stage1_draw_is_redrawn(monkeypatch):
    rng = ScriptedRng([[[0.3]], [[-1.0]], [[0.2]], [[0.5]]])
    monkeypatch.setattr(tr, "rng_from", lambda seed: seed)
    F1, G1 = tr.generate_stage1_keys(1, 1, rng)
    assert F1[0, 0] == 0.2 and G1[0, 0] == 0.5


def test_stage1_keys_deterministic():
    a = tr.generate_stage1_keys(4, 2, 17)
    b = tr.generate_stage1_keys(4, 2, 17)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("seed", range(20))
def test_stage1_conditioning(seed):
    _, G1 = tr.generate_stage1_keys(4, 2, seed)
    assert np.linalg.cond(np.eye(2) + G1) < 1e8


def test_identity_transform():
    d = pl.DataSet(np.array([[0.0, 1.0]]), np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]]))
    masked = tr.pre_process(d, np.zeros((1, 1)), np.zeros((1, 1)))
    np.testing.assert_array_equal(masked.V0, d.U0)


def test_scalar_transform():
    d = pl.DataSet(np.array([[0.0, 1.0]]), np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]]))
    masked = tr.pre_process(d, np.array([[1.0]]), np.array([[1.0]]))
    np.testing.assert_allclose(masked.V0, [[0.5, 0.5]])


def test_masked_data_explained_by_masked_pair(reactor):
    d = pl.random_experiment(reactor, 20, np.random.default_rng(5))
    F1, G1 = tr.generate_stage1_keys(4, 2, 6)
    masked = tr.pre_process(d, F1, G1)
    A_bar = reactor.A_star + reactor.B_star @ F1
    B_bar = reactor.B_star + reactor.B_star @ G1
    assert norm2(masked.X1 - A_bar @ masked.X0 - B_bar @ masked.V0) <= 1e-9
    np.testing.assert_allclose(tr.unmask_inputs(masked, F1, G1), d.U0, atol=1e-12)


def test_no_budget_is_an_error():
    with pytest.raises(tr.KeyGenerationError):
        tr.generate_stage2_keys(np.zeros((2, 4)), np.zeros((2, 2)), np.zeros((2, 4)), 0.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-3, 1.0), st.floats(0.05, 5.0))
def test_full_fill_factor_is_exact(seed, gamma, b_norm):
    rng = np.random.default_rng(seed)
    F1, G1 = tr.generate_stage1_keys(4, 2, rng)
    K = rng.standard_normal((2, 4))
    F2, G2 = tr.generate_stage2_keys(F1, G1, K, gamma, b_norm, rng, rho=1.0)
    d = norm2(np.hstack([F2 - F1, G2 - G1]))
    assert abs(d - gamma / b_norm) <= 1e-12 * gamma / b_norm


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_stage2_predicates_hold(seed):
    rng = np.random.default_rng(seed)
    F1, G1 = tr.generate_stage1_keys(4, 2, rng)
    K = rng.standard_normal((2, 4))
    b = norm2(pl.batch_reactor().B_star)
    F2, G2 = tr.generate_stage2_keys(F1, G1, K, 0.054, b, rng)
    keys = tr.TransformKeys(F1, G1).with_stage2(F2, G2, b)
    assert tr.stage2_predicates(keys, K, 0.054) == (True, True)


def test_post_process_identity():
    K = np.arange(8.0).reshape(2, 4)
    np.testing.assert_array_equal(tr.post_process(np.zeros((2, 4)), np.zeros((2, 2)), K), K)


def test_post_process_scalar():
    K = tr.post_process(np.array([[0.1]]), np.array([[0.2]]), np.array([[-0.75]]))
    assert K[0, 0] == pytest.approx(-0.8, abs=1e-15)


def test_post_process_keeps_masked_closed_loop(reactor):
    # stage-2 = stage-1 keys: the plant sees exactly the masked closed loop
    F1, G1 = tr.generate_stage1_keys(4, 2, 3)
    K_bar = np.random.default_rng(3).standard_normal((2, 4))
    K_star = tr.post_process(F1, G1, K_bar)
    A_bar = reactor.A_star + reactor.B_star @ F1
    B_bar = reactor.B_star + reactor.B_star @ G1
    np.testing.assert_allclose(reactor.A_star + reactor.B_star @ K_star, A_bar + B_bar @ K_bar,
                               atol=1e-12)
