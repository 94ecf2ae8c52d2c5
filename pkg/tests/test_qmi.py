import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privctrl import plant as pl
from privctrl import qmi
from privctrl import transform as tr
from privctrl.linalg import norm2

X0 = np.array([[0.0, 1.0]])
V0 = np.array([[1.0, 2.0]])
X1 = np.array([[1.0, 2.0]])


def test_scalar_singleton_is_unique_solution():
    s = qmi.clean_singleton_set(X0, X1, V0)
    zeta = qmi.to_center_form(s).zeta
    np.testing.assert_allclose(zeta, [[0.0], [1.0]], atol=1e-12)
    assert abs(qmi.membership(s, zeta)) <= 1e-9


def test_reactor_center_matches_least_squares(reactor):
    d = pl.random_experiment(reactor, 20, np.random.default_rng(2))
    F1, G1 = tr.generate_stage1_keys(4, 2, 2)
    m = tr.pre_process(d, F1, G1)
    s = qmi.clean_singleton_set(m.X0, m.X1, m.V0)
    W = np.vstack([m.X0, m.V0])
    lsq = np.linalg.lstsq(W.T, m.X1.T, rcond=None)[0]
    np.testing.assert_allclose(qmi.to_center_form(s).zeta, lsq, atol=1e-9)


def test_zero_successor_gives_zero_set():
    s = qmi.clean_singleton_set(X0, np.zeros((1, 2)), V0)
    assert not s.B.any() and not s.C.any()


def test_gamma_zero_is_singleton():
    a = qmi.clean_singleton_set(X0, X1, V0)
    b = qmi.clean_gamma_set(X0, X1, V0, 0.0)
    np.testing.assert_array_equal(a.C, b.C)
    np.testing.assert_array_equal(a.B, b.B)


def test_ball_boundary():
    s = qmi.clean_gamma_set(X0, X1, V0, 0.5)
    assert abs(qmi.membership(s, np.array([[0.5], [1.0]]))) <= 1e-12
    assert qmi.membership(s, np.array([[0.6], [1.0]])) > 0


def test_ball_sampling_oracle():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((4, 6))
    Xn = rng.standard_normal((2, 6))
    s = qmi.clean_gamma_set(W[:2], Xn, W[2:], 0.3)
    zbar = qmi.to_center_form(qmi.clean_singleton_set(W[:2], Xn, W[2:])).zeta
    D = rng.standard_normal((10_000, 4, 2))
    D /= np.linalg.norm(D, 2, axis=(1, 2))[:, None, None]
    inside = zbar + 0.3 * rng.random(10_000)[:, None, None] * D
    outside = zbar + 0.3 * 1.01 * D
    assert np.all(qmi.membership_batch(s, inside) <= 1e-12)
    assert np.all(qmi.membership_batch(s, outside) > 0)


def _noisy_instance(rng, n=2, m=1, T=12, d_max=0.05):
    A = rng.uniform(-1, 1, (n, n))
    B = rng.uniform(-1, 1, (n, m))
    p = pl.Plant(A, B)
    D0, model = pl.generate_uniform_disturbance(n, T, d_max, rng)
    d = pl.random_experiment(p, T, rng, disturbance=D0)
    return p, d, model


def test_noiseless_consistency_set_is_singleton():
    s = qmi.noisy_consistency_set(X0, X1, V0, np.zeros((1, 1)))
    assert norm2(qmi.to_center_form(s).Q) <= 1e-12


def test_truth_is_consistent():
    rng = np.random.default_rng(11)
    for _ in range(10):
        p, d, model = _noisy_instance(rng, 4, 2, 20, 0.04)
        s = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, model.Delta)
        assert qmi.membership(s, qmi.system_to_z(p.A_star, p.B_star)) <= 1e-9 * norm2(s.A)


def test_larger_bound_contains_smaller():
    rng = np.random.default_rng(12)
    p, d, model = _noisy_instance(rng)
    small = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, model.Delta)
    big = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, 10 * model.Delta)
    Zs = qmi.sample_members(qmi.to_center_form(small), 500, rng)
    assert np.all(qmi.membership_batch(big, Zs) <= 1e-9 * norm2(big.A))
    assert np.all(np.linalg.eigvalsh(big.C - small.C) <= 1e-9)


def test_inconsistent_data_rejected():
    rng = np.random.default_rng(13)
    p, d, model = _noisy_instance(rng, d_max=0.5)
    with pytest.raises(qmi.InconsistentDataError):
        qmi.noisy_consistency_set(d.X0, d.X1, d.U0, 1e-6 * model.Delta)


def test_center_form_of_singleton():
    s = qmi.clean_singleton_set(X0, X1, V0)
    c = qmi.to_center_form(s)
    assert norm2(c.Q) <= 1e-12


def test_center_form_of_ball():
    Zb = np.array([[0.3, -0.2], [0.1, 0.4], [1.0, 2.0]])
    s = qmi.QmiSet(np.eye(3), -Zb, Zb.T @ Zb - 0.25 * np.eye(2))
    c = qmi.to_center_form(s)
    np.testing.assert_allclose(c.zeta, Zb, atol=1e-14)
    np.testing.assert_allclose(c.Q, 0.25 * np.eye(2), atol=1e-14)


def test_center_form_round_trip():
    rng = np.random.default_rng(14)
    _, d, model = _noisy_instance(rng)
    s = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, model.Delta)
    back = qmi.to_center_form(s).to_qmi()
    scale = 1 + np.abs(s.C).max()
    np.testing.assert_allclose(back.B, s.B, atol=1e-9 * scale)
    np.testing.assert_allclose(back.C, s.C, atol=1e-9 * scale)


def test_inflation_zero_is_identity():
    s = qmi.clean_gamma_set(X0, X1, V0, 0.2)
    assert qmi.overapproximate_inflated(s, 0.0) is s


def test_inflation_on_ball():
    g0, g = 0.3, 0.1
    s = qmi.clean_gamma_set(X0, X1, V0, g0)
    over = qmi.overapproximate_inflated(s, g)
    np.testing.assert_allclose(s.C - over.C, (2 * g * g0 + g**2) * np.eye(1), atol=1e-14)
    # the ball of radius g0 inflated by g is exactly the ball of radius g0 + g
    exact = qmi.clean_gamma_set(X0, X1, V0, g0 + g)
    np.testing.assert_allclose(over.C, exact.C, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.01, 10.0), st.floats(0.0, 3.0))
def test_shift_inverse(gamma, a, q):
    s = qmi.CenterFormQmi(np.zeros((2, 1)), np.array([[q]]), a * np.eye(2)).to_qmi()
    c = qmi.inflation_shift(s, gamma)
    assert qmi.gamma_from_shift(s, c) == pytest.approx(gamma, rel=1e-9, abs=1e-12)


def test_scalar_containment():
    rng = np.random.default_rng(15)
    d = pl.random_experiment(pl.Plant(np.array([[1.5]]), np.array([[2.0]])), 6, rng,
                             disturbance=rng.uniform(-0.1, 0.1, (1, 6)))
    s = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, np.sqrt(6 * 0.01) * np.eye(1))
    center = qmi.to_center_form(s)
    over = qmi.overapproximate_inflated(s, 0.2)
    Zs = qmi.sample_inflated(center, 0.2, 10_000, rng)
    assert np.all(qmi.membership_batch(over, Zs) <= 1e-9 * (1 + norm2(over.C)))


def test_membership_equality_case():
    s = qmi.clean_singleton_set(X0, X1, V0)
    assert abs(qmi.membership(s, np.array([[0.0], [1.0]]))) <= 1e-9


def test_membership_outside_ball():
    s = qmi.clean_gamma_set(X0, X1, V0, 0.1)
    assert qmi.membership(s, np.array([[0.2], [1.0]])) > 0


def test_membership_shape_checked():
    s = qmi.clean_singleton_set(X0, X1, V0)
    with pytest.raises(ValueError):
        qmi.membership(s, np.zeros((3, 1)))


def test_batch_matches_scalar():
    rng = np.random.default_rng(16)
    _, d, model = _noisy_instance(rng, 3, 2, 15)
    s = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, model.Delta)
    Zs = rng.standard_normal((20, 5, 3))
    np.testing.assert_allclose(qmi.membership_batch(s, Zs),
                               [qmi.membership(s, Z) for Z in Zs], rtol=1e-9, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_sampled_members_are_members(seed):
    rng = np.random.default_rng(seed)
    _, d, model = _noisy_instance(rng, 2, 2, 10)
    s = qmi.noisy_consistency_set(d.X0, d.X1, d.U0, model.Delta)
    Zs = qmi.sample_members(qmi.to_center_form(s), 200, rng)
    assert np.all(qmi.membership_batch(s, Zs) <= 1e-8 * (1 + norm2(s.A)))
