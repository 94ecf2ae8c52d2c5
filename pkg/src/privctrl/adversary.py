"""Stealthy bias-injection attacks against a norm-threshold detector.

The attacker adds ``a(t)`` to the actuator signal, driving it to a constant
``a_inf`` through ``a(t+1) = beta a(t) + (1 - beta) a_inf``. It picks ``a_inf`` from
whatever model of the closed loop it believes, so its success depends on how
much of the true closed loop it can reconstruct.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import norm2, spectral_radius


class Policy(str, enum.Enum):
    EXACT = "I"            # full knowledge of the true closed loop
    ESTIMATE = "II"        # only what the cloud can compute
    KNOWS_B_NORM = "III"   # cloud estimate, input matrix rescaled to ||B_star||
    KNOWS_B = "IV"         # cloud estimate of the state matrix, true B_star

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ValueError(f"unknown attack policy {tag!r}; expected one of I, II, III, IV")


@dataclass(frozen=True)
class AttackConfig:
    beta: float = 0.5
    delta_alpha: float = 0.2
    T_inj: int = 10
    T_a: int = 400
    T_end: int = 500
    policy: Policy = Policy.EXACT

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.delta_alpha < 0:
            raise ValueError("delta_alpha must be non-negative")
        if not 0 <= self.T_inj < self.T_a < self.T_end:
            raise ValueError("need 0 <= T_inj < T_a < T_end")
        object.__setattr__(self, "policy", Policy.parse(self.policy))


@dataclass(frozen=True)
class PolicyModel:
    A_cl_hat: np.ndarray
    B_cl_hat: np.ndarray


def build_policy_model(policy, plant, keys, K_bar, A_bar, B_bar):
    """The attacker's believed ``(A_cl, B_cl)`` for a knowledge level.

    ``A_bar, B_bar`` are the masked pair the cloud identifies from its data.
    Ground truth is consulted only where the policy grants it.
    """
    policy = Policy.parse(policy)
    if policy is Policy.EXACT:
        A, B = plant.A_star, plant.B_star
        A_cl = A + B @ keys.F2 + (B + B @ keys.G2) @ K_bar
        return PolicyModel(A_cl, B.copy())
    A_cl_est = A_bar + B_bar @ K_bar
    if policy is Policy.ESTIMATE:
        return PolicyModel(A_cl_est, B_bar.copy())
    if policy is Policy.KNOWS_B_NORM:
        return PolicyModel(A_cl_est, norm2(plant.B_star) / norm2(B_bar) * B_bar)
    return PolicyModel(A_cl_est, plant.B_star.copy())


def steady_gain(A_cl, B_cl):
    """``(I - A_cl)^{-1} B_cl``: steady-state state offset per unit constant input."""
    n = A_cl.shape[0]
    I_minus = np.eye(n) - A_cl
    if np.linalg.cond(I_minus) > 1e12:
        raise np.linalg.LinAlgError("I - A_cl is singular; no steady state to target")
    return np.linalg.solve(I_minus, B_cl)


def design_bias(model, delta_alpha):
    """Minimum-energy ``a_inf`` whose believed steady-state impact has norm ``delta_alpha``.

    Every ``a_inf`` on the believed detector boundary is optimal; the top right
    singular vector of the steady-state gain gives the one of least norm.
    """
    M = steady_gain(model.A_cl_hat, model.B_cl_hat)
    if delta_alpha == 0:
        return np.zeros(M.shape[1])
    _, s, vt = np.linalg.svd(M)
    if s[0] == 0:
        raise ValueError("the believed steady-state gain is zero; no reachable impact")
    v = vt[0]
    # fix the sign so the design is reproducible
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return delta_alpha / s[0] * v


@dataclass
class AttackTrajectory:
    t: np.ndarray
    x: np.ndarray          # (T_end + 1, n)
    u: np.ndarray          # (T_end, m), controller output before the attack is added
    a: np.ndarray          # (T_end, m)
    residual: np.ndarray   # ||x(t)||, (T_end + 1,)
    T_a: int

    @property
    def steady_residual(self):
        """Mean residual over the last 10% of the horizon."""
        k = max(1, len(self.residual) // 10)
        return float(np.mean(self.residual[-k:]))

    @property
    def detector_residual(self):
        return self.residual[self.T_a:]

    def alarm(self, delta_alpha):
        return bool(np.any(self.detector_residual > delta_alpha))


def attack_signal(a_inf, beta, T_inj, T_end):
    a_inf = np.atleast_1d(np.asarray(a_inf, dtype=float))
    a = np.zeros((T_end, a_inf.shape[0]))
    for t in range(T_inj, T_end - 1):
        a[t + 1] = beta * a[t] + (1 - beta) * a_inf
    return a


def simulate_attack(plant, K_star, config, a_inf, x0=None):
    """Closed loop ``x(t+1) = A x + B (K x + a)`` with the attack switched on at ``T_inj``."""
    A_cl = plant.A_star + plant.B_star @ K_star
    if spectral_radius(A_cl) >= 1:
        raise ValueError("closed loop is not Schur stable; no steady state exists")
    n, m = plant.n, plant.m
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    a = attack_signal(np.asarray(a_inf, dtype=float).reshape(m), config.beta,
                      config.T_inj, config.T_end)
    x = np.empty((config.T_end + 1, n))
    u = np.empty((config.T_end, m))
    x[0] = x0
    for t in range(config.T_end):
        u[t] = K_star @ x[t]
        x[t + 1] = plant.A_star @ x[t] + plant.B_star @ (u[t] + a[t])
    return AttackTrajectory(
        t=np.arange(config.T_end + 1),
        x=x,
        u=u,
        a=a,
        residual=np.linalg.norm(x, axis=1),
        T_a=config.T_a,
    )


def true_steady_impact(plant, K_star, a_inf):
    A_cl = plant.A_star + plant.B_star @ K_star
    return float(np.linalg.norm(steady_gain(A_cl, plant.B_star) @ a_inf))
