"""Simulation of the unknown LTI plant and collection of experiment data."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, as_matrix, has_full_row_rank, numerical_rank, rng_from


@dataclass(frozen=True)
class Plant:
    """True system ``x(t+1) = A_star x(t) + B_star u(t)``.

    Only the simulator, tests and audits may look inside.
    """

    A_star: np.ndarray
    B_star: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A_star, "A_star")
        B = as_matrix(self.B_star, "B_star")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A_star must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B_star has {B.shape[0]} rows, expected {A.shape[0]}")
        if numerical_rank(B) != B.shape[1]:
            raise ValueError("B_star must have full column rank")
        object.__setattr__(self, "A_star", A)
        object.__setattr__(self, "B_star", B)

    @property
    def n(self):
        return self.A_star.shape[0]

    @property
    def m(self):
        return self.B_star.shape[1]


def batch_reactor():
    """Discretized linearized batch reactor (open-loop unstable, n=4, m=2)."""
    A = 1e-3 * np.array(
        [
            [1178, 1, 511, -403],
            [-51, 661, -11, 61],
            [76, 335, 560, 382],
            [0, 335, 89, 849],
        ],
        dtype=float,
    )
    B = 1e-3 * np.array(
        [
            [4, -87],
            [467, 1],
            [213, -235],
            [213, -16],
        ],
        dtype=float,
    )
    return Plant(A, B)


@dataclass(frozen=True)
class DataSet:
    """Input/state experiment data. ``D0`` is recorded for tests only."""

    X0: np.ndarray
    X1: np.ndarray
    U0: np.ndarray
    D0: np.ndarray = field(default=None)

    def __post_init__(self):
        X0 = as_matrix(self.X0, "X0")
        X1 = as_matrix(self.X1, "X1")
        U0 = as_matrix(self.U0, "U0")
        D0 = np.zeros_like(X0) if self.D0 is None else as_matrix(self.D0, "D0")
        T = X0.shape[1]
        if X1.shape != X0.shape or D0.shape != X0.shape or U0.shape[1] != T:
            raise DimensionError(
                f"inconsistent data shapes X0={X0.shape} X1={X1.shape} "
                f"U0={U0.shape} D0={D0.shape}"
            )
        for name, val in (("X0", X0), ("X1", X1), ("U0", U0), ("D0", D0)):
            object.__setattr__(self, name, val)

    @property
    def T(self):
        return self.X0.shape[1]

    @property
    def n(self):
        return self.X0.shape[0]

    @property
    def m(self):
        return self.U0.shape[0]


@dataclass(frozen=True)
class DisturbanceModel:
    """Energy bound ``D D^T <= Delta Delta^T`` on the disturbance sequence."""

    Delta: np.ndarray
    d_max: float = 0.0

    @property
    def bound(self):
        return self.Delta @ self.Delta.T

    def admits(self, D0, rtol=1e-12):
        scale = 1 + float(np.abs(self.bound).max())
        return float(np.linalg.eigvalsh(D0 @ D0.T - self.bound)[-1]) <= rtol * scale


def simulate_collect(plant, x0, inputs, disturbance=None):
    """Run the plant from ``x0`` under ``inputs`` (m x T) and return the data matrices."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1 and plant.m == 1:
        # a plain sequence is a single input channel
        inputs = inputs.reshape(1, -1)
    U0 = as_matrix(inputs, "inputs")
    if x0.shape[0] != plant.n:
        raise DimensionError(f"x0 has length {x0.shape[0]}, expected {plant.n}")
    if U0.shape[0] != plant.m:
        raise DimensionError(f"inputs have {U0.shape[0]} rows, expected {plant.m}")
    T = U0.shape[1]
    if T < 1:
        raise DimensionError("need at least one input sample")
    if disturbance is None:
        D0 = np.zeros((plant.n, T))
    else:
        D0 = as_matrix(disturbance, "disturbance")
        if D0.shape != (plant.n, T):
            raise DimensionError(f"disturbance has shape {D0.shape}, expected {(plant.n, T)}")

    X = np.empty((plant.n, T + 1))
    X[:, 0] = x0
    for t in range(T):
        X[:, t + 1] = plant.A_star @ X[:, t] + plant.B_star @ U0[:, t] + D0[:, t]
    return DataSet(X[:, :T].copy(), X[:, 1:].copy(), U0.copy(), D0.copy())


def random_experiment(plant, T, rng, input_range=(-5.0, 5.0), x0_range=(-2.5, 2.5),
                      disturbance=None):
    """Uniform random initial state and input sequence."""
    rng = rng_from(rng)
    x0 = rng.uniform(*x0_range, size=plant.n)
    U0 = rng.uniform(*input_range, size=(plant.m, T))
    return simulate_collect(plant, x0, U0, disturbance)


def check_rank_assumption(data):
    """True iff ``[X0; U0]`` has full row rank ``n + m``."""
    return has_full_row_rank(np.vstack([data.X0, data.U0]))


def generate_uniform_disturbance(n, T, d_max, seed=None):
    """i.i.d. ``U(-d_max, d_max)`` disturbance with the matching square bound factor.

    ``Delta = sqrt(n d_max^2 T) I`` dominates ``D0 D0^T`` because every row of
    ``D0`` has squared norm at most ``T d_max^2``.
    """
    if d_max < 0:
        raise ValueError(f"d_max must be non-negative, got {d_max}")
    rng = rng_from(seed)
    if d_max == 0:
        D0 = np.zeros((n, T))
    else:
        D0 = rng.uniform(-d_max, d_max, size=(n, T))
    Delta = np.sqrt(n * d_max**2 * T) * np.eye(n)
    return D0, DisturbanceModel(Delta, float(d_max))
