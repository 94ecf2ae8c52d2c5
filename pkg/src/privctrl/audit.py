"""Checks of what the cloud can and cannot infer from the data it is given.

Privacy here means non-injectivity: for any nontrivial keys we exhibit explicit
alternative plants that produce exactly the same cloud-side data. The audit needs
ground truth to do that and never runs on the cloud side.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import (DimensionError, RankError, as_matrix, has_full_row_rank, norm2,
                     spectral_radius)
from .transform import NONZERO_RTOL, post_process


@dataclass(frozen=True)
class CloudView:
    """Everything the cloud (and whoever compromises it) holds. No keys, no ground truth."""

    X0: np.ndarray
    X1: np.ndarray
    V0: np.ndarray
    Delta: np.ndarray = None
    gamma_bar: float = None
    K_bar: np.ndarray = None

    @classmethod
    def from_masked(cls, masked, Delta=None, outcome=None):
        if outcome is None:
            return cls(masked.X0, masked.X1, masked.V0, Delta)
        return cls(masked.X0, masked.X1, masked.V0, Delta, outcome.gamma_bar, outcome.K)


def identify_transformed_pair(view, D0=None):
    """Least-squares ``(A_bar, B_bar)`` with ``X1 - D0 = A_bar X0 + B_bar V0``.

    ``D0`` models an auditor who is additionally told the disturbance. The
    solution is unique only under full row rank of ``[X0; V0]``.
    """
    W = np.vstack([view.X0, view.V0])
    if not has_full_row_rank(W):
        raise RankError("[X0; V0] is rank deficient; the masked pair is not unique")
    rhs = view.X1 if D0 is None else view.X1 - as_matrix(D0)
    sol, *_ = np.linalg.lstsq(W.T, rhs.T, rcond=None)
    n = view.X0.shape[0]
    Z = sol.T
    return Z[:, :n], Z[:, n:]


def construct_alternative_system(A_bar, B_bar, B_candidate, F_tilde, G_tilde, rtol=1e-9):
    """A plant and keys, different from the truth, that reproduce the cloud's data.

    Returns ``(A_hat, B_hat, F1_hat, G1_hat)`` with ``A_hat = A_bar - B_c F_tilde``,
    ``B_hat = B_c G_tilde`` and keys chosen so that ``A_hat + B_hat F1_hat = A_bar``
    and ``B_hat (I + G1_hat) = B_bar``.
    """
    A_bar = as_matrix(A_bar)
    B_bar = as_matrix(B_bar)
    Bc = as_matrix(B_candidate)
    F_tilde = as_matrix(F_tilde)
    G_tilde = as_matrix(G_tilde)
    n, m = B_bar.shape
    if Bc.shape != (n, m) or F_tilde.shape != (m, n) or G_tilde.shape != (m, m):
        raise DimensionError("alternative-system inputs have inconsistent shapes")
    if np.linalg.matrix_rank(Bc) != m:
        raise ValueError("B_candidate must have full column rank")
    if np.linalg.cond(G_tilde) > 1e12:
        raise np.linalg.LinAlgError("G_tilde is singular")

    A_hat = A_bar - Bc @ F_tilde
    B_hat = Bc @ G_tilde
    F1_hat = np.linalg.solve(G_tilde, F_tilde)
    # the key the true data would need is G = I + G1 solving B_c G = B_bar
    G, *_ = np.linalg.lstsq(Bc, B_bar, rcond=None)
    if norm2(Bc @ G - B_bar) > rtol * (1 + norm2(B_bar)):
        raise ValueError("B_bar does not lie in the image of B_candidate")
    G_hat = np.linalg.solve(G_tilde, G)
    if np.linalg.cond(G_hat) > 1e12:
        raise np.linalg.LinAlgError("alternative key I + G1_hat is singular")
    return A_hat, B_hat, F1_hat, G_hat - np.eye(m)


def replay_residual(view, A_hat, B_hat, F1_hat, G1_hat, D0=None):
    """Relative mismatch when the alternative plant regenerates ``X1`` from the masked data."""
    m = view.V0.shape[0]
    U_hat = F1_hat @ view.X0 + (np.eye(m) + G1_hat) @ view.V0
    X1_hat = A_hat @ view.X0 + B_hat @ U_hat
    if D0 is not None:
        X1_hat = X1_hat + D0
    return norm2(X1_hat - view.X1) / (1 + norm2(view.X1))


def closed_loop_gap(plant, F1, G1, F2, G2, K_bar):
    """``(A_cl_bar, Delta)``: the closed loop the cloud can compute and the hidden offset.

    ``A_cl_bar + Delta`` is the true closed loop under ``K_star = F2 + (I + G2) K_bar``.
    """
    A, B = plant.A_star, plant.B_star
    A_cl_bar = A + B @ F1 + (B + B @ G1) @ K_bar
    gap = B @ (F2 - F1) + B @ (G2 - G1) @ K_bar
    return A_cl_bar, gap


def gap_threshold(plant, F1, G1, F2, G2):
    return NONZERO_RTOL * norm2(plant.B_star) * norm2(np.hstack([F2 - F1, G2 - G1]))


@dataclass
class AuditRecord:
    trial: int
    pair_error: float
    alternatives: int
    alternatives_distinct: int
    max_replay_residual: float
    gap_norm: float
    gap_threshold: float
    identity_error: float
    rho_closed_loop: float

    def passed(self, replay_tol=1e-9, identity_tol=1e-10):
        return (
            self.alternatives_distinct == self.alternatives
            and self.max_replay_residual <= replay_tol
            and self.gap_norm > self.gap_threshold
            and self.identity_error <= identity_tol
            and self.rho_closed_loop < 1
        )


def audit_trial(plant, keys, K_bar, view, rng, n_alternatives=10, D0=None, trial=0):
    """Run the open-loop and closed-loop privacy checks on one experiment."""
    n, m = plant.n, plant.m
    A_bar, B_bar = identify_transformed_pair(view, D0)
    A_true_bar = plant.A_star + plant.B_star @ keys.F1
    B_true_bar = plant.B_star + plant.B_star @ keys.G1
    pair_error = norm2(np.hstack([A_bar - A_true_bar, B_bar - B_true_bar])) / (
        1 + norm2(np.hstack([A_true_bar, B_true_bar]))
    )

    systems = []
    worst = 0.0
    for _ in range(n_alternatives):
        F_t = rng.uniform(-1, 1, size=(m, n))
        G_t = np.eye(m) + rng.uniform(-1, 1, size=(m, m))
        A_hat, B_hat, F1_hat, G1_hat = construct_alternative_system(
            A_bar, B_bar, plant.B_star, F_t, G_t)
        worst = max(worst, replay_residual(view, A_hat, B_hat, F1_hat, G1_hat, D0))
        systems.append(np.hstack([A_hat, B_hat]))
    truth = np.hstack([plant.A_star, plant.B_star])
    distinct = sum(
        1 for i, s in enumerate(systems)
        if norm2(s - truth) > 1e-6 and all(norm2(s - o) > 1e-6 for o in systems[:i])
    )

    A_cl_bar, gap = closed_loop_gap(plant, keys.F1, keys.G1, keys.F2, keys.G2, K_bar)
    K_star = post_process(keys.F2, keys.G2, K_bar)
    true_cl = plant.A_star + plant.B_star @ K_star
    return AuditRecord(
        trial=trial,
        pair_error=pair_error,
        alternatives=n_alternatives,
        alternatives_distinct=distinct,
        max_replay_residual=worst,
        gap_norm=norm2(gap),
        gap_threshold=gap_threshold(plant, keys.F1, keys.G1, keys.F2, keys.G2),
        identity_error=norm2(A_cl_bar + gap - true_cl),
        rho_closed_loop=spectral_radius(true_cl),
    )
