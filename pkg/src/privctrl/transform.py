"""Client-side masking of the data (pre-processing) and of the controller (post-processing)."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, as_matrix, norm2, rng_from

MAX_KEY_ATTEMPTS = 100
MAX_COND = 1e8
#: relative threshold under which ``[dF dG] [I; K]`` counts as zero
NONZERO_RTOL = 1e-8


class KeyGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MaskedData:
    """Data as shipped to the cloud: ``V0`` replaces ``U0``. ``D0`` stays client-side."""

    X0: np.ndarray
    X1: np.ndarray
    V0: np.ndarray
    D0: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return self.X0.shape[0]

    @property
    def m(self):
        return self.V0.shape[0]

    @property
    def T(self):
        return self.X0.shape[1]


@dataclass(frozen=True)
class TransformKeys:
    """Secret masking keys. Stage-2 fields stay ``None`` until the cloud has answered."""

    F1: np.ndarray
    G1: np.ndarray
    F2: np.ndarray = None
    G2: np.ndarray = None
    B_norm_bound: float = None

    def with_stage2(self, F2, G2, B_norm_bound):
        return TransformKeys(self.F1, self.G1, F2, G2, B_norm_bound)

    @property
    def delta_fg(self):
        """``[F2 - F1, G2 - G1]``."""
        return np.hstack([self.F2 - self.F1, self.G2 - self.G1])


def generate_stage1_keys(n, m, seed=None, entry_range=(-1.0, 1.0)):
    """Draw ``(F1, G1)`` uniformly, redrawing until ``I + G1`` is well conditioned."""
    rng = rng_from(seed)
    lo, hi = entry_range
    for _ in range(MAX_KEY_ATTEMPTS):
        F1 = rng.uniform(lo, hi, size=(m, n))
        G1 = rng.uniform(lo, hi, size=(m, m))
        if _invertible(np.eye(m) + G1):
            return F1, G1
    raise KeyGenerationError(
        f"no invertible I + G1 after {MAX_KEY_ATTEMPTS} draws from {entry_range}"
    )


def _invertible(G):
    return bool(np.isfinite(np.linalg.cond(G)) and np.linalg.cond(G) < MAX_COND)


def pre_process(data, F1, G1):
    """``V0 = (I + G1)^{-1} (U0 - F1 X0)``; the state matrices pass through unchanged."""
    F1 = as_matrix(F1, "F1")
    G1 = as_matrix(G1, "G1")
    m = data.U0.shape[0]
    if F1.shape != (m, data.X0.shape[0]) or G1.shape != (m, m):
        raise DimensionError(f"key shapes F1={F1.shape} G1={G1.shape} do not fit the data")
    G = np.eye(m) + G1
    if not _invertible(G):
        raise np.linalg.LinAlgError("I + G1 is singular")
    V0 = np.linalg.solve(G, data.U0 - F1 @ data.X0)
    return MaskedData(data.X0, data.X1, V0, data.D0)


def unmask_inputs(masked, F1, G1):
    """Inverse of :func:`pre_process` on the input channel."""
    m = masked.V0.shape[0]
    return F1 @ masked.X0 + (np.eye(m) + G1) @ masked.V0


def generate_stage2_keys(F1, G1, K_bar, gamma_bar, B_norm_bound, seed=None, rho=0.9,
                         entry_range=(-1.0, 1.0)):
    """Draw ``(F2, G2)`` inside the privacy ball around ``(F1, G1)``.

    A uniform direction ``[dF dG]`` is rescaled to norm ``rho * gamma_bar / B_norm_bound``
    and redrawn if it leaves the closed loop unchanged, i.e. ``[dF dG] [I; K_bar] ~ 0``.
    """
    if not gamma_bar > 0:
        raise KeyGenerationError(f"no privacy budget: gamma_bar = {gamma_bar}")
    if not 0 < rho <= 1:
        raise ValueError(f"fill factor rho must lie in (0, 1], got {rho}")
    if not B_norm_bound > 0:
        raise ValueError("B_norm_bound must be positive")
    F1 = as_matrix(F1, "F1")
    G1 = as_matrix(G1, "G1")
    K_bar = as_matrix(K_bar, "K_bar")
    m, n = F1.shape
    rng = rng_from(seed)
    radius = rho * gamma_bar / B_norm_bound
    stacked = np.vstack([np.eye(n), K_bar])
    for _ in range(MAX_KEY_ATTEMPTS):
        d = rng.uniform(*entry_range, size=(m, n + m))
        nd = norm2(d)
        if nd == 0:
            continue
        d *= radius / nd
        if norm2(d @ stacked) < NONZERO_RTOL * norm2(d):
            continue
        return F1 + d[:, :n], G1 + d[:, n:]
    raise KeyGenerationError(f"stage-2 key draw failed {MAX_KEY_ATTEMPTS} times")


def stage2_predicates(keys, K_bar, gamma_bar):
    """(ball condition, closed-loop-changes condition) for drawn stage-2 keys."""
    d = keys.delta_fg
    n = keys.F1.shape[1]
    in_ball = norm2(d) <= gamma_bar / keys.B_norm_bound * (1 + 1e-12)
    moved = norm2(d @ np.vstack([np.eye(n), K_bar])) >= NONZERO_RTOL * norm2(d) > 0
    return in_ball, moved


def post_process(F2, G2, K_bar):
    """``K_star = F2 + (I + G2) K_bar``."""
    G2 = as_matrix(G2, "G2")
    return as_matrix(F2, "F2") + (np.eye(G2.shape[0]) + G2) @ as_matrix(K_bar, "K_bar")
