"""Sets of systems ``Z = [A B]^T`` described by a quadratic matrix inequality

    C + B^T Z + Z^T B + Z^T A Z <= 0,     A > 0,

and the operations the cloud and the tests need on them.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import (DimensionError, RankError, as_matrix, has_full_row_rank,
                     lambda_max, lambda_min, psd_inv_sqrt, psd_sqrt, right_inverse, sym)

#: relative tolerance on ``Q >= 0`` before the data are declared inconsistent
NONEMPTY_RTOL = 1e-9


class InconsistentDataError(ValueError):
    """The disturbance bound is too small to explain the data (empty consistency set)."""


@dataclass(frozen=True)
class QmiSet:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = sym(as_matrix(self.A, "A"))
        B = as_matrix(self.B, "B")
        C = sym(as_matrix(self.C, "C"))
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0] or C.shape != (B.shape[1],) * 2:
            raise DimensionError(f"QMI shapes A={A.shape} B={B.shape} C={C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self):
        return self.B.shape[1]

    @property
    def m(self):
        return self.B.shape[0] - self.B.shape[1]

    def residual(self, Z):
        return self.C + self.B.T @ Z + Z.T @ self.B + Z.T @ self.A @ Z

    def scaled(self, k):
        """Same set of systems with ``(A, B, C)`` multiplied by ``k > 0``."""
        if not k > 0:
            raise ValueError("scale must be positive")
        return QmiSet(k * self.A, k * self.B, k * self.C)

    def is_valid(self):
        if lambda_min(self.A) <= 0:
            return False
        Q = self.B.T @ np.linalg.solve(self.A, self.B) - self.C
        return lambda_min(Q) >= -NONEMPTY_RTOL * (1 + np.abs(self.C).max())


@dataclass(frozen=True)
class CenterFormQmi:
    """The same set written as ``(Z - zeta)^T A (Z - zeta) <= Q``."""

    zeta: np.ndarray
    Q: np.ndarray
    A: np.ndarray

    def to_qmi(self):
        B = -self.A @ self.zeta
        C = self.zeta.T @ self.A @ self.zeta - self.Q
        return QmiSet(self.A, B, C)


def _stack(X0, V0):
    X0 = as_matrix(X0, "X0")
    V0 = as_matrix(V0, "V0")
    if X0.shape[1] != V0.shape[1]:
        raise DimensionError(f"X0 has {X0.shape[1]} columns, V0 has {V0.shape[1]}")
    return np.vstack([X0, V0])


def clean_singleton_set(X0, X1, V0):
    """The single system consistent with noise-free data, ``A = I``."""
    W = _stack(X0, V0)
    X1 = as_matrix(X1, "X1")
    Bt = -X1 @ right_inverse(W)
    return QmiSet(np.eye(W.shape[0]), Bt.T, Bt @ Bt.T)


def clean_gamma_set(X0, X1, V0, gamma):
    """Ball of radius ``gamma`` (induced 2-norm) around the noise-free system."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    s = clean_singleton_set(X0, X1, V0)
    return QmiSet(s.A, s.B, s.C - gamma**2 * np.eye(s.n))


def noisy_consistency_set(X0, X1, V0, Delta):
    """All systems that explain the data with some ``D`` satisfying ``D D^T <= Delta Delta^T``."""
    W = _stack(X0, V0)
    X1 = as_matrix(X1, "X1")
    Delta = as_matrix(Delta, "Delta")
    if not has_full_row_rank(W):
        raise RankError("[X0; V0] is rank deficient; the consistency set is unbounded")
    A = W @ W.T
    B = -W @ X1.T
    C = X1 @ X1.T - Delta @ Delta.T
    Q = B.T @ np.linalg.solve(A, B) - C
    scale = 1 + np.abs(X1 @ X1.T).max()
    if lambda_min(Q) < -NONEMPTY_RTOL * scale:
        raise InconsistentDataError(
            f"consistency set is empty (min eig of Q = {lambda_min(Q):.3e}); "
            "the disturbance bound is too small"
        )
    return QmiSet(A, B, C)


def to_center_form(s):
    try:
        zeta = -np.linalg.solve(s.A, s.B)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("QMI matrix A is singular") from exc
    Q = sym(s.B.T @ np.linalg.solve(s.A, s.B) - s.C)
    return CenterFormQmi(zeta, Q, s.A)


def inflation_shift(s, gamma):
    """Scalar ``c`` such that the over-approximation of the gamma-inflated set has ``C - c I``.

    With ``a = ||A||`` and ``q = ||Q||`` this is ``2 gamma sqrt(a q) + gamma^2 a``.
    """
    a, q = _inflation_norms(s)
    return 2 * gamma * np.sqrt(a * q) + gamma**2 * a


def _inflation_norms(s):
    # ||A^{1/2}||^2 = lambda_max(A), ||Q^{1/2}||^2 = lambda_max(Q)
    a = lambda_max(s.A)
    q = max(lambda_max(to_center_form(s).Q), 0.0)
    return a, q


def gamma_from_shift(s, c):
    """Inverse of :func:`inflation_shift` on ``c >= 0``."""
    a, q = _inflation_norms(s)
    return (np.sqrt(q + max(c, 0.0)) - np.sqrt(q)) / np.sqrt(a)


def overapproximate_inflated(s, gamma):
    """A QMI set containing every system within ``gamma`` of some member of ``s``."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    if gamma == 0:
        return s
    return QmiSet(s.A, s.B, s.C - inflation_shift(s, gamma) * np.eye(s.n))


def membership(s, Z):
    """``lambda_max`` of the QMI residual at ``Z``; ``<= 0`` means ``Z`` is in the set."""
    Z = as_matrix(Z, "Z")
    if Z.shape != s.B.shape:
        raise DimensionError(f"Z has shape {Z.shape}, expected {s.B.shape}")
    return lambda_max(s.residual(Z))


def membership_batch(s, Zs):
    """Vectorized :func:`membership` over a stack of shape ``(k, n+m, n)``."""
    Zs = np.asarray(Zs, dtype=float)
    BtZ = np.einsum("ji,kjl->kil", s.B, Zs)
    R = s.C + BtZ + BtZ.transpose(0, 2, 1) + np.einsum("kji,jl,klp->kip", Zs, s.A, Zs)
    R = 0.5 * (R + R.transpose(0, 2, 1))
    return np.linalg.eigvalsh(R)[:, -1]


def system_to_z(A, B):
    """``Z = [A B]^T``."""
    return np.hstack([as_matrix(A), as_matrix(B)]).T


def z_to_system(Z, n):
    Zt = Z.T
    return Zt[:, :n], Zt[:, n:]


def random_contractions(rng, k, rows, cols):
    """``k`` random matrices with spectral norm at most one, most on the unit sphere."""
    U = rng.standard_normal((k, rows, cols))
    norms = np.linalg.norm(U, 2, axis=(1, 2))
    scale = np.where(rng.random(k) < 0.5, 1.0, rng.random(k))
    return U * (scale / norms)[:, None, None]


def sample_members(center, k, rng):
    """Members ``zeta + A^{-1/2} U Q^{1/2}`` with ``||U|| <= 1``; half lie on the boundary."""
    nm, n = center.zeta.shape
    U = random_contractions(rng, k, nm, n)
    L = psd_inv_sqrt(center.A)
    R = psd_sqrt(center.Q)
    return center.zeta + np.einsum("ij,kjl,lp->kip", L, U, R)


def sample_inflated(center, gamma, k, rng):
    """Points of the gamma-inflated set: a member plus a perturbation of norm <= gamma."""
    Zs = sample_members(center, k, rng)
    nm, n = center.zeta.shape
    D = rng.standard_normal((k, nm, n))
    D /= np.linalg.norm(D, 2, axis=(1, 2))[:, None, None]
    lam = gamma * np.where(rng.random(k) < 0.5, 1.0, rng.random(k))
    return Zs + lam[:, None, None] * D
