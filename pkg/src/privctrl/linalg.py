"""Small numerical helpers shared across modules."""

import numpy as np

#: singular values below ``RANK_RTOL * sigma_max`` count as zero
RANK_RTOL = 1e-9


class DimensionError(ValueError):
    """Raised when matrix shapes do not fit together."""


class RankError(ValueError):
    """Raised when a data matrix lacks the required full row rank."""


def as_matrix(a, name="matrix"):
    """Return ``a`` as a 2-D float array (scalars and vectors are promoted)."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def numerical_rank(a, rtol=RANK_RTOL):
    s = np.linalg.svd(np.atleast_2d(a), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def has_full_row_rank(a, rtol=RANK_RTOL):
    a = np.atleast_2d(a)
    return numerical_rank(a, rtol) == a.shape[0]


def sym(a):
    return 0.5 * (a + a.T)


def lambda_max(a):
    """Largest eigenvalue of the symmetric part of ``a``."""
    return float(np.linalg.eigvalsh(sym(a))[-1])


def lambda_min(a):
    return float(np.linalg.eigvalsh(sym(a))[0])


def spectral_radius(a):
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def norm2(a):
    """Induced 2-norm."""
    a = np.atleast_2d(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def psd_sqrt(a):
    """Symmetric PSD square root; negative round-off eigenvalues are clipped."""
    w, v = np.linalg.eigh(sym(a))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def psd_inv_sqrt(a):
    w, v = np.linalg.eigh(sym(a))
    if w[0] <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.T


def right_inverse(w, rtol=RANK_RTOL):
    """Right inverse ``W^T (W W^T)^{-1}`` of a full-row-rank ``W`` via QR of ``W^T``.

    For full row rank this coincides with the Moore-Penrose pseudoinverse.
    """
    w = as_matrix(w)
    if not has_full_row_rank(w, rtol):
        raise RankError(
            f"stacked data matrix of shape {w.shape} is rank deficient; "
            "collect a longer or richer experiment"
        )
    q, r = np.linalg.qr(w.T, mode="reduced")
    # W^T = QR  =>  W^+ = Q R^{-T}
    return np.linalg.solve(r, q.T).T


def rng_from(seed):
    """``np.random.default_rng`` that passes Generators through untouched."""
    return np.random.default_rng(seed)
