"""Cloud-side controller synthesis.

Given a QMI set of systems, find ``P > 0`` and ``Y`` with

    [[-P - C,      0,    B^T  ],
     [   0,       -P,  [P; Y]^T],
     [   B,   [P; Y],   -A    ]]  < 0

so that ``K = Y P^{-1}`` makes every ``A + B K`` in the set Schur stable, and push
the radius ``gamma`` of an inflated set as far as the LMI stays feasible.

The backend is cvxpy with Clarabel. Every answer is re-checked by an eigenvalue
decomposition of the assembled block; solver status alone is never trusted.
"""

import enum
import logging
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from . import qmi
from .linalg import DimensionError, lambda_max, lambda_min, norm2

log = logging.getLogger(__name__)

EPS_P = 1e-8
GAMMA_TOL = 1e-4
MAX_DOUBLINGS = 40
SOLVER = "CLARABEL"


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


def strict_margin(s):
    """Required certified margin ``1e-7 (1 + ||C||)`` for a QMI set."""
    return 1e-7 * (1 + norm2(s.C))


@dataclass
class SynthesisOutcome:
    status: Status
    P: np.ndarray = None
    Y: np.ndarray = None
    K: np.ndarray = None
    gamma_bar: float = 0.0
    margin: float = float("nan")
    eps_strict: float = float("nan")
    problem: "ConeProblem" = field(default=None, repr=False)
    trace: list = field(default_factory=list)

    @property
    def feasible(self):
        return self.status is Status.FEASIBLE


@dataclass(frozen=True)
class ConeProblem:
    """Solver-agnostic description of the stabilization LMI for one QMI set."""

    qmi_set: qmi.QmiSet
    eps_P: float = EPS_P

    @property
    def n(self):
        return self.qmi_set.n

    @property
    def m(self):
        return self.qmi_set.m

    @property
    def size(self):
        return 3 * self.n + self.m

    @property
    def eps_strict(self):
        return strict_margin(self.qmi_set)

    def block(self, P, Y):
        """The LMI matrix evaluated at numeric ``(P, Y)``."""
        s = self.qmi_set
        n, m = self.n, self.m
        P = np.asarray(P, dtype=float)
        Y = np.asarray(Y, dtype=float).reshape(m, n)
        PY = np.vstack([P, Y])
        Z = np.zeros((n, n))
        return np.block([
            [-P - s.C, Z, s.B.T],
            [Z, -P, PY.T],
            [s.B, PY, -s.A],
        ])

    def certify(self, P, Y):
        """Independent margin ``-lambda_max(block)``, or ``-inf`` when ``P`` is not positive."""
        if P is None or Y is None or not np.all(np.isfinite(P)) or not np.all(np.isfinite(Y)):
            return -np.inf
        if lambda_min(P) <= 0:
            return -np.inf
        return -lambda_max(self.block(P, Y))


def assemble_lmi(qmi_set):
    if not isinstance(qmi_set, qmi.QmiSet):
        raise TypeError("expected a QmiSet")
    if qmi_set.A.shape[0] != qmi_set.n + qmi_set.m or qmi_set.m < 1:
        raise DimensionError("QMI set does not describe [A B]^T with at least one input")
    return ConeProblem(qmi_set)


class _CompiledLmi:
    """DPP-parametrized cvxpy problem reused across calls of the same shape.

    The solve maximizes ``t`` subject to ``block(P, Y) <= -t I``; the LMI is strictly
    feasible exactly when the optimum is positive.
    """

    def __init__(self, n, m):
        N = 3 * n + m
        self.A = cp.Parameter((n + m, n + m))
        self.B = cp.Parameter((n + m, n))
        self.C = cp.Parameter((n, n))
        self.eps_P = cp.Parameter(nonneg=True)
        self.P = cp.Variable((n, n), symmetric=True)
        self.Y = cp.Variable((m, n))
        self.t = cp.Variable()
        PY = cp.vstack([self.P, self.Y])
        Z = np.zeros((n, n))
        M = cp.bmat([
            [-self.P - self.C, Z, self.B.T],
            [Z, -self.P, PY.T],
            [self.B, PY, -self.A],
        ])
        self.problem = cp.Problem(
            cp.Maximize(self.t),
            [0.5 * (M + M.T) << -self.t * np.eye(N), self.P >> self.eps_P * np.eye(n)],
        )

    def solve(self, problem):
        s = problem.qmi_set
        self.A.value = s.A
        self.B.value = s.B
        self.C.value = s.C
        self.eps_P.value = problem.eps_P
        # "inaccurate" warnings are moot: every answer is re-certified by eigenvalues
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            self.problem.solve(solver=SOLVER)
        return self.problem.status, self.P.value, self.Y.value


_compiled = {}


def _compiled_for(n, m):
    key = (n, m)
    if key not in _compiled:
        _compiled[key] = _CompiledLmi(n, m)
    return _compiled[key]


def solve_feasibility(problem):
    """Solve the LMI and certify the answer independently of the solver."""
    eps = problem.eps_strict
    try:
        status, P, Y = _compiled_for(problem.n, problem.m).solve(problem)
    except cp.error.SolverError as exc:
        log.warning("solver failure: %s", exc)
        return SynthesisOutcome(Status.NUMERICAL_FAILURE, eps_strict=eps, problem=problem)
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or P is None:
        return SynthesisOutcome(Status.NUMERICAL_FAILURE, eps_strict=eps, problem=problem)
    P = 0.5 * (P + P.T)
    margin = problem.certify(P, Y)
    if margin < eps:
        return SynthesisOutcome(Status.INFEASIBLE, margin=margin, eps_strict=eps,
                                problem=problem)
    K = np.linalg.solve(P.T, Y.T).T
    return SynthesisOutcome(Status.FEASIBLE, P=P, Y=Y, K=K, margin=margin, eps_strict=eps,
                            problem=problem)


class MonotonicityError(RuntimeError):
    """Feasibility flipped back on along the bisection trace."""


def bisect_gamma(family, gamma_hi, tol=GAMMA_TOL):
    """Largest certified ``gamma`` such that ``family(gamma)`` (a QmiSet) is stabilizable.

    ``family`` must shrink in the PSD order as ``gamma`` grows, which makes
    feasibility monotone. The returned outcome certifies ``gamma_bar`` itself.
    """
    trace = []

    def probe(g):
        out = solve_feasibility(assemble_lmi(family(g)))
        trace.append((g, out.status.value, out.margin))
        return out

    best = probe(0.0)
    if not best.feasible:
        best.trace = trace
        return best
    lo = 0.0
    hi = max(float(gamma_hi), tol)
    for _ in range(MAX_DOUBLINGS):
        out = probe(hi)
        if out.status is Status.NUMERICAL_FAILURE:
            break
        if not out.feasible:
            break
        lo, best = hi, out
        hi *= 2
    else:
        raise RuntimeError("gamma bracket did not close; the set family does not shrink")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        out = probe(mid)
        if out.feasible:
            lo, best = mid, out
        else:
            hi = mid
    check_monotone(trace)
    best.gamma_bar = lo
    best.trace = trace
    return best


def check_monotone(trace):
    feasible = sorted(g for g, st, _ in trace if st == Status.FEASIBLE.value)
    infeasible = sorted(g for g, st, _ in trace if st != Status.FEASIBLE.value)
    if feasible and infeasible and infeasible[0] < feasible[-1]:
        raise MonotonicityError(
            f"infeasible at gamma={infeasible[0]} but feasible at gamma={feasible[-1]}"
        )


def maximize_gamma_clean(X0, X1, V0, tol=GAMMA_TOL):
    """Largest ball around the noise-free masked system that one controller stabilizes."""
    base = qmi.clean_singleton_set(X0, X1, V0)
    z_bar = -base.B
    I = np.eye(base.n)

    def family(g):
        return qmi.QmiSet(base.A, base.B, base.C - g**2 * I)

    return bisect_gamma(family, norm2(z_bar) + 1.0, tol)


def maximize_gamma_noisy(X0, X1, V0, Delta, tol=GAMMA_TOL):
    """Same as the clean case on the QMI over-approximation of the inflated consistency set."""
    base = qmi.noisy_consistency_set(X0, X1, V0, Delta)
    center = qmi.to_center_form(base)
    # the data Gram matrix can reach 1e6; rescaling leaves the set unchanged
    k = 1.0 / lambda_max(base.A)

    def family(g):
        return qmi.overapproximate_inflated(base, g).scaled(k)

    return bisect_gamma(family, norm2(center.zeta) + 1.0, tol)


def maximize_shift_direct(base):
    """Largest ``c`` with the LMI for ``(A, B, C - c I)`` feasible, as a single SDP.

    Both the clean ball (``c = gamma^2``) and the noisy over-approximation
    (``c = 2 gamma sqrt(||A|| ||Q||) + gamma^2 ||A||``) are monotone in ``c``, so this
    is an independent route to the bisection result.
    """
    n, m = base.n, base.m
    N = 3 * n + m
    P = cp.Variable((n, n), symmetric=True)
    Y = cp.Variable((m, n))
    c = cp.Variable()
    PY = cp.vstack([P, Y])
    Z = np.zeros((n, n))
    M = cp.bmat([
        [-P - base.C + c * np.eye(n), Z, base.B.T],
        [Z, -P, PY.T],
        [base.B, PY, -base.A],
    ])
    eps = strict_margin(base)
    prob = cp.Problem(
        cp.Maximize(c),
        [0.5 * (M + M.T) << -eps * np.eye(N), P >> EPS_P * np.eye(n)],
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=SOLVER)
    except cp.error.SolverError as exc:
        log.warning("direct shift SDP failed: %s", exc)
        return None
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return None
    return float(c.value)


def direct_gamma_clean(X0, X1, V0):
    c = maximize_shift_direct(qmi.clean_singleton_set(X0, X1, V0))
    return None if c is None or c < 0 else float(np.sqrt(c))


def direct_gamma_noisy(X0, X1, V0, Delta):
    base = qmi.noisy_consistency_set(X0, X1, V0, Delta)
    k = 1.0 / lambda_max(base.A)
    c = maximize_shift_direct(base.scaled(k))
    return None if c is None or c < 0 else float(qmi.gamma_from_shift(base, c / k))
