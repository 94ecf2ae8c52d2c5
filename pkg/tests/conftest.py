import numpy as np
import pytest

from privctrl import plant as pl


def scalar_data(a, b, x0=1.0, inputs=(1.0, -0.5, 0.3)):
    """Noise-free data from ``x+ = a x + b u``."""
    p = pl.Plant(np.array([[a]]), np.array([[b]]))
    return pl.simulate_collect(p, np.array([x0]), np.array(inputs))


def ball_oracle(a, b, grid=200001, k_span=5.0):
    """Largest radius of a ball around ``(a, b)`` that a single scalar gain stabilizes.

    max over the ball of ``|a' + b' k|`` is ``|a + b k| + r sqrt(1 + k^2)``.
    """
    k = np.linspace(-k_span, k_span, grid)
    return float(np.max((1 - np.abs(a + b * k)) / np.sqrt(1 + k**2)))


def ellipse_oracle(zeta, A, grid=200001, k_span=5.0):
    """Largest ``Qbar`` so that one gain stabilizes ``{z : (z - zeta)^T A (z - zeta) <= Qbar}``.

    max over the ellipse of ``|v^T z|`` with ``v = (1, k)`` is
    ``|v^T zeta| + sqrt(Qbar v^T A^{-1} v)``.
    """
    k = np.linspace(-k_span, k_span, grid)
    V = np.vstack([np.ones_like(k), k])
    Ainv = np.linalg.inv(A)
    center = np.abs(zeta[0] + zeta[1] * k)
    w = np.einsum("ik,ij,jk->k", V, Ainv, V)
    ok = center < 1
    return float(np.max(((1 - center[ok]) ** 2) / w[ok]))


@pytest.fixture
def reactor():
    return pl.batch_reactor()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
