"""Linear scaling limiter for the Baer-Nunziato model.

Nodal values are contracted toward the cell average,
``U~ = theta (U - <u>) + <u>``, with a single ``theta`` per cell chosen as the
largest value in ``[0, 1]`` that keeps every nodal void fraction inside the
stencil bounds of the previous state and every nodal phase density above a
floor ``eps``. Cell averages are unchanged and, by convexity, so is the sign
of the entropy production: ``<eta(U~)> <= <eta(U)>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from esdgsem.errors import ConfigurationError, LimiterFailure
from esdgsem.sbp import SbpOperator
from esdgsem.systems import BaerNunziato, HyperbolicSystem

# below this, a contraction denominator means flat data: no limiting needed
FLAT_TOLERANCE = 1.0e-14
# slack on the precondition that cell averages satisfy the bounds
AVERAGE_TOLERANCE = 1.0e-12


@dataclass(frozen=True)
class LimiterBounds:
    """Per-cell void-fraction bounds ``[m_j, M_j]`` for phase 1.

    Phase 2 bounds follow from saturation: ``[1 - M_j, 1 - m_j]``.
    """

    alpha_min: np.ndarray
    alpha_max: np.ndarray
    eps: float = 1.0e-8

    def __post_init__(self):
        if np.any(self.alpha_min > self.alpha_max):
            raise ConfigurationError("limiter bounds require m <= M")


def compute_bounds(U_ext: np.ndarray, eps: float = 1.0e-8) -> LimiterBounds:
    """Stencil bounds from a field padded with one ghost cell on each side.

    ``m_j = min(alpha_{j-1}^p, alpha_j^{0..p}, alpha_{j+1}^0)`` and likewise
    for ``M_j``.
    """
    a = U_ext[..., 0]
    inner = a[1:-1]
    lo = np.minimum(np.min(inner, axis=1), np.minimum(a[:-2, -1], a[2:, 0]))
    hi = np.maximum(np.max(inner, axis=1), np.maximum(a[:-2, -1], a[2:, 0]))
    return LimiterBounds(alpha_min=lo, alpha_max=hi, eps=eps)


def cell_averages(op: SbpOperator, U: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("k,jkm->jm", op.weights, U)


def _alpha_theta(abar, alpha, lo, hi):
    dev = alpha - abar[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        under = np.where(dev < -FLAT_TOLERANCE, (lo - abar)[:, None] / dev, np.inf)
        over = np.where(dev > FLAT_TOLERANCE, (hi - abar)[:, None] / dev, np.inf)
    return np.minimum(np.min(under, axis=1), np.min(over, axis=1))


def _density_theta(mbar, abar, m, a, eps):
    # nodal (alpha, alpha rho) move linearly in theta, so the density floor
    # m(theta) >= eps alpha(theta) is a linear constraint solved exactly
    slope = (m - mbar[:, None]) - eps * (a - abar[:, None])
    room = (mbar - eps * abar)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(slope < -FLAT_TOLERANCE, room / -slope, np.inf)
    return np.min(t, axis=1)


def limiter_theta(system: BaerNunziato, op: SbpOperator, U: np.ndarray, bounds: LimiterBounds):
    """Scaling factor per cell; raises when a cell average is itself inadmissible."""
    avg = cell_averages(op, U)
    a1bar = avg[:, 0]
    lo, hi, eps = bounds.alpha_min, bounds.alpha_max, bounds.eps

    bad = (
        ~np.isfinite(avg).all(axis=1)
        | (a1bar < lo - AVERAGE_TOLERANCE)
        | (a1bar > hi + AVERAGE_TOLERANCE)
        | (avg[:, 1] <= eps * a1bar)
        | (avg[:, 3] <= eps * (1.0 - a1bar))
    )
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise LimiterFailure(
            f"cell average violates the limiter precondition (avg={avg[j].tolist()}, "
            f"bounds=[{lo[j]:.17g}, {hi[j]:.17g}])",
            cell=j,
        )

    a1 = U[..., 0]
    theta = _alpha_theta(a1bar, a1, lo, hi)
    theta = np.minimum(theta, _density_theta(avg[:, 1], a1bar, U[..., 1], a1, eps))
    theta = np.minimum(theta, _density_theta(avg[:, 3], 1.0 - a1bar, U[..., 3], 1.0 - a1, eps))
    return np.clip(theta, 0.0, 1.0), avg


def apply_limiter(
    system: HyperbolicSystem, op: SbpOperator, U: np.ndarray, bounds: LimiterBounds
) -> tuple[np.ndarray, np.ndarray]:
    """Return the limited field and the per-cell ``theta``."""
    if not isinstance(system, BaerNunziato):
        return U, np.ones(U.shape[0])
    theta, avg = limiter_theta(system, op, U, bounds)
    limited = np.where(
        (theta < 1.0)[:, None, None],
        theta[:, None, None] * (U - avg[:, None, :]) + avg[:, None, :],
        U,
    )
    return limited, theta


@dataclass(frozen=True)
class PositivityLimiter:
    """Solver hook bundling bound computation and application."""

    eps: float = 1.0e-8

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ConfigurationError("limiter eps must be positive", key="limiter_eps")

    def bounds(self, U_ext: np.ndarray) -> LimiterBounds:
        return compute_bounds(U_ext, self.eps)

    def apply(self, system, op, U, bounds):
        return apply_limiter(system, op, U, bounds)


def make_limiter(system: HyperbolicSystem, enabled: bool, eps: float = 1.0e-8):
    """The limiter for ``system``, or ``None`` when disabled or not defined for it."""
    if not enabled or not isinstance(system, BaerNunziato):
        return None
    return PositivityLimiter(eps)
