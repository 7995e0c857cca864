"""Gauss-Lobatto collocation operators.

The nodal basis is the set of Lagrange polynomials on the Gauss-Lobatto
points of :math:`[-1, 1]`. With the quadrature weights :math:`\\omega` and the
difference matrix :math:`D_{kl} = \\ell_l'(s_k)` the pair satisfies the
summation-by-parts identity

.. math::

    \\omega_k D_{kl} + \\omega_l D_{lk} = \\delta_{kl}(\\delta_{kp} - \\delta_{k0}).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from esdgsem.errors import ConfigurationError, ContractViolation

MAX_DEGREE = 10


@dataclass(frozen=True)
class SbpOperator:
    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.degree + 1

    def sbp_defect(self) -> float:
        """Largest entrywise violation of the summation-by-parts identity."""
        p = self.degree
        Q = self.weights[:, None] * self.diff_matrix
        B = np.zeros((p + 1, p + 1))
        B[0, 0] = -1.0
        B[p, p] = 1.0
        return float(np.max(np.abs(Q + Q.T - B)))

    def interpolation_matrix(self, s: np.ndarray) -> np.ndarray:
        """Values of every Lagrange basis function at reference points ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        x = self.nodes
        out = np.ones((s.size, x.size))
        for l in range(x.size):
            for m in range(x.size):
                if m != l:
                    out[:, l] *= (s - x[m]) / (x[l] - x[m])
        return out


def _legendre(p: int, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (L_p(s), L_{p-1}(s)) by the three-term recurrence."""
    lm1 = np.ones_like(s)
    lp = s.copy()
    if p == 0:
        return lm1, np.zeros_like(s)
    for n in range(2, p + 1):
        lm1, lp = lp, ((2 * n - 1) * s * lp - (n - 1) * lm1) / n
    return lp, lm1


def gauss_lobatto(p: int) -> tuple[np.ndarray, np.ndarray]:
    # Newton iteration on (1 - s^2) L_p'(s), seeded with Chebyshev-Gauss-Lobatto
    # points; written with the identity (1 - s^2) L_p' = p (L_{p-1} - s L_p).
    s = -np.cos(np.pi * np.arange(p + 1) / p)
    for _ in range(100):
        lp, lm1 = _legendre(p, s)
        ds = (s * lp - lm1) / ((p + 1) * lp)
        s = s - ds
        if np.max(np.abs(ds)) < 1.0e-15:
            break

    s = 0.5 * (s - s[::-1])
    s[0], s[-1] = -1.0, 1.0
    if p % 2 == 0:
        s[p // 2] = 0.0

    lp, _ = _legendre(p, s)
    w = 2.0 / (p * (p + 1) * lp**2)
    w = 0.5 * (w + w[::-1])
    return s, w


def lagrange_derivative_matrix(s: np.ndarray) -> np.ndarray:
    n = s.size
    diff = s[:, None] - s[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)

    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    # negative-sum trick: rows annihilate constants to round-off
    D[np.arange(n), np.arange(n)] = -np.sum(D, axis=1)
    return D


@lru_cache(maxsize=None)
def build_sbp(p: int) -> SbpOperator:
    """Construct the Gauss-Lobatto collocation operator of degree ``p``.

    Operators are cached and their arrays are read-only, so a single instance
    can be shared by every element of a run.
    """
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_DEGREE:
        raise ConfigurationError(f"polynomial degree must be in [1, {MAX_DEGREE}], got {p!r}")

    p = int(p)
    s, w = gauss_lobatto(p)
    D = lagrange_derivative_matrix(s)

    for a in (s, w, D):
        a.setflags(write=False)
    return SbpOperator(degree=p, nodes=s, weights=w, diff_matrix=D)


def quadrature_inner_product(op: SbpOperator, h: float, f_values, g_values) -> float:
    """Discrete element inner product ``(h/2) sum_l w_l f_l g_l``."""
    f = np.asarray(f_values, dtype=float)
    g = np.asarray(g_values, dtype=float)
    if f.shape[0] != op.n_nodes or g.shape[0] != op.n_nodes:
        raise ContractViolation(
            f"expected {op.n_nodes} nodal values, got {f.shape[0]} and {g.shape[0]}"
        )
    return float(0.5 * h * np.sum(op.weights * f * g))
