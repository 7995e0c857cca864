"""Two-point fluctuation fluxes ``(D-, D+)``.

A fluctuation pair returns the jump contributions sent to the element on the
left (``D-``) and on the right (``D+``) of an interface. Both vanish on equal
states. Entropy-conservative pairs satisfy

    eta'(u-)^T D-(u-, u+) + eta'(u+)^T D+(u-, u+) = q(u+) - q(u-)

and entropy-stable pairs satisfy the same relation with ``>=``.

All functions broadcast over leading axes; the last axis indexes components.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from esdgsem.errors import ConfigurationError, ContractViolation
from esdgsem.systems import (
    BaerNunziato,
    EulerLagrange,
    HyperbolicSystem,
    Spray,
)

ENTROPY_CONSERVATIVE = "entropy_conservative"
ENTROPY_STABLE = "entropy_stable"

# relative jump below which the quotient density fluxes use their limit
QUOTIENT_DEGENERACY = 1.0e-10


@dataclass(frozen=True)
class FluctuationFluxPair:
    """A pair of two-point functions evaluated together.

    ``func(um, up, beta)`` returns ``(D-, D+)``. Pairs that depend on the
    spectral-radius estimate ``beta_s`` set ``requires_beta``; the solver
    injects it per interface.
    """

    name: str
    kind: str
    func: Callable[..., tuple[np.ndarray, np.ndarray]]
    requires_beta: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    def __call__(self, um, up, beta=None) -> tuple[np.ndarray, np.ndarray]:
        um = np.asarray(um, dtype=float)
        up = np.asarray(up, dtype=float)
        if um.shape[-1] != up.shape[-1]:
            raise ContractViolation("left and right states have different sizes")
        if self.requires_beta and beta is None:
            raise ContractViolation(f"flux {self.name!r} requires beta_s")
        return self.func(um, up, beta)

    def d_minus(self, um, up, beta=None):
        return self(um, up, beta)[0]

    def d_plus(self, um, up, beta=None):
        return self(um, up, beta)[1]


@dataclass(frozen=True)
class VolumeKernel:
    """``D~(u-, u+) = D_ec-(u-, u+) - D_ec+(u+, u-)`` for the element integral."""

    pair: FluctuationFluxPair
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def d_tilde(self, um, up) -> np.ndarray:
        um = np.asarray(um, dtype=float)
        up = np.asarray(up, dtype=float)
        if self.func is not None:
            return self.func(um, up)
        beta = 0.0 if self.pair.requires_beta else None
        dm, _ = self.pair(um, up, beta)
        _, dp = self.pair(up, um, beta)
        return dm - dp


def _mean(a, b):
    return 0.5 * (a + b)


# -- Burgers family ----------------------------------------------------------


def ec_flux_burgers(um, up, beta=None):
    a, b = um[..., 0], up[..., 0]
    jump = b - a
    dm = (2.0 * a + b) / 6.0 * jump
    dp = (a + 2.0 * b) / 6.0 * jump
    return dm[..., None], dp[..., None]


def tadmor_flux_burgers(um, up):
    """Symmetric entropy-conservative flux for ``f(u) = u^2/2``."""
    a, b = um[..., 0], up[..., 0]
    return ((a * a + a * b + b * b) / 6.0)[..., None]


def burgers_flux(u):
    return 0.5 * np.asarray(u, dtype=float) ** 2


def ec_flux_coupled_burgers(um, up, beta=None):
    jump = (up[..., 0] + up[..., 1] - um[..., 0] - um[..., 1])[..., None] / 6.0
    return jump * (2.0 * um + up), jump * (um + 2.0 * up)


# -- 2x2 system with a linearly degenerate field -----------------------------


def ec_flux_ld2x2(um, up, beta=None):
    u1, v1 = um[..., 0], um[..., 1]
    u2, v2 = up[..., 0], up[..., 1]
    g1, g2 = u1 + v1, u2 + v2
    ju, jv = u2 - u1, v2 - v1
    dm = np.stack([(2 * g1 + g2) * ju, (2 * v1 + v2) * jv - (2 * u1 + u2) * ju], axis=-1)
    dp = np.stack([(g1 + 2 * g2) * ju, (v1 + 2 * v2) * jv - (u1 + 2 * u2) * ju], axis=-1)
    return dm / 6.0, dp / 6.0


def ld2x2_entropy_conservative_beta(um, up):
    """The ``beta_s`` making the dissipative 2x2 flux exactly entropy conservative."""
    ju = up[..., 0] - um[..., 0]
    jv = up[..., 1] - um[..., 1]
    safe = np.where(jv == 0.0, 1.0, jv)
    return np.where(jv == 0.0, np.nan, (jv - ju**2 / safe) / 6.0)


def ld2x2_beta(um, up):
    g1 = um[..., 0] + um[..., 1]
    g2 = up[..., 0] + up[..., 1]
    beta = np.maximum.reduce(
        [np.abs(um[..., 1]), np.abs(up[..., 1]), np.abs(g1), np.abs(g2)]
    )
    jv = up[..., 1] - um[..., 1]
    ju = up[..., 0] - um[..., 0]
    big = np.abs(jv) >= 1.0e-12
    safe = np.where(big, jv, 1.0)
    quotient = np.where(big, (jv - ju**2 / safe) / 6.0, 0.0)
    return np.maximum(np.maximum(beta, quotient), 0.0)


def es_flux_ld2x2(um, up, beta=None, eps_v=1.0):
    """Dissipative 2x2 flux; ``beta=None`` selects the local estimate."""
    if eps_v < 0.0:
        raise ConfigurationError("eps_v must be nonnegative", key="eps_v")
    if beta is None:
        beta = ld2x2_beta(um, up)
    beta = np.asarray(beta, dtype=float)

    u1, v1 = um[..., 0], um[..., 1]
    u2, v2 = up[..., 0], up[..., 1]
    g1, g2 = u1 + v1, u2 + v2
    ju = u2 - u1
    f1 = 0.5 * (v1**2 - u1**2)
    f2 = 0.5 * (v2**2 - u2**2)
    hhat = 0.5 * (f1 + f2) - 0.5 * beta * (v2 - v1)

    jump = up - um
    dm = np.stack([(2 * g1 + g2) / 6.0 * ju, hhat - f1], axis=-1) - eps_v * jump
    dp = np.stack([(2 * g2 + g1) / 6.0 * ju, f2 - hhat], axis=-1) + eps_v * jump
    return dm, dp


# -- Euler equations in Lagrangian coordinates -------------------------------


def ec_flux_euler_lagrange(system: EulerLagrange, um, up, beta=None):
    pm, pp = system.pressure(um), system.pressure(up)
    ju = up[..., 1] - um[..., 1]
    jp = pp - pm
    dm = 0.5 * np.stack([-ju, jp, pm * ju], axis=-1)
    dp = 0.5 * np.stack([-ju, jp, pp * ju], axis=-1)
    return dm, dp


# -- quotient density means --------------------------------------------------


def polytropic_density_mean(rho_m, rho_p, gamma):
    """``[[p(rho)]] / [[h(rho)]]`` for ``p = kappa rho^gamma``.

    Evaluated as ``(gamma-1)/gamma * rho- * expm1(gamma L) / expm1((gamma-1) L)``
    with ``L = log(rho+/rho-)``, which keeps full relative accuracy for small
    jumps. Nearly equal densities fall back to the arithmetic mean, the
    pointwise limit.
    """
    rho_m = np.asarray(rho_m, dtype=float)
    rho_p = np.asarray(rho_p, dtype=float)
    mean = 0.5 * (rho_m + rho_p)
    jump = rho_p - rho_m
    degenerate = np.abs(jump) < QUOTIENT_DEGENERACY * np.maximum(1.0, np.abs(mean))

    with np.errstate(all="ignore"):
        L = np.log1p(jump / rho_m)
        safe_L = np.where(degenerate, 1.0, L)
        ratio = np.expm1(gamma * safe_L) / np.expm1((gamma - 1.0) * safe_L)
        value = (gamma - 1.0) / gamma * rho_m * ratio
    return np.where(degenerate, mean, value)


def _quotient(num, den, limit, jumps, means):
    """``num/den`` unless every jump is negligible, in which case ``limit``."""
    degenerate = np.ones(np.shape(num), dtype=bool)
    for jmp, mn in zip(jumps, means):
        degenerate &= np.abs(jmp) < QUOTIENT_DEGENERACY * np.maximum(1.0, np.abs(mn))
    with np.errstate(all="ignore"):
        value = num / np.where(degenerate, 1.0, den)
    return np.where(degenerate, limit, value)


# -- spray -------------------------------------------------------------------


def ec_flux_spray(system: Spray, um, up, beta=None):
    # the liquid mass flux divides by [[p]] + delta/(delta-1) [[theta/(1-alpha)]],
    # the jump of the liquid entropy variable paired with the liquid mass
    am, rgm, ugm, ulm = system.unpack(um)
    ap, rgp, ugp, ulp = system.unpack(up)
    rl = system.rho_l
    pm, pp = system.pressure(rgm), system.pressure(rgp)
    thm, thp = system.theta(am), system.theta(ap)

    abar = _mean(am, ap)
    ug_bar = _mean(ugm, ugp)
    ul_bar = _mean(ulm, ulp)
    p_bar = _mean(pm, pp)
    ja = ap - am
    jp = pp - pm
    jth = thp - thm
    dd = system.delta / (system.delta - 1.0)

    h_g = abar * ug_bar * polytropic_density_mean(rgm, rgp, system.gamma)
    h_l = rl * _quotient(
        (1.0 - abar) * ul_bar * jp + ul_bar * jth,
        jp + dd * (thp / (1.0 - ap) - thm / (1.0 - am)),
        (1.0 - abar) * ul_bar,
        jumps=(rgp - rgm, ja),
        means=(_mean(rgm, rgp), abar),
    )

    mom_g = h_g * ug_bar + abar * p_bar
    mom_l = h_l * ul_bar + (1.0 - abar) * p_bar
    dm = np.stack(
        [
            h_g - um[..., 1],
            mom_g - am * (rgm * ugm**2 + pm) - 0.5 * pm * ja,
            h_l - um[..., 3],
            mom_l - (1.0 - am) * (rl * ulm**2 + pm) + 0.5 * pm * ja + 0.5 * jth,
        ],
        axis=-1,
    )
    dp = np.stack(
        [
            up[..., 1] - h_g,
            ap * (rgp * ugp**2 + pp) - mom_g - 0.5 * pp * ja,
            up[..., 3] - h_l,
            (1.0 - ap) * (rl * ulp**2 + pp) - mom_l + 0.5 * pp * ja + 0.5 * jth,
        ],
        axis=-1,
    )
    return dm, dp


# -- isentropic Baer-Nunziato ------------------------------------------------


def _bn_pieces(system: BaerNunziato, um, up):
    a1m, r1m, v1m, a2m, r2m, v2m = system.unpack(um)
    a1p, r1p, v1p, a2p, r2p, v2p = system.unpack(up)
    p1m, p1p = system.pressure(r1m, 1), system.pressure(r1p, 1)
    p2m, p2p = system.pressure(r2m, 2), system.pressure(r2p, 2)
    hh1 = polytropic_density_mean(r1m, r1p, system.gamma1)
    hh2 = polytropic_density_mean(r2m, r2p, system.gamma2)
    a1 = _mean(a1m, a1p)
    a2 = _mean(a2m, a2p)
    v1 = _mean(v1m, v1p)
    v2 = _mean(v2m, v2p)
    flux = np.stack(
        [
            np.zeros_like(a1),
            a1 * v1 * hh1,
            a1 * (v1**2 * hh1 + _mean(p1m, p1p)),
            a2 * v2 * hh2,
            a2 * (v2**2 * hh2 + _mean(p2m, p2p)),
        ],
        axis=-1,
    )
    return {
        "h": flux,
        "hh1": hh1,
        "hh2": hh2,
        "v1": v1,
        "v2": v2,
        "ja": a1p - a1m,
        "u2m": v2m,
        "u2p": v2p,
        "p1m": p1m,
        "p1p": p1p,
    }


def ec_flux_bn(system: BaerNunziato, um, up, beta):
    if beta is None:
        raise ContractViolation("the Baer-Nunziato flux requires beta_s")
    beta = np.asarray(beta, dtype=float)
    P = _bn_pieces(system, um, up)
    half = 0.5 * P["ja"]
    bh1 = beta * P["hh1"]
    bh2 = beta * P["hh2"]
    d_m = half[..., None] * np.stack(
        [P["u2m"] - beta, -bh1, -P["p1m"] - bh1 * P["v1"], bh2, P["p1m"] + bh2 * P["v2"]],
        axis=-1,
    )
    d_p = half[..., None] * np.stack(
        [P["u2p"] + beta, bh1, -P["p1p"] + bh1 * P["v1"], -bh2, P["p1p"] - bh2 * P["v2"]],
        axis=-1,
    )
    dm = P["h"] - system.physical_flux(um) + d_m
    dp = system.physical_flux(up) - P["h"] + d_p
    return dm, dp


def bn_volume_d_tilde(system: BaerNunziato, um, up):
    """Closed form of ``D~`` for the Baer-Nunziato pair; ``beta_s`` cancels."""
    P = _bn_pieces(system, um, up)
    ja = P["ja"]
    noncons = ja[..., None] * np.stack(
        [P["u2m"], np.zeros_like(ja), -P["p1m"], np.zeros_like(ja), P["p1m"]], axis=-1
    )
    return 2.0 * (P["h"] - system.physical_flux(um)) + noncons


def bn_viscosity_matrix(system: BaerNunziato, um, up):
    """Diagonal of the positive interface viscosity matrix."""
    a1m, r1m, v1m, a2m, r2m, v2m = system.unpack(um)
    a1p, r1p, v1p, a2p, r2p, v2p = system.unpack(up)
    m1 = _mean(um[..., 1], up[..., 1])
    m2 = _mean(um[..., 3], up[..., 3])
    c1 = _mean(np.sqrt(system.sound_speed2(r1m, 1)), np.sqrt(system.sound_speed2(r1p, 1)))
    c2 = _mean(np.sqrt(system.sound_speed2(r2m, 2)), np.sqrt(system.sound_speed2(r2p, 2)))
    v1 = _mean(v1m, v1p)
    v2 = _mean(v2m, v2p)
    return np.stack(
        [np.zeros_like(m1), m1 / (v1**2 + c1**2), m1, m2 / (v2**2 + c2**2), m2], axis=-1
    )


def es_flux_bn(system: BaerNunziato, um, up, beta, eps_v=1.0):
    if not eps_v > 0.0:
        raise ConfigurationError("the Baer-Nunziato interface flux requires eps_v > 0", key="eps_v")
    dm, dp = ec_flux_bn(system, um, up, beta)
    jump = system.entropy_variables(up) - system.entropy_variables(um)
    visc = (eps_v * np.asarray(beta, dtype=float))[..., None] * bn_viscosity_matrix(
        system, um, up
    ) * jump
    return dm - visc, dp + visc


# -- generic constructions ---------------------------------------------------


def splitting_flux(system: HyperbolicSystem, alpha: float) -> FluctuationFluxPair:
    """Entropy-conservative fluxes of the skew-symmetric splitting.

    ``D+-(u-, u+) = A+-(u-, u+) [[u]]`` with
    ``A+-(u-, u+) = (alpha A(u+-) + (1 - alpha) A(u-+)) / 2``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"splitting parameter must lie in [0, 1], got {alpha}", key="alpha")

    def func(um, up, beta=None):
        jump = up - um
        am = system.a_product(um, jump)
        ap = system.a_product(up, jump)
        dm = 0.5 * (alpha * am + (1.0 - alpha) * ap)
        dp = 0.5 * (alpha * ap + (1.0 - alpha) * am)
        return dm, dp

    return FluctuationFluxPair(
        name=f"{system.name}_splitting", kind=ENTROPY_CONSERVATIVE, func=func, params={"alpha": alpha}
    )


def splitting_matrices(system: HyperbolicSystem, alpha: float, um, up):
    """``(A-(u-, u+), A+(u-, u+))`` of the splitting as dense matrices."""
    Am = system.a_matrix(um)
    Ap = system.a_matrix(up)
    return 0.5 * (alpha * Am + (1 - alpha) * Ap), 0.5 * (alpha * Ap + (1 - alpha) * Am)


def conservative_bridge(
    h_ec: Callable[[np.ndarray, np.ndarray], np.ndarray],
    f: Callable[[np.ndarray], np.ndarray],
    name: str = "bridge",
) -> FluctuationFluxPair:
    """Fluctuation pair ``D- = h(u-,u+) - f(u-)``, ``D+ = f(u+) - h(u-,u+)``."""

    def func(um, up, beta=None):
        h = h_ec(um, up)
        return h - f(um), f(up) - h

    return FluctuationFluxPair(name=name, kind=ENTROPY_CONSERVATIVE, func=func)


def dissipative_flux(
    system: HyperbolicSystem, pair: FluctuationFluxPair, eps_v: float = 1.0
) -> FluctuationFluxPair:
    """Entropy-conservative pair plus local Lax-Friedrichs dissipation.

    ``D+- = D_ec+- +- (eps_v s / 2) [[u]]`` with ``s`` the larger wave speed of
    the two states. Entropy stable for any convex entropy, since
    ``[[eta']]^T [[u]] >= 0``.
    """
    if eps_v < 0.0:
        raise ConfigurationError("eps_v must be nonnegative", key="eps_v")

    def func(um, up, beta=None):
        dm, dp = pair(um, up, beta)
        s = np.maximum(system.max_wave_speed(um), system.max_wave_speed(up))
        visc = (0.5 * eps_v * s)[..., None] * (up - um)
        return dm - visc, dp + visc

    return FluctuationFluxPair(
        name=f"{pair.name}_lf", kind=ENTROPY_STABLE, func=func, params={"eps_v": eps_v}
    )


# -- registry ----------------------------------------------------------------


def entropy_conservative_pair(system: HyperbolicSystem) -> FluctuationFluxPair:
    name = system.name
    if name == "burgers":
        return FluctuationFluxPair("burgers_ec", ENTROPY_CONSERVATIVE, ec_flux_burgers)
    if name == "coupled_burgers":
        return FluctuationFluxPair("coupled_burgers_ec", ENTROPY_CONSERVATIVE, ec_flux_coupled_burgers)
    if name == "ld2x2":
        return FluctuationFluxPair("ld2x2_ec", ENTROPY_CONSERVATIVE, ec_flux_ld2x2)
    if name == "euler_lagrange":
        return FluctuationFluxPair(
            "euler_lagrange_ec",
            ENTROPY_CONSERVATIVE,
            lambda um, up, beta=None: ec_flux_euler_lagrange(system, um, up),
        )
    if name == "spray":
        return FluctuationFluxPair(
            "spray_ec", ENTROPY_CONSERVATIVE, lambda um, up, beta=None: ec_flux_spray(system, um, up)
        )
    if name == "baer_nunziato":
        return FluctuationFluxPair(
            "bn_ec",
            ENTROPY_CONSERVATIVE,
            lambda um, up, beta: ec_flux_bn(system, um, up, beta),
            requires_beta=True,
        )
    raise ConfigurationError(f"no entropy conservative flux for {name!r}", key="system")


def entropy_stable_pair(system: HyperbolicSystem, eps_v: float = 1.0) -> FluctuationFluxPair:
    name = system.name
    if name == "ld2x2":
        return FluctuationFluxPair(
            "ld2x2_es",
            ENTROPY_STABLE,
            lambda um, up, beta=None: es_flux_ld2x2(um, up, beta, eps_v),
            params={"eps_v": eps_v},
        )
    if name == "baer_nunziato":
        if not eps_v > 0.0:
            raise ConfigurationError("the Baer-Nunziato interface flux requires eps_v > 0", key="eps_v")
        return FluctuationFluxPair(
            "bn_es",
            ENTROPY_STABLE,
            lambda um, up, beta: es_flux_bn(system, um, up, beta, eps_v),
            requires_beta=True,
            params={"eps_v": eps_v},
        )
    return dissipative_flux(system, entropy_conservative_pair(system), eps_v)


def volume_kernel(system: HyperbolicSystem) -> VolumeKernel:
    pair = entropy_conservative_pair(system)
    if isinstance(system, BaerNunziato):
        return VolumeKernel(pair, lambda um, up: bn_volume_d_tilde(system, um, up))
    return VolumeKernel(pair)


def interface_pair(system: HyperbolicSystem, kind: str, eps_v: float = 1.0) -> FluctuationFluxPair:
    if kind in ("ec", ENTROPY_CONSERVATIVE):
        return entropy_conservative_pair(system)
    if kind in ("es", ENTROPY_STABLE):
        return entropy_stable_pair(system, eps_v)
    raise ConfigurationError(f"unknown interface flux {kind!r}", key="interface_flux")
