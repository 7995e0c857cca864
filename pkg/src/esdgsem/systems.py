"""Model hyperbolic systems in nonconservative form ``u_t + A(u) u_x = 0``.

Every system works on arrays whose last axis holds the state components, so
the same call evaluates one state, a row of nodes, or a whole mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from esdgsem.errors import ConfigurationError, DomainError


class HyperbolicSystem:
    """Common contract of the model systems.

    Subclasses provide the matrix action ``A(u) w``, an entropy pair
    ``(eta, q)`` with ``eta'(u)^T A(u) = q'(u)^T``, the entropy variables
    ``eta'(u)`` with respect to the stored (conservative) variables, an
    admissibility predicate and a bound on the wave speeds.
    """

    name: str = ""
    ncomp: int = 0
    component_names: tuple[str, ...] = ()
    primitive_names: tuple[str, ...] = ()
    # component indices whose equation is in conservation form, plus
    # combinations of rows (weights) that are conserved
    conserved_combinations: tuple[tuple[float, ...], ...] = ()

    def params(self) -> dict[str, Any]:
        return {}

    def a_product(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def a_matrix(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        eye = np.eye(self.ncomp)
        cols = [self.a_product(u, np.broadcast_to(eye[c], u.shape)) for c in range(self.ncomp)]
        return np.stack(cols, axis=-1)

    def entropy(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def entropy_flux(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def entropy_variables(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_admissible(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.all(np.isfinite(u), axis=-1)

    def max_wave_speed(self, u: np.ndarray) -> np.ndarray:
        eig = np.linalg.eigvals(self.a_matrix(u))
        return np.max(np.abs(eig), axis=-1)

    def combination_flux(self, u: np.ndarray) -> np.ndarray:
        """Physical fluxes of the ``conserved_combinations``, last axis."""
        return np.zeros(np.shape(u)[:-1] + (0,))

    def to_primitive(self, u: np.ndarray) -> np.ndarray:
        return np.array(u, dtype=float)

    def from_primitive(self, w) -> np.ndarray:
        return np.array(w, dtype=float)

    def check_admissible(self, u: np.ndarray) -> None:
        if not np.all(self.is_admissible(u)):
            raise DomainError(f"inadmissible state for system {self.name!r}")

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Burgers(HyperbolicSystem):
    name = "burgers"
    ncomp = 1
    component_names = ("u",)
    primitive_names = ("u",)
    conserved_combinations = ((1.0,),)

    def a_product(self, u, w):
        return u * w

    def combination_flux(self, u):
        return 0.5 * np.asarray(u, dtype=float) ** 2

    def entropy(self, u):
        return 0.5 * u[..., 0] ** 2

    def entropy_flux(self, u):
        return u[..., 0] ** 3 / 3.0

    def entropy_variables(self, u):
        return np.array(u, dtype=float)

    def max_wave_speed(self, u):
        return np.abs(u[..., 0])


class CoupledBurgers(HyperbolicSystem):
    """``u_t + u (u+v)_x = 0``, ``v_t + v (u+v)_x = 0``."""

    name = "coupled_burgers"
    ncomp = 2
    component_names = ("u", "v")
    primitive_names = ("u", "v")
    # the sum w = u + v obeys w_t + (w^2/2)_x = 0
    conserved_combinations = ((1.0, 1.0),)

    def a_product(self, u, w):
        s = w[..., 0] + w[..., 1]
        return u * s[..., None]

    def combination_flux(self, u):
        return (0.5 * (u[..., 0] + u[..., 1]) ** 2)[..., None]

    def entropy(self, u):
        return 0.5 * (u[..., 0] + u[..., 1]) ** 2

    def entropy_flux(self, u):
        return (u[..., 0] + u[..., 1]) ** 3 / 3.0

    def entropy_variables(self, u):
        s = u[..., 0] + u[..., 1]
        return np.stack([s, s], axis=-1)

    def max_wave_speed(self, u):
        return np.abs(u[..., 0] + u[..., 1])


class LinearlyDegenerate2x2(HyperbolicSystem):
    """``u_t + (u+v) u_x = 0``, ``v_t + ((v^2 - u^2)/2)_x = 0`` on ``u > 0``.

    The entropy pair is ``eta = (u^2+v^2)/2``, ``q = (u^3+v^3)/3``: it is the
    quadratic pair compatible with this matrix and the one whose viscous
    regularisation dissipates ``(u_x)^2 + (v_x)^2``.
    """

    name = "ld2x2"
    ncomp = 2
    component_names = ("u", "v")
    primitive_names = ("u", "v")
    conserved_combinations = ((0.0, 1.0),)

    def a_product(self, u, w):
        a, b = u[..., 0], u[..., 1]
        return np.stack([(a + b) * w[..., 0], -a * w[..., 0] + b * w[..., 1]], axis=-1)

    def physical_flux_v(self, u):
        return 0.5 * (u[..., 1] ** 2 - u[..., 0] ** 2)

    def combination_flux(self, u):
        return self.physical_flux_v(u)[..., None]

    def entropy(self, u):
        return 0.5 * (u[..., 0] ** 2 + u[..., 1] ** 2)

    def entropy_flux(self, u):
        return (u[..., 0] ** 3 + u[..., 1] ** 3) / 3.0

    def entropy_variables(self, u):
        return np.array(u, dtype=float)

    def is_admissible(self, u):
        u = np.asarray(u, dtype=float)
        return super().is_admissible(u) & (u[..., 0] > 0.0)

    def max_wave_speed(self, u):
        return np.maximum(np.abs(u[..., 0] + u[..., 1]), np.abs(u[..., 1]))


@dataclass(frozen=True, repr=False)
class EulerLagrange(HyperbolicSystem):
    """Lagrangian gas dynamics in ``(tau, u, e)`` with ``p = (gamma-1) e / tau``.

    The mathematical entropy is ``-s`` with ``s = ln e + (gamma-1) ln tau``
    (unit heat capacity); its flux vanishes.
    """

    gamma: float = 1.4

    name = "euler_lagrange"
    ncomp = 3
    component_names = ("tau", "u", "e")
    primitive_names = ("tau", "u", "e", "p")
    conserved_combinations = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConfigurationError("euler_lagrange requires gamma > 1", key="gamma")

    def params(self):
        return {"gamma": self.gamma}

    def pressure(self, u):
        return (self.gamma - 1.0) * u[..., 2] / u[..., 0]

    def a_product(self, u, w):
        tau, e = u[..., 0], u[..., 2]
        p = self.pressure(u)
        p_tau = -p / tau
        p_e = (self.gamma - 1.0) / tau
        return np.stack(
            [-w[..., 1], p_tau * w[..., 0] + p_e * w[..., 2], p * w[..., 1]], axis=-1
        )

    def combination_flux(self, u):
        return np.stack([-u[..., 1], self.pressure(u)], axis=-1)

    def entropy(self, u):
        return -(np.log(u[..., 2]) + (self.gamma - 1.0) * np.log(u[..., 0]))

    def entropy_flux(self, u):
        return np.zeros(np.shape(u)[:-1])

    def entropy_variables(self, u):
        tau, e = u[..., 0], u[..., 2]
        return np.stack([-(self.gamma - 1.0) / tau, np.zeros_like(tau), -1.0 / e], axis=-1)

    def is_admissible(self, u):
        u = np.asarray(u, dtype=float)
        return super().is_admissible(u) & (u[..., 0] > 0.0) & (u[..., 2] > 0.0)

    def max_wave_speed(self, u):
        # Lagrangian sound speed rho c = sqrt(gamma p / tau)
        return np.sqrt(self.gamma * self.pressure(u) / u[..., 0])

    def to_primitive(self, u):
        u = np.asarray(u, dtype=float)
        return np.concatenate([u, self.pressure(u)[..., None]], axis=-1)

    def from_primitive(self, w):
        w = np.asarray(w, dtype=float)
        return np.array(w[..., :3], dtype=float)


def polytropic_energy(rho, kappa, gamma):
    """Specific internal energy with ``rho^2 e' = kappa rho^gamma`` and ``e(0) = 0``."""
    return kappa * rho ** (gamma - 1.0) / (gamma - 1.0)


def polytropic_enthalpy(rho, kappa, gamma):
    return kappa * gamma * rho ** (gamma - 1.0) / (gamma - 1.0)


@dataclass(frozen=True, repr=False)
class Spray(HyperbolicSystem):
    """One-pressure two-velocity spray model.

    State ``(alpha rho_g, alpha rho_g u_g, (1-alpha) rho_l, (1-alpha) rho_l u_l)``
    with constant liquid density ``rho_l``, gas law ``p = kappa rho_g^gamma``
    and droplet pressure ``theta(alpha) = theta0 (1-alpha)^delta``.
    """

    rho_l: float = 2.0
    delta: float = 1.5
    theta0: float = 0.1
    kappa: float = 1.0
    gamma: float = 1.4

    name = "spray"
    ncomp = 4
    component_names = ("alpha_rho_g", "alpha_rho_g_u_g", "alpha_l_rho_l", "alpha_l_rho_l_u_l")
    primitive_names = ("alpha", "rho_g", "u_g", "u_l")
    conserved_combinations = ((1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0), (0.0, 1.0, 0.0, 1.0))

    def __post_init__(self):
        if not self.rho_l > 0.0:
            raise ConfigurationError("spray requires rho_l > 0", key="rho_l")
        if not 1.0 < self.delta < 2.0:
            raise ConfigurationError("spray requires 1 < delta < 2", key="delta")
        if not self.theta0 >= 0.0:
            raise ConfigurationError("spray requires theta0 >= 0", key="theta0")
        if not (self.kappa > 0.0 and self.gamma > 1.0):
            raise ConfigurationError("spray requires kappa > 0 and gamma > 1", key="gamma")

    def params(self):
        return {
            "rho_l": self.rho_l,
            "delta": self.delta,
            "theta0": self.theta0,
            "kappa": self.kappa,
            "gamma": self.gamma,
        }

    def unpack(self, u):
        u = np.asarray(u, dtype=float)
        alpha_l = u[..., 2] / self.rho_l
        alpha = 1.0 - alpha_l
        rho_g = u[..., 0] / alpha
        u_g = u[..., 1] / u[..., 0]
        u_l = u[..., 3] / u[..., 2]
        return alpha, rho_g, u_g, u_l

    def pressure(self, rho_g):
        return self.kappa * rho_g**self.gamma

    def theta(self, alpha):
        return self.theta0 * (1.0 - alpha) ** self.delta

    def combination_flux(self, u):
        alpha, rho_g, u_g, u_l = self.unpack(u)
        momentum = (
            u[..., 1] * u_g + u[..., 3] * u_l + self.pressure(rho_g) + self.theta(alpha)
        )
        return np.stack([u[..., 1], u[..., 3], momentum], axis=-1)

    def a_product(self, u, w):
        alpha, rho_g, u_g, u_l = self.unpack(u)
        c2 = self.kappa * self.gamma * rho_g ** (self.gamma - 1.0)
        theta_m = self.delta * self.theta(alpha) / u[..., 2]
        grad_p = c2 * (w[..., 0] / alpha + rho_g * w[..., 2] / (alpha * self.rho_l))
        return np.stack(
            [
                w[..., 1],
                -(u_g**2) * w[..., 0] + 2.0 * u_g * w[..., 1] + alpha * grad_p,
                w[..., 3],
                (theta_m - u_l**2) * w[..., 2] + 2.0 * u_l * w[..., 3] + (1.0 - alpha) * grad_p,
            ],
            axis=-1,
        )

    def entropy(self, u):
        alpha, rho_g, u_g, u_l = self.unpack(u)
        e = polytropic_energy(rho_g, self.kappa, self.gamma)
        return (
            u[..., 0] * (0.5 * u_g**2 + e)
            + 0.5 * u[..., 2] * u_l**2
            + self.theta(alpha) / (self.delta - 1.0)
        )

    def entropy_flux(self, u):
        alpha, rho_g, u_g, u_l = self.unpack(u)
        h = polytropic_enthalpy(rho_g, self.kappa, self.gamma)
        p = self.pressure(rho_g)
        return (
            u[..., 0] * (0.5 * u_g**2 + h) * u_g
            + (1.0 - alpha) * (0.5 * self.rho_l * u_l**2 + p) * u_l
            + self.delta / (self.delta - 1.0) * self.theta(alpha) * u_l
        )

    def entropy_variables(self, u):
        alpha, rho_g, u_g, u_l = self.unpack(u)
        h = polytropic_enthalpy(rho_g, self.kappa, self.gamma)
        p = self.pressure(rho_g)
        d_ml = (
            p / self.rho_l
            - 0.5 * u_l**2
            + self.delta * self.theta(alpha) / ((self.delta - 1.0) * u[..., 2])
        )
        return np.stack([h - 0.5 * u_g**2, u_g, d_ml, u_l], axis=-1)

    def is_admissible(self, u):
        u = np.asarray(u, dtype=float)
        ok = super().is_admissible(u)
        with np.errstate(all="ignore"):
            alpha = 1.0 - u[..., 2] / self.rho_l
            return ok & (u[..., 0] > 0.0) & (alpha > 0.0) & (alpha < 1.0)

    def to_primitive(self, u):
        return np.stack(self.unpack(u), axis=-1)

    def from_primitive(self, w):
        w = np.asarray(w, dtype=float)
        alpha, rho_g, u_g, u_l = (w[..., i] for i in range(4))
        m_g = alpha * rho_g
        m_l = (1.0 - alpha) * self.rho_l
        return np.stack([m_g, m_g * u_g, m_l, m_l * u_l], axis=-1)


@dataclass(frozen=True, repr=False)
class BaerNunziato(HyperbolicSystem):
    """Isentropic two-pressure two-velocity model with ``p_i = kappa rho_i^gamma_i``.

    Conservative layout ``(alpha1, alpha1 rho1, alpha1 rho1 u1, alpha2 rho2,
    alpha2 rho2 u2)``; ``alpha2 = 1 - alpha1`` is never stored. Interface
    velocity and pressure are ``u2`` and ``p1``.
    """

    kappa: float = 1.0
    gamma1: float = 3.0
    gamma2: float = 1.5

    name = "baer_nunziato"
    ncomp = 5
    component_names = ("alpha1", "alpha1_rho1", "alpha1_rho1_u1", "alpha2_rho2", "alpha2_rho2_u2")
    primitive_names = ("alpha1", "rho1", "u1", "rho2", "u2", "p1", "p2")
    # both partial densities, and the mixture momentum
    conserved_combinations = (
        (0.0, 1.0, 0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0, 0.0, 1.0),
    )

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ConfigurationError("baer_nunziato requires kappa > 0", key="kappa")
        if not (self.gamma1 > 1.0 and self.gamma2 > 1.0):
            raise ConfigurationError("baer_nunziato requires gamma_i > 1", key="gamma")

    def params(self):
        return {"kappa": self.kappa, "gamma1": self.gamma1, "gamma2": self.gamma2}

    def unpack(self, u):
        """Primitive fields ``(alpha1, rho1, u1, alpha2, rho2, u2)``."""
        u = np.asarray(u, dtype=float)
        a1 = u[..., 0]
        a2 = 1.0 - a1
        rho1 = u[..., 1] / a1
        rho2 = u[..., 3] / a2
        v1 = u[..., 2] / u[..., 1]
        v2 = u[..., 4] / u[..., 3]
        return a1, rho1, v1, a2, rho2, v2

    def pressure(self, rho, phase: int):
        g = self.gamma1 if phase == 1 else self.gamma2
        return self.kappa * rho**g

    def sound_speed2(self, rho, phase: int):
        g = self.gamma1 if phase == 1 else self.gamma2
        return self.kappa * g * rho ** (g - 1.0)

    def energy(self, rho, phase: int):
        g = self.gamma1 if phase == 1 else self.gamma2
        return polytropic_energy(rho, self.kappa, g)

    def enthalpy(self, rho, phase: int):
        g = self.gamma1 if phase == 1 else self.gamma2
        return polytropic_enthalpy(rho, self.kappa, g)

    def physical_flux(self, u):
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        p1 = self.pressure(r1, 1)
        p2 = self.pressure(r2, 2)
        return np.stack(
            [
                np.zeros_like(a1),
                u[..., 2],
                a1 * (r1 * v1**2 + p1),
                u[..., 4],
                a2 * (r2 * v2**2 + p2),
            ],
            axis=-1,
        )

    def combination_flux(self, u):
        f = self.physical_flux(u)
        return np.stack([f[..., 1], f[..., 3], f[..., 2] + f[..., 4]], axis=-1)

    def a_product(self, u, w):
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        c1 = self.sound_speed2(r1, 1)
        c2 = self.sound_speed2(r2, 2)
        p1 = self.pressure(r1, 1)
        p2 = self.pressure(r2, 2)
        w0 = w[..., 0]
        return np.stack(
            [
                v2 * w0,
                w[..., 2],
                -r1 * c1 * w0 + (c1 - v1**2) * w[..., 1] + 2.0 * v1 * w[..., 2],
                w[..., 4],
                (p1 - p2 + r2 * c2) * w0 + (c2 - v2**2) * w[..., 3] + 2.0 * v2 * w[..., 4],
            ],
            axis=-1,
        )

    def entropy(self, u):
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        return u[..., 1] * (0.5 * v1**2 + self.energy(r1, 1)) + u[..., 3] * (
            0.5 * v2**2 + self.energy(r2, 2)
        )

    def entropy_flux(self, u):
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        return u[..., 1] * (0.5 * v1**2 + self.enthalpy(r1, 1)) * v1 + u[..., 3] * (
            0.5 * v2**2 + self.enthalpy(r2, 2)
        ) * v2

    def entropy_variables(self, u):
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        return np.stack(
            [
                self.pressure(r2, 2) - self.pressure(r1, 1),
                self.enthalpy(r1, 1) - 0.5 * v1**2,
                v1,
                self.enthalpy(r2, 2) - 0.5 * v2**2,
                v2,
            ],
            axis=-1,
        )

    def entropy_pair(self, u):
        self.check_admissible(u)
        return self.entropy(u), self.entropy_flux(u), self.entropy_variables(u)

    def is_admissible(self, u):
        u = np.asarray(u, dtype=float)
        ok = super().is_admissible(u)
        a1 = u[..., 0]
        return ok & (a1 > 0.0) & (a1 < 1.0) & (u[..., 1] > 0.0) & (u[..., 3] > 0.0)

    def signal_speed(self, u):
        """``max_i |u_i| + c_i``, the per-state contribution to ``beta_s``."""
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        s1 = np.abs(v1) + np.sqrt(self.sound_speed2(r1, 1))
        s2 = np.abs(v2) + np.sqrt(self.sound_speed2(r2, 2))
        return np.maximum(s1, s2)

    max_wave_speed = signal_speed

    def to_primitive(self, u):
        a1, r1, v1, a2, r2, v2 = self.unpack(u)
        return np.stack(
            [a1, r1, v1, r2, v2, self.pressure(r1, 1), self.pressure(r2, 2)], axis=-1
        )

    def from_primitive(self, w):
        """Accepts ``(alpha1, rho1, u1, rho2, u2)`` with optional trailing pressures."""
        w = np.asarray(w, dtype=float)
        a1, r1, v1, r2, v2 = (w[..., i] for i in range(5))
        a2 = 1.0 - a1
        return np.stack([a1, a1 * r1, a1 * r1 * v1, a2 * r2, a2 * r2 * v2], axis=-1)


_REGISTRY: dict[str, type[HyperbolicSystem]] = {
    "burgers": Burgers,
    "coupled_burgers": CoupledBurgers,
    "ld2x2": LinearlyDegenerate2x2,
    "euler_lagrange": EulerLagrange,
    "spray": Spray,
    "baer_nunziato": BaerNunziato,
}

SYSTEM_NAMES = tuple(_REGISTRY)


def make_system(name: str, params: dict[str, Any] | None = None) -> HyperbolicSystem:
    """Instantiate one of the model systems by name."""
    params = dict(params or {})
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown system {name!r}", key="system") from None

    if cls in (Burgers, CoupledBurgers, LinearlyDegenerate2x2):
        if params:
            raise ConfigurationError(
                f"system {name!r} takes no parameters, got {sorted(params)}", key="system"
            )
        return cls()

    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ConfigurationError(f"invalid parameters for {name!r}: {exc}", key="system") from None
