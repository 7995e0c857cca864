"""Named run configurations for the reference experiments."""

from __future__ import annotations

from esdgsem.errors import ConfigurationError
from esdgsem.solver import RunConfig

# Riemann data in primitive variables (alpha1, rho1, u1, rho2, u2)
RP1_LEFT = [0.1, 0.85, 0.4609513139, 0.96, 0.0839315299]
RP1_RIGHT = [0.6, 1.2520240113, 0.7170741165, 0.2505659851, -0.3764790609]
RP2_LEFT = [0.999, 1.8, 0.747051068928543, 3.979765198025580, 0.6]
RP2_RIGHT = [0.4, 2.081142099494683, 0.267119045902047, 5.173694757433254, 1.069067604724276]
RP3_LEFT = [0.29, 2.0059425069187893, 65.0, 2.0059425069187893, 1.0]
RP3_RIGHT = [0.3, 2.0059425069187893, 50.0, 2.0059425069187893, 1.0]

# BN interface dissipation used by the Riemann presets
BN_EPS_V = 0.5


def _bn(name, params, left, right, t_final, domain, **extra) -> RunConfig:
    return RunConfig(
        name=name,
        system="baer_nunziato",
        system_params=dict(params),
        degree=3,
        n_cells=100,
        domain=domain,
        t_final=t_final,
        limiter=True,
        eps_v=BN_EPS_V,
        initial={"kind": "riemann", "left": list(left), "right": list(right), "x0": 0.0},
        **extra,
    )


def _rp0() -> RunConfig:
    return RunConfig(
        name="rp0",
        system="ld2x2",
        degree=1,
        n_cells=250,
        domain=(-1.0, 1.0),
        t_final=0.15,
        eps_v=1.0,
        initial={"kind": "riemann", "left": [3.0, 0.5], "right": [0.75, 1.0], "x0": 0.0},
    )


def _advection() -> RunConfig:
    # u = p = 1 in both phases; kappa = 1 makes rho_i = 1
    return _bn(
        "bn-advection",
        {"kappa": 1.0, "gamma1": 1.4, "gamma2": 1.2},
        [0.8, 1.0, 1.0, 1.0, 1.0],
        [0.3, 1.0, 1.0, 1.0, 1.0],
        0.1,
        (-0.5, 0.5),
    )


PRESETS = {
    "rp0": _rp0,
    "rp1": lambda: _bn(
        "rp1", {"kappa": 1.0, "gamma1": 3.0, "gamma2": 1.5}, RP1_LEFT, RP1_RIGHT, 0.14, (-0.5, 0.5)
    ),
    "rp2": lambda: _bn(
        "rp2", {"kappa": 1.0, "gamma1": 3.0, "gamma2": 1.5}, RP2_LEFT, RP2_RIGHT, 0.1, (-0.5, 0.5)
    ),
    "rp3": lambda: _bn(
        "rp3", {"kappa": 1.0e5, "gamma1": 1.4, "gamma2": 1.4}, RP3_LEFT, RP3_RIGHT, 0.08, (-50.0, 50.0)
    ),
    "bn-advection": _advection,
}

PRESET_NAMES = tuple(PRESETS)


def preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}", key="preset"
        ) from None
