"""Semi-discrete DGSEM residual and SSP-RK3 time stepping.

The degrees of freedom are stored as an array ``U[j, k, m]``: cell ``j``,
Gauss-Lobatto node ``k``, component ``m``. The semi-discrete scheme reads

    (w_k h / 2) dU_j^k/dt + R_j^k = 0,

    R_j^k = w_k sum_l D~(U_j^k, U_j^l) D_kl
            + delta_kp D-(U_j^p, U_{j+1}^0) + delta_k0 D+(U_{j-1}^p, U_j^0)

in entropy-stable mode, while the original DGSEM uses the volume term
``w_k A(U_j^k) sum_l D_kl U_j^l``.
"""

from __future__ import annotations

import copy
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from esdgsem.errors import (
    AdmissibilityError,
    ConfigurationError,
    ContractViolation,
    ESDGSEMError,
    LimiterFailure,
)
from esdgsem.fluxes import FluctuationFluxPair, VolumeKernel, interface_pair, volume_kernel
from esdgsem.limiter import PositivityLimiter, make_limiter
from esdgsem.sbp import SbpOperator, build_sbp
from esdgsem.systems import BaerNunziato, HyperbolicSystem, LinearlyDegenerate2x2, make_system

ENTROPY_STABLE_MODE = "entropy_stable_correction"
ORIGINAL_MODE = "original_dgsem"
MODES = (ENTROPY_STABLE_MODE, ORIGINAL_MODE)
BOUNDARIES = ("transmissive", "periodic")

# SSP-RK3 weights of each stage's forward-Euler increment in the final update
RK3_STAGE_WEIGHTS = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)
MAX_STEP_RETRIES = 30


class StageRejected(ESDGSEMError):
    """A Runge-Kutta stage violates the time-step rule evaluated at its own input."""

    def __init__(self, stage: int, dt_max: float):
        self.stage = stage
        self.dt_max = dt_max
        super().__init__(f"stage {stage} needs dt <= {dt_max:.6g}")


@dataclass(frozen=True)
class Mesh:
    n_cells: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigurationError("the mesh needs at least 2 cells", key="n_cells")
        if not self.x_max > self.x_min:
            raise ConfigurationError("domain must satisfy x_min < x_max", key="domain")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def interfaces(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.h * (np.arange(self.n_cells) + 0.5)

    def node_coordinates(self, op: SbpOperator) -> np.ndarray:
        return self.centers[:, None] + 0.5 * self.h * op.nodes[None, :]


@dataclass
class RunConfig:
    """Everything needed to reproduce a run.

    ``initial`` describes the initial data:

    * ``{"kind": "riemann", "left": [...], "right": [...], "x0": 0.0}`` with
      states in primitive variables of the system;
    * ``{"kind": "sine", "mean": [...], "amplitude": [...], "phase": [...],
      "wavenumber": 1}`` giving ``mean + amplitude sin(2 pi k x / L + phase)``
      per primitive component.
    """

    system: str = "baer_nunziato"
    system_params: dict[str, Any] = field(default_factory=dict)
    degree: int = 3
    n_cells: int = 100
    domain: tuple[float, float] = (-0.5, 0.5)
    t_final: float = 0.1
    safety: float = 0.9
    mode: str = ENTROPY_STABLE_MODE
    interface_flux: str = "es"
    eps_v: float = 1.0
    limiter: bool = False
    limiter_eps: float = 1.0e-8
    boundary: str = "transmissive"
    initial: dict[str, Any] = field(default_factory=dict)
    output_times: tuple[float, ...] = ()
    seed: int = 0
    max_steps: int = 10_000_000
    name: str = "run"

    def validate(self) -> None:
        if not self.t_final > 0.0:
            raise ConfigurationError("t_final must be positive", key="t_final")
        if not 0.0 < self.safety <= 1.0:
            raise ConfigurationError("safety must lie in (0, 1]", key="safety")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}", key="mode")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(
                f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}", key="boundary"
            )
        if self.eps_v < 0.0:
            raise ConfigurationError("eps_v must be nonnegative", key="eps_v")
        if len(self.domain) != 2:
            raise ConfigurationError("domain needs two endpoints", key="domain")
        if self.initial.get("kind") not in ("riemann", "sine"):
            raise ConfigurationError("initial.kind must be 'riemann' or 'sine'", key="initial")
        if any(not 0.0 <= t <= self.t_final for t in self.output_times):
            raise ConfigurationError("output times must lie in [0, t_final]", key="output_times")
        build_sbp(self.degree)
        Mesh(self.n_cells, *self.domain)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["domain"] = list(self.domain)
        d["output_times"] = list(self.output_times)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown configuration keys {unknown}", key=unknown[0])
        data = copy.deepcopy(dict(data))
        if "domain" in data:
            data["domain"] = tuple(float(x) for x in data["domain"])
        if "output_times" in data:
            data["output_times"] = tuple(float(x) for x in data["output_times"])
        return cls(**data)

    def replace(self, **changes) -> RunConfig:
        d = self.to_dict()
        d.update(changes)
        return RunConfig.from_dict(d)


@dataclass
class InterfaceData:
    """States and fluctuations at the ``N+1`` interfaces, left boundary first."""

    left: np.ndarray
    right: np.ndarray
    d_minus: np.ndarray
    d_plus: np.ndarray
    beta: np.ndarray | None


@dataclass
class StageRecord:
    """One forward-Euler stage ``U_out = U_in + dt L(U_in)`` before limiting."""

    stage: int
    U_in: np.ndarray
    U_out: np.ndarray
    interfaces: InterfaceData
    theta: np.ndarray | None
    dt: float = 0.0


@dataclass
class StepRecord:
    t: float
    dt: float
    # time integral over the step of the boundary fluxes of every conserved
    # combination, (left, right)
    boundary_flux: np.ndarray
    limited_cells: int
    min_theta: float
    retries: int = 0


def cell_average(op: SbpOperator, U: np.ndarray, j: int | None = None) -> np.ndarray:
    """``<u>_j = 1/2 sum_k w_k U_j^k``; all cells when ``j`` is None."""
    U = np.asarray(U, dtype=float)
    if j is None:
        return 0.5 * np.einsum("k,jkm->jm", op.weights, U)
    if not 0 <= j < U.shape[0]:
        raise ContractViolation(f"cell index {j} out of range")
    return 0.5 * op.weights @ U[j]


class DGSEMSolver:
    """Residual assembly and time stepping for one system on one mesh."""

    def __init__(
        self,
        system: HyperbolicSystem,
        op: SbpOperator,
        mesh: Mesh,
        *,
        mode: str = ENTROPY_STABLE_MODE,
        pair: FluctuationFluxPair | None = None,
        kernel: VolumeKernel | None = None,
        boundary: str = "transmissive",
        ghost_left: np.ndarray | None = None,
        ghost_right: np.ndarray | None = None,
        limiter: PositivityLimiter | None = None,
        eps_v: float = 1.0,
        check_admissibility: bool = True,
        stage_cfl: bool = True,
    ):
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}", key="mode")
        if boundary not in BOUNDARIES:
            raise ConfigurationError(f"unknown boundary {boundary!r}", key="boundary")
        if boundary == "transmissive" and (ghost_left is None or ghost_right is None):
            raise ContractViolation("transmissive boundaries need both ghost states")
        self.system = system
        self.op = op
        self.mesh = mesh
        self.mode = mode
        self.pair = pair if pair is not None else interface_pair(system, "es", eps_v)
        self.kernel = kernel if kernel is not None else volume_kernel(system)
        self.boundary = boundary
        self.ghost_left = None if ghost_left is None else np.asarray(ghost_left, dtype=float)
        self.ghost_right = None if ghost_right is None else np.asarray(ghost_right, dtype=float)
        self.limiter = limiter
        self.eps_v = eps_v
        self.check_admissibility = check_admissibility
        self.stage_cfl = stage_cfl
        self.combinations = np.array(system.conserved_combinations, dtype=float).reshape(
            -1, system.ncomp
        )

    # -- geometry ------------------------------------------------------------

    def extend(self, U: np.ndarray) -> np.ndarray:
        """Pad with one ghost cell per side (constant states or periodic copies)."""
        if self.boundary == "periodic":
            return np.concatenate([U[-1:], U, U[:1]], axis=0)
        n = U.shape[1]
        gl = np.broadcast_to(self.ghost_left, (1, n, U.shape[2]))
        gr = np.broadcast_to(self.ghost_right, (1, n, U.shape[2]))
        return np.concatenate([gl, U, gr], axis=0)

    def check(self, U: np.ndarray) -> None:
        ok = self.system.is_admissible(U)
        if not np.all(ok):
            j, k = np.argwhere(~ok)[0]
            raise AdmissibilityError("inadmissible degree of freedom", location=(int(j), int(k)))

    # -- beta_s --------------------------------------------------------------

    def cell_beta(self, U_ext: np.ndarray) -> np.ndarray:
        """``beta_s`` per padded cell: max signal speed over the cell and adjacent traces."""
        s = self.system.max_wave_speed(U_ext)
        own = np.max(s, axis=1)
        left = np.concatenate([[0.0], s[:-1, -1]])
        right = np.concatenate([s[1:, 0], [0.0]])
        return np.maximum(own, np.maximum(left, right))

    def interface_beta(self, U_ext: np.ndarray) -> np.ndarray:
        b = self.cell_beta(U_ext)
        return np.maximum(b[:-1], b[1:])

    # -- residual ------------------------------------------------------------

    def volume_term(self, U: np.ndarray) -> np.ndarray:
        w, D = self.op.weights, self.op.diff_matrix
        if self.mode == ENTROPY_STABLE_MODE:
            a = U[:, :, None, :]
            b = U[:, None, :, :]
            a, b = np.broadcast_arrays(a, b)
            dt = self.kernel.d_tilde(a, b)
            return w[None, :, None] * np.einsum("jklm,kl->jkm", dt, D)
        DU = np.einsum("kl,jlm->jkm", D, U)
        return w[None, :, None] * self.system.a_product(U, DU)

    def interface_terms(self, U: np.ndarray) -> InterfaceData:
        ext = self.extend(U)
        left = ext[:-1, -1]
        right = ext[1:, 0]
        beta = self.interface_beta(ext) if self.pair.requires_beta else None
        dm, dp = self.pair(left, right, beta)
        return InterfaceData(left, right, dm, dp, beta)

    def residual(self, U: np.ndarray) -> tuple[np.ndarray, InterfaceData]:
        U = np.asarray(U, dtype=float)
        if self.check_admissibility:
            self.check(U)
        R = self.volume_term(U)
        faces = self.interface_terms(U)
        R[:, -1] += faces.d_minus[1:]
        R[:, 0] += faces.d_plus[:-1]
        return R, faces

    def rate(self, R: np.ndarray) -> np.ndarray:
        """``dU/dt = -2 R / (w_k h)``."""
        return -2.0 * R / (self.op.weights[None, :, None] * self.mesh.h)

    def boundary_fluxes(self, faces: InterfaceData) -> np.ndarray:
        """Numerical fluxes of the conserved combinations at both domain ends.

        For a conservative row, ``f(u-) + D-(u-, u+)`` is the interface flux;
        the result has shape ``(2, n_combinations)``.
        """
        if self.combinations.size == 0:
            return np.zeros((2, 0))
        ends = [0, -1]
        flux = self.system.combination_flux(faces.left[ends]) + faces.d_minus[ends] @ self.combinations.T
        return flux

    # -- time step -----------------------------------------------------------

    def bn_cfl_terms(self, U: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """Per node: ``<u2, d_x phi_k> + delta_kp (b_r - u2^p)/2 + delta_k0 (b_l + u2^0)/2``.

        ``beta`` holds interface values, so the left and right faces of cell
        ``j`` use ``beta[j]`` and ``beta[j+1]``. The time step keeps
        ``lambda max_k (1/w_k) term_k < 1/2``.
        """
        _, _, _, _, _, u2 = self.system.unpack(U)
        w, D = self.op.weights, self.op.diff_matrix
        terms = np.einsum("i,ji,ik->jk", w, u2, D)
        terms[:, -1] += 0.5 * (beta[1:] - u2[:, -1])
        terms[:, 0] += 0.5 * (beta[:-1] + u2[:, 0])
        return terms

    def max_lambda(self, U: np.ndarray) -> float:
        """Largest ``lambda = dt/h`` allowed by the system's stability rule."""
        p = self.op.degree
        if isinstance(self.system, BaerNunziato):
            beta = self.interface_beta(self.extend(U))
            bound = np.max(self.bn_cfl_terms(U, beta) / self.op.weights[None, :])
            if not np.isfinite(bound):
                raise AdmissibilityError("non-finite wave speed in the time step rule")
            return 0.5 / bound
        if isinstance(self.system, LinearlyDegenerate2x2):
            speed = max(
                float(np.max(self.system.max_wave_speed(U))),
                2.0 * self.eps_v * self.mesh.h / (2 * p + 1),
            )
            if not np.isfinite(speed):
                raise AdmissibilityError("non-finite wave speed in the time step rule")
            # without the (2p+1) factor of the generic rule the step is
            # unstable for nodal DG with p >= 1
            return 1.0 / (speed * (2 * p + 1)) if speed > 0.0 else np.inf
        speed = float(np.max(self.system.max_wave_speed(self.extend(U))))
        if not np.isfinite(speed):
            raise AdmissibilityError("non-finite wave speed in the time step rule")
        return 1.0 / (speed * (2 * p + 1)) if speed > 0.0 else np.inf

    def compute_dt(self, U: np.ndarray, safety: float = 0.9) -> float:
        return safety * self.max_lambda(U) * self.mesh.h

    # -- time integration ----------------------------------------------------

    def forward_euler(self, U: np.ndarray, dt: float, stage: int, hook=None):
        if stage > 0 and self.stage_cfl:
            # every stage is a forward-Euler step and must satisfy the rule itself
            dt_max = self.max_lambda(U) * self.mesh.h
            if dt > dt_max:
                raise StageRejected(stage, dt_max)
        R, faces = self.residual(U)
        out = U + dt * self.rate(R)
        theta = None
        limited = out
        if self.limiter is not None:
            bounds = self.limiter.bounds(self.extend(U))
            limited, theta = self.limiter.apply(self.system, self.op, out, bounds)
        if hook is not None:
            hook(StageRecord(stage, U, out, faces, theta, dt))
        if self.check_admissibility:
            self.check(limited)
        return limited, faces, theta

    def ssp_rk3_step(
        self, U: np.ndarray, dt: float, hook: Callable[[StageRecord], None] | None = None
    ) -> tuple[np.ndarray, StepRecord]:
        """``u1 = FE(u^n)``, ``u2 = 3/4 u^n + 1/4 FE(u1)``, ``u^{n+1} = 1/3 u^n + 2/3 FE(u2)``.

        ``FE`` is a forward-Euler step followed by the limiter, with bounds
        taken from the stage input. Stage records reach ``hook`` only once
        the whole step has succeeded.
        """
        records: list[StageRecord] = []
        v1, f0, t0 = self.forward_euler(U, dt, 0, records.append)
        w1, f1, t1 = self.forward_euler(v1, dt, 1, records.append)
        v2 = 0.75 * U + 0.25 * w1
        w2, f2, t2 = self.forward_euler(v2, dt, 2, records.append)
        new = U / 3.0 + 2.0 / 3.0 * w2

        flux = sum(
            c * self.boundary_fluxes(f) for c, f in zip(RK3_STAGE_WEIGHTS, (f0, f1, f2))
        )
        thetas = [t for t in (t0, t1, t2) if t is not None]
        limited = int(sum(np.count_nonzero(t < 1.0) for t in thetas))
        min_theta = float(min((t.min() for t in thetas), default=1.0))
        if self.check_admissibility:
            self.check(new)
        if hook is not None:
            for rec in records:
                hook(rec)
        return new, StepRecord(0.0, dt, dt * flux, limited, min_theta)

    def advance(self, U: np.ndarray, dt: float, safety: float = 0.9, hook=None):
        """One SSP-RK3 step, restarted with a smaller ``dt`` when a stage is rejected.

        A later stage whose own input calls for a smaller step, or a limiter
        whose precondition fails, restarts the step from ``U``.
        """
        for attempt in range(MAX_STEP_RETRIES + 1):
            try:
                new, rec = self.ssp_rk3_step(U, dt, hook)
                rec.retries = attempt
                return new, rec
            except StageRejected as exc:
                dt = min(safety * exc.dt_max, 0.5 * dt)
            except LimiterFailure:
                if self.limiter is None or attempt == MAX_STEP_RETRIES:
                    raise
                dt = 0.5 * dt
        raise AdmissibilityError(f"time step rejected {MAX_STEP_RETRIES} times")


def ssp_rk3_step(solver: DGSEMSolver, U, dt, hook=None):
    return solver.ssp_rk3_step(np.asarray(U, dtype=float), dt, hook)


def residual(solver: DGSEMSolver, U) -> np.ndarray:
    return solver.residual(U)[0]


def compute_dt(solver: DGSEMSolver, U, safety: float = 0.9) -> float:
    return solver.compute_dt(np.asarray(U, dtype=float), safety)


# -- set-up from a configuration ---------------------------------------------


def initial_field(config: RunConfig, system: HyperbolicSystem, op: SbpOperator, mesh: Mesh):
    """Nodal interpolation of the initial data; also returns the ghost states."""
    x = mesh.node_coordinates(op)
    init = config.initial
    kind = init.get("kind")
    if kind == "riemann":
        left = np.asarray(system.from_primitive(np.asarray(init["left"], dtype=float)))
        right = np.asarray(system.from_primitive(np.asarray(init["right"], dtype=float)))
        x0 = float(init.get("x0", 0.0))
        if left.shape != (system.ncomp,) or right.shape != (system.ncomp,):
            raise ConfigurationError(
                f"Riemann states need {system.ncomp} conservative components", key="initial"
            )
        # a node exactly at x0 takes the left state
        U = np.where((x <= x0)[..., None], left, right)
        return U, left, right
    if kind == "sine":
        mean = np.asarray(init["mean"], dtype=float)
        amp = np.asarray(init.get("amplitude", np.zeros_like(mean)), dtype=float)
        phase = np.asarray(init.get("phase", np.zeros_like(mean)), dtype=float)
        k = float(init.get("wavenumber", 1.0))
        length = mesh.x_max - mesh.x_min
        arg = 2.0 * np.pi * k * (x[..., None] - mesh.x_min) / length + phase
        prim = mean + amp * np.sin(arg)
        U = np.asarray(system.from_primitive(prim))
        if U.shape[-1] != system.ncomp:
            raise ConfigurationError(
                f"initial data needs {system.ncomp} components", key="initial"
            )
        return U, U[0, 0], U[-1, -1]
    raise ConfigurationError(f"unknown initial data kind {kind!r}", key="initial")


def build_solver(config: RunConfig, check_admissibility: bool = True):
    config.validate()
    system = make_system(config.system, config.system_params)
    op = build_sbp(config.degree)
    mesh = Mesh(config.n_cells, *config.domain)
    U0, gl, gr = initial_field(config, system, op, mesh)
    solver = DGSEMSolver(
        system,
        op,
        mesh,
        mode=config.mode,
        pair=interface_pair(system, config.interface_flux, config.eps_v),
        boundary=config.boundary,
        ghost_left=gl,
        ghost_right=gr,
        limiter=make_limiter(system, config.limiter, config.limiter_eps),
        eps_v=config.eps_v,
        check_admissibility=check_admissibility,
    )
    return solver, U0


@dataclass
class RunResult:
    config: RunConfig
    solver: DGSEMSolver
    t: float
    U: np.ndarray
    steps: list[StepRecord]
    snapshots: list[tuple[float, np.ndarray]]
    error: Exception | None = None


def run(
    config: RunConfig,
    *,
    step_hook: Callable[[DGSEMSolver, float, np.ndarray, StepRecord], None] | None = None,
    stage_hook: Callable[[StageRecord], None] | None = None,
    raise_on_error: bool = True,
) -> RunResult:
    """Integrate from the initial data to ``t_final``.

    The step is shortened to land exactly on ``t_final`` and on every
    requested output time. With ``raise_on_error=False`` an admissibility or
    limiter failure stops the run and is returned with the last valid state.
    """
    solver, U = build_solver(config)
    solver.check(U)
    if step_hook is not None and hasattr(step_hook, "start"):
        step_hook.start(solver, U)
    t = 0.0
    steps: list[StepRecord] = []
    targets = sorted(set(config.output_times) | {config.t_final})
    snapshots: list[tuple[float, np.ndarray]] = []
    if targets and targets[0] == 0.0:
        snapshots.append((0.0, U.copy()))
        targets = targets[1:]
    error = None

    for _ in range(config.max_steps):
        if not targets:
            break
        dt = solver.compute_dt(U, config.safety)
        planned_hit = t + dt >= targets[0] * (1.0 - 1.0e-14)
        if planned_hit:
            dt = targets[0] - t
        try:
            U_new, rec = solver.advance(U, dt, config.safety, stage_hook)
        except ESDGSEMError as exc:
            if raise_on_error:
                raise
            error = exc
            break
        hit = planned_hit and rec.dt == dt
        t = targets[0] if hit else t + rec.dt
        rec.t = t
        steps.append(rec)
        if step_hook is not None:
            step_hook(solver, t, U_new, rec)
        U = U_new
        if hit:
            snapshots.append((t, U.copy()))
            targets = targets[1:]
    else:
        raise ConfigurationError("max_steps reached before t_final", key="max_steps")

    return RunResult(config, solver, t, U, steps, snapshots, error)


def run_riemann_problem(config: RunConfig, **kwargs) -> RunResult:
    if config.initial.get("kind") != "riemann":
        raise ConfigurationError("a Riemann problem needs initial.kind = 'riemann'", key="initial")
    return run(config, **kwargs)
