"""Command-line front end: ``run``, ``audit`` and ``converge``.

Exit codes: 0 success, 2 configuration error, 3 admissibility abort,
4 audit failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from esdgsem import __version__
from esdgsem.diagnostics import (
    ConservationTracker,
    MaxPrincipleTracker,
    convergence_study,
    flux_audit,
    total_entropy,
)
from esdgsem.errors import ConfigurationError, ESDGSEMError
from esdgsem.presets import PRESET_NAMES, preset
from esdgsem.solver import RunConfig, run
from esdgsem.systems import BaerNunziato, make_system

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_AUDIT = 4

INT_KEYS = {"degree", "n_cells", "seed", "max_steps"}
FLOAT_KEYS = {"t_final", "safety", "eps_v", "limiter_eps"}
BOOL_KEYS = {"limiter"}
LIST_KEYS = {"domain", "output_times"}
INITIAL_LIST_KEYS = {"left", "right", "mean", "amplitude", "phase"}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- configuration files -----------------------------------------------------


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key = value`` entry, by section."""
    lines: dict[tuple[str, str], int] = {}
    section = configparser.DEFAULTSECT
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
        elif "=" in line:
            lines[(section, line.split("=", 1)[0].strip())] = n
    return lines


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.replace(",", " ").split()]


def _parse_value(key: str, value: str) -> Any:
    if key in INT_KEYS:
        return int(value)
    if key in FLOAT_KEYS:
        return float(value)
    if key in BOOL_KEYS:
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if key in LIST_KEYS:
        return _floats(value)
    return value.strip()


def parse_ini(text: str) -> RunConfig:
    """Sections ``[run]``, ``[system]`` (EOS parameters) and ``[initial]``.

    ``[run]`` may name a ``preset`` whose settings the file then overrides.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse configuration: {exc}", line=getattr(exc, "lineno", None))
    lines = _key_lines(text)
    unknown = sorted(set(parser.sections()) - {"run", "system", "initial"})
    if unknown:
        raise ConfigurationError(f"unknown section [{unknown[0]}]", key=unknown[0])

    def fail(section, key, message):
        raise ConfigurationError(message, key=f"{section}.{key}", line=lines.get((section, key)))

    data: dict[str, Any] = {}
    base = None
    if parser.has_section("run"):
        for key, value in parser.items("run"):
            if key == "preset":
                base = value.strip()
                continue
            try:
                data[key] = _parse_value(key, value)
            except ValueError as exc:
                fail("run", key, f"invalid value for {key}: {exc}")
    if parser.has_section("system"):
        params = {}
        for key, value in parser.items("system"):
            try:
                params[key] = float(value)
            except ValueError:
                fail("system", key, f"invalid number for {key}: {value!r}")
        data["system_params"] = params
    if parser.has_section("initial"):
        init: dict[str, Any] = {}
        for key, value in parser.items("initial"):
            try:
                if key in INITIAL_LIST_KEYS:
                    init[key] = _floats(value)
                elif key == "kind":
                    init[key] = value.strip()
                else:
                    init[key] = float(value)
            except ValueError:
                fail("initial", key, f"invalid value for {key}: {value!r}")
        data["initial"] = init

    config = preset(base).to_dict() if base is not None else RunConfig().to_dict()
    config.update(data)
    try:
        return RunConfig.from_dict(config)
    except ConfigurationError as exc:
        if exc.key is not None:
            fail("run", exc.key, exc.reason)
        raise


def load_config(source: str) -> RunConfig:
    """A preset name, an INI-style file, or JSON (a config or a run manifest)."""
    if source in PRESET_NAMES:
        return preset(source)
    path = Path(source)
    if not path.is_file():
        raise ConfigurationError(
            f"{source!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a readable file"
        )
    text = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        return RunConfig.from_dict(data)
    return parse_ini(text)


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    changes: dict[str, Any] = {}
    for attr, key in (
        ("p", "degree"),
        ("N", "n_cells"),
        ("tfinal", "t_final"),
        ("mode", "mode"),
        ("eps_v", "eps_v"),
        ("safety", "safety"),
        ("seed", "seed"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            changes[key] = value
    if getattr(args, "limiter", None) is not None:
        changes["limiter"] = args.limiter == "on"
    return config.replace(**changes) if changes else config


# -- output ------------------------------------------------------------------


def write_snapshot(path: Path, solver, U: np.ndarray) -> None:
    system = solver.system
    x = solver.mesh.node_coordinates(solver.op).ravel()
    cons = U.reshape(-1, system.ncomp)
    prim = np.asarray(system.to_primitive(cons))
    prim_names = getattr(system, "primitive_names", ())
    header = ["x", *system.component_names, *(f"prim_{n}" for n in prim_names)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for i in range(x.size):
            writer.writerow([fmt(x[i]), *map(fmt, cons[i]), *map(fmt, prim[i])])


class DiagnosticsWriter:
    """Step hook collecting the time series written to ``diagnostics.csv``."""

    def __init__(self):
        self.conservation = ConservationTracker()
        self.bounds: MaxPrincipleTracker | None = None
        self.rows: list[list[str]] = []
        self.header: list[str] = []

    def start(self, solver, U):
        self.conservation.start(solver, U)
        n = len(self.conservation.totals[0])
        self.header = ["step", "t", "dt", "total_entropy", *(f"conserved_{i}" for i in range(n))]
        if isinstance(solver.system, BaerNunziato):
            self.bounds = MaxPrincipleTracker(eps=solver.limiter.eps if solver.limiter else 0.0)
            self.bounds.start(solver, U)
            self.header += ["alpha1_min", "alpha1_max", "rho_min"]
        self.header += ["limited_cells", "retries", "conservation_residual"]
        self._row(solver, 0, 0.0, 0.0, U, 0, 0, 0.0)

    def __call__(self, solver, t, U, rec):
        self.conservation(solver, t, U, rec)
        if self.bounds is not None:
            self.bounds(solver, t, U, rec)
        res = float(self.conservation.relative[-1].max(initial=0.0))
        self._row(solver, len(self.rows), t, rec.dt, U, rec.limited_cells, rec.retries, res)

    def _row(self, solver, step, t, dt, U, limited, retries, res):
        row = [str(step), fmt(t), fmt(dt), fmt(total_entropy(solver, U))]
        row += [fmt(v) for v in self.conservation.totals[-1]]
        if self.bounds is not None:
            row += [fmt(self.bounds.alpha_min[-1]), fmt(self.bounds.alpha_max[-1]), fmt(self.bounds.rho_min[-1])]
        row += [str(limited), str(retries), fmt(res)]
        self.rows.append(row)

    def write(self, path: Path) -> None:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(self.header)
            writer.writerows(self.rows)


def execute(config: RunConfig, out_dir: Path) -> int:
    """Run ``config`` and write snapshots, diagnostics and the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    diag = DiagnosticsWriter()
    wall = time.perf_counter()
    result = run(config, step_hook=diag, raise_on_error=False)
    wall = time.perf_counter() - wall

    snapshots = list(result.snapshots)
    if result.error is not None:
        snapshots.append((result.t, result.U))
    for i, (_, U) in enumerate(snapshots):
        write_snapshot(out_dir / f"snapshot_{i:04d}.csv", result.solver, U)
    diag.write(out_dir / "diagnostics.csv")

    manifest = {
        "config": config.to_dict(),
        "version": __version__,
        "wall_time": wall,
        "steps": len(result.steps),
        "t": result.t,
        "snapshot_times": [t for t, _ in snapshots],
        "status": "ok" if result.error is None else "admissibility_abort",
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if result.error is not None:
        failure = {"error": type(result.error).__name__, "message": str(result.error), "t": result.t}
        (out_dir / "failure.json").write_text(json.dumps(failure, indent=2) + "\n")
        print(f"run aborted at t={fmt(result.t)}: {result.error}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    print(f"{config.name}: {len(result.steps)} steps to t={fmt(result.t)}, output in {out_dir}")
    return EXIT_OK


# -- commands ----------------------------------------------------------------


def cmd_run(args) -> int:
    config = apply_overrides(load_config(args.config), args)
    config.validate()
    out = Path(args.out_dir) if args.out_dir else Path("output") / config.name
    return execute(config, out)


def cmd_audit(args) -> int:
    system = make_system(args.system)
    audit = flux_audit(system, args.flux, args.samples, args.seed, beta=args.beta, eps_v=args.eps_v)
    sys.stdout.write(audit.report())
    return EXIT_OK if audit.passed else EXIT_AUDIT


def cmd_converge(args) -> int:
    config = apply_overrides(load_config(args.config), args)
    config.validate()
    result = convergence_study(config, args.levels, reference_n=args.reference)
    print("N,l1,l2,linf")
    for n, e in zip(result.n_cells, result.errors):
        print(f"{n},{fmt(e['l1'])},{fmt(e['l2'])},{fmt(e['linf'])}")
    print(
        "order,"
        + ",".join(fmt(result.orders[k]) for k in ("l1", "l2", "linf"))
    )
    return EXIT_OK


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=int, help="polynomial degree")
    p.add_argument("--N", type=int, help="number of cells")
    p.add_argument("--tfinal", type=float, help="final time")
    p.add_argument("--mode", choices=("entropy_stable_correction", "original_dgsem"))
    p.add_argument("--limiter", choices=("on", "off"))
    p.add_argument("--eps-v", dest="eps_v", type=float, help="interface dissipation")
    p.add_argument("--safety", type=float, help="time step safety factor")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esdgsem", description="Entropy stable DGSEM for nonconservative hyperbolic systems"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a preset or configuration file")
    p.add_argument("config", help=f"preset ({', '.join(PRESET_NAMES)}) or config file")
    _add_overrides(p)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="check flux identities on random state pairs")
    p.add_argument("system")
    p.add_argument("flux", help="ec or es")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, help="fixed beta_s for pairs that need one")
    p.add_argument("--eps-v", dest="eps_v", type=float, default=1.0)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("converge", help="observed orders against a fine-grid reference")
    p.add_argument("config")
    p.add_argument("--levels", type=int, nargs="+", required=True)
    p.add_argument("--reference", type=int, help="reference cell count (default 8x finest)")
    _add_overrides(p)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ESDGSEMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY


if __name__ == "__main__":
    sys.exit(main())
