"""Batch command-line front end.

    python -m nonparaxial <command> [--config FILE] [--key value ...] --out DIR

Exit codes: 0 success, 2 configuration error, 3 numerical precondition
error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import functools
import math
import subprocess
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, _accel, analysis, dispersion, kernel, model, propagate
from .config import COMMANDS, SCHEMA, ConfigError, RunConfig, load
from .errors import NonParaxialError
from .io import SCHEMA_VERSION, write_csv, write_field_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


@dataclass(frozen=True)
class Issue:
    module: str
    precondition: str
    message: str
    severity: str = "error"

    def as_dict(self) -> dict:
        return {"module": self.module, "precondition": self.precondition, "message": self.message, "severity": self.severity}


class PreconditionFailure(NonParaxialError):
    def __init__(self, issues: list[Issue]):
        self.issues = issues
        super().__init__("; ".join(f"[{i.module}] {i.message}" for i in issues if i.severity == "error"))


@functools.lru_cache(maxsize=1)
def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# ---------------------------------------------------------------------------
# config -> domain objects
# ---------------------------------------------------------------------------


def params_from(cfg: RunConfig, epsilon: float | None = None) -> model.PropagationParams:
    k0 = cfg["k0"]
    if cfg["zd"] is not None:
        return model.PropagationParams.spatial(k0, cfg["zd"])
    if None not in (cfg["beta2"], cfg["beta4"], cfg["t0"]):
        return model.PropagationParams.temporal(cfg["beta2"], cfg["beta4"], cfg["t0"], k0)
    return model.PropagationParams.direct(cfg["epsilon"][0] if epsilon is None else epsilon, k0)


def grid_from(cfg: RunConfig) -> model.GridSpec:
    return model.GridSpec(cfg["grid.n"], cfg["grid.x_min"], cfg["grid.x_max"])


def initial_field(cfg: RunConfig, grid: model.GridSpec) -> model.ComplexField:
    return model.gaussian_packet(grid, cfg["init.sigma"], cfg["init.x0"], cfg["init.k_carrier"])


def mode_from(cfg: RunConfig, epsilon: float) -> analysis.ModeSolution:
    k = cfg["mode.k"]
    a, b, c, d = cfg["mode.a"], cfg["mode.b"], cfg["mode.c"], cfg["mode.d"]
    kind = cfg["mode.constraint"]
    if kind == "incoming":
        return analysis.ModeSolution.incoming(b, d, k, epsilon)
    if kind == "outgoing":
        return analysis.ModeSolution.outgoing(a, c, k, epsilon)
    if kind == "standing":
        return analysis.ModeSolution.standing(a, k, epsilon)
    return analysis.ModeSolution.constrained(a, b, k, epsilon)


def scan_grid(cfg: RunConfig) -> np.ndarray:
    lo, hi, step = cfg["scan.eps_min"], cfg["scan.eps_max"], cfg["scan.eps_step"]
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate(cfg: RunConfig) -> list[Issue]:
    """Dry-run check of every precondition the command will rely on."""
    issues: list[Issue] = []
    # the validate command checks a propagate run
    cmd = "propagate" if cfg.command == "validate" else cfg.command

    def err(module, pre, msg, severity="error"):
        issues.append(Issue(module, pre, msg, severity))

    try:
        params = params_from(cfg)
    except NonParaxialError as exc:
        err("model", "parameter conversion", str(exc))
        return issues
    eps_values = [params.epsilon] if cmd != "compare" else list(cfg["epsilon"])
    strict = cmd in ("bounds", "instanton", "modes") or (cmd == "berry" and cfg["berry.direction"] == "x")
    for eps in eps_values:
        if strict and not eps > 0:
            err("dispersion", "epsilon > 0", f"{cmd} needs epsilon > 0 (got {eps})")
        elif not eps >= 0:
            err("model", "epsilon >= 0", f"propagation and bounds need epsilon >= 0 (got {eps})")
    if cmd == "compare" and any(e <= 0 for e in eps_values):
        if not any(i.precondition.startswith("epsilon") for i in issues):
            err("propagate", "epsilon > 0", "compare fits a log-log slope and needs epsilon > 0")
    if not cfg["z"] > 0 and cmd in ("propagate", "compare", "scan-negativity"):
        err("propagate", "z > 0", f"propagation distance must be positive (got {cfg['z']})")

    needs_field = cmd in ("propagate", "compare", "scan-negativity", "modes")
    grid = None
    if needs_field:
        try:
            grid = grid_from(cfg)
        except NonParaxialError as exc:
            err("model", "grid", str(exc))
    psi = None
    if grid is not None and cmd in ("propagate", "compare", "scan-negativity"):
        sigma = cfg["init.sigma"]
        if cmd == "scan-negativity":
            psi_args = (grid, sigma)
        else:
            psi_args = (grid, sigma, cfg["init.x0"], cfg["init.k_carrier"])
        if not sigma >= 3 * grid.dx:
            err("model", "sigma >= 3 dx", f"sigma={sigma:.6g} under-resolved on dx={grid.dx:.6g}")
        elif not abs(cfg["init.k_carrier"]) < grid.k_nyq:
            err("model", "|k_carrier| < k_nyq", f"carrier {cfg['init.k_carrier']} above Nyquist {grid.k_nyq:.6g}")
        else:
            psi = model.gaussian_packet(*psi_args)

    method = cfg["method"]
    if psi is not None:
        spec = psi.to_spectral()
        uses_spectral = cmd == "compare" or (cmd == "propagate" and method == "spectral")
        if uses_spectral:
            occ = spec.power_beyond(propagate.ALIAS_FRACTION * grid.k_nyq)
            if occ >= propagate.ALIAS_TOL:
                err("propagate", "spectral power below 0.9 k_nyq", f"{occ:.3g} of the power is near Nyquist")
        if cmd == "propagate" and method == "fphe":
            occ = spec.power_beyond(np.nextafter(cfg["k0"], 0.0))
            if occ >= propagate.EVANESCENT_TOL:
                err("propagate", "|kx| < k0", f"{occ:.3g} of the power is in the evanescent band |k| >= k0")
        uses_kernel = cmd in ("compare", "scan-negativity") or (
            cmd == "propagate" and method in ("kernel", "density")
        )
        if uses_kernel:
            leak = propagate.edge_leak(psi.values)
            if leak >= propagate.EDGE_TOL:
                err("propagate", "no edge leak", f"initial field reaches the domain edge ({leak:.3g} of peak)")
            if cfg["z"] > 0:
                for eps in eps_values:
                    if eps >= 0:
                        fig = kernel.validity_figure(model.rms(psi), cfg["z"], eps)
                        if fig > kernel.VALIDITY_WARN:
                            err(
                                "kernel",
                                "validity figure <= 0.1",
                                f"first-order kernel validity figure {fig:.3g} at z={cfg['z']}, eps={eps}",
                                "warning",
                            )

    if cmd == "kernel":
        dts = np.asarray(cfg["kernel.dt"])
        if np.any(dts <= 0):
            err("kernel", "dt > 0", "kernel intervals must be positive")
        elif params.epsilon >= 0:
            dx, dt = np.meshgrid(cfg["kernel.dx"], dts, indexing="ij")
            fig = np.max(kernel.validity_figure(dx, dt, params.epsilon))
            if fig > kernel.VALIDITY_WARN and cfg["kernel.method"] == "closed_form":
                err("kernel", "validity figure <= 0.1", f"largest validity figure in the table is {fig:.3g}", "warning")
    if cmd == "scan-negativity":
        if not (cfg["scan.eps_min"] > 0 and cfg["scan.eps_max"] >= cfg["scan.eps_min"] and cfg["scan.eps_step"] > 0):
            err("propagate", "eps grid positive and ascending", "scan needs 0 < eps_min <= eps_max and eps_step > 0")
    if cmd == "berry":
        if cfg["berry.direction"] == "x" and not cfg["berry.L"] > 0:
            err("analysis", "L > 0", "loop radius must be positive")
        if cfg["berry.direction"] == "z":
            if not cfg["berry.T"] > 0:
                err("analysis", "T > 0", "z-loop period must be positive")
            if cfg["berry.n"] < 0:
                err("analysis", "n >= 0", "mode number must be non-negative")
    if cmd == "modes" and grid is not None and params.epsilon > 0:
        try:
            mode = mode_from(cfg, params.epsilon)
        except NonParaxialError as exc:
            err("analysis", "coefficient relations", str(exc))
        else:
            reach = 2.0 / math.sqrt(params.epsilon) * max(abs(grid.x_min), abs(grid.x_max))
            if (mode.C != 0 or mode.D != 0) and reach > math.log(analysis.OVERFLOW_LIMIT):
                err("analysis", "|exp(2x/sqrt(eps))| <= 1e8", "evanescent terms overflow the guard on this grid")
    return issues


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _meta(cfg: RunConfig, **extra) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "build": build_id(),
        "backend": _accel.backend(),
        "config": cfg.as_dict(),
        **extra,
    }


def cmd_propagate(cfg: RunConfig) -> list[Path]:
    params = params_from(cfg)
    grid = grid_from(cfg)
    psi = initial_field(cfg, grid)
    z, method = cfg["z"], cfg["method"]
    out = cfg.out
    if method == "density":
        prof = propagate.first_order_density(psi, z, params.epsilon, core_rms=cfg["scan.core_rms"])
        write_csv(out / "density.csv", ["x", "density"], [grid.x, prof.values])
        write_json(out / "density.json", _meta(cfg, params=params.as_dict(), method=method, diagnostics=prof.diagnostics))
        return [out / "density.csv", out / "density.json"]
    if method == "spectral":
        res = propagate.spectral_step(psi, z, params)
    elif method == "fphe":
        res = propagate.fphe_step(psi, z, params.k0, remove_carrier=cfg["fphe.remove_carrier"])
    else:
        res = propagate.kernel_convolve(psi, z, params.epsilon)
    if method in ("spectral", "fphe") and res.diagnostics["norm_drift"] > cfg["tolerance.norm"]:
        raise NonParaxialError(f"norm drift {res.diagnostics['norm_drift']:.3g} above tolerance")
    write_field_csv(out / "field.csv", res.field)
    write_json(
        out / "field.json",
        _meta(cfg, params=params.as_dict(), grid=grid.as_dict(), method=res.method, z=z, diagnostics=res.diagnostics),
    )
    return [out / "field.csv", out / "field.json"]


def cmd_kernel(cfg: RunConfig) -> list[Path]:
    params = params_from(cfg)
    eps = params.epsilon
    model.require_nonnegative_epsilon(eps)
    dx, dt = np.meshgrid(np.asarray(cfg["kernel.dx"]), np.asarray(cfg["kernel.dt"]), indexing="ij")
    dx, dt = dx.ravel(), dt.ravel()
    method = cfg["kernel.method"]
    if method == "fresnel":
        vals = kernel.fresnel_array(dx, dt)
    elif method == "closed_form":
        vals = kernel.closed_form_array(dx, dt, eps)
    else:
        vals = np.array(
            [
                kernel.kernel_quadrature(
                    kernel.KernelQuery(0.0, float(a), float(t), eps, kernel.KernelMethod.QUADRATURE),
                    cfg["kernel.band"],
                    cfg["kernel.n_quad"],
                ).value
                for a, t in zip(dx, dt)
            ]
        )
    validity = kernel.validity_figure(dx, dt, eps)
    out = cfg.out
    write_csv(out / "kernel.csv", ["dx", "dt", "re", "im", "abs2", "validity"], [dx, dt, vals.real, vals.imag, np.abs(vals) ** 2, validity])
    write_json(out / "kernel.json", _meta(cfg, params=params.as_dict(), method=method, max_validity=float(np.max(validity))))
    return [out / "kernel.csv", out / "kernel.json"]


def cmd_bounds(cfg: RunConfig) -> list[Path]:
    params = params_from(cfg)
    eps = params.epsilon
    pm = dispersion.p_max(eps)
    report = {
        "epsilon": eps,
        "p_max": pm,
        "positivity_radius_per_z": kernel.positivity_radius(1.0, eps),
        "beta": model.beta_from_epsilon(params),
        "minimal_length": model.minimal_length(model.beta_from_epsilon(params)),
        "instanton_momentum": analysis.instanton(eps).momentum,
        "params": params.as_dict(),
    }
    if params.zd is not None:
        report["lambda_min"] = dispersion.lambda_min(params.k0, params.zd)
    rng = np.random.default_rng(cfg["seed"])
    samples = rng.uniform(1e-3, 10.0, cfg["bounds.samples"])
    worst = {"positivity_radius": 0.0, "instanton": 0.0, "lambda_min": 0.0}
    for e in samples:
        p = dispersion.p_max(e)
        worst["positivity_radius"] = max(worst["positivity_radius"], abs(kernel.positivity_radius(1.0, e) / p - 1))
        worst["instanton"] = max(worst["instanton"], abs(analysis.instanton(e).momentum / p - 1))
        k0 = params.k0
        zd = 1.0 / (k0 * e)
        worst["lambda_min"] = max(worst["lambda_min"], abs(dispersion.lambda_min(k0, zd) * k0 * p / (2 * math.pi) - 1))
    report["identity_max_rel_error"] = worst
    report["samples"] = int(cfg["bounds.samples"])
    write_json(cfg.out / "bounds.json", _meta(cfg, **report))
    return [cfg.out / "bounds.json"]


def cmd_modes(cfg: RunConfig) -> list[Path]:
    params = params_from(cfg)
    grid = grid_from(cfg)
    mode = mode_from(cfg, params.epsilon)
    f = analysis.build_mode(mode, grid, exact=cfg["mode.exact"])
    roots = dispersion.mode_roots(mode.E, params.epsilon)
    write_field_csv(cfg.out / "mode.csv", f)
    write_json(
        cfg.out / "mode.json",
        _meta(
            cfg,
            coefficients={"A": mode.A, "B": mode.B, "C": mode.C, "D": mode.D},
            E=mode.E,
            k=mode.k,
            constraint=mode.constraint,
            roots={"oscillatory": list(roots.oscillatory), "evanescent": list(roots.evanescent)},
            first_order={"wavenumber": dispersion.first_order_wavenumber(mode.k, params.epsilon), "decay": dispersion.first_order_decay(params.epsilon)},
            root_residual=float(roots.residuals().max()),
        ),
    )
    return [cfg.out / "mode.csv", cfg.out / "mode.json"]


def cmd_instanton(cfg: RunConfig) -> list[Path]:
    eps = params_from(cfg).epsilon
    res = analysis.instanton(eps)
    zs = np.linspace(0.0, cfg["z"], 65)
    write_csv(cfg.out / "trajectory.csv", ["z", "x"], [zs, analysis.instanton_trajectory(eps, zs)])
    write_json(
        cfg.out / "instanton.json",
        _meta(
            cfg,
            epsilon=eps,
            velocity=res.velocity,
            momentum=res.momentum,
            p_max=dispersion.p_max(eps),
            stationarity_residual=res.stationarity_residual,
        ),
    )
    return [cfg.out / "trajectory.csv", cfg.out / "instanton.json"]


def cmd_berry(cfg: RunConfig) -> list[Path]:
    eps = params_from(cfg).epsilon
    if cfg["berry.direction"] == "z":
        res = analysis.berry_phase_z(None, cfg["berry.T"], cfg["berry.alpha"], cfg["berry.n"])
    else:
        L = cfg["berry.L"]
        k = analysis.quantized_k(cfg["berry.m"], L, eps, exact=cfg["mode.exact"])
        if cfg["mode.constraint"] == "standing":
            mode = analysis.ModeSolution.standing(cfg["mode.a"], k, eps)
        else:
            mode = analysis.ModeSolution.outgoing(cfg["mode.a"], 0, k, eps)
        res = analysis.berry_phase_x(mode, L, exact=cfg["mode.exact"])
    payload = {
        "direction": res.direction,
        "phase": res.phase,
        "loop": res.loop,
        "momentum": res.momentum,
        "tolerance": res.tolerance,
        "trivial": res.trivial,
        "alpha": res.alpha,
        "n": res.n,
    }
    write_json(cfg.out / "berry.json", _meta(cfg, **payload))
    return [cfg.out / "berry.json"]


def cmd_scan(cfg: RunConfig) -> list[Path]:
    grid = grid_from(cfg)
    res = propagate.negativity_scan(
        cfg["init.sigma"], cfg["z"], scan_grid(cfg), grid, core_rms=cfg["scan.core_rms"], tol=cfg["scan.tol"]
    )
    write_csv(cfg.out / "scan.csv", ["epsilon", "min_density"], [res.epsilons, res.min_density])
    write_json(
        cfg.out / "scan.json",
        _meta(
            cfg,
            sigma=res.sigma,
            z=res.z,
            eps_star=res.threshold,
            bracket=res.bracket,
            found=res.found,
            monotone=res.monotone,
            core_rms=res.core_rms,
            message=None if res.found else "no negativity found",
        ),
    )
    return [cfg.out / "scan.csv", cfg.out / "scan.json"]


def cmd_compare(cfg: RunConfig) -> list[Path]:
    grid = grid_from(cfg)
    psi = initial_field(cfg, grid)
    res = propagate.compare_kernel_spectral(psi, cfg["z"], cfg["epsilon"])
    write_csv(cfg.out / "compare.csv", ["epsilon", "l2_error"], [res.epsilons, res.errors])
    write_json(cfg.out / "compare.json", _meta(cfg, epsilons=res.epsilons, errors=res.errors, slope=res.slope))
    return [cfg.out / "compare.csv", cfg.out / "compare.json"]


# y column plotted for each table; the x column is always the first one
PLOT_COLUMN = {"field": "abs2", "mode": "abs2", "kernel": "abs2"}


def _gnuplot_for(csv_path: Path) -> Path:
    with open(csv_path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    ycol = PLOT_COLUMN.get(csv_path.stem, header[1])
    gp = csv_path.with_suffix(".gp")
    _gnuplot(gp, csv_path.name, header[0], ycol)
    return gp


def _gnuplot(path: Path, data: str, xcol: str, ycol: str) -> None:
    from .io import atomic_write_text

    text = (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set xlabel '{xcol}'\nset ylabel '{ycol}'\n"
        f"plot '{data}' using '{xcol}':'{ycol}' with lines\n"
    )
    atomic_write_text(path, text)


COMMAND_FUNCS = {
    "propagate": cmd_propagate,
    "kernel": cmd_kernel,
    "bounds": cmd_bounds,
    "modes": cmd_modes,
    "instanton": cmd_instanton,
    "berry": cmd_berry,
    "scan-negativity": cmd_scan,
    "compare": cmd_compare,
}


def run(cfg: RunConfig, *, dry_run: bool = False) -> list[Path]:
    """Validate, then execute one command; returns the files written.

    The ``validate`` command and ``dry_run`` write ``validation.json`` and
    stop before any computation.
    """
    issues = validate(cfg)
    report_path = None
    if dry_run or cfg.command == "validate":
        report_path = cfg.out / "validation.json"
        write_json(report_path, _meta(cfg, issues=[i.as_dict() for i in issues]))
    if any(i.severity == "error" for i in issues):
        raise PreconditionFailure(issues)
    if report_path is not None:
        return [report_path]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", kernel.KernelValidityWarning)
        files = COMMAND_FUNCS[cfg.command](cfg)
    if cfg.gnuplot:
        files += [_gnuplot_for(f) for f in files if f.suffix == ".csv"]
    return files


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonparaxial", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="config file (key = value grammar)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="set any config key")
    parser.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    parser.add_argument("--dry-run", action="store_true", help="validate preconditions only")
    parser.add_argument("--error-json", metavar="PATH", help="write errors as JSON ('-' for stderr)")
    for key, (_parser, _default, flag, help_text) in SCHEMA.items():
        parser.add_argument(flag, dest=key, default=None, help=f"{help_text} [{key}]")
    return parser


def _emit_error(path: str | None, code: int, exc: BaseException, issues=None) -> None:
    print(f"error: {exc}", file=sys.stderr)
    for i in issues or []:
        print(f"  [{i.module}] {i.severity}: {i.message}", file=sys.stderr)
    if path is None:
        return
    payload = {"exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["problems"] = exc.problems
    if issues:
        payload["issues"] = [i.as_dict() for i in issues]
    from .io import dumps

    text = dumps(payload)
    if path == "-":
        sys.stderr.write(text)
    else:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError:
            pass


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {key: getattr(args, key) for key in SCHEMA if getattr(args, key) is not None}
    try:
        for item in args.set:
            if "=" not in item:
                raise ConfigError([f"--set expects KEY=VALUE (got {item!r})"])
            key, value = item.split("=", 1)
            overrides[key.strip()] = value.strip()
        cfg = load(args.command, args.config, overrides, out=args.out, gnuplot=args.gnuplot)
    except ConfigError as exc:
        _emit_error(args.error_json, EXIT_CONFIG, exc)
        return EXIT_CONFIG
    except OSError as exc:
        _emit_error(args.error_json, EXIT_IO, exc)
        return EXIT_IO
    try:
        files = run(cfg, dry_run=args.dry_run)
    except PreconditionFailure as exc:
        _emit_error(args.error_json, EXIT_NUMERIC, exc, exc.issues)
        return EXIT_NUMERIC
    except NonParaxialError as exc:
        _emit_error(args.error_json, EXIT_NUMERIC, exc)
        return EXIT_NUMERIC
    except OSError as exc:
        _emit_error(args.error_json, EXIT_IO, exc)
        return EXIT_IO
    if cfg.command == "validate" or args.dry_run:
        issues = validate(cfg)
        if not issues:
            print("ok: no precondition violations")
        for i in issues:
            print(f"[{i.module}] {i.severity}: {i.message}")
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
