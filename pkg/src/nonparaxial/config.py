"""Run configuration: key schema, config-file grammar and validation report.

Config files hold one ``key = value`` pair per line. A ``[section]`` header
prefixes the keys that follow it with ``section.``, so the two files

    grid.n = 2048            [grid]
                             n = 2048

are equivalent. ``#`` and ``;`` start comments; blank lines are ignored.
List values are comma separated. Command-line flags use the same keys and
override the file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

COMMANDS = ("propagate", "kernel", "bounds", "modes", "instanton", "berry", "scan-negativity", "compare", "validate")


class ConfigError(ValueError):
    """The configuration cannot be parsed or typed; carries every problem found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


# key -> (parser, default, flag, help)
SCHEMA: dict[str, tuple] = {
    "epsilon": (_floats, (0.01,), "--epsilon", "quartic coefficient (comma list for compare)"),
    "k0": (float, 1.0, "--k0", "wavenumber"),
    "zd": (float, None, "--zd", "diffraction length (sets epsilon = 1/(k0 Zd))"),
    "beta2": (float, None, "--beta2", "second-order dispersion"),
    "beta4": (float, None, "--beta4", "fourth-order dispersion"),
    "t0": (float, None, "--t0", "pulse duration (with beta2/beta4 sets epsilon)"),
    "grid.n": (int, 2048, "--n", "grid size (power of two)"),
    "grid.x_min": (float, -32.0, "--x-min", "left domain edge"),
    "grid.x_max": (float, 32.0, "--x-max", "right domain edge"),
    "init.sigma": (float, 1.0 / math.sqrt(2.0), "--sigma", "RMS width of the initial density"),
    "init.x0": (float, 0.0, "--x0", "initial centre"),
    "init.k_carrier": (float, 0.0, "--k-carrier", "carrier wavenumber"),
    "z": (float, 1.0, "--z", "propagation distance"),
    "method": (str, "spectral", "--method", "spectral | fphe | kernel | density"),
    "fphe.remove_carrier": (_bool, True, "--remove-carrier", "divide out exp(i k0 z) in fphe"),
    "kernel.method": (str, "closed_form", "--kernel-method", "closed_form | quadrature | fresnel"),
    "kernel.dx": (_floats, (0.0, 0.5, 1.0, 1.5, 2.0), "--dx", "displacements for kernel tables"),
    "kernel.dt": (_floats, (1.0, 2.0), "--dt", "intervals for kernel tables"),
    "kernel.band": (float, None, "--band", "quadrature band (default from p_max)"),
    "kernel.n_quad": (int, None, "--n-quad", "quadrature intervals"),
    "scan.eps_min": (float, 0.25, "--eps-min", "first epsilon of the scan"),
    "scan.eps_max": (float, 10.0, "--eps-max", "last epsilon of the scan"),
    "scan.eps_step": (float, 0.25, "--eps-step", "scan spacing"),
    "scan.core_rms": (float, 3.0, "--core-rms", "half width of the density window in RMS units"),
    "scan.tol": (float, 1e-3, "--tol", "bisection tolerance on the threshold"),
    "mode.k": (float, 1.0, "--mode-k", "mode parameter k (E = k^2/2)"),
    "mode.a": (_complex, 1 + 0j, "--mode-a", "coefficient A (complex, e.g. 1+2j)"),
    "mode.b": (_complex, 0j, "--mode-b", "coefficient B"),
    "mode.c": (_complex, 0j, "--mode-c", "coefficient C (outgoing modes)"),
    "mode.d": (_complex, 0j, "--mode-d", "coefficient D (incoming modes)"),
    "mode.constraint": (str, "constrained", "--constraint", "incoming | outgoing | constrained | standing"),
    "mode.exact": (_bool, False, "--exact", "use exact quartic roots"),
    "berry.direction": (str, "x", "--direction", "x | z"),
    "berry.L": (float, 1.0, "--loop-l", "x-loop radius (circumference 2 pi L)"),
    "berry.m": (int, 3, "--winding", "x-loop winding number of the mode"),
    "berry.T": (float, 1.0, "--period", "z-loop period"),
    "berry.alpha": (float, 1.0, "--alpha", "z-loop normalization constant"),
    "berry.n": (int, 1, "--mode-n", "z-loop mode number"),
    "bounds.samples": (int, 100, "--samples", "random epsilon samples for identity checks"),
    "seed": (int, 0, "--seed", "random seed"),
    "tolerance.norm": (float, 1e-10, "--norm-tol", "allowed relative norm drift"),
}

LIST_KEYS = {k for k, spec in SCHEMA.items() if spec[0] is _floats}


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse the config grammar into raw string values."""
    raw: dict[str, str] = {}
    problems = []
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            if not section:
                problems.append(f"{source}:{lineno}: empty section name")
            continue
        if "=" not in s:
            problems.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, value = (p.strip() for p in s.split("=", 1))
        if section:
            key = f"{section}.{key}"
        raw[key] = value
    if problems:
        raise ConfigError(problems)
    return raw


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    out: Path = Path("out")
    gnuplot: bool = False

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @classmethod
    def build(cls, command: str, raw: dict[str, str], *, out: Path | str = "out", gnuplot: bool = False) -> "RunConfig":
        """Type every value, collecting all problems into one :class:`ConfigError`."""
        problems = []
        if command not in COMMANDS:
            problems.append(f"unknown command {command!r}")
        values = {}
        for key, (parser, default, _flag, _help) in SCHEMA.items():
            values[key] = default
        for key, text in raw.items():
            if key not in SCHEMA:
                problems.append(f"unknown key {key!r}")
                continue
            try:
                values[key] = SCHEMA[key][0](text)
            except ValueError as exc:
                problems.append(f"{key}: cannot parse {text!r} ({exc})")
        for key, choices in (
            ("method", ("spectral", "fphe", "kernel", "density")),
            ("kernel.method", ("closed_form", "quadrature", "fresnel")),
            ("mode.constraint", ("incoming", "outgoing", "constrained", "standing")),
            ("berry.direction", ("x", "z")),
        ):
            if values[key] not in choices:
                problems.append(f"{key} must be one of {', '.join(choices)} (got {values[key]!r})")
        for key in LIST_KEYS:
            if not values[key]:
                problems.append(f"{key} needs at least one value")
        if problems:
            raise ConfigError(problems)
        return cls(command, values, Path(out), gnuplot)

    def as_dict(self) -> dict:
        return {"command": self.command, **{k: v for k, v in sorted(self.values.items())}}


def load(command: str, config_path: str | Path | None, overrides: dict[str, str], **kwargs) -> RunConfig:
    raw: dict[str, str] = {}
    if config_path is not None:
        path = Path(config_path)
        raw.update(parse_text(path.read_text(encoding="utf-8"), str(path)))
    raw.update(overrides)
    return RunConfig.build(command, raw, **kwargs)
