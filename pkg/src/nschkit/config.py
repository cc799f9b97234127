"""Run configuration: a flat ``key = value`` text format with typed validation.

Unknown keys are an error (all of them are listed at once), missing keys take
documented defaults, and ``format_config`` emits a canonical echo that parses
back to the identical configuration (the echo is written next to run outputs
for provenance).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import constitutive as cst
from . import energy as en
from .grid import Grid
from .mixture import make_constants
from .scenarios import SCENARIOS, initial_fields
from .solver import NSCHStepper, SolverOptions

__all__ = ["RunConfig", "parse_config", "format_config", "ConfigError", "KEY_ORDER"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # grid
    dims: int = 2
    nx: int = 64
    ny: int = 64
    lx: float = 1.0
    ly: float = 1.0
    # physics
    rho1: float = 1.0
    rho2: float = 1.0
    sigma: float = 1.0
    epsilon: float = 0.05
    nu1: float = 0.1
    nu2: float = 0.1
    lam: float = 0.0
    g: float = 0.0
    M0: float = 0.001
    m0: float = 0.0
    mobility_model: str = "degenerate"
    viscosity_model: str = "arithmetic"
    well: str = "quartic"
    # numerics
    dt: float = 1e-4
    t_end: float = 0.01
    cfl: float = 0.4
    S: float = 2.0
    linear_tol: float = 1e-10
    overshoot_tol: float = 0.05
    upwind: bool = False
    evolve_velocity: bool = True
    # scenario
    scenario: str = "spinodal"
    ic_mean: float = 0.0
    ic_amplitude: float = 0.05
    ic_seed: int = 1
    ic_width: float = 0.05
    ic_u_amplitude: float = 0.0
    ic_p_amplitude: float = 0.0
    # output
    snapshot_every: int = 0
    diagnostics_every: int = 1

    # -- builders ------------------------------------------------------------

    def build_grid(self) -> Grid:
        if self.dims == 1:
            return Grid(nx=self.nx, lx=self.lx)
        return Grid(nx=self.nx, lx=self.lx, ny=self.ny, ly=self.ly)

    def build_constants(self):
        return make_constants(self.rho1, self.rho2)

    def build_energy_params(self) -> en.EnergyParams:
        return en.EnergyParams(sigma=self.sigma, epsilon=self.epsilon, well=self.well)

    def build_constitutive(self) -> cst.ConstitutiveParams:
        return cst.ConstitutiveParams(
            nu1=self.nu1, nu2=self.nu2, lam=self.lam,
            mobility_model=self.mobility_model, M0=self.M0, m0=self.m0,
            viscosity_model=self.viscosity_model,
        )

    def build_options(self) -> SolverOptions:
        return SolverOptions(
            cfl=self.cfl, stabilization=self.S, linear_tol=self.linear_tol,
            overshoot_tol=self.overshoot_tol, upwind=self.upwind,
            evolve_velocity=self.evolve_velocity,
        )

    def build_stepper(self) -> NSCHStepper:
        return NSCHStepper(
            self.build_grid(), self.build_constants(), self.build_energy_params(),
            self.build_constitutive(), gravity=self.g, options=self.build_options(),
        )

    def initial_state(self, stepper: NSCHStepper):
        phi, u, p = initial_fields(
            stepper.grid, self.scenario, mean=self.ic_mean, amplitude=self.ic_amplitude,
            seed=self.ic_seed, width=self.ic_width, u_amplitude=self.ic_u_amplitude,
            p_amplitude=self.ic_p_amplitude,
        )
        return stepper.initial_state(phi, u=u, p=p)

    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def validate(self):
        checks = [
            ("dims", self.dims in (1, 2), "must be 1 or 2"),
            ("nx", self.nx >= 4, "must be >= 4"),
            ("ny", self.dims == 1 or self.ny >= 4, "must be >= 4 in 2D"),
            ("lx", self.lx > 0, "must be positive"),
            ("ly", self.ly > 0, "must be positive"),
            ("rho1", self.rho1 > 0, "must be positive"),
            ("rho2", self.rho2 > 0, "must be positive"),
            ("sigma", self.sigma > 0, "must be positive"),
            ("epsilon", self.epsilon > 0, "must be positive"),
            ("nu1", self.nu1 >= 0, "must be nonnegative"),
            ("nu2", self.nu2 >= 0, "must be nonnegative"),
            ("lambda", self.lam >= -2.0 / self.dims, "must be >= -2/dims"),
            ("M0", self.M0 >= 0, "must be nonnegative"),
            ("m0", self.m0 >= 0, "must be nonnegative"),
            ("mobility_model", self.mobility_model in cst.MOBILITY_MODELS, f"must be one of {cst.MOBILITY_MODELS}"),
            ("viscosity_model", self.viscosity_model in cst.VISCOSITY_MODELS, f"must be one of {cst.VISCOSITY_MODELS}"),
            ("well", self.well in ("quartic",), "must be 'quartic'"),
            ("dt", self.dt > 0, "must be positive"),
            ("t_end", self.t_end > 0, "must be positive"),
            ("cfl", self.cfl > 0, "must be positive"),
            ("S", self.S >= 0, "must be nonnegative"),
            ("linear_tol", 0 < self.linear_tol < 1, "must be in (0, 1)"),
            ("overshoot_tol", self.overshoot_tol >= 0, "must be nonnegative"),
            ("scenario", self.scenario in SCENARIOS, f"must be one of {SCENARIOS}"),
            ("snapshot_every", self.snapshot_every >= 0, "must be nonnegative"),
            ("diagnostics_every", self.diagnostics_every >= 1, "must be >= 1"),
        ]
        bad = [f"{name} {msg}" for name, ok, msg in checks if not ok]
        if bad:
            raise ConfigError("invalid configuration: " + "; ".join(bad))
        return self


# config keys: "lambda" and "S" are spelled as in the file format,
# mapped onto the dataclass attributes below.
_KEY_TO_ATTR = {f.name: f.name for f in fields(RunConfig)}
_KEY_TO_ATTR["lambda"] = "lam"
del _KEY_TO_ATTR["lam"]

KEY_ORDER = tuple(
    "lambda" if f.name == "lam" else f.name for f in fields(RunConfig)
)


def _parse_value(key: str, text: str, lineno: int):
    attr = _KEY_TO_ATTR[key]
    kind = RunConfig.__dataclass_fields__[attr].type
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        return text
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines ('#' starts a comment) into a RunConfig."""
    values = {}
    unknown = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEY_TO_ATTR:
            unknown.append(f"{key!r} (line {lineno})")
            continue
        if not val:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        values[_KEY_TO_ATTR[key]] = _parse_value(key, val, lineno)
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown))
    return RunConfig(**values).validate()


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Canonical echo: every key, schema order, one per line."""
    lines = []
    for key in KEY_ORDER:
        attr = _KEY_TO_ATTR[key]
        lines.append(f"{key} = {_format_value(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"
