"""Constitutive closures: viscous stress, Fickian diffusive flux, reactive mass flux.

The closures are the simplest members of the admissible classes that make
every term of the dissipation integrand separately nonnegative:

* Newtonian stress ``nu(phi) (2 D + lambda (div v) I)`` with ``nu >= 0`` and
  ``lambda >= -2/d``; ``D`` is built from the mass-averaged velocity,
* isotropic degenerate mobility ``M(phi) = M0 (1 - phi^2)_+`` in the flux
  ``h_v = -M grad(mu + alpha p)``,
* reactive flux ``gamma = -m(phi) (mu + alpha p)`` with the degenerate
  ``m(phi) = m0 (1 - phi^2)_+`` so both fluxes vanish identically in a pure
  phase (single-fluid compatibility).

A constant (non-degenerate) mobility model is provided for cross-model
comparison only; it is not compatible with single-fluid regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyParams, gl_energy_density
from .grid import Grid
from .mixture import MixtureConstants

__all__ = [
    "ConstitutiveParams",
    "viscosity",
    "mobility",
    "mass_mobility",
    "diffusive_flux",
    "mass_flux",
    "stress_tensor",
    "viscous_dissipation_density",
]

MOBILITY_MODELS = ("degenerate", "constant")
VISCOSITY_MODELS = ("arithmetic", "harmonic")


@dataclass(frozen=True)
class ConstitutiveParams:
    """Viscosities, bulk-viscosity ratio, and mobility magnitudes."""

    nu1: float
    nu2: float
    lam: float = 0.0
    mobility_model: str = "degenerate"
    M0: float = 1.0
    m0: float = 0.0
    viscosity_model: str = "arithmetic"

    def __post_init__(self):
        if self.nu1 < 0.0 or self.nu2 < 0.0:
            raise ValueError("pure-phase viscosities must be nonnegative")
        if self.M0 < 0.0 or self.m0 < 0.0:
            raise ValueError("mobility magnitudes must be nonnegative")
        if self.mobility_model not in MOBILITY_MODELS:
            raise ValueError(f"unknown mobility model {self.mobility_model!r}")
        if self.viscosity_model not in VISCOSITY_MODELS:
            raise ValueError(f"unknown viscosity model {self.viscosity_model!r}")

    def check_lambda(self, dims: int):
        if self.lam < -2.0 / dims:
            raise ValueError(f"lambda = {self.lam} violates lambda >= -2/d for d = {dims}")


def viscosity(phi, params: ConstitutiveParams) -> np.ndarray:
    """Phase-interpolated dynamic viscosity, clamped nonnegative."""
    phi = np.asarray(phi, dtype=float)
    if params.viscosity_model == "harmonic":
        w1 = np.clip((1.0 + phi) / 2.0, 0.0, 1.0)
        if params.nu1 == 0.0 or params.nu2 == 0.0:
            raise ValueError("harmonic viscosity interpolation needs positive pure-phase values")
        nu = 1.0 / (w1 / params.nu1 + (1.0 - w1) / params.nu2)
    else:
        nu = params.nu1 * (1.0 + phi) / 2.0 + params.nu2 * (1.0 - phi) / 2.0
    return np.maximum(nu, 0.0)


def _degenerate(phi) -> np.ndarray:
    # positive part of 1 - phi^2; exact zero at phi = +/-1, clamps overshoot
    phi = np.asarray(phi, dtype=float)
    return np.maximum(1.0 - phi * phi, 0.0)


def mobility(phi, params: ConstitutiveParams) -> np.ndarray:
    """Isotropic Fickian mobility M(phi) for the mass-averaged-velocity flux."""
    if params.mobility_model == "constant":
        return np.full_like(np.asarray(phi, dtype=float), params.M0)
    return params.M0 * _degenerate(phi)


def mass_mobility(phi, params: ConstitutiveParams) -> np.ndarray:
    """Reactive-flux mobility m(phi); always degenerate."""
    return params.m0 * _degenerate(phi)


def diffusive_flux(
    mu, p, phi, grid: Grid, k: MixtureConstants, params: ConstitutiveParams
) -> np.ndarray:
    """Generalized Fick flux h_v = -M(phi) grad(mu + alpha p)."""
    mu = grid.check_scalar(mu)
    p = grid.check_scalar(p)
    phi = grid.check_scalar(phi)
    return -mobility(phi, params) * grid.grad(mu + k.alpha * p)


def mass_flux(mu, p, phi, k: MixtureConstants, params: ConstitutiveParams) -> np.ndarray:
    """Reactive mass flux gamma = -m(phi) (mu + alpha p); pointwise."""
    mu = np.asarray(mu, dtype=float)
    p = np.asarray(p, dtype=float)
    return -mass_mobility(phi, params) * (mu + k.alpha * p)


def stress_tensor(
    grid: Grid,
    phi,
    mu,
    p,
    v,
    cparams: ConstitutiveParams,
    eparams: EnergyParams,
    k: MixtureConstants,
) -> np.ndarray:
    """Full Cauchy stress of the mixture.

    ``T = -grad(phi) (x) sigma*eps*grad(phi) - (mu*phi - Psi + p) I
    + nu(phi) (2 D + lambda (div v) I)`` with ``D`` the symmetric gradient of
    the mass-averaged velocity ``v`` (callers in the volume-averaged
    formulation must reconstruct ``v = u + Jtilde/rho`` first).  Symmetric by
    construction.
    """
    phi = grid.check_scalar(phi)
    mu = grid.check_scalar(mu)
    p = grid.check_scalar(p)
    v = grid.check_vector(v)
    cparams.check_lambda(grid.dims)

    d = grid.dims
    gphi = grid.grad(phi)
    kort = -eparams.sigma * eparams.epsilon * np.einsum("i...,j...->ij...", gphi, gphi)
    iso = -(mu * phi - gl_energy_density(phi, grid, eparams) + p)
    nu = viscosity(phi, cparams)
    D = grid.sym_grad(v)
    divv = grid.div(v)

    T = 2.0 * nu * D + kort
    for i in range(d):
        T[i, i] += iso + nu * cparams.lam * divv
    return T


def viscous_dissipation_density(grid: Grid, v, phi, params: ConstitutiveParams) -> np.ndarray:
    """Pointwise viscous dissipation nu (2 |D|^2 + lambda (div v)^2); >= 0 for lambda >= -2/d."""
    v = grid.check_vector(v)
    D = grid.sym_grad(v)
    divv = grid.div(v)
    nu = viscosity(phi, params)
    return nu * (2.0 * np.einsum("ij...,ij...->...", D, D) + params.lam * divv**2)
