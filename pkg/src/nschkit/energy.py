"""Free energies, the four chemical-potential choices, and their transform lattice.

The model family admits four equivalent modeling choices, indexed by the
order parameter and the measure the free-energy density is written against:

    ===========  ===============  ==================  ==========
    choice key   order parameter  free-energy density  pressure
    ===========  ===============  ==================  ==========
    phi-volume   phi              Psi_hat(phi, grad)   p_hat
    phi-mass     phi              psi = Psi_hat/rho    p_hh
    c-volume     c                Psi_chk(c, grad)     p_chk
    c-mass       c                psi = Psi_chk/rho    p_cc
    ===========  ===============  ==================  ==========

All four share the same Ginzburg-Landau shape
``Psi = (sigma/eps) W(phi) + (sigma*eps/2) |grad phi|^2`` with the quartic
double well ``W(phi) = (1 - phi^2)^2 / 4`` (configurable through
``EnergyParams.well``).  Volume-measure potentials are plain variational
derivatives; mass-measure potentials carry the ``(1/rho) div(rho ...)``
structure and are variational derivatives with the mass measure held fixed.

Each closed-form potential in this module is the *exact* gradient of its
discrete energy functional (central differences are discretely adjoint),
which is what the finite-difference oracle in the test-suite checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .mixture import MixtureConstants, c_of_phi, phi_of_c

__all__ = [
    "CHOICES",
    "EnergyParams",
    "EnergyReport",
    "ChemState",
    "gl_energy_density",
    "free_energy_density",
    "chemical_potential",
    "relate_mu",
    "transform_pressure",
    "total_energy",
    "restriction_expressions",
]

CHOICES = ("phi-volume", "phi-mass", "c-volume", "c-mass")

# well registry: value, first derivative, curvature bound on [-1-eta, 1+eta]
_WELLS = {
    "quartic": (
        lambda phi: 0.25 * (1.0 - phi**2) ** 2,
        lambda phi: phi**3 - phi,
        lambda span: 3.0 * span**2 - 1.0,
    ),
}


@dataclass(frozen=True)
class EnergyParams:
    """Surface-tension coefficient, interface width, and double-well choice."""

    sigma: float
    epsilon: float
    well: str = "quartic"

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (self.epsilon > 0.0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.well not in _WELLS:
            raise ValueError(f"unknown double-well identifier {self.well!r}")

    def well_value(self, phi):
        return _WELLS[self.well][0](np.asarray(phi, dtype=float))

    def well_derivative(self, phi):
        return _WELLS[self.well][1](np.asarray(phi, dtype=float))

    def well_curvature_bound(self, span: float = 1.0) -> float:
        return float(_WELLS[self.well][2](span))


@dataclass(frozen=True)
class EnergyReport:
    """Total-energy decomposition at one time level."""

    free: float
    kinetic: float
    gravitational: float
    total: float
    time: float

    @staticmethod
    def build(free: float, kinetic: float, gravitational: float, time: float) -> "EnergyReport":
        return EnergyReport(
            free=free,
            kinetic=kinetic,
            gravitational=gravitational,
            total=free + kinetic + gravitational,
            time=time,
        )


@dataclass
class ChemState:
    """One modeling choice's fields: order parameter, potential, pressure."""

    choice: str
    order: np.ndarray
    mu: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if self.choice not in CHOICES:
            raise ValueError(f"unknown modeling choice {self.choice!r}")


def _check_choice(choice: str):
    if choice not in CHOICES:
        raise ValueError(f"unknown modeling choice {choice!r}; expected one of {CHOICES}")


def _rho_phi_raw(phi, k: MixtureConstants):
    # affine law without clamping; keeps the potentials smooth under overshoot
    rho = k.mean_rho + k.jump_rho * np.asarray(phi, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("mixture density became non-positive; order parameter far out of range")
    return rho


def _rho_c_raw(c, k: MixtureConstants):
    inv = (1.0 + np.asarray(c, dtype=float)) / (2.0 * k.rho1) + (1.0 - np.asarray(c)) / (2.0 * k.rho2)
    if np.any(inv <= 0.0):
        raise ValueError("mixture density became non-positive; order parameter far out of range")
    return 1.0 / inv


def _dphi_dc_raw(c, k: MixtureConstants):
    rho = _rho_c_raw(c, k)
    return rho**2 / (k.rho1 * k.rho2)


def _d2phi_dc2_raw(c, k: MixtureConstants):
    # phi'(c) = rho^2/(rho1 rho2), rho'(c) = -beta rho^2
    rho = _rho_c_raw(c, k)
    return -2.0 * k.beta * rho**3 / (k.rho1 * k.rho2)


def gl_energy_density(phi, grid: Grid, params: EnergyParams) -> np.ndarray:
    """Ginzburg-Landau density (sigma/eps) W(phi) + (sigma eps/2)|grad phi|^2."""
    phi = grid.check_scalar(phi)
    g = grid.grad(phi)
    return (params.sigma / params.epsilon) * params.well_value(phi) + (
        0.5 * params.sigma * params.epsilon
    ) * (g * g).sum(axis=0)


def _gl_energy_density_c(c, grid: Grid, params: EnergyParams, k: MixtureConstants) -> np.ndarray:
    """The same density written in concentration variables (chain rule applied)."""
    c = grid.check_scalar(c)
    phi = phi_of_c(c, k)
    dphi = _dphi_dc_raw(c, k)
    g = grid.grad(c)
    return (params.sigma / params.epsilon) * params.well_value(phi) + (
        0.5 * params.sigma * params.epsilon
    ) * dphi**2 * (g * g).sum(axis=0)


def free_energy_density(choice: str, order, grid: Grid, params: EnergyParams, k: MixtureConstants):
    """Free-energy density of one modeling choice (per volume or per mass)."""
    _check_choice(choice)
    if choice == "phi-volume":
        return gl_energy_density(order, grid, params)
    if choice == "phi-mass":
        return gl_energy_density(order, grid, params) / _rho_phi_raw(order, k)
    if choice == "c-volume":
        return _gl_energy_density_c(order, grid, params, k)
    return _gl_energy_density_c(order, grid, params, k) / _rho_c_raw(order, k)


def chemical_potential(
    choice: str, order, grid: Grid, params: EnergyParams, k: MixtureConstants
) -> np.ndarray:
    """Closed-form discrete chemical potential of one modeling choice.

    ``order`` is the choice's own order parameter (phi for ``phi-*``, c for
    ``c-*``).  Volume-measure choices: dPsi/dq - div(dPsi/d grad q).
    Mass-measure choices: dpsi/dq - (1/rho) div(rho dpsi/d grad q).
    """
    _check_choice(choice)
    order = grid.check_scalar(order)
    se = params.sigma * params.epsilon
    si = params.sigma / params.epsilon

    if choice == "phi-volume":
        return si * params.well_derivative(order) - se * grid.laplacian(order)

    if choice == "phi-mass":
        rho = _rho_phi_raw(order, k)
        psi = gl_energy_density(order, grid, params) / rho
        dpsi_dphi = si * params.well_derivative(order) / rho - psi * k.jump_rho / rho
        dpsi_dgrad = se * grid.grad(order) / rho
        return dpsi_dphi - grid.div(rho * dpsi_dgrad) / rho

    if choice == "c-volume":
        phi = phi_of_c(order, k)
        dphi = _dphi_dc_raw(order, k)
        d2phi = _d2phi_dc2_raw(order, k)
        g = grid.grad(order)
        grad2 = (g * g).sum(axis=0)
        return (
            si * params.well_derivative(phi) * dphi
            + se * dphi * d2phi * grad2
            - se * grid.div(dphi**2 * g)
        )

    # c-mass
    rho = _rho_c_raw(order, k)
    phi = phi_of_c(order, k)
    dphi = _dphi_dc_raw(order, k)
    d2phi = _d2phi_dc2_raw(order, k)
    g = grid.grad(order)
    grad2 = (g * g).sum(axis=0)
    psi_big = _gl_energy_density_c(order, grid, params, k)
    dpsi_dc = (si * params.well_derivative(phi) * dphi + se * dphi * d2phi * grad2) / rho + (
        k.beta * psi_big
    )
    dpsi_dgrad = se * dphi**2 * g / rho
    return dpsi_dc - grid.div(rho * dpsi_dgrad) / rho


def _to_hub(choice, mu, phi, c, rho, psi_hh, psi_cc, k: MixtureConstants):
    """Convert any choice's potential to the phi-volume potential mu_hat."""
    if choice == "phi-volume":
        return mu
    if choice == "phi-mass":
        return rho * mu + psi_hh * k.jump_rho
    if choice == "c-volume":
        return (k.rho1 * k.rho2 / rho**2) * mu
    mu_cvol = rho * mu - k.beta * rho**2 * psi_cc
    return (k.rho1 * k.rho2 / rho**2) * mu_cvol


def _from_hub(choice, mu_hat, phi, c, rho, psi_hh, psi_cc, k: MixtureConstants):
    if choice == "phi-volume":
        return mu_hat
    if choice == "phi-mass":
        return (mu_hat - psi_hh * k.jump_rho) / rho
    mu_cvol = (rho**2 / (k.rho1 * k.rho2)) * mu_hat
    if choice == "c-volume":
        return mu_cvol
    return (mu_cvol + k.beta * rho**2 * psi_cc) / rho


def _lattice_fields(order, from_choice, grid, params, k):
    """Common pointwise fields (phi, c, rho, per-mass densities) for transforms."""
    if from_choice.startswith("phi"):
        phi = grid.check_scalar(order)
        c = c_of_phi(phi, k)
    else:
        c = grid.check_scalar(order)
        phi = phi_of_c(c, k)
    rho = _rho_phi_raw(phi, k)
    psi_hh = gl_energy_density(phi, grid, params) / rho
    psi_cc = _gl_energy_density_c(c, grid, params, k) / rho
    return phi, c, rho, psi_hh, psi_cc


def relate_mu(
    from_choice: str,
    to_choice: str,
    mu,
    order,
    grid: Grid,
    params: EnergyParams,
    k: MixtureConstants,
) -> np.ndarray:
    """Predict the chemical potential of ``to_choice`` from that of ``from_choice``.

    Potentials of the two measures (volume vs mass) at a fixed order
    parameter are related exactly pointwise; relations that swap the order
    parameter (phi vs c) hold up to the discrete chain rule, i.e. the
    prediction matches the directly computed target at second order in the
    grid spacing.  ``order`` is the order parameter of ``from_choice``.
    """
    _check_choice(from_choice)
    _check_choice(to_choice)
    mu = grid.check_scalar(mu)
    phi, c, rho, psi_hh, psi_cc = _lattice_fields(order, from_choice, grid, params, k)
    mu_hat = _to_hub(from_choice, mu, phi, c, rho, psi_hh, psi_cc, k)
    return _from_hub(to_choice, mu_hat, phi, c, rho, psi_hh, psi_cc, k)


def transform_pressure(
    from_choice: str,
    to_choice: str,
    p,
    phi,
    grid: Grid,
    params: EnergyParams,
    k: MixtureConstants,
) -> np.ndarray:
    """Map the pressure of one modeling choice to another at fixed physical state.

    Pointwise algebra through the hub pressure p_hat:
    p_hat = p_phimass + psi_hh*mean(rho); p_cvol = p_hat + mu_hat*phi;
    p_cvol = p_cmass + rho*psi_cc.  ``phi`` is the volume-fraction field of
    the state; compositions around the four choices close exactly.
    """
    _check_choice(from_choice)
    _check_choice(to_choice)
    p = grid.check_scalar(p)
    phi = grid.check_scalar(phi)
    if from_choice == to_choice:
        return p.copy()
    rho = _rho_phi_raw(phi, k)
    c = c_of_phi(phi, k)
    psi_hh = gl_energy_density(phi, grid, params) / rho
    psi_cc = _gl_energy_density_c(c, grid, params, k) / rho
    mu_hat = chemical_potential("phi-volume", phi, grid, params, k)

    def to_hub(choice, p):
        if choice == "phi-volume":
            return p
        if choice == "phi-mass":
            return p + psi_hh * k.mean_rho
        if choice == "c-volume":
            return p - mu_hat * phi
        return (p + rho * psi_cc) - mu_hat * phi

    def from_hub(choice, p_hat):
        if choice == "phi-volume":
            return p_hat
        if choice == "phi-mass":
            return p_hat - psi_hh * k.mean_rho
        if choice == "c-volume":
            return p_hat + mu_hat * phi
        return (p_hat + mu_hat * phi) - rho * psi_cc

    return from_hub(to_choice, to_hub(from_choice, p))


def total_energy(
    grid: Grid,
    phi,
    velocity,
    params: EnergyParams,
    k: MixtureConstants,
    g: float = 0.0,
    jtilde=None,
    time: float = 0.0,
) -> EnergyReport:
    """Free + kinetic + gravitational energy of a state.

    ``velocity`` is the volume-averaged velocity when ``jtilde`` is given
    (the mass-averaged velocity is reconstructed as ``u + jtilde/rho`` so
    both formulations report the same functional); otherwise it is taken to
    be the mass-averaged velocity itself.
    """
    phi = grid.check_scalar(phi)
    vel = grid.check_vector(velocity)
    rho = _rho_phi_raw(phi, k)
    if jtilde is not None:
        vel = vel + grid.check_vector(jtilde) / rho
    free = grid.integrate(gl_energy_density(phi, grid, params))
    kinetic = grid.integrate(0.5 * rho * (vel * vel).sum(axis=0))
    grav = grid.integrate(rho * g * grid.height()) if g != 0.0 else 0.0
    return EnergyReport.build(free=free, kinetic=kinetic, gravitational=grav, time=time)


def restriction_expressions(
    phi,
    grad_phi,
    grad_v,
    stress,
    h_flux,
    gamma,
    p_hat,
    mu_hat,
    grad_arg,
    params: EnergyParams,
    k: MixtureConstants,
):
    """The four equivalent dissipation-restriction integrands, plus their flux arguments.

    Pointwise algebra only.  ``grad_phi`` is gradient data for phi (the
    concentration gradient is derived through the exact chain rule), and
    ``grad_arg`` is gradient data for the scalar ``mu_hat + alpha p_hat``;
    the other choices' gradient arguments follow from the exact pointwise
    identities between the scalars.  Returns ``(expressions, args)`` where
    ``expressions`` are the four integrands and ``args`` the four scalar
    flux arguments (equal up to the constant factor zeta).
    """
    phi = np.asarray(phi, dtype=float)
    rho = _rho_phi_raw(phi, k)
    c = c_of_phi(phi, k)
    dc = k.rho1 * k.rho2 / rho**2
    dphi = 1.0 / dc
    grad_c = dc * grad_phi  # exact chain rule on the gradient data

    se = params.sigma * params.epsilon
    si = params.sigma / params.epsilon
    grad_phi2 = (grad_phi * grad_phi).sum(axis=0)
    Psi_hat = si * params.well_value(phi) + 0.5 * se * grad_phi2
    Psi_chk = si * params.well_value(phi) + 0.5 * se * dphi**2 * (grad_c * grad_c).sum(axis=0)
    psi_hh = Psi_hat / rho
    psi_cc = Psi_chk / rho

    mu_hh = (mu_hat - psi_hh * k.jump_rho) / rho
    mu_cv = (rho**2 / (k.rho1 * k.rho2)) * mu_hat
    mu_cc = (mu_cv + k.beta * rho**2 * psi_cc) / rho
    p_hh = p_hat - psi_hh * k.mean_rho
    p_cv = p_hat + mu_hat * phi
    p_cc = p_cv - rho * psi_cc

    args = (
        mu_hat + k.alpha * p_hat,
        rho * mu_hh + k.alpha * p_hh,
        mu_cv / rho + k.beta * p_cv,
        mu_cc + k.beta * p_cc,
    )
    grads = (grad_arg, grad_arg, k.zeta * grad_arg, k.zeta * grad_arg)
    fluxes = (h_flux, h_flux, h_flux / k.zeta, h_flux / k.zeta)
    reactions = (k.zeta * args[0], k.zeta * args[1], args[2], args[3])

    d = grad_phi.shape[0]
    eye = np.zeros((d, d) + phi.shape)
    for i in range(d):
        eye[i, i] = 1.0

    def outer(a, b):
        return np.einsum("i...,j...->ij...", a, b)

    def ddot(A, B):
        return np.einsum("ij...,ij...->...", A, B)

    kort_phi = outer(grad_phi, se * grad_phi)
    kort_phi_mass = outer(grad_phi, rho * (se * grad_phi / rho))
    kort_c = outer(grad_c, se * dphi**2 * grad_c)
    kort_c_mass = outer(grad_c, rho * (se * dphi**2 * grad_c / rho))

    brackets = (
        stress + p_hat * eye + kort_phi + (mu_hat * phi - Psi_hat) * eye,
        stress + p_hh * eye + kort_phi_mass + (rho * mu_hh * phi) * eye,
        stress + p_cv * eye + kort_c - Psi_chk * eye,
        stress + p_cc * eye + kort_c_mass,
    )
    expressions = tuple(
        ddot(brackets[i], grad_v) - (grads[i] * fluxes[i]).sum(axis=0) - reactions[i] * gamma
        for i in range(4)
    )
    return expressions, args
