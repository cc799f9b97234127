"""Pointwise algebra of incompressible binary mixtures.

Everything in this module is exact algebra on cell values: mixture
constants, the two density laws, the transforms between the
volume-fraction order parameter ``phi`` and the concentration order
parameter ``c``, and the diffusive-flux bookkeeping that connects the
mass-averaged velocity ``v`` with the volume-averaged velocity ``u``.

Jump/average convention used throughout (stated once to prevent sign
errors): for a per-constituent quantity ``a`` with values ``a1, a2``,

    jump(a) = (a1 - a2) / 2,      mean(a) = (a1 + a2) / 2.

With that convention ``alpha = -jump(rho)/mean(rho)``,
``beta = -jump(rho)/(rho1*rho2)`` and ``zeta = mean(rho)/(rho1*rho2)``.

Vector quantities are numpy arrays whose *first* axis is the spatial
component; any trailing shape (scalar, 1D field, 2D field) broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MixtureConstants",
    "make_constants",
    "rho_of_phi",
    "rho_of_c",
    "c_of_phi",
    "phi_of_c",
    "dc_dphi",
    "dphi_dc",
    "FluxBundle",
    "flux_bundle",
    "relate_fluxes",
    "kinetic_tensor_gap",
]

DEFAULT_OVERSHOOT_TOL = 1e-8


@dataclass(frozen=True)
class MixtureConstants:
    """Specific densities of the two constituents and derived constants.

    ``alpha`` is dimensionless, ``beta`` and ``zeta`` carry inverse-density
    units.  ``jump_rho = (rho1 - rho2)/2`` and ``mean_rho = (rho1 + rho2)/2``
    follow the module-level jump/average convention.
    """

    rho1: float
    rho2: float
    alpha: float
    beta: float
    zeta: float
    jump_rho: float
    mean_rho: float

    @property
    def matched(self) -> bool:
        return self.rho1 == self.rho2


def make_constants(rho1: float, rho2: float) -> MixtureConstants:
    """Build the constant set for specific densities ``rho1, rho2 > 0``."""
    rho1 = float(rho1)
    rho2 = float(rho2)
    if not (rho1 > 0.0) or not (rho2 > 0.0):
        raise ValueError(f"specific densities must be positive, got rho1={rho1}, rho2={rho2}")
    return MixtureConstants(
        rho1=rho1,
        rho2=rho2,
        alpha=(rho2 - rho1) / (rho1 + rho2),
        beta=(rho2 - rho1) / (2.0 * rho1 * rho2),
        zeta=(rho1 + rho2) / (2.0 * rho1 * rho2),
        jump_rho=0.5 * (rho1 - rho2),
        mean_rho=0.5 * (rho1 + rho2),
    )


def _clamp_order_parameter(x, name: str, tol: float):
    x = np.asarray(x, dtype=float)
    over = np.max(np.abs(x)) - 1.0 if x.size else 0.0
    if over > tol:
        raise ValueError(f"{name} out of range: exceeds [-1, 1] by {over:.3e} (tolerance {tol:.1e})")
    if over > 0.0:
        x = np.clip(x, -1.0, 1.0)
    return x


def rho_of_phi(phi, k: MixtureConstants, tol: float = DEFAULT_OVERSHOOT_TOL):
    """Mixture density as an affine function of the volume-fraction difference.

    Overshoot beyond ``[-1, 1]`` up to ``tol`` is clamped before evaluation
    (double-well dynamics overshoot transiently); larger overshoot raises.
    """
    phi = _clamp_order_parameter(phi, "phi", tol)
    return k.rho1 * (1.0 + phi) / 2.0 + k.rho2 * (1.0 - phi) / 2.0


def rho_of_c(c, k: MixtureConstants, tol: float = DEFAULT_OVERSHOOT_TOL):
    """Mixture density as a harmonic function of the concentration difference."""
    c = _clamp_order_parameter(c, "c", tol)
    inv = (1.0 + c) / (2.0 * k.rho1) + (1.0 - c) / (2.0 * k.rho2)
    return 1.0 / inv


def c_of_phi(phi, k: MixtureConstants):
    """Concentration difference c for a given volume-fraction difference phi."""
    phi = np.asarray(phi, dtype=float)
    return (k.jump_rho + k.mean_rho * phi) / (k.mean_rho + k.jump_rho * phi)


def phi_of_c(c, k: MixtureConstants):
    """Inverse of :func:`c_of_phi`."""
    c = np.asarray(c, dtype=float)
    return (-k.jump_rho + k.mean_rho * c) / (k.mean_rho - k.jump_rho * c)


def dc_dphi(phi, k: MixtureConstants):
    """Derivative c'(phi) = rho1*rho2 / rho(phi)^2."""
    rho = rho_of_phi(phi, k, tol=np.inf)
    return k.rho1 * k.rho2 / rho**2


def dphi_dc(c, k: MixtureConstants):
    """Derivative phi'(c) = rho(c)^2 / (rho1*rho2)."""
    rho = rho_of_c(c, k, tol=np.inf)
    return rho**2 / (k.rho1 * k.rho2)


@dataclass(frozen=True)
class FluxBundle:
    """Constituent kinematics and every derived diffusive flux.

    All fields are computed from the defining formulas only, never from the
    proportionality shortcuts, so the bundle can serve as one side of an
    identity audit.  Velocities and fluxes have the spatial component on
    axis 0.
    """

    phi1: np.ndarray
    phi2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    rho: np.ndarray
    v: np.ndarray          # mass-averaged velocity
    u: np.ndarray          # volume-averaged velocity
    w1: np.ndarray         # v1 - v
    w2: np.ndarray
    omega1: np.ndarray     # v1 - u
    omega2: np.ndarray
    h_v: np.ndarray        # phi1*w1 - phi2*w2
    J_v: np.ndarray        # rho~1*w1 - rho~2*w2
    h_u: np.ndarray        # phi1*omega1 - phi2*omega2
    J_u: np.ndarray        # rho~1*omega1 - rho~2*omega2
    Jtilde_u: np.ndarray   # rho~1*omega1 + rho~2*omega2
    rho1_partial: np.ndarray
    rho2_partial: np.ndarray


def flux_bundle(phi1, v1, v2, k: MixtureConstants) -> FluxBundle:
    """Derive mixture kinematics from constituent data ``(phi1, v1, v2)``."""
    phi1 = np.asarray(phi1, dtype=float)
    v1 = np.atleast_1d(np.asarray(v1, dtype=float))
    v2 = np.atleast_1d(np.asarray(v2, dtype=float))
    if np.any(phi1 < 0.0) or np.any(phi1 > 1.0):
        raise ValueError("phi1 must lie in [0, 1]")
    if v1.shape != v2.shape:
        raise ValueError(f"constituent velocities must share a shape, got {v1.shape} vs {v2.shape}")
    if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))):
        raise ValueError("constituent velocities must be finite")

    phi2 = 1.0 - phi1
    rho1_partial = k.rho1 * phi1
    rho2_partial = k.rho2 * phi2
    rho = rho1_partial + rho2_partial
    v = (rho1_partial * v1 + rho2_partial * v2) / rho
    u = phi1 * v1 + phi2 * v2
    w1, w2 = v1 - v, v2 - v
    omega1, omega2 = v1 - u, v2 - u
    return FluxBundle(
        phi1=phi1,
        phi2=phi2,
        v1=v1,
        v2=v2,
        rho=rho,
        v=v,
        u=u,
        w1=w1,
        w2=w2,
        omega1=omega1,
        omega2=omega2,
        h_v=phi1 * w1 - phi2 * w2,
        J_v=rho1_partial * w1 - rho2_partial * w2,
        h_u=phi1 * omega1 - phi2 * omega2,
        J_u=rho1_partial * omega1 - rho2_partial * omega2,
        Jtilde_u=rho1_partial * omega1 + rho2_partial * omega2,
        rho1_partial=rho1_partial,
        rho2_partial=rho2_partial,
    )


def relate_fluxes(h_u, rho, k: MixtureConstants) -> dict:
    """All diffusive fluxes as constant-factor rescalings of ``h_u``.

    Returns ``{"Jtilde_u", "J_u", "h_v", "J_v"}`` with
    Jtilde_u = jump(rho)*h_u, J_u = mean(rho)*h_u,
    h_v = (mean(rho)/rho)*h_u, J_v = (rho1*rho2/rho)*h_u.
    """
    h_u = np.asarray(h_u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("rho must be positive")
    return {
        "Jtilde_u": k.jump_rho * h_u,
        "J_u": k.mean_rho * h_u,
        "h_v": (k.mean_rho / rho) * h_u,
        "J_v": (k.rho1 * k.rho2 / rho) * h_u,
    }


def kinetic_tensor_gap(bundle: FluxBundle) -> np.ndarray:
    """Difference of the two peculiar-velocity kinetic tensors.

    Returns ``sum_j rho~j w_j (x) w_j - [sum_j rho~j omega_j (x) omega_j
    - Jtilde_u (x) Jtilde_u / rho]``, which is the zero tensor for any
    consistent bundle.  Output shape is ``(d, d) + field shape``.
    """
    def outer(a, b):
        return np.einsum("i...,j...->ij...", a, b)

    lhs = bundle.rho1_partial * outer(bundle.w1, bundle.w1) + bundle.rho2_partial * outer(
        bundle.w2, bundle.w2
    )
    rhs = (
        bundle.rho1_partial * outer(bundle.omega1, bundle.omega1)
        + bundle.rho2_partial * outer(bundle.omega2, bundle.omega2)
        - outer(bundle.Jtilde_u, bundle.Jtilde_u) / bundle.rho
    )
    return lhs - rhs
