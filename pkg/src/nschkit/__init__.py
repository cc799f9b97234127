"""Quasi-incompressible Navier-Stokes Cahn-Hilliard (NSCH) toolkit.

A desk-scale numerical laboratory for binary-mixture two-phase flow with
non-matching constituent densities.  The package provides

* the pointwise mixture algebra (densities, order-parameter transforms,
  diffusive-flux relations),
* periodic structured-grid fields and central-difference operators,
* the four order-parameter / free-energy-measure modeling choices and the
  transform lattice connecting their chemical potentials and pressures,
* constitutive models (stress, degenerate-mobility Fickian flux, reactive
  mass flux),
* a projection-based time stepper for the volume-averaged-velocity
  formulation, with mass-averaged-velocity and Lowengrub-Truskinovsky
  residual certification,
* a randomized audit engine that numerically certifies every equivalence
  identity the model family satisfies.
"""

from .mixture import (
    MixtureConstants,
    make_constants,
    rho_of_phi,
    rho_of_c,
    c_of_phi,
    phi_of_c,
    dc_dphi,
    dphi_dc,
    FluxBundle,
    flux_bundle,
    relate_fluxes,
    kinetic_tensor_gap,
)
from .grid import Grid, variational_derivative_fd, FourierCoeffs, random_fourier_coeffs
from .energy import (
    CHOICES,
    EnergyParams,
    EnergyReport,
    ChemState,
    gl_energy_density,
    free_energy_density,
    chemical_potential,
    relate_mu,
    transform_pressure,
    total_energy,
    restriction_expressions,
)
from .constitutive import (
    ConstitutiveParams,
    viscosity,
    mobility,
    mass_mobility,
    diffusive_flux,
    mass_flux,
    stress_tensor,
)
from .solver import (
    State,
    StepDiagnostics,
    SolverOptions,
    NSCHStepper,
    CFLError,
    LinearSolverError,
    reconstruct_v_form,
    lt_residual,
    shokrpour_pressure,
    shokrpour_flux_gap,
)
from .audit import AuditReport, CheckResult, run_audit, REGISTRY
from .config import RunConfig, parse_config, format_config
from .snapshots import write_snapshot, read_snapshot

__version__ = "0.1.0"
