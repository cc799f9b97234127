"""Projection time stepper for the volume-averaged-velocity NSCH formulation.

One step advances ``(phi, u, p, mu)`` through four substeps:

1. **Phase update** (linear implicit).  The phase equation is discretized in
   the conservative form that comes straight out of the constituent balances,

       (phi^{n+1} - phi^n)/dt + div(phi^n u^n)
           - div(M_u(phi^n) grad(mu^{n+1} + alpha p^n)) = zeta gamma^{n+1},

   with the stabilized linear splitting
   ``mu^{n+1} = (sigma/eps)(W'(phi^n) + S (phi^{n+1} - phi^n))
   - sigma eps lap(phi^{n+1})`` and ``gamma^{n+1} =
   -m(phi^n)(mu^{n+1} + alpha (p^n + g))``.  The scalar offsets ``g``
   (one per discrete gradient null mode: the mean plus, on even grids, the
   checkerboards) are Lagrange multipliers on the global volume balance: a
   closed periodic box admits ``div u = beta gamma`` only if gamma is
   orthogonal to the null modes, and only the reactive flux sees those
   pressure components.  They are solved for exactly via superposition of
   linear solves and vanish whenever ``alpha = 0`` or mass transfer is off.

2. **Momentum predictor** (explicit).  ``q = rho u + Jtilde`` is advanced
   with the convective tensor ``q (x) q / rho`` (identically
   ``rho u (x) u + Jtilde (x) u + u (x) Jtilde + Jtilde (x) Jtilde / rho``),
   the capillary tensor and isotropic stress at ``(phi, mu)^{n+1}``, the
   viscous stress built from the reconstructed mass-averaged velocity
   ``v^n = u^n + Jtilde^n / rho^n``, the old pressure gradient, and gravity.
   ``Jtilde^{n+1} = -jump(rho) M_u(phi^n) grad(mu^{n+1} + alpha p^n)`` is
   exactly the flux the phase update used.

3. **Projection.**  ``div((1/rho^{n+1}) grad dp) = (div u* - beta
   gamma^{n+1})/dt`` is solved with conjugate gradients on the composed
   (wide) stencil, so the corrected velocity satisfies the constraint to the
   solver tolerance; the stored pressure is pinned to the null-mode-free
   gauge.

4. **Diagnostics**: energy report, conserved totals, constraint residual,
   and the mass-averaged-formulation phase residual.

Coefficients ``M, m, nu, rho`` are evaluated at ``phi^n`` inside the
implicit solve (time-lagged, keeping every solve linear); the projection
uses ``rho^{n+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, bicgstab, cg, gmres

from . import constitutive as cst
from . import energy as en
from .grid import Grid
from .mixture import MixtureConstants, c_of_phi, rho_of_phi

__all__ = [
    "CFLError",
    "LinearSolverError",
    "SolverOptions",
    "State",
    "StepDiagnostics",
    "NSCHStepper",
    "VFormResult",
    "LTResult",
    "reconstruct_v_form",
    "lt_residual",
    "shokrpour_pressure",
    "pressure_from_shokrpour",
    "shokrpour_flux_gap",
]


class CFLError(RuntimeError):
    """Raised when the requested step exceeds the advective CFL limit."""

    def __init__(self, dt: float, max_dt: float):
        super().__init__(f"dt = {dt:.6e} exceeds the CFL-stable step {max_dt:.6e}")
        self.dt = dt
        self.max_dt = max_dt


class LinearSolverError(RuntimeError):
    """Raised when an inner Krylov solve stalls; carries the residual history."""

    def __init__(self, label: str, history):
        tail = ", ".join(f"{r:.3e}" for r in history[-5:])
        super().__init__(f"{label} solve did not converge; residual tail [{tail}]")
        self.label = label
        self.history = list(history)


@dataclass(frozen=True)
class SolverOptions:
    """Numerical knobs of the stepper."""

    cfl: float = 0.4
    stabilization: float = 2.0       # S in the linear splitting; >= max|W''|/2 on the phi range
    linear_tol: float = 1e-10
    maxiter: int = 2000
    overshoot_tol: float = 0.05      # admissible |phi| excess over 1 during transients
    upwind: bool = False
    evolve_velocity: bool = True


@dataclass
class State:
    """Unknowns of the volume-averaged formulation at one time level.

    ``rho``, ``jtilde`` and ``gamma`` are caches derived from the primary
    fields during the step that produced the state; ``gauge`` holds the
    compatibility offsets applied to the pressure inside the reactive flux.
    """

    t: float
    phi: np.ndarray
    u: np.ndarray
    p: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    jtilde: np.ndarray
    gamma: np.ndarray
    gauge: tuple = ()


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step audit quantities."""

    energy: en.EnergyReport
    mass_total: float
    phase_total: float
    div_constraint_residual: float
    v_form_phase_residual: float
    dt: float
    max_velocity: float
    ch_iterations: int
    projection_iterations: int
    pressure_gauge: tuple


def _solve_krylov(op, b, M, rtol, maxiter, label, symmetric=False):
    """Solve ``op x = b`` with BiCGStab/CG, GMRES fallback; track residuals."""
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    history = []

    def track(xk):
        history.append(float(np.linalg.norm(b - op.matvec(xk))) / bnorm)

    solver = cg if symmetric else bicgstab
    x, info = solver(op, b, M=M, rtol=rtol, atol=0.0, maxiter=maxiter, callback=track)
    if info == 0:
        return x, len(history)
    x, info = gmres(op, b, M=M, rtol=rtol, atol=0.0, maxiter=maxiter, restart=50, callback=track, callback_type="x")
    if info != 0:
        raise LinearSolverError(label, history)
    return x, len(history)


class NSCHStepper:
    """Time integrator for one grid / parameter set."""

    def __init__(
        self,
        grid: Grid,
        constants: MixtureConstants,
        energy_params: en.EnergyParams,
        constitutive_params: cst.ConstitutiveParams,
        gravity: float = 0.0,
        options: SolverOptions = SolverOptions(),
    ):
        constitutive_params.check_lambda(grid.dims)
        self.grid = grid
        self.k = constants
        self.ep = energy_params
        self.cp = constitutive_params
        self.gravity = float(gravity)
        self.opts = options
        self._null_basis = [e / np.linalg.norm(e) for e in grid.gradient_null_basis()]
        self._symbol = grid.wide_laplacian_symbol()

    # -- small helpers -------------------------------------------------------

    def gravity_vector(self) -> np.ndarray:
        gvec = np.zeros(self.grid.vshape)
        gvec[-1] = -self.gravity
        return gvec

    def _project_null(self, f):
        out = f.copy()
        for e in self._null_basis:
            out -= np.vdot(e, out) * e
        return out

    def _fft(self, f):
        return np.fft.fftn(f)

    def _ifft(self, F):
        return np.real(np.fft.ifftn(F))

    def mu_closed_form(self, phi):
        return en.chemical_potential("phi-volume", phi, self.grid, self.ep, self.k)

    def _mu_split(self, phi_n):
        si = self.ep.sigma / self.ep.epsilon
        S = self.opts.stabilization
        mu_exp = si * (self.ep.well_derivative(phi_n) - S * phi_n)

        def mu_imp(phi):
            return si * S * phi - self.ep.sigma * self.ep.epsilon * self.grid.laplacian(phi)

        return mu_exp, mu_imp

    def _transport_div(self, phi, u):
        """Conservative divergence of the phase transport flux phi*u."""
        g = self.grid
        if not self.opts.upwind:
            return g.div(phi * u)
        out = np.zeros_like(phi)
        for comp in range(g.dims):
            ax = -1 if comp == 0 else 0
            h = g.dx if comp == 0 else g.dy
            uf = 0.5 * (u[comp] + np.roll(u[comp], -1, axis=ax))  # face i+1/2
            upw = np.where(uf > 0.0, phi, np.roll(phi, -1, axis=ax))
            flux = uf * upw
            out += (flux - np.roll(flux, 1, axis=ax)) / h
        return out

    def max_stable_dt(self, state: State) -> float:
        vmax = float(np.max(np.abs(state.u))) if state.u.size else 0.0
        if vmax == 0.0:
            return np.inf
        h = min(self.grid.dx, self.grid.dy) if self.grid.dims == 2 else self.grid.dx
        return self.opts.cfl * h / vmax

    # -- state construction ----------------------------------------------------

    def initial_state(self, phi, u=None, p=None, t: float = 0.0) -> State:
        """Assemble a consistent state: mu from phi, gauge offsets, projected u."""
        g = self.grid
        phi = g.check_scalar(phi).copy()
        self._check_overshoot(phi)
        u = np.zeros(g.vshape) if u is None else g.check_vector(u).copy()
        p = np.zeros(g.shape) if p is None else g.check_scalar(p).copy()
        p = self._project_null(p)
        mu = self.mu_closed_form(phi)
        rho = rho_of_phi(phi, self.k, tol=self.opts.overshoot_tol)

        mh = cst.mass_mobility(phi, self.cp)
        gauge = self._initial_gauge(mu, p, mh)
        gamma = -mh * (mu + self.k.alpha * (p + self._gauge_field(gauge)))
        if self.opts.evolve_velocity:
            u = self._project_velocity(u, rho, gamma, scale=1.0)[0]
        mv = cst.mobility(phi, self.cp)
        mu_coeff = (rho / self.k.mean_rho) * mv
        jtilde = -self.k.jump_rho * mu_coeff * g.grad(mu + self.k.alpha * p)
        return State(t=t, phi=phi, u=u, p=p, mu=mu, rho=rho, jtilde=jtilde, gamma=gamma, gauge=gauge)

    def _check_overshoot(self, phi):
        over = float(np.max(np.abs(phi))) - 1.0
        if over > self.opts.overshoot_tol:
            raise ValueError(
                f"|phi| exceeds 1 by {over:.3e} (> overshoot_tol {self.opts.overshoot_tol:.1e})"
            )

    def _gauge_field(self, gauge):
        if not gauge:
            return np.zeros(self.grid.shape)
        out = np.zeros(self.grid.shape)
        for coeff, e in zip(gauge, self._null_basis):
            out += coeff * e
        return out

    def _initial_gauge(self, mu, p, mh):
        """Offsets making the reactive flux orthogonal to the null modes (no solve)."""
        if self.k.alpha == 0.0 or self.cp.m0 == 0.0 or float(mh.sum()) <= 0.0:
            return ()
        nb = self._null_basis
        A = np.array([[self.k.alpha * np.vdot(ei, mh * ej) for ej in nb] for ei in nb])
        rhs = -np.array([np.vdot(ei, mh * (mu + self.k.alpha * p)) for ei in nb])
        coeffs, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        return tuple(float(cc) for cc in coeffs)

    # -- phase update ------------------------------------------------------------

    def _ch_operator(self, M_u, mh, mu_imp, dt):
        g = self.grid
        zeta = self.k.zeta

        def K(x):
            return -g.div(M_u * g.grad(x)) + zeta * mh * x

        def matvec_field(phi):
            return phi + dt * K(mu_imp(phi))

        return K, matvec_field

    def _ch_preconditioner(self, M_u, mh, dt):
        s = self._symbol  # symbol of the wide laplacian (<= 0)
        si = self.ep.sigma / self.ep.epsilon
        Mbar = float(np.mean(M_u))
        mbar = float(np.mean(mh)) * self.k.zeta
        sym = 1.0 + dt * (Mbar * (-s) + mbar) * (
            si * self.opts.stabilization - self.ep.sigma * self.ep.epsilon * s
        )

        def apply(r):
            f = r.reshape(self.grid.shape)
            return (self._ifft(self._fft(f) / sym)).reshape(-1)

        n = self.grid.ncells
        return LinearOperator((n, n), matvec=apply)

    def _phase_update(self, state: State, dt: float):
        g = self.grid
        k = self.k
        phi_n, u_n, p_n = state.phi, state.u, state.p
        rho_n = state.rho
        M_v = cst.mobility(phi_n, self.cp)
        M_u = (rho_n / k.mean_rho) * M_v
        mh = cst.mass_mobility(phi_n, self.cp)
        mu_exp, mu_imp = self._mu_split(phi_n)

        K, matvec_field = self._ch_operator(M_u, mh, mu_imp, dt)
        n = g.ncells
        op = LinearOperator(
            (n, n), matvec=lambda x: matvec_field(x.reshape(g.shape)).reshape(-1)
        )
        M_pre = self._ch_preconditioner(M_u, mh, dt)

        transport = self._transport_div(phi_n, u_n) if self.opts.evolve_velocity else 0.0
        base_rhs = phi_n - dt * transport - dt * K(mu_exp + k.alpha * p_n)

        iters = 0

        def solve(rhs, label):
            nonlocal iters
            x, it = _solve_krylov(
                op, rhs.reshape(-1), M_pre, self.opts.linear_tol, self.opts.maxiter, label
            )
            iters += it
            return x.reshape(g.shape)

        phi_base = solve(base_rhs, "phase")
        mu_base = mu_exp + mu_imp(phi_base)

        gauge = ()
        phi_new, mu_new = phi_base, mu_base
        need_gauge = k.alpha != 0.0 and self.cp.m0 > 0.0 and float(mh.sum()) > 0.0
        if need_gauge:
            nb = self._null_basis
            dphi = []
            dmu = []
            for e in nb:
                x = solve(-dt * K(k.alpha * e), "phase-gauge")
                dphi.append(x)
                dmu.append(mu_imp(x))
            # require <e_i, gamma> = 0 with gamma = -mh (mu + alpha p_n + alpha sum g_j e_j)
            A = np.array(
                [
                    [np.vdot(ei, mh * (dmu[j] + k.alpha * nb[j])) for j in range(len(nb))]
                    for ei in nb
                ]
            )
            rhs_g = -np.array([np.vdot(ei, mh * (mu_base + k.alpha * p_n)) for ei in nb])
            coeffs, *_ = np.linalg.lstsq(A, rhs_g, rcond=None)
            gauge = tuple(float(cc) for cc in coeffs)
            phi_new = phi_base + sum(cc * x for cc, x in zip(gauge, dphi))
            mu_new = mu_base + sum(cc * x for cc, x in zip(gauge, dmu))

        self._check_overshoot(phi_new)
        gamma = -mh * (mu_new + k.alpha * (p_n + self._gauge_field(gauge)))
        return phi_new, mu_new, gamma, gauge, M_u, iters

    # -- momentum and projection ---------------------------------------------------

    def _project_velocity(self, u_star, rho_new, gamma, scale: float):
        """Correct ``u_star`` so that div u = beta*gamma; returns (u, dp, iters).

        ``scale`` is the time step: the Poisson problem is formulated for the
        pressure increment, u <- u_star - scale*(1/rho) grad dp.
        """
        g = self.grid
        rhs = (g.div(u_star) - self.k.beta * gamma) / scale
        rhs = self._project_null(rhs)

        inv_rho = 1.0 / rho_new

        def L(x):
            f = x.reshape(g.shape)
            return g.div(inv_rho * g.grad(f)).reshape(-1)

        n = g.ncells
        op = LinearOperator((n, n), matvec=L)
        sym = self._symbol * float(np.mean(inv_rho))
        safe = np.where(sym == 0.0, 1.0, sym)

        def apply(r):
            f = r.reshape(g.shape)
            out = self._ifft(np.where(sym == 0.0, 0.0, self._fft(f) / safe))
            return out.reshape(-1)

        M_pre = LinearOperator((n, n), matvec=apply)
        dp_flat, iters = _solve_krylov(
            op, rhs.reshape(-1), M_pre, self.opts.linear_tol, self.opts.maxiter,
            "pressure", symmetric=True,
        )
        dp = self._project_null(dp_flat.reshape(g.shape))
        u_new = u_star - scale * inv_rho * g.grad(dp)
        return u_new, dp, iters

    def _momentum_predictor(self, state: State, dt, phi_new, mu_new, rho_new, jtilde_new):
        g = self.grid
        rho_n, u_n, jt_n, p_n = state.rho, state.u, state.jtilde, state.p
        q_n = rho_n * u_n + jt_n
        # div(rho v (x) v) written through q = rho*v: covers all three Jtilde cross terms
        conv = g.div_tensor(np.einsum("i...,j...->ij...", q_n, q_n) / rho_n)
        kort = g.div_tensor(
            self.ep.sigma
            * self.ep.epsilon
            * np.einsum("i...,j...->ij...", g.grad(phi_new), g.grad(phi_new))
        )
        iso = g.grad(mu_new * phi_new - en.gl_energy_density(phi_new, g, self.ep))
        v_n = u_n + jt_n / rho_n
        nu_n = cst.viscosity(state.phi, self.cp)
        visc_tensor = 2.0 * nu_n * g.sym_grad(v_n)
        divv = g.div(v_n)
        for i in range(g.dims):
            visc_tensor[i, i] += nu_n * self.cp.lam * divv
        visc = g.div_tensor(visc_tensor)
        grav = rho_new * self.gravity_vector()
        q_star = q_n - dt * (conv + g.grad(p_n) + kort + iso - visc - grav)
        return (q_star - jtilde_new) / rho_new

    # -- the full step ------------------------------------------------------------

    def step(self, state: State, dt: float):
        if not (dt > 0.0):
            raise ValueError("dt must be positive")
        max_dt = self.max_stable_dt(state)
        if dt > max_dt:
            raise CFLError(dt, max_dt)
        g = self.grid
        k = self.k

        phi_new, mu_new, gamma, gauge, M_u_n, ch_iters = self._phase_update(state, dt)
        rho_new = rho_of_phi(phi_new, k, tol=self.opts.overshoot_tol)
        jtilde_new = -k.jump_rho * M_u_n * g.grad(mu_new + k.alpha * state.p)

        proj_iters = 0
        if self.opts.evolve_velocity:
            u_star = self._momentum_predictor(state, dt, phi_new, mu_new, rho_new, jtilde_new)
            u_new, dp, proj_iters = self._project_velocity(u_star, rho_new, gamma, scale=dt)
            p_new = self._project_null(state.p + dp)
        else:
            u_new = state.u.copy()
            p_new = state.p.copy()

        new = State(
            t=state.t + dt,
            phi=phi_new,
            u=u_new,
            p=p_new,
            mu=mu_new,
            rho=rho_new,
            jtilde=jtilde_new,
            gamma=gamma,
            gauge=gauge,
        )
        diag = self._diagnostics(state, new, dt, ch_iters, proj_iters)
        return new, diag

    def total_energy(self, state: State) -> en.EnergyReport:
        return en.total_energy(
            self.grid, state.phi, state.u, self.ep, self.k,
            g=self.gravity, jtilde=state.jtilde, time=state.t,
        )

    def _diagnostics(self, old: State, new: State, dt, ch_iters, proj_iters) -> StepDiagnostics:
        g = self.grid
        div_res = g.max_abs(g.div(new.u) - self.k.beta * new.gamma)
        vform = reconstruct_v_form(self, old, new, dt)
        return StepDiagnostics(
            energy=self.total_energy(new),
            mass_total=g.integrate(new.rho),
            phase_total=g.integrate(new.phi),
            div_constraint_residual=div_res,
            v_form_phase_residual=vform.phase_residual_norm,
            dt=dt,
            max_velocity=float(np.max(np.abs(new.u))),
            ch_iterations=ch_iters,
            projection_iterations=proj_iters,
            pressure_gauge=new.gauge,
        )


# -- formulation-equivalence residuals ------------------------------------------


@dataclass(frozen=True)
class VFormResult:
    """Mass-averaged-velocity formulation residuals on a discrete step pair."""

    v: np.ndarray
    mass_residual: np.ndarray
    phase_residual: np.ndarray
    mass_residual_norm: float
    phase_residual_norm: float


@dataclass(frozen=True)
class LTResult:
    """Concentration/mass-measure (quasi-incompressible) formulation residuals."""

    continuity_residual: np.ndarray
    phase_residual: np.ndarray
    continuity_residual_norm: float
    phase_residual_norm: float


def reconstruct_v_form(stepper: NSCHStepper, prev: State, curr: State, dt: float) -> VFormResult:
    """Evaluate the mass-averaged-velocity balance laws on a computed step.

    ``v = u + Jtilde/rho``; residuals of the mixture mass balance and the
    conservative phase equation vanish at the scheme's truncation order under
    simultaneous time/space refinement.
    """
    g = stepper.grid
    k = stepper.k
    v = curr.u + curr.jtilde / curr.rho
    mass_res = (curr.rho - prev.rho) / dt + g.div(curr.rho * v)
    M_v = cst.mobility(curr.phi, stepper.cp)
    h_v = -M_v * g.grad(curr.mu + k.alpha * curr.p)
    phase_res = (
        (curr.phi - prev.phi) / dt
        + g.div(curr.phi * v)
        + g.div(h_v)
        - k.zeta * curr.gamma
    )
    return VFormResult(
        v=v,
        mass_residual=mass_res,
        phase_residual=phase_res,
        mass_residual_norm=g.l2(mass_res),
        phase_residual_norm=g.l2(phase_res),
    )


def lt_residual(stepper: NSCHStepper, prev: State, curr: State, dt: float) -> LTResult:
    """Evaluate the concentration/mass-measure formulation on a computed step.

    The state is transformed to ``(c, mu_cmass, p_cmass)`` and the
    quasi-incompressible continuity equation ``div v + (1/rho) rho'(c)
    cdot = 0`` plus the phase equation ``rho cdot - div(mtilde grad(mu_cmass
    + beta p_cmass)) = gamma`` are evaluated with the mapped mobility
    ``mtilde = M_v / zeta^2`` (the flux identification ``h_v = zeta J_v``
    applied twice: once to the flux, once to its driving gradient).
    """
    g = stepper.grid
    k = stepper.k
    c_prev = c_of_phi(prev.phi, k)
    c_curr = c_of_phi(curr.phi, k)
    v = curr.u + curr.jtilde / curr.rho
    cdot = (c_curr - c_prev) / dt + (v * g.grad(c_curr)).sum(axis=0)
    cont = g.div(v) - k.beta * curr.rho * cdot  # rho'(c) = -beta rho^2

    mu_cc = en.relate_mu("phi-volume", "c-mass", curr.mu, curr.phi, g, stepper.ep, k)
    p_cc = en.transform_pressure("phi-volume", "c-mass", curr.p, curr.phi, g, stepper.ep, k)
    arg = mu_cc + k.beta * p_cc
    M_v = cst.mobility(curr.phi, stepper.cp)
    phase = curr.rho * cdot - g.div((M_v / k.zeta**2) * g.grad(arg)) - curr.gamma
    return LTResult(
        continuity_residual=cont,
        phase_residual=phase,
        continuity_residual_norm=g.l2(cont),
        phase_residual_norm=g.l2(phase),
    )


# -- scaled-pressure (p*) reformulation -------------------------------------------


def shokrpour_pressure(phi, p, k: MixtureConstants) -> np.ndarray:
    """Scaled pressure ``p* = p (1 - alpha phi)`` of the rescaled formulation."""
    phi = np.asarray(phi, dtype=float)
    factor = 1.0 - k.alpha * phi
    if np.any(factor <= 0.0):
        raise ValueError("1 - alpha*phi must stay positive; order parameter out of range")
    return np.asarray(p, dtype=float) * factor


def pressure_from_shokrpour(phi, p_star, k: MixtureConstants) -> np.ndarray:
    """Inverse map ``p = p* / (1 - alpha phi)``; exact round trip."""
    phi = np.asarray(phi, dtype=float)
    factor = 1.0 - k.alpha * phi
    if np.any(factor <= 0.0):
        raise ValueError("1 - alpha*phi must stay positive; order parameter out of range")
    return np.asarray(p_star, dtype=float) / factor


def shokrpour_flux_gap(
    grid: Grid,
    phi,
    mu,
    p,
    k: MixtureConstants,
    cparams: cst.ConstitutiveParams,
) -> np.ndarray:
    """Difference between the rescaled-pressure flux and the standard flux.

    Returns ``div(M grad(mu - p* jump(rho)/rho)) - div(M grad(mu + alpha p))``
    with ``p* = p (1 - alpha phi)``; identically zero because the two flux
    arguments agree pointwise.
    """
    phi = grid.check_scalar(phi)
    rho = k.mean_rho + k.jump_rho * phi
    p_star = shokrpour_pressure(phi, p, k)
    M_v = cst.mobility(phi, cparams)
    lhs = grid.div(M_v * grid.grad(mu - p_star * k.jump_rho / rho))
    rhs = grid.div(M_v * grid.grad(mu + k.alpha * np.asarray(p, dtype=float)))
    return lhs - rhs
