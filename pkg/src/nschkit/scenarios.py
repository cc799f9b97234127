"""Named initial conditions for simulation runs.

Benchmark scenarios are artifact choices (the model family itself fixes no
initial data): seeded spinodal noise, a flat two-interface band, a uniform
state, and a single-phase flow used to exercise pure-fluid degeneracy.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, random_fourier_coeffs

__all__ = ["SCENARIOS", "initial_fields"]

SCENARIOS = ("uniform", "spinodal", "interface", "single-phase-flow")


def initial_fields(grid: Grid, scenario: str, *, mean=0.0, amplitude=0.05, seed=1,
                   width=0.05, u_amplitude=0.0, p_amplitude=0.0):
    """Return ``(phi, u, p)`` for a named scenario."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    rng = np.random.default_rng(seed)
    u = np.zeros(grid.vshape)
    p = np.zeros(grid.shape)

    if scenario == "uniform":
        phi = np.full(grid.shape, float(mean))
    elif scenario == "spinodal":
        noise = rng.uniform(-1.0, 1.0, size=grid.shape)
        phi = np.clip(mean + amplitude * noise, -0.999, 0.999)
    elif scenario == "interface":
        # flat band of phase 1 between x = lx/4 and 3 lx/4, tanh-smoothed
        x = grid.coords()[0]
        phi = np.tanh((x - 0.25 * grid.lx) / width) * np.tanh((0.75 * grid.lx - x) / width)
        phi = np.broadcast_to(phi, grid.shape).copy()
    else:  # single-phase-flow
        phi = np.ones(grid.shape)
        for comp in range(grid.dims):
            coeffs = random_fourier_coeffs(rng, grid.dims, modes=2)
            u[comp] = u_amplitude * coeffs.evaluate(grid)
        coeffs = random_fourier_coeffs(rng, grid.dims, modes=2)
        p = p_amplitude * coeffs.evaluate(grid)

    return phi, u, p
