"""Periodic cell-centered grids and second-order central-difference operators.

Field conventions
-----------------
* 1D scalar fields have shape ``(nx,)``; 2D scalar fields ``(ny, nx)`` with
  the x coordinate on the last axis (row-major storage iterates y, then x).
* Vector fields prepend a component axis: ``(d,) + scalar shape`` ordered
  ``[x]`` / ``[x, y]``.  Tensor fields prepend two axes ``(d, d)``; the
  divergence of a tensor contracts the *second* index,
  ``div(A)_i = d A_{ik} / d x_k``.

All stencils are periodic central differences, so ``grad`` and ``-div`` are
exact discrete adjoints and ``laplacian = div(grad(.))`` is the wide
five-point (per-dimension ``+/-2``) stencil.  The checkerboard null modes
this composition introduces are exposed through
:meth:`Grid.gradient_null_basis` so that solvers can pin them explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "variational_derivative_fd",
    "FourierCoeffs",
    "random_fourier_coeffs",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in one or two dimensions (``ny == 1`` means 1D)."""

    nx: int
    lx: float
    ny: int = 1
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4:
            raise ValueError(f"nx must be >= 4, got {self.nx}")
        if self.ny != 1 and self.ny < 4:
            raise ValueError(f"ny must be 1 (one-dimensional) or >= 4, got {self.ny}")
        if not (self.lx > 0.0 and self.ly > 0.0):
            raise ValueError("domain lengths must be positive")

    # -- geometry -----------------------------------------------------------

    @property
    def dims(self) -> int:
        return 2 if self.ny > 1 else 1

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx) if self.dims == 2 else (self.nx,)

    @property
    def vshape(self) -> tuple:
        return (self.dims,) + self.shape

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy if self.dims == 2 else self.dx

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    def coords(self):
        """Cell-center coordinate fields, one per dimension (x first)."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        if self.dims == 1:
            return (x,)
        y = (np.arange(self.ny) + 0.5) * self.dy
        X, Y = np.meshgrid(x, y)
        return X, Y

    def height(self):
        """Coordinate along which gravity acts: y in 2D, x in 1D."""
        return self.coords()[-1]

    # -- validation ---------------------------------------------------------

    def check_scalar(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"scalar field shape {f.shape} does not match grid {self.shape}")
        return f

    def check_vector(self, F) -> np.ndarray:
        F = np.asarray(F, dtype=float)
        if F.shape != self.vshape:
            raise ValueError(f"vector field shape {F.shape} does not match grid {self.vshape}")
        return F

    def check_tensor(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        want = (self.dims, self.dims) + self.shape
        if T.shape != want:
            raise ValueError(f"tensor field shape {T.shape} does not match grid {want}")
        return T

    # -- difference operators -------------------------------------------------

    def _axis(self, component: int) -> int:
        # component 0 = x lives on the last array axis, component 1 = y on axis 0
        return -1 if component == 0 else 0

    def dd(self, f, component: int) -> np.ndarray:
        """Central derivative of a scalar along spatial component 0 (x) or 1 (y)."""
        h = self.dx if component == 0 else self.dy
        ax = self._axis(component)
        return (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2.0 * h)

    def grad(self, f) -> np.ndarray:
        f = self.check_scalar(f)
        return np.stack([self.dd(f, c) for c in range(self.dims)])

    def div(self, F) -> np.ndarray:
        F = self.check_vector(F)
        out = self.dd(F[0], 0)
        for c in range(1, self.dims):
            out = out + self.dd(F[c], c)
        return out

    def laplacian(self, f) -> np.ndarray:
        """Wide Laplacian ``div(grad(f))``: (f[i+2] - 2 f[i] + f[i-2]) / (4 dx^2) per dim."""
        f = self.check_scalar(f)
        out = np.zeros_like(f)
        for c in range(self.dims):
            h = self.dx if c == 0 else self.dy
            ax = self._axis(c)
            out += (np.roll(f, -2, axis=ax) - 2.0 * f + np.roll(f, 2, axis=ax)) / (4.0 * h * h)
        return out

    def sym_grad(self, F) -> np.ndarray:
        """Symmetric gradient D_ij = (d_i F_j + d_j F_i)/2 of a vector field."""
        F = self.check_vector(F)
        d = self.dims
        D = np.empty((d, d) + self.shape)
        for i in range(d):
            for j in range(d):
                D[i, j] = 0.5 * (self.dd(F[j], i) + self.dd(F[i], j))
        return D

    def div_tensor(self, T) -> np.ndarray:
        """Row-wise divergence: out_i = sum_k d T[i, k] / d x_k."""
        T = self.check_tensor(T)
        d = self.dims
        out = np.empty((d,) + self.shape)
        for i in range(d):
            acc = self.dd(T[i, 0], 0)
            for kk in range(1, d):
                acc = acc + self.dd(T[i, kk], kk)
            out[i] = acc
        return out

    # -- reductions -----------------------------------------------------------

    def integrate(self, f) -> float:
        f = self.check_scalar(f)
        return float(f.sum()) * self.cell_volume

    def l2(self, f) -> float:
        """Cell-volume-weighted L2 norm of a scalar field."""
        f = np.asarray(f, dtype=float)
        return float(np.sqrt((f * f).sum() * self.cell_volume))

    def max_abs(self, f) -> float:
        return float(np.max(np.abs(f))) if np.asarray(f).size else 0.0

    # -- discrete null space -------------------------------------------------

    def gradient_null_basis(self) -> list:
        """Orthogonal basis of the null space of the central gradient.

        The constant mode always belongs; for each even-sized dimension the
        corresponding Nyquist checkerboard does too (central differences skip
        neighbors).  Returned fields are unnormalized +/-1 patterns.
        """
        basis = [np.ones(self.shape)]
        idx_x = np.arange(self.nx)
        cb_x = np.where(idx_x % 2 == 0, 1.0, -1.0)
        if self.dims == 1:
            if self.nx % 2 == 0:
                basis.append(cb_x.copy())
            return basis
        idx_y = np.arange(self.ny)
        cb_y = np.where(idx_y % 2 == 0, 1.0, -1.0)
        ones_x = np.ones(self.nx)
        ones_y = np.ones(self.ny)
        if self.nx % 2 == 0:
            basis.append(np.outer(ones_y, cb_x))
        if self.ny % 2 == 0:
            basis.append(np.outer(cb_y, ones_x))
        if self.nx % 2 == 0 and self.ny % 2 == 0:
            basis.append(np.outer(cb_y, cb_x))
        return basis

    def remove_null_modes(self, f) -> np.ndarray:
        """Project out the gradient null-space components of a scalar field."""
        f = self.check_scalar(f).copy()
        for e in self.gradient_null_basis():
            f -= (np.vdot(e, f) / np.vdot(e, e)) * e
        return f

    # -- spectral helpers (preconditioning) ------------------------------------

    def wide_laplacian_symbol(self) -> np.ndarray:
        """FFT symbol of the wide Laplacian: -sum_d sin^2(k_d h_d) / h_d^2."""
        kx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)
        sx = -np.sin(kx * self.dx) ** 2 / self.dx**2
        if self.dims == 1:
            return sx
        ky = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)
        sy = -np.sin(ky * self.dy) ** 2 / self.dy**2
        return sy[:, None] + sx[None, :]


def variational_derivative_fd(energy, f, grid: Grid, h: float) -> np.ndarray:
    """Brute-force variational derivative of a discrete energy functional.

    Perturbs each cell value by ``+/- h`` and central-differences the energy,
    scaled by ``1/(h * cell volume)``.  Intended purely as a test oracle for
    closed-form chemical potentials; cost is ``2 N`` energy evaluations.
    """
    if not (h > 0.0):
        raise ValueError("perturbation step h must be positive")
    f = grid.check_scalar(f).copy()
    out = np.empty_like(f)
    flat = f.reshape(-1)
    res = out.reshape(-1)
    cv = grid.cell_volume
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        ep = float(energy(f))
        flat[i] = old - h
        em = float(energy(f))
        flat[i] = old
        res[i] = (ep - em) / (2.0 * h * cv)
    return out


@dataclass(frozen=True)
class FourierCoeffs:
    """A fixed band-limited periodic function, evaluable on any grid.

    Used for grid-refinement studies: the same continuum function must be
    sampled on every resolution level.
    """

    dims: int
    kx: np.ndarray
    ky: np.ndarray
    amp_cos: np.ndarray
    amp_sin: np.ndarray

    def evaluate(self, grid: Grid, amplitude: float = 1.0) -> np.ndarray:
        if grid.dims != self.dims:
            raise ValueError("grid dimensionality does not match the stored coefficients")
        if self.dims == 1:
            (x,) = grid.coords()
            phase = 2.0 * np.pi * np.multiply.outer(self.kx, x / grid.lx)
        else:
            X, Y = grid.coords()
            phase = 2.0 * np.pi * (
                np.multiply.outer(self.kx, X / grid.lx) + np.multiply.outer(self.ky, Y / grid.ly)
            )
        cshape = (-1,) + (1,) * (phase.ndim - 1)
        f = (self.amp_cos.reshape(cshape) * np.cos(phase)).sum(axis=0)
        f += (self.amp_sin.reshape(cshape) * np.sin(phase)).sum(axis=0)
        return amplitude * f


def random_fourier_coeffs(rng: np.random.Generator, dims: int, modes: int = 4) -> FourierCoeffs:
    """Draw a random smooth periodic function from the lowest ``modes`` modes.

    Coefficients decay like ``1/(1+|k|^2)`` and the result is normalized to
    unit max amplitude on a reference sampling, so callers can scale safely.
    """
    if dims == 1:
        kx = np.arange(modes + 1)
        ky = np.zeros_like(kx)
    else:
        kx, ky = np.meshgrid(np.arange(modes + 1), np.arange(-modes, modes + 1))
        keep = ~((kx == 0) & (ky < 0))  # avoid double-counting conjugate pairs
        kx, ky = kx[keep].ravel(), ky[keep].ravel()
    k2 = kx.astype(float) ** 2 + ky.astype(float) ** 2
    scale = 1.0 / (1.0 + k2)
    amp_cos = rng.standard_normal(kx.shape) * scale
    amp_sin = rng.standard_normal(kx.shape) * scale
    amp_sin[k2 == 0] = 0.0
    coeffs = FourierCoeffs(dims=dims, kx=kx, ky=ky, amp_cos=amp_cos, amp_sin=amp_sin)
    ref = Grid(nx=64, lx=1.0) if dims == 1 else Grid(nx=64, lx=1.0, ny=64, ly=1.0)
    peak = np.max(np.abs(coeffs.evaluate(ref)))
    if peak > 0.0:
        coeffs = FourierCoeffs(
            dims=dims, kx=kx, ky=ky, amp_cos=amp_cos / peak, amp_sin=amp_sin / peak
        )
    return coeffs
