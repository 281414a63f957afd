"""Differential and integral operators on the oblique grid.

Horizontal derivatives are pseudo-spectral (Fourier) and act level by level;
the axis direction uses 3-point finite differences and trapezoid quadrature
on the uniform zeta nodes.  The discrete axis mean and the discrete inner
product share the same trapezoid weights, which makes the mean/fluctuation
split an exact L2-orthogonal projection in floating point, not just up to
truncation error.

All operators accept bare float64 arrays: (nx, ny) for fields constant along
the axis, (nx, ny, nz+1) for node-centered 3D fields.  They are pure; inputs
are never modified.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .errors import NonEllipticError, SolvabilityError
from .grid import ObliqueGrid
from .rotation import build_matrix_set


class SpectralWorkspace:
    """Precomputed wavenumbers, quadrature weights and solver spectra for one grid."""

    def __init__(self, grid: ObliqueGrid):
        self.grid = grid
        nx, ny, nz = grid.nx, grid.ny, grid.nz
        self.s = grid.s
        self.c = grid.c
        self.mats = build_matrix_set(grid.tilt)

        kx = 2.0 * np.pi * sfft.fftfreq(nx, d=grid.lx / nx)
        ky = 2.0 * np.pi * sfft.rfftfreq(ny, d=grid.ly / ny)
        # Nyquist modes are zeroed in first-derivative multipliers only; the
        # Laplacian and the Poisson division keep them so the pair inverts
        # exactly.
        kx_d = kx.copy()
        kx_d[nx // 2] = 0.0
        ky_d = ky.copy()
        ky_d[-1] = 0.0
        self._ikx = 1j * kx_d[:, None]
        self._iky = 1j * ky_d[None, :]
        self._k2 = kx[:, None] ** 2 + ky[None, :] ** 2

        mx = np.rint(sfft.fftfreq(nx) * nx).astype(int)
        my = np.arange(ny // 2 + 1)
        self._dealias_mask = (np.abs(mx)[:, None] <= nx // 3) & (my[None, :] <= ny // 3)

        dz = grid.dzeta
        w = np.full(nz + 1, dz)
        w[0] = w[-1] = 0.5 * dz
        w.setflags(write=False)
        self.weights_zeta = w
        self._cell_area = (grid.lx / nx) * (grid.ly / ny)

        # DST-I spectrum of the 3-point homogeneous-Dirichlet second difference.
        j = np.arange(1, nz)
        self._d2_eigs = (2.0 * np.cos(np.pi * j / nz) - 2.0) / dz**2

    # -- transforms -------------------------------------------------------

    def _fft(self, f):
        return sfft.rfft2(f, axes=(0, 1))

    def _ifft(self, F):
        return sfft.irfft2(F, s=(self.grid.nx, self.grid.ny), axes=(0, 1))

    def _mul(self, f, mult2d):
        m = mult2d if f.ndim == 2 else mult2d[:, :, None]
        return self._ifft(self._fft(f) * m)

    # -- horizontal spectral operators ------------------------------------

    def d_dx(self, f):
        return self._mul(np.asarray(f), self._ikx * np.ones_like(self._iky))

    def d_dy(self, f):
        return self._mul(np.asarray(f), np.ones_like(self._ikx) * self._iky)

    def laplacian_h(self, f):
        return self._mul(np.asarray(f), -self._k2)

    def grad_h(self, f):
        F = self._fft(np.asarray(f))
        if F.ndim == 3:
            return self._ifft(F * self._ikx[:, :, None]), self._ifft(F * self._iky[:, :, None])
        return self._ifft(F * self._ikx), self._ifft(F * self._iky)

    def perp_grad(self, f):
        """(-d/dy, d/dx) of a scalar."""
        fx, fy = self.grad_h(f)
        return -fy, fx

    def div_h(self, fx, fy):
        return self.d_dx(fx) + self.d_dy(fy)

    def perp_div(self, fx, fy):
        """d/dx of the second component minus d/dy of the first (2D curl)."""
        return self.d_dx(fy) - self.d_dy(fx)

    def dealias(self, f):
        """Zero all Fourier modes above the 2/3 cutoff in either direction."""
        return self._mul(np.asarray(f), self._dealias_mask.astype(float))

    def hyperdiffuse(self, f, kappa: float, dt: float):
        """Exact integrating factor for d/dt f = -kappa (Lap_h)^2 f over one step."""
        return self._mul(np.asarray(f), np.exp(-kappa * dt * self._k2**2))

    # -- axis operations ---------------------------------------------------

    def mean_along_axis(self, f):
        """Trapezoid average along the rotation axis; returns an (nx, ny) array."""
        return self.s * np.tensordot(np.asarray(f), self.weights_zeta, axes=([2], [0]))

    def hat_part(self, f):
        """Deviation from the axis mean, broadcast back along zeta."""
        f = np.asarray(f)
        return f - self.mean_along_axis(f)[:, :, None]

    def d_dzeta(self, f):
        """Second-order derivative along the axis coordinate."""
        f = np.asarray(f)
        dz = self.grid.dzeta
        out = np.empty_like(f)
        out[:, :, 1:-1] = (f[:, :, 2:] - f[:, :, :-2]) / (2.0 * dz)
        out[:, :, 0] = (-3.0 * f[:, :, 0] + 4.0 * f[:, :, 1] - f[:, :, 2]) / (2.0 * dz)
        out[:, :, -1] = (3.0 * f[:, :, -1] - 4.0 * f[:, :, -2] + f[:, :, -3]) / (2.0 * dz)
        return out

    def d_dz(self, f):
        """Cartesian vertical derivative of a composed sample: (d_dzeta - c d_dy)/s."""
        return (self.d_dzeta(f) - self.c * self.d_dy(f)) / self.s

    def d2_dzeta2(self, f):
        """Second derivative along the axis, second order up to the lids.

        Composing d_dzeta twice loses an order at the boundary rows; this
        dedicated stencil (4-point one-sided closures) keeps uniform order 2.
        """
        f = np.asarray(f)
        dz2 = self.grid.dzeta**2
        out = np.empty_like(f)
        out[:, :, 1:-1] = (f[:, :, 2:] - 2.0 * f[:, :, 1:-1] + f[:, :, :-2]) / dz2
        out[:, :, 0] = (2.0 * f[:, :, 0] - 5.0 * f[:, :, 1]
                        + 4.0 * f[:, :, 2] - f[:, :, 3]) / dz2
        out[:, :, -1] = (2.0 * f[:, :, -1] - 5.0 * f[:, :, -2]
                         + 4.0 * f[:, :, -3] - f[:, :, -4]) / dz2
        return out

    def axis_antiderivative(self, f):
        """Cumulative trapezoid along the axis, anchored to zero at the bottom."""
        f = np.asarray(f)
        out = np.empty_like(f)
        out[:, :, 0] = 0.0
        np.cumsum(0.5 * self.grid.dzeta * (f[:, :, :-1] + f[:, :, 1:]), axis=2,
                  out=out[:, :, 1:])
        return out

    def meanfree_axis_antiderivative(self, f):
        """Axis antiderivative gauged so its own axis mean vanishes."""
        F = self.axis_antiderivative(f)
        return F - self.mean_along_axis(F)[:, :, None]

    # -- advection ---------------------------------------------------------

    def advect(self, v1, v2, v3, h):
        """Directional derivative (v . grad h) for Cartesian components v.

        Evaluated in oblique coordinates with the contravariant velocity
        (v1, v2 - (c/s) v3, v3/s); exact transcription of the Cartesian
        operator on composed samples.
        """
        out = v1 * self.d_dx(h) + (v2 - (self.c / self.s) * v3) * self.d_dy(h)
        return out + (v3 / self.s) * self.d_dzeta(h)

    # -- quadrature --------------------------------------------------------

    def horizontal_mean(self, f):
        """Mean over the horizontal box; scalar for 2D input, (nz+1,) for 3D."""
        return np.asarray(f).mean(axis=(0, 1))

    def project_zero_horizontal_mean(self, f):
        f = np.asarray(f)
        return f - self.horizontal_mean(f)

    def inner_product(self, f, g):
        """Volume integral of f*g over the domain (weight s dx dy dzeta)."""
        f, g = np.asarray(f), np.asarray(g)
        if f.shape != g.shape or f.shape != self.grid.shape3:
            raise ValueError(f"inner_product needs two fields of shape {self.grid.shape3}")
        return self.s * self._cell_area * float(
            np.tensordot(f * g, self.weights_zeta, axes=([2], [0])).sum()
        )

    def integral(self, f):
        """Volume integral of a 3D field."""
        f = np.asarray(f)
        return self.s * self._cell_area * float(
            np.tensordot(f, self.weights_zeta, axes=([2], [0])).sum()
        )

    def integral2(self, f):
        """Integral over the domain of a field constant along the axis."""
        return self._cell_area * float(np.asarray(f).sum())

    def norm2(self, f):
        f = np.asarray(f)
        if f.ndim == 2:
            return float(np.sqrt(self.integral2(f * f)))
        return float(np.sqrt(self.inner_product(f, f)))

    # -- elliptic solvers ----------------------------------------------------

    def poisson_h(self, rhs, mean_tol: float = 1e-10):
        """Unique zero-mean solution of (horizontal Laplacian) u = rhs.

        The right-hand side must have (numerically) zero horizontal mean at
        every level; otherwise the periodic problem is unsolvable and a
        SolvabilityError is raised naming the level.
        """
        rhs = np.asarray(rhs)
        F = self._fft(rhs)
        npts = self.grid.nx * self.grid.ny
        mean = np.atleast_1d(F[0, 0] / npts)
        bad = np.abs(mean) > mean_tol
        if bad.any():
            lev = int(np.argmax(np.abs(mean)))
            raise SolvabilityError(
                f"right-hand side has horizontal mean {mean[lev]:.3e} "
                f"(level {lev}), above mean_tol={mean_tol:.1e}"
            )
        k2 = self._k2 if rhs.ndim == 2 else self._k2[:, :, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            F = F / (-k2)
        F[0, 0] = 0.0
        return self._ifft(F)

    def solve_separable_elliptic(self, rhs, coeff: float):
        """Solve (D2_zeta + coeff * Laplacian_h) w = rhs with w = 0 at both lids.

        D2_zeta is the 3-point second difference; per horizontal Fourier mode
        the vertical problem is diagonalized exactly by the type-I sine
        transform, so the discrete operator is inverted to roundoff.
        """
        if not coeff > 0:
            raise NonEllipticError(f"elliptic coefficient must be positive, got {coeff}")
        rhs = np.asarray(rhs)
        if rhs.shape != self.grid.shape3:
            raise ValueError(f"rhs must have shape {self.grid.shape3}")
        t = sfft.dst(rhs[:, :, 1:-1], type=1, axis=2)
        T = self._fft(t)
        T /= self._d2_eigs[None, None, :] - coeff * self._k2[:, :, None]
        out = np.zeros_like(rhs)
        out[:, :, 1:-1] = sfft.idst(self._ifft(T), type=1, axis=2)
        return out

    def apply_separable_elliptic(self, w, coeff: float):
        """Forward operator matching solve_separable_elliptic, for fields vanishing at the lids."""
        w = np.asarray(w)
        dz = self.grid.dzeta
        out = np.zeros_like(w)
        out[:, :, 1:-1] = (w[:, :, 2:] - 2.0 * w[:, :, 1:-1] + w[:, :, :-2]) / dz**2
        out[:, :, 1:-1] += coeff * self.laplacian_h(w)[:, :, 1:-1]
        return out
