"""Leading-order diagnosis: thermal wind and completion of partial velocity data.

The thermal wind relation integrates along characteristics parallel to the
rotation axis and determines only the mean-free part of the geostrophic
velocity.  The stream function theta is the mean-free axis antiderivative of
minus the density, u_g its perpendicular gradient, and gamma the curl of u_g.

The completion operations rebuild a full divergence-free velocity field from
partial data: the axis-aligned part from the cross-axis part (a first-order
ODE along each characteristic), and the mean flow from the no-flux boundary
condition plus a horizontal Poisson solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import SpectralWorkspace


@dataclass
class GeostrophicFields:
    """theta, the horizontal thermal wind pair, and its curl gamma."""

    theta: np.ndarray
    ug1: np.ndarray
    ug2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray


def compute_theta(rho: np.ndarray, ws: SpectralWorkspace) -> np.ndarray:
    """Geostrophic stream function from density samples.

    theta is minus the axis antiderivative of rho, gauged mean-free, so the
    pointwise identity d_dzeta(theta) + rho = 0 holds to truncation order
    and the axis mean of theta vanishes to roundoff.
    """
    return -ws.meanfree_axis_antiderivative(rho)


def geostrophic_wind(theta: np.ndarray, ws: SpectralWorkspace):
    """Horizontal thermal wind (-d theta/dy, d theta/dx); vertical part is zero."""
    return ws.perp_grad(theta)


def gamma_field(theta: np.ndarray, ws: SpectralWorkspace):
    """Curl of the thermal wind: (-grad_h dz theta, horizontal Laplacian of theta)."""
    tz = ws.d_dz(theta)
    tzx, tzy = ws.grad_h(tz)
    return -tzx, -tzy, ws.laplacian_h(theta)


def diagnose_geostrophic(rho_tilde: np.ndarray, ws: SpectralWorkspace) -> GeostrophicFields:
    """All thermal-wind fields for a deviation density.

    The background -alpha*z is horizontally uniform, so it contributes
    nothing to u_g or gamma; passing the deviation only is exact here.
    """
    theta = compute_theta(rho_tilde, ws)
    ug1, ug2 = geostrophic_wind(theta, ws)
    g1, g2, g3 = gamma_field(theta, ws)
    return GeostrophicFields(theta, ug1, ug2, g1, g2, g3)


def _apply_matrix(mat: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Contract a constant matrix with the leading (component) axis of v."""
    return np.einsum("ab,b...->a...", mat, v)


def _check_mean_free(v: np.ndarray, ws: SpectralWorkspace, what: str, tol: float):
    scale = max(1.0, float(np.max(np.abs(v))))
    worst = max(float(np.max(np.abs(ws.mean_along_axis(comp)))) for comp in v)
    if worst > tol * scale:
        raise ValueError(f"{what} is not mean-free along the axis (residual {worst:.3e})")


def complete_axis_component(p_hat_u: np.ndarray, ws: SpectralWorkspace,
                            tol: float = 1e-10) -> np.ndarray:
    """Axis-aligned scalar g_hat determined by a mean-free cross-axis field.

    p_hat_u is a (3, nx, ny, nz+1) stack that must lie pointwise in Range P
    and be mean-free along the axis.  Returns the mean-free g_hat whose
    axis derivative balances the divergence of the given part; the completed
    field p_hat_u + Omega*g_hat is then divergence-free to truncation order.
    """
    m = ws.mats
    p_hat_u = np.asarray(p_hat_u)
    scale = max(1.0, float(np.max(np.abs(p_hat_u))))
    qpart = _apply_matrix(m.Q, p_hat_u)
    if float(np.max(np.abs(qpart))) > tol * scale:
        raise ValueError("input to complete_axis_component is not in Range P")
    _check_mean_free(p_hat_u, ws, "complete_axis_component input", tol)

    w = _apply_matrix(m.S @ m.P, p_hat_u)
    div = ws.d_dx(w[0]) + ws.d_dy(w[1]) + ws.d_dzeta(w[2])
    return ws.meanfree_axis_antiderivative(-div)


def complete_mean_flow(hat_u: np.ndarray, g_hat: np.ndarray, ws: SpectralWorkspace):
    """Mean flow closing a mean-free velocity to a no-flux field.

    The mean axis-vertical velocity is pinned by the bottom boundary
    condition; the mean horizontal flow is a potential flow solving a
    Poisson problem on the torus.  Returns (u3_bar, (ub1, ub2)) as 2D arrays.
    """
    m = ws.mats
    hat_u = np.asarray(hat_u)
    pu = _apply_matrix(m.P, hat_u)
    u3_bar = -pu[2][:, :, 0] - ws.s * np.asarray(g_hat)[:, :, 0]
    rhs = (ws.c / ws.s) * ws.d_dy(u3_bar)
    phi = ws.poisson_h(rhs)
    ub1, ub2 = ws.grad_h(phi)
    return u3_bar, (ub1, ub2)


def operator_C(w_hat: np.ndarray, ws: SpectralWorkspace, tol: float = 1e-10) -> np.ndarray:
    """Dual of the axis completion on mean-free fields.

    C[w] = -S * (oblique gradient of the axis antiderivative of Omega . w);
    it satisfies <w, Q u> = <u, P C[w]> for mean-free divergence-free u, a
    relation the verification suite checks by direct quadrature.
    """
    m = ws.mats
    w_hat = np.asarray(w_hat)
    _check_mean_free(w_hat, ws, "operator_C input", tol)
    G = ws.axis_antiderivative(m.Omega[1] * w_hat[1] + m.Omega[2] * w_hat[2])
    grad = np.stack([ws.d_dx(G), ws.d_dy(G), ws.d_dzeta(G)])
    return -_apply_matrix(m.S, grad)
