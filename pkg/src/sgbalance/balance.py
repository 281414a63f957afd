"""Kinematic balance relation: right-hand sides, fixed point, ellipticity.

The slaved fields (zeta_b, u3) solve the pair of separable elliptic problems

    (D2_zeta + eps*alpha*nu * Lap_h) zeta_b = -Lap_h rho_tilde + eps * f
    (D2_zeta + eps*alpha*nu * Lap_h) u3     =                    eps * g

with homogeneous Dirichlet conditions at both lids.  f and g depend on the
unknowns through the reconstructed velocity, so the system is iterated to a
fixed point; the iteration contracts for small-amplitude prognostic fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import SpectralWorkspace
from .errors import NonConvergenceError, NonEllipticError
from .rotation import ModelParams
from .thermal import GeostrophicFields

_RESIDUAL_FLOOR = 1e-14


@dataclass
class BalanceIterate:
    """Current slaved fields; both vanish at the lids."""

    zeta_b: np.ndarray
    u3: np.ndarray
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        for name, f in (("zeta_b", self.zeta_b), ("u3", self.u3)):
            scale = max(1.0, float(np.max(np.abs(f))))
            lid = max(float(np.max(np.abs(f[:, :, 0]))), float(np.max(np.abs(f[:, :, -1]))))
            if lid > 1e-10 * scale:
                raise ValueError(f"{name} does not vanish at the lids (max {lid:.3e})")


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 50
    relaxation: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must be in (0, 1]")


@dataclass
class EllipticityReport:
    """Pointwise principal-minor margins; positive everywhere means elliptic."""

    margin1: np.ndarray
    margin2: np.ndarray
    margin3: np.ndarray
    min_margin: float
    elliptic: bool


def compute_U_and_B(hat_u, u_g, params: ModelParams, ws: SpectralWorkspace):
    """Axis antiderivatives of the fluctuating winds and their combination B.

    hat_u and u_g are horizontal pairs, mean-free along the axis.  Returns
    (U, U_g, B) as pairs, with B = nu*U - 2*lambda*U_g.
    """
    for name, pair in (("hat_u", hat_u), ("u_g", u_g)):
        for comp in pair:
            scale = max(1.0, float(np.max(np.abs(comp))))
            if float(np.max(np.abs(ws.mean_along_axis(comp)))) > 1e-10 * scale:
                raise ValueError(f"{name} is not mean-free along the axis")
    U = tuple(ws.axis_antiderivative(comp) for comp in hat_u)
    Ug = tuple(ws.axis_antiderivative(comp) for comp in u_g)
    B = tuple(params.nu * u - 2.0 * params.lam * ug for u, ug in zip(U, Ug))
    return U, Ug, B


class BalanceRhs:
    """Assembles f and g; everything that depends only on (rho_tilde, omega) is precomputed."""

    def __init__(self, state, geo: GeostrophicFields, params: ModelParams,
                 ws: SpectralWorkspace):
        self.ws = ws
        self.params = params
        self.geo = geo
        nu = params.nu
        c, s = ws.c, ws.s

        self.rt = state.rho_tilde
        om = state.omega
        self.rtx, self.rty = ws.grad_h(self.rt)
        self.rt_z = ws.d_dz(self.rt)
        self.rho_z = -params.alpha + self.rt_z
        self.lap_rt = ws.laplacian_h(self.rt)
        self.omx, self.omy = ws.grad_h(om)

        # xi = Omega*omega + nu*gamma, with the 2D omega broadcast along zeta
        om3 = om[:, :, None]
        self.xi1 = nu * geo.gamma1
        self.xi2 = c * om3 + nu * geo.gamma2
        self.xi3 = s * om3 + nu * geo.gamma3

        self.dtheta = geo.gamma3                      # horizontal Laplacian of theta
        self.dthx, self.dthy = ws.grad_h(self.dtheta)
        self.dth_dzeta = ws.d_dzeta(self.dtheta)

        # U_g, its perpendicular divergence and derivatives thereof
        self.Ug = (ws.axis_antiderivative(geo.ug1), ws.axis_antiderivative(geo.ug2))
        self.divperp_Ug = ws.perp_div(*self.Ug)
        self.divperp_Ug_x, self.divperp_Ug_y = ws.grad_h(self.divperp_Ug)
        self.divperp_Ug_z = ws.d_dz(self.divperp_Ug)

    def _xi_dot_grad(self, h):
        """(xi . grad h) via the contravariant oblique transcription."""
        ws = self.ws
        c, s = ws.c, ws.s
        return (self.xi1 * ws.d_dx(h)
                + (self.xi2 - (c / s) * self.xi3) * ws.d_dy(h)
                + (self.xi3 / s) * ws.d_dzeta(h))

    def both(self, iterate: BalanceIterate, vel):
        """f and g for the current iterate and reconstructed velocity."""
        ws, params = self.ws, self.params
        nu, lam = params.nu, params.lam
        c, s = ws.c, ws.s
        zb, u3 = iterate.zeta_b, vel.u3
        u1, u2 = vel.u1, vel.u2
        hu1, hu2, hu3 = ws.hat_part(u1), ws.hat_part(u2), ws.hat_part(u3)

        zbx, zby = ws.grad_h(zb)
        zb_z = ws.d_dz(zb)
        u3x, u3y = ws.grad_h(u3)

        # cross-axis advection of the 2D prognostic vorticity
        adv_om_hat = hu1 * self.omx[:, :, None] + (hu2 - (c / s) * hu3) * self.omy[:, :, None]

        divperp_B = nu * zb - 2.0 * lam * self.divperp_Ug
        pB1, pB2 = ws.perp_grad(divperp_B)

        # --- f -----------------------------------------------------------
        f = c * ws.d_dx(adv_om_hat)
        f += nu * ws.perp_div(ws.advect(u1, u2, u3, self.geo.gamma1),
                              ws.advect(u1, u2, u3, self.geo.gamma2))
        f -= ws.perp_div(self._xi_dot_grad(u1), self._xi_dot_grad(u2))
        f -= nu * ws.div_h(self.rtx * zb_z, self.rty * zb_z)
        f += nu * ws.div_h(zbx * self.rt_z, zby * self.rt_z)
        f += 2.0 * lam * ws.div_h(self.rtx * self.divperp_Ug_z,
                                  self.rty * self.divperp_Ug_z)
        f -= 2.0 * lam * ws.div_h(self.divperp_Ug_x * self.rho_z,
                                  self.divperp_Ug_y * self.rho_z)
        f -= 2.0 * lam * c * ws.d_dx(ws.mean_along_axis(
            self.rtx * (-self.divperp_Ug_y) + self.rty * self.divperp_Ug_x))[:, :, None]
        mean_term = ws.mean_along_axis(
            self.rtx * (-zby) + self.rty * zbx
            + ws.advect(self.geo.gamma1, self.geo.gamma2, self.geo.gamma3, u3)
            - (hu1 * self.dthx + (hu2 - (c / s) * hu3) * self.dthy
               + (hu3 / s) * self.dth_dzeta))
        f += nu * c * ws.d_dx(mean_term)[:, :, None]

        # --- g -----------------------------------------------------------
        g = nu * ws.laplacian_h(ws.advect(u1, u2, u3, self.rt))
        g += s * adv_om_hat
        inner = ws.advect(u1, u2, u3, self.dtheta)
        inner -= self._xi_dot_grad(u3)
        inner -= self.rtx * pB1 + self.rty * pB2
        g += nu * ws.d_dzeta(inner)
        return f, g


def rhs_f(state, geo, iterate, vel, params, ws):
    """Right-hand side of the zeta_b balance equation (reference entry point)."""
    return BalanceRhs(state, geo, params, ws).both(iterate, vel)[0]


def rhs_g(state, geo, iterate, vel, params, ws):
    """Right-hand side of the u3 balance equation (reference entry point)."""
    return BalanceRhs(state, geo, params, ws).both(iterate, vel)[1]


def _update_norm(delta, new) -> float:
    return float(np.max(np.abs(delta))) / max(float(np.max(np.abs(new))), _RESIDUAL_FLOOR)


def balance_fixed_point(state, geo: GeostrophicFields, params: ModelParams,
                        opts: SolverOptions, ws: SpectralWorkspace,
                        initial: BalanceIterate | None = None) -> BalanceIterate:
    """Iterate the pair of separable solves to a fixed point.

    Each outer iteration reconstructs the full velocity from the current
    iterate so the u-dependent terms of f and g are refreshed.  Terminates
    when the larger of the two relative update norms drops below opts.tol.
    One automatic halving of the relaxation factor is attempted if the
    residual grows; a second growth raises NonConvergenceError, as does
    exhausting max_iter.  The rest state is an exact fixed point (residual 0).
    """
    from .dynamics import reconstruct_velocity

    coeff = params.epsilon * params.alpha * params.nu
    if not coeff > 0:
        raise NonEllipticError(f"eps*alpha*nu = {coeff} is not positive")

    brhs = BalanceRhs(state, geo, params, ws)
    if initial is None:
        it_zb = ws.grid.zeros3()
        it_u3 = ws.grid.zeros3()
    else:
        it_zb = initial.zeta_b.copy()
        it_u3 = initial.u3.copy()

    relax = opts.relaxation
    halved = False
    residuals: list[float] = []
    for n in range(1, opts.max_iter + 1):
        vel = reconstruct_velocity(state.omega, BalanceIterate(it_zb, it_u3), ws)
        f, g = brhs.both(BalanceIterate(it_zb, it_u3), vel)
        zb_solved = ws.solve_separable_elliptic(-brhs.lap_rt + params.epsilon * f, coeff)
        u3_solved = ws.solve_separable_elliptic(params.epsilon * g, coeff)
        zb_new = it_zb + relax * (zb_solved - it_zb)
        u3_new = it_u3 + relax * (u3_solved - it_u3)
        res = max(_update_norm(zb_new - it_zb, zb_new), _update_norm(u3_new - it_u3, u3_new))
        residuals.append(res)
        it_zb, it_u3 = zb_new, u3_new
        if res <= opts.tol:
            return BalanceIterate(it_zb, it_u3, iterations=n, residual=res)
        if n >= 2 and res > residuals[-2]:
            if not halved:
                relax *= 0.5
                halved = True
            else:
                raise NonConvergenceError(
                    f"balance iteration diverging after {n} iterations "
                    f"(residual {res:.3e})", residuals)
    raise NonConvergenceError(
        f"balance iteration did not reach tol={opts.tol:.1e} in "
        f"{opts.max_iter} iterations (residual {residuals[-1]:.3e})", residuals)


def ellipticity_margin(state, geo: GeostrophicFields, params: ModelParams,
                       ws: SpectralWorkspace) -> EllipticityReport:
    """Pointwise principal-minor conditions for ellipticity of the balance relation.

    Assembles the coefficient matrix of the nonlinear PV-inversion operator
    from (eps, nu, c, s), the density gradient and xi, and evaluates the
    three sign conditions: margin1 = -eps*nu*rho_z, margin2 the Schur-reduced
    second minor, margin3 = -det F.  At the stably stratified rest state
    these reduce to (eps*nu*alpha, eps*nu*alpha + c^2, (eps*s*nu*alpha)^2).
    """
    eps, nu = params.epsilon, params.nu
    c, s = ws.c, ws.s

    om3 = state.omega[:, :, None]
    xi1 = nu * geo.gamma1
    xi2 = c * om3 + nu * geo.gamma2
    xi3 = s * om3 + nu * geo.gamma3

    rtx, rty = ws.grad_h(state.rho_tilde)
    rho_z = -params.alpha + ws.d_dz(state.rho_tilde)

    F11 = eps * nu * rho_z
    F12 = -0.5 * eps * c * xi1
    F13 = -0.5 * eps * (xi1 + nu * rtx)
    F22 = eps * nu * rho_z - c * (c + eps * xi2)
    F23 = -0.5 * (2.0 * c * s + eps * (c * xi3 + s * xi2 + nu * rty))
    F33 = -s**2 - eps * s * xi3

    margin1 = -F11
    with np.errstate(divide="ignore", invalid="ignore"):
        margin2 = -F11 + c * (c + eps * (xi2 + 0.25 * c * xi1**2 / (nu * rho_z)))
    det_f = (F11 * (F22 * F33 - F23**2)
             - F12 * (F12 * F33 - F23 * F13)
             + F13 * (F12 * F23 - F22 * F13))
    margin3 = -det_f

    elliptic = bool(np.all(margin1 > 0) and np.all(margin2 > 0) and np.all(margin3 > 0))
    mins = [float(np.min(m)) for m in (margin1, margin2, margin3)]
    return EllipticityReport(margin1, margin2, margin3, min(mins), elliptic)
