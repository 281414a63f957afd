"""Velocity reconstruction, prognostic tendencies, and the RK4 stepper.

The prognostic pair is the 3D density deviation rho_tilde (total density is
-alpha*z + rho_tilde) and the 2D skewed mean vorticity omega.  Everything
else is slaved: each tendency evaluation diagnoses the thermal wind, solves
the kinematic balance for (zeta_b, u3), reconstructs the full velocity, and
advects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balance import (BalanceIterate, BalanceRhs, SolverOptions, balance_fixed_point,
                      compute_U_and_B)
from .calculus import SpectralWorkspace
from .errors import NonConvergenceError
from .rotation import ModelParams
from .thermal import GeostrophicFields, diagnose_geostrophic


@dataclass
class State:
    """Prognostic fields at one instant."""

    rho_tilde: np.ndarray
    omega: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.rho_tilde)):
            raise ValueError("rho_tilde contains non-finite values")
        if not np.all(np.isfinite(self.omega)):
            raise ValueError("omega contains non-finite values")
        scale = max(1.0, float(np.max(np.abs(self.omega))))
        if abs(float(self.omega.mean())) > 1e-12 * scale:
            raise ValueError("omega must have zero horizontal mean (gauge)")


@dataclass
class ReconstructedVelocity:
    """Full Cartesian velocity on the oblique grid plus its potentials."""

    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    psi_bar: np.ndarray
    Psi: np.ndarray
    phi_pot: np.ndarray


@dataclass
class BalancedFields:
    """Everything diagnosed from one prognostic state."""

    geo: GeostrophicFields
    iterate: BalanceIterate
    vel: ReconstructedVelocity
    U: tuple
    U_g: tuple
    B: tuple


def reconstruct_velocity(omega: np.ndarray, iterate: BalanceIterate,
                         ws: SpectralWorkspace) -> ReconstructedVelocity:
    """Recover the full velocity from (omega, zeta_b, u3).

    The horizontal flow is the sum of the mean stream function (driven by
    omega and the mean axis-vertical velocity), the axis derivative of the
    fluctuating stream function solving Lap Psi = zeta_b level-wise, and a
    potential part enforcing incompressibility.  u3 is projected to zero
    horizontal mean per level (solvability of the potential solve); the lids
    stay exactly zero.
    """
    c, s = ws.c, ws.s
    u3 = iterate.u3 - ws.horizontal_mean(iterate.u3)
    u3_bar = ws.mean_along_axis(u3)

    psi_rhs = s * omega + (c / s) * ws.d_dx(u3_bar)
    psi_bar = ws.poisson_h(ws.project_zero_horizontal_mean(psi_rhs))

    Psi = ws.poisson_h(iterate.zeta_b)
    phi_pot = ws.poisson_h(ws.project_zero_horizontal_mean(-ws.d_dz(u3)))

    pbx, pby = ws.perp_grad(psi_bar)
    px, py = ws.perp_grad(Psi)
    fx, fy = ws.grad_h(phi_pot)
    u1 = pbx[:, :, None] + ws.d_dzeta(px) + fx
    u2 = pby[:, :, None] + ws.d_dzeta(py) + fy
    return ReconstructedVelocity(u1, u2, u3, psi_bar, Psi, phi_pot)


def rho_tendency(state: State, vel: ReconstructedVelocity, params: ModelParams,
                 ws: SpectralWorkspace) -> np.ndarray:
    """Material-derivative tendency of rho_tilde.

    Total density is advected, so the deviation tendency is minus the
    (dealiased) advection of rho_tilde plus alpha*u3 from the background.
    """
    adv = ws.advect(vel.u1, vel.u2, vel.u3, state.rho_tilde)
    return -ws.dealias(adv) + params.alpha * vel.u3


def omega_tendency(state: State, geo: GeostrophicFields, iterate: BalanceIterate,
                   vel: ReconstructedVelocity, params: ModelParams,
                   ws: SpectralWorkspace) -> np.ndarray:
    """Tendency of the 2D skewed mean vorticity.

    Mean-flow advection plus the two axis-averaged exchange terms, one from
    the density against the curl of B, one weighted by nu from the thermal
    wind shear against u3.  The result is projected to zero horizontal mean.
    """
    nu, lam = params.nu, params.lam
    c, s = ws.c, ws.s
    ub1 = ws.mean_along_axis(vel.u1)
    ub2 = ws.mean_along_axis(vel.u2)
    ub3 = ws.mean_along_axis(vel.u3)
    omx, omy = ws.grad_h(state.omega)
    adv = ub1 * omx + (ub2 - (c / s) * ub3) * omy

    Ug1 = ws.axis_antiderivative(geo.ug1)
    Ug2 = ws.axis_antiderivative(geo.ug2)
    divperp_B = nu * iterate.zeta_b - 2.0 * lam * ws.perp_div(Ug1, Ug2)
    pB1, pB2 = ws.perp_grad(divperp_B)
    rtx, rty = ws.grad_h(state.rho_tilde)
    src1 = ws.mean_along_axis(rtx * pB1 + rty * pB2)

    # grad of dz(theta) is available as -(gamma1, gamma2)
    u3x, u3y = ws.grad_h(vel.u3)
    u3z = ws.d_dz(vel.u3)
    dtheta = geo.gamma3
    src2 = ws.mean_along_axis(
        (-geo.gamma1) * u3x + (-geo.gamma2) * u3y - dtheta * u3z
        + ws.advect(vel.u1, vel.u2, vel.u3, dtheta))

    tend = -ws.dealias(adv) + ws.dealias(src1) - nu * ws.dealias(src2)
    return ws.project_zero_horizontal_mean(tend)


def diagnose_balanced(state: State, params: ModelParams, opts: SolverOptions,
                      ws: SpectralWorkspace,
                      initial: BalanceIterate | None = None) -> BalancedFields:
    """Thermal wind, balance solve, velocity and antiderivative bundle for one state."""
    geo = diagnose_geostrophic(state.rho_tilde, ws)
    iterate = balance_fixed_point(state, geo, params, opts, ws, initial=initial)
    vel = reconstruct_velocity(state.omega, iterate, ws)
    hat_u = (ws.hat_part(vel.u1), ws.hat_part(vel.u2))
    U, U_g, B = compute_U_and_B(hat_u, (geo.ug1, geo.ug2), params, ws)
    return BalancedFields(geo, iterate, vel, U, U_g, B)


def _stage_tendencies(state: State, params, opts, ws, warm):
    geo = diagnose_geostrophic(state.rho_tilde, ws)
    iterate = balance_fixed_point(state, geo, params, opts, ws, initial=warm)
    vel = reconstruct_velocity(state.omega, iterate, ws)
    drho = rho_tendency(state, vel, params, ws)
    dom = omega_tendency(state, geo, iterate, vel, params, ws)
    return drho, dom, iterate


def rk4_step(state: State, dt: float, params: ModelParams, opts: SolverOptions,
             ws: SpectralWorkspace, kappa: float = 0.0) -> State:
    """One classical four-stage step of the closed prognostic system.

    Stage one solves the balance from scratch; later stages warm-start from
    the previous stage's iterate, so the step is a pure function of (state,
    dt).  Optional spectral hyperdiffusion with strength kappa is applied
    after the update, and omega is re-projected onto its zero-mean gauge.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    t = state.time
    stages = []
    warm = None
    try:
        k1 = _stage_tendencies(state, params, opts, ws, None)
        stages.append(k1)
        s2 = State(state.rho_tilde + 0.5 * dt * k1[0],
                   ws.project_zero_horizontal_mean(state.omega + 0.5 * dt * k1[1]),
                   t + 0.5 * dt)
        k2 = _stage_tendencies(s2, params, opts, ws, k1[2])
        stages.append(k2)
        s3 = State(state.rho_tilde + 0.5 * dt * k2[0],
                   ws.project_zero_horizontal_mean(state.omega + 0.5 * dt * k2[1]),
                   t + 0.5 * dt)
        k3 = _stage_tendencies(s3, params, opts, ws, k2[2])
        stages.append(k3)
        s4 = State(state.rho_tilde + dt * k3[0],
                   ws.project_zero_horizontal_mean(state.omega + dt * k3[1]),
                   t + dt)
        k4 = _stage_tendencies(s4, params, opts, ws, k3[2])
        stages.append(k4)
    except NonConvergenceError as e:
        raise NonConvergenceError(
            f"balance solve failed in RK4 stage {len(stages) + 1}: {e}",
            e.residuals) from e

    rho = state.rho_tilde + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    omega = state.omega + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    if kappa > 0.0:
        rho = ws.hyperdiffuse(rho, kappa, dt)
        omega = ws.hyperdiffuse(omega, kappa, dt)
    omega = ws.project_zero_horizontal_mean(omega)
    return State(rho, omega, t + dt)
