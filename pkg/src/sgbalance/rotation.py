"""Constant matrices and scalar parameters of the tilted rotation axis.

At latitude phi the rotation vector is Omega = (0, c, s) with c = cos(phi),
s = sin(phi).  Everything downstream (projections along/across the axis, the
oblique coordinate map, the skew pairing) is built from a small set of
constant 3x3 and 2x3 matrices collected in :class:`MatrixSet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_S_MIN = 0.1
IDENTITY_TOL = 1e-13


@dataclass(frozen=True)
class TiltParams:
    """Latitude and its sine/cosine.

    Construction fails for latitudes with sin(phi) < s_min: as the axis of
    rotation tilts into the horizontal the balance relation loses
    ellipticity, so near-equatorial configurations are rejected up front.
    """

    latitude: float
    s_min: float = DEFAULT_S_MIN
    c: float = field(init=False)
    s: float = field(init=False)

    def __post_init__(self):
        c = math.cos(self.latitude)
        s = math.sin(self.latitude)
        if not s >= self.s_min:
            raise ValueError(
                f"sin(latitude) = {s:.6g} is below the ellipticity floor "
                f"s_min = {self.s_min:.6g}"
            )
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "s", s)


@dataclass(frozen=True)
class ModelParams:
    """Scalar model parameters.

    epsilon : Rossby number (> 0)
    lam     : free weight of the geostrophic term in the transformed Lagrangian
    nu      : lam + 1/2, must be positive
    alpha   : background stratification (> 0); total density is -alpha*z + rho_tilde
    """

    epsilon: float
    lam: float = 0.5
    alpha: float = 1.0
    nu: float = field(init=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        nu = self.lam + 0.5
        if not nu > 0:
            raise ValueError(f"nu = lambda + 1/2 must be positive, got {nu}")
        object.__setattr__(self, "nu", nu)


def _frozen(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MatrixSet:
    """The constant matrices of the oblique-axis algebra.

    J        skew rotation matrix, kernel spanned by Omega
    P, Q     orthogonal projectors across/along the rotation axis
    A, Ainv  oblique coordinate map x = A xi and its inverse (det A = s)
    S        diag(1, 1/s^2, 1/s); A^{-1} P = S P
    S0       diag(1, 1/s^2, 0)
    M        P S0^2 P, the quadratic form of the mean-flow kinetic energy
    Sh       first two rows of S; ShPinv its pseudo-inverse on Range P
    J2       canonical 2x2 symplectic matrix [[0, -1], [1, 0]]
    Ph, Mh   first two rows of P and M
    Omega    rotation axis (0, c, s); OmegaH its horizontal part (0, c)
    """

    c: float
    s: float
    J: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    Ainv: np.ndarray
    S: np.ndarray
    S0: np.ndarray
    M: np.ndarray
    Sh: np.ndarray
    ShPinv: np.ndarray
    J2: np.ndarray
    Ph: np.ndarray
    Mh: np.ndarray
    Omega: np.ndarray
    OmegaH: np.ndarray


def build_matrix_set(tilt: TiltParams) -> MatrixSet:
    """Assemble the full matrix set for a given tilt."""
    c, s = tilt.c, tilt.s
    omega = np.array([0.0, c, s])
    J = np.array([[0.0, -s, c], [s, 0.0, 0.0], [-c, 0.0, 0.0]])
    Q = np.outer(omega, omega)
    P = np.eye(3) - Q
    A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, c], [0.0, 0.0, s]])
    Ainv = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -c / s], [0.0, 0.0, 1.0 / s]])
    S = np.diag([1.0, s**-2, 1.0 / s])
    S0 = np.diag([1.0, s**-2, 0.0])
    M = P @ S0 @ S0 @ P
    Sh = S[:2, :]
    ShPinv = np.array([[1.0, 0.0], [0.0, s**2], [0.0, -c * s]])
    J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
    return MatrixSet(
        c=c,
        s=s,
        J=_frozen(J),
        P=_frozen(P),
        Q=_frozen(Q),
        A=_frozen(A),
        Ainv=_frozen(Ainv),
        S=_frozen(S),
        S0=_frozen(S0),
        M=_frozen(M),
        Sh=_frozen(Sh),
        ShPinv=_frozen(ShPinv),
        J2=_frozen(J2),
        Ph=_frozen(P[:2, :]),
        Mh=_frozen(M[:2, :]),
        Omega=_frozen(omega),
        OmegaH=_frozen(omega[:2]),
    )


@dataclass(frozen=True)
class IdentityResidual:
    name: str
    residual: float
    passed: bool


def verify_matrix_identities(m: MatrixSet, tol: float = IDENTITY_TOL):
    """Check the nine identity groups of the matrix set.

    Returns a list of (name, max-abs residual, passed) records; nothing is
    raised, callers decide what a failure means.
    """

    def err(x) -> float:
        return float(np.max(np.abs(np.asarray(x))))

    I3, I2 = np.eye(3), np.eye(2)
    groups = {
        "projectors: P+Q=I, P^2=P, Q^2=Q, PQ=0": max(
            err(m.P + m.Q - I3), err(m.P @ m.P - m.P),
            err(m.Q @ m.Q - m.Q), err(m.P @ m.Q),
        ),
        "axis spans kernel of J, J J^T = P = J^T J": max(
            err(m.J @ m.Omega), err(m.J @ m.J.T - m.P), err(m.J.T @ m.J - m.P),
        ),
        "P J^T = J^T = J^T P": max(
            err(m.P @ m.J.T - m.J.T), err(m.J.T @ m.P - m.J.T),
        ),
        "A^{-1} P = S P": err(m.Ainv @ m.P - m.S @ m.P),
        "det A = s": max(
            abs(float(np.linalg.det(m.A)) - m.s), err(m.A @ m.Ainv - I3),
        ),
        "M = P S0^2 P": err(m.M - m.P @ m.S0 @ m.S0 @ m.P),
        "Sh pseudo-inverse: Sh ShPinv = I2, ShPinv Sh P = P": max(
            err(m.Sh @ m.ShPinv - I2), err(m.ShPinv @ m.Sh @ m.P - m.P),
        ),
        "skew pairing: ShPinv^T J ShPinv = s J2": err(
            m.ShPinv.T @ m.J @ m.ShPinv - m.s * m.J2
        ),
        "Sh J^T = -(1/s) J2 Ph": err(m.Sh @ m.J.T + (1.0 / m.s) * (m.J2 @ m.Ph)),
    }
    return [IdentityResidual(k, v, v <= tol) for k, v in groups.items()]
