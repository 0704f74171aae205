"""Two-link planar arm: rigid-body matrices, forward dynamics, abrupt
mass changes, and analytic reference trajectories.

All functions are pure; parameters and states are value types, so the
module is safe to call from any number of concurrent simulation workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Condition-number guard for the inertia solve. The two-link inertia
# matrix is uniformly positive definite for positive masses, so tripping
# this signals nonphysical parameters rather than a numerical corner.
COND_BOUND = 1e12


class SingularMassError(RuntimeError):
    """Inertia matrix too ill-conditioned to invert."""


class NonPositiveMassError(ValueError):
    """A parameter change would drive a link mass to zero or below."""


@dataclass(frozen=True)
class ArmParams:
    """Link masses and lengths.

    The lumped coefficients (phi, rho, psi, gamma) are derived properties,
    so they can never drift out of sync with the masses after a jump.
    """

    m1: float
    m2: float
    l1: float = 1.0
    l2: float = 1.0
    g: float = 9.8

    def __post_init__(self):
        if self.m1 <= 0.0 or self.m2 <= 0.0:
            raise NonPositiveMassError(
                f"masses must be positive, got ({self.m1}, {self.m2})")
        if self.l1 <= 0.0 or self.l2 <= 0.0:
            raise ValueError(f"lengths must be positive, got ({self.l1}, {self.l2})")

    @property
    def phi(self) -> float:
        return (self.m1 + self.m2) * self.l1 ** 2

    @property
    def rho(self) -> float:
        return self.m2 * self.l2 ** 2

    @property
    def psi(self) -> float:
        return self.m2 * self.l1 * self.l2

    @property
    def gamma(self) -> float:
        return self.g / self.l1


@dataclass(frozen=True)
class PlantState:
    """Joint angles (rad) and joint velocities (rad/s), two entries each."""

    x: np.ndarray
    xdot: np.ndarray


@dataclass(frozen=True)
class JumpEvent:
    """One scheduled abrupt change of the link masses.

    kind "scale": both masses are multiplied by `factor`.
    kind "add_squared": `dm_squared` is added to (m1^2, m2^2); used for
    monotone schedules where the squared masses grow by a fixed increment
    per event.
    """

    time: float
    kind: str = "scale"
    factor: float = 1.0
    dm_squared: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class JointSignal:
    """Reference for one joint: offset + amplitude*sin(omega*t).

    Covers both constant and sinusoidal commands; derivatives are exact.
    """

    offset: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0

    def eval(self, t: float) -> tuple[float, float, float]:
        w = self.omega
        s = self.offset + self.amplitude * math.sin(w * t)
        sd = self.amplitude * w * math.cos(w * t)
        sdd = -self.amplitude * w * w * math.sin(w * t)
        return s, sd, sdd


def mass_matrix(params: ArmParams, x) -> np.ndarray:
    """Symmetric positive-definite inertia matrix at joint angles x."""
    c2 = math.cos(x[1])
    off = params.rho + params.psi * c2
    return np.array([
        [params.phi + params.rho + 2.0 * params.psi * c2, off],
        [off, params.rho],
    ])


def coriolis_matrix(params: ArmParams, x, xdot) -> np.ndarray:
    """Coriolis/centripetal matrix at (x, xdot)."""
    ps2 = params.psi * math.sin(x[1])
    return np.array([
        [-ps2 * xdot[1], -ps2 * (xdot[0] + xdot[1])],
        [ps2 * xdot[0], 0.0],
    ])


def gravity_vector(params: ArmParams, x) -> np.ndarray:
    """Gravity torque vector; friction is taken as zero."""
    pg = params.psi * params.gamma * math.cos(x[0] + x[1])
    return np.array([params.phi * params.gamma * math.cos(x[0]) + pg, pg])


def solve_inertia(params: ArmParams, x, rhs, cond_bound: float = COND_BOUND) -> np.ndarray:
    """Solve M(x) a = rhs by the closed-form 2x2 inverse.

    Raises SingularMassError when the (symmetric) inertia matrix has a
    condition number above `cond_bound`.
    """
    M = mass_matrix(params, x)
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = math.sqrt(max(tr * tr - 4.0 * det, 0.0))
    lo = 0.5 * (tr - disc)
    hi = 0.5 * (tr + disc)
    if det <= 0.0 or lo <= 0.0 or hi > cond_bound * lo:
        raise SingularMassError(
            f"inertia matrix nearly singular (eigenvalues {lo:.3e}, {hi:.3e})")
    return np.array([
        (M[1, 1] * rhs[0] - M[0, 1] * rhs[1]) / det,
        (M[0, 0] * rhs[1] - M[1, 0] * rhs[0]) / det,
    ])


def plant_derivative(params: ArmParams, state: PlantState, tau,
                     cond_bound: float = COND_BOUND) -> PlantState:
    """Time derivative (xdot, xddot) of the plant under torque tau."""
    rhs = (np.asarray(tau, dtype=float)
           - coriolis_matrix(params, state.x, state.xdot) @ state.xdot
           - gravity_vector(params, state.x))
    xddot = solve_inertia(params, state.x, rhs, cond_bound)
    return PlantState(x=np.array(state.xdot, dtype=float), xdot=xddot)


def apply_jump(params: ArmParams, event: JumpEvent) -> ArmParams:
    """Apply one abrupt mass change; lumped coefficients follow the masses."""
    if event.kind == "scale":
        m1 = event.factor * params.m1
        m2 = event.factor * params.m2
    elif event.kind == "add_squared":
        sq1 = params.m1 ** 2 + event.dm_squared[0]
        sq2 = params.m2 ** 2 + event.dm_squared[1]
        if sq1 <= 0.0 or sq2 <= 0.0:
            raise NonPositiveMassError(
                f"squared-mass increment gives ({sq1}, {sq2})")
        m1 = math.sqrt(sq1)
        m2 = math.sqrt(sq2)
    else:
        raise ValueError(f"unknown jump kind {event.kind!r}")
    if m1 <= 0.0 or m2 <= 0.0:
        raise NonPositiveMassError(f"jump factor {event.factor} gives ({m1}, {m2})")
    return replace(params, m1=m1, m2=m2)


def reference_eval(ref: tuple[JointSignal, JointSignal], t: float):
    """Evaluate both joint references; returns (s, sdot, sddot) 2-vectors."""
    s1, sd1, sdd1 = ref[0].eval(t)
    s2, sd2, sdd2 = ref[1].eval(t)
    return (np.array([s1, s2]), np.array([sd1, sd2]), np.array([sdd1, sdd2]))
