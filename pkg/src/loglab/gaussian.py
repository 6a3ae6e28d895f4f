"""Exact Gaussian solutions of the logarithmic Schrodinger equation.

A datum ``b0 * exp(-a0 x^2 / 2)`` with ``a0 = alpha0 + i beta0`` stays
Gaussian.  Writing ``a = alpha0/r^2 - i rdot/r`` reduces the width
dynamics to

    r'' = alpha0^2 / r^3 + 2 lam alpha0 / r,   r(0) = 1,  r'(0) = -beta0,

with the first integral ``rdot^2 = beta0^2 + alpha0^2 - alpha0^2/r^2 +
4 lam alpha0 ln r``.  The amplitude follows by quadrature.  The module
also hosts the dispersion scalers ``tau`` (isothermal and polytropic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .grid import Field, Grid

R_FLOOR = 1e-8


class WidthCollapse(RuntimeError):
    """The width parameter reached the positivity floor."""


def energy_residual(r, rdot, alpha0: float, beta0: float, lam: float):
    return rdot**2 - (beta0**2 + alpha0**2 - alpha0**2 / r**2 + 4 * lam * alpha0 * np.log(r))


@dataclass
class WidthTrajectory:
    """Solution of the width ODE with the quadratures needed for ``b(t)``.

    The dense state is ``(r, rdot, int alpha0/r^2, int ln r)``; the last
    two give ``Re A(t)`` and ``-int Im A``.
    """

    alpha0: float
    beta0: float
    lam: float
    t_end: float
    tol: float
    t: np.ndarray
    r: np.ndarray
    rdot: np.ndarray
    _sol: object
    rdot_zeros: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.t_end * (1 + 1e-12)):
            raise ValueError(f"t outside trajectory [0, {self.t_end}]")
        return self._sol(t)

    def width(self, t):
        r, rdot = self(t)[:2]
        return r, rdot

    def a(self, t):
        r, rdot = self(t)[:2]
        return self.alpha0 / r**2 - 1j * rdot / r

    def big_a(self, t):
        """A(t) = int_0^t a(s) ds; Im A = -ln r exactly."""
        r, _, re_a, _ = self(t)
        return re_a - 1j * np.log(r)

    def int_im_big_a(self, t):
        return -self(t)[3]

    def energy_residual(self, t=None):
        if t is None:
            r, rdot = self.r, self.rdot
        else:
            r, rdot = self.width(t)
        return energy_residual(r, rdot, self.alpha0, self.beta0, self.lam)

    def period(self) -> float:
        """Period from consecutive same-direction zero crossings of rdot."""
        z = self.rdot_zeros
        if len(z) < 3:
            raise ValueError("trajectory too short to contain a full period")
        return float(np.mean(z[2:] - z[:-2]))


def evolve_width(alpha0: float, beta0: float, lam: float, t_end: float, tol: float = 1e-11,
                 floor: float = R_FLOOR) -> WidthTrajectory:
    if not alpha0 > 0:
        raise ValueError("alpha0 must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")

    def rhs(t, z):
        r, rdot = z[0], z[1]
        return [rdot, alpha0**2 / r**3 + 2 * lam * alpha0 / r, alpha0 / r**2, math.log(r)]

    def collapse(t, z):
        return z[0] - floor

    collapse.terminal = True

    def turning(t, z):
        return z[1]

    sol = solve_ivp(rhs, (0.0, t_end), [1.0, -beta0, 0.0, 0.0], method="DOP853",
                    rtol=tol, atol=tol * 1e-3, dense_output=True,
                    events=[collapse, turning])
    if sol.status == 1 and len(sol.t_events[0]):
        raise WidthCollapse(f"r fell below {floor} at t={sol.t_events[0][0]:.6g}")
    if not sol.success:
        raise RuntimeError(sol.message)
    zeros = sol.t_events[1]
    zeros = zeros[zeros > 0]
    return WidthTrajectory(alpha0, beta0, lam, t_end, tol, sol.t, sol.y[0], sol.y[1],
                           sol.sol, zeros)


def amplitude_b(traj: WidthTrajectory, b0: complex, t, lam: float | None = None):
    """Amplitude ``b(t)`` of the Gaussian solution along ``traj``.

    ``b = b0 exp(-i lam t ln|b0|^2 - (i/2) A(t) - i lam int_0^t Im A)``,
    so that ``|b(t)| = |b0| / sqrt(r(t))``.
    """
    lam = traj.lam if lam is None else lam
    t = np.asarray(t, dtype=float)
    phase = (-1j * lam * t * math.log(abs(b0) ** 2) - 0.5j * traj.big_a(t)
             - 1j * lam * traj.int_im_big_a(t))
    return b0 * np.exp(phase)


def potential_u(r, alpha0: float, beta0: float, lam: float):
    """Effective potential of the width dynamics (``rdot^2/2 + U(r) = 0``)."""
    if lam >= 0:
        raise ValueError("the potential picture requires lam < 0")
    r = np.asarray(r, dtype=float)
    return -0.5 * beta0**2 - 0.5 * alpha0**2 * (1 - 1 / r**2) - 2 * lam * alpha0 * np.log(np.abs(r))


def u_min(alpha0: float, beta0: float, lam: float) -> tuple[float, float]:
    if lam >= 0:
        raise ValueError("the potential picture requires lam < 0")
    x = 2 * abs(lam) / alpha0
    r_min = math.sqrt(alpha0 / (2 * abs(lam)))
    return r_min, -0.5 * beta0**2 + 0.5 * alpha0**2 * (x - 1 - x * math.log(x))


@dataclass
class BreatherPeriod:
    period: float
    r_low: float
    r_high: float
    stationary: bool


def breather_period(alpha0: float, beta0: float, lam: float, degenerate_tol: float = 1e-14
                    ) -> BreatherPeriod:
    """Period of the width oscillation for ``lam < 0``.

    The turning points solve ``U(r) = 0`` on either side of the minimum;
    the half-period ``int dr / sqrt(-2 U)`` is computed after the
    substitution ``r = r_lo + (r_hi - r_lo) sin^2(theta)``, which removes
    the inverse square-root endpoint singularities.
    """
    r_m, umin = u_min(alpha0, beta0, lam)
    energy = 0.0
    if energy - umin <= degenerate_tol * max(1.0, alpha0**2):
        return BreatherPeriod(0.0, r_m, r_m, True)

    def u(r):
        return float(potential_u(r, alpha0, beta0, lam))

    lo = r_m
    while u(lo) <= energy:
        lo *= 0.5
    hi = r_m
    while u(hi) <= energy:
        hi *= 2.0
    r_lo = brentq(u, lo, r_m, xtol=1e-15, rtol=1e-15)
    r_hi = brentq(u, r_m, hi, xtol=1e-15, rtol=1e-15)
    span = r_hi - r_lo

    def integrand(theta):
        s, c = math.sin(theta), math.cos(theta)
        r = r_lo + span * s * s
        gap = -2.0 * u(r)
        if gap <= 0:
            # endpoint: use the derivative limit
            g = r_lo if s * s < 0.5 else r_hi
            slope = abs(alpha0**2 / g**3 + 2 * lam * alpha0 / g)
            return 2.0 * math.sqrt(span / (2.0 * slope)) if slope > 0 else 0.0
        return 2.0 * span * s * c / math.sqrt(gap)

    half, _ = quad(integrand, 0.0, 0.5 * math.pi, epsabs=0, epsrel=1e-13, limit=400)
    return BreatherPeriod(2.0 * half, r_lo, r_hi, False)


@dataclass
class TauScaler:
    """Dispersion scale ``tau(t)`` with dense output.

    The dense state is ``(tau, taudot, int tau^-2, int ln tau)``: the third
    component gives exact kinetic increments for the rescaled equation and
    the fourth the gauge phase.
    """

    mode: str
    parameter: float
    t_end: float
    t: np.ndarray
    tau_samples: np.ndarray
    taudot_samples: np.ndarray
    _sol: object

    def state(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.t_end * (1 + 1e-12)):
            raise ValueError(f"t outside scaler range [0, {self.t_end}]")
        return self._sol(t)

    def tau(self, t):
        return self.state(t)[0]

    def taudot(self, t):
        return self.state(t)[1]

    def kinetic_integral(self, t):
        return self.state(t)[2]

    def kinetic_increment(self, t0, t1):
        """int_{t0}^{t1} ds / tau(s)^2."""
        return self.kinetic_integral(t1) - self.kinetic_integral(t0)

    def log_integral(self, t):
        return self.state(t)[3]

    def theta(self, t, dim: int, norm_ratio: float = 1.0):
        """Gauge ``lam d int ln tau - 2 lam t ln(norm_ratio)`` removed from
        the rescaled equation; ``norm_ratio = |u0| / |gamma|``."""
        if self.mode != "logarithmic":
            raise ValueError("gauge only defined in logarithmic mode")
        lam = self.parameter
        return lam * dim * self.log_integral(t) - 2 * lam * np.asarray(t) * math.log(norm_ratio)

    def slow_time(self, t):
        """s(t) = ln(taudot)/2, the Fokker-Planck time (logarithmic mode)."""
        return 0.5 * np.log(self.taudot(t))

    def first_integral_residual(self, t=None):
        if t is None:
            tau, td = self.tau_samples, self.taudot_samples
        else:
            tau, td = self.tau(t), self.taudot(t)
        if self.mode == "logarithmic":
            return td**2 - 4 * self.parameter * np.log(tau)
        return td**2 - (1 - tau ** (-self.parameter))


def solve_tau(mode: str, parameter: float, t_end: float, tol: float = 1e-13) -> TauScaler:
    """Integrate ``tau'' = 2 lam / tau`` (logarithmic) or
    ``tau'' = alpha / (2 tau^(1+alpha))`` (polytropic), ``tau(0)=1``,
    ``tau'(0)=0``."""
    if mode not in ("logarithmic", "polytropic"):
        raise ValueError(f"unknown tau mode {mode!r}")
    if not parameter > 0:
        raise ValueError("tau parameter must be positive")
    p = float(parameter)
    if mode == "logarithmic":
        def accel(tau):
            return 2 * p / tau
    else:
        def accel(tau):
            return 0.5 * p * tau ** (-1 - p)

    def rhs(t, z):
        tau = z[0]
        return [z[1], accel(tau), 1.0 / tau**2, math.log(tau)]

    sol = solve_ivp(rhs, (0.0, t_end), [1.0, 0.0, 0.0, 0.0], method="DOP853",
                    rtol=tol, atol=1e-14, dense_output=True)
    if not sol.success:
        raise RuntimeError(sol.message)
    return TauScaler(mode, p, t_end, sol.t, sol.y[0], sol.y[1], sol.sol)


@dataclass
class GaussianState:
    """Tensorized Gaussian datum ``b0 * prod_j exp(-a0_j x_j^2 / 2)``."""

    alpha0: tuple[float, ...]
    beta0: tuple[float, ...]
    b0: complex
    lam: float
    trajectories: tuple[WidthTrajectory, ...] = ()

    @classmethod
    def build(cls, alpha0, beta0, b0: complex, lam: float, t_end: float, dim: int = 1,
              tol: float = 1e-12) -> GaussianState:
        alpha0 = tuple(np.broadcast_to(np.asarray(alpha0, dtype=float), (dim,)))
        beta0 = tuple(np.broadcast_to(np.asarray(beta0, dtype=float), (dim,)))
        cache = {}
        trajs = []
        for a, b in zip(alpha0, beta0):
            if (a, b) not in cache:
                cache[(a, b)] = evolve_width(a, b, lam, t_end, tol)
            trajs.append(cache[(a, b)])
        return cls(alpha0, beta0, complex(b0), lam, tuple(trajs))

    @property
    def dim(self) -> int:
        return len(self.alpha0)

    def amplitude(self, t):
        t = np.asarray(t, dtype=float)
        phase = -1j * self.lam * t * math.log(abs(self.b0) ** 2)
        for tr in self.trajectories:
            phase = phase - 0.5j * tr.big_a(t) - 1j * self.lam * tr.int_im_big_a(t)
        return self.b0 * np.exp(phase)

    def widths(self, t):
        return [tr.a(t) for tr in self.trajectories]


def gaussian_field(state: GaussianState, t: float, grid: Grid) -> Field:
    if grid.dim != state.dim:
        raise ValueError("grid and Gaussian state dimensions differ")
    if t == 0:
        arg = sum(complex(a, b) * xj**2 for a, b, xj in zip(state.alpha0, state.beta0, grid.coords))
        return Field(grid, state.b0 * np.exp(-0.5 * arg) * np.ones(grid.shape))
    b = state.amplitude(t)
    arg = sum(aj * xj**2 for aj, xj in zip(state.widths(t), grid.coords))
    return Field(grid, b * np.exp(-0.5 * arg) * np.ones(grid.shape))


def gaussian_hs1_squared(alpha0: float, beta0: float, b0: complex, traj: WidthTrajectory, t):
    """Closed-form ``|grad u(t)|^2`` of a 1D Gaussian solution."""
    r, rdot = traj.width(t)
    return abs(b0) ** 2 * math.sqrt(math.pi) / (2 * alpha0**1.5) * (alpha0**2 / r**2 + rdot**2)
