"""Madelung variables and the isothermal Korteweg / quantum Navier-Stokes
system: Gaussian-ansatz solutions, the rescaled (R, U) frame, energy and
BD-entropy functionals, and long-time rigidity diagnostics.

Velocities are carried as momenta ``J = rho u`` on periodic grids, since
affine velocity fields are not periodic while ``rho u`` decays.  Any
quantity involving ``grad u`` is rebuilt from ``grad J - u grad rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import beta as beta_fn

from .diagnostics import fmt, xlogx
from .gaussian import TauScaler
from .grid import Density, Field, Grid, spectral_derivative
from .solver import _resample_scaled

VACUUM_FLOOR = 1e-14
FLUID_COLUMNS = ("t", "beta", "omega", "E", "D", "EBD", "DBD", "moment1", "moment2")


class FluidError(RuntimeError):
    pass


def correspondence(gamma: float) -> tuple[float, float]:
    """(lam, sigma) of the power nonlinearity matching pressure rho^gamma."""
    if not gamma > 1:
        raise ValueError("the power correspondence needs gamma > 1")
    return gamma / (gamma - 1), (gamma - 1) / 2


@dataclass(frozen=True)
class FluidState:
    rho: Density
    momentum: np.ndarray = field(repr=False)  # shape (dim,) + grid.shape
    eps: float = 0.0
    nu: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        g = self.rho.grid
        j = np.asarray(self.momentum, dtype=float).reshape((g.dim,) + g.shape)
        if self.eps < 0 or self.nu < 0 or self.gamma < 1:
            raise ValueError("need eps >= 0, nu >= 0, gamma >= 1")
        if np.any(j[:, self.rho.values == 0] != 0):
            raise ValueError("momentum must vanish where the density does")
        object.__setattr__(self, "momentum", j)

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def velocity(self, floor: float = VACUUM_FLOOR) -> np.ndarray:
        rho = self.rho.values
        mask = rho > floor * rho.max()
        return np.where(mask, self.momentum / np.where(mask, rho, 1.0), 0.0)


def madelung(u: Field, eps: float = 0.0, nu: float = 0.0, gamma: float = 1.0) -> FluidState:
    """rho = |u|^2, J = Im(conj(u) grad u), derivatives spectral."""
    g = u.grid
    j = np.array([np.imag(np.conj(u.values) * spectral_derivative(g, u.values, ax))
                  for ax in range(g.dim)])
    rho = np.abs(u.values) ** 2
    j[:, rho == 0] = 0.0
    return FluidState(Density(g, rho), j, eps, nu, gamma)


# -- Gaussian (isothermal) and affine (polytropic) exact solutions, d = 1 --

@dataclass(frozen=True)
class FluidGaussianState:
    """Variance beta and velocity slope omega of rho, u = omega x.

    For gamma = 1 the density is the Gaussian m (2 pi beta)^{-1/2}
    exp(-x^2 / (2 beta)); for gamma > 1 (and eps = nu = 0) it is the
    compact profile proportional to (1 - x^2/l^2)_+^{1/(gamma-1)} with the
    same second moment beta.
    """

    beta: float
    omega: float = 0.0
    mass: float = 1.0
    eps: float = 0.0
    nu: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.beta > 0 or not self.mass > 0:
            raise ValueError("need beta > 0 and mass > 0")
        if self.eps < 0 or self.nu < 0 or self.gamma < 1:
            raise ValueError("need eps >= 0, nu >= 0, gamma >= 1")
        if self.gamma > 1 and (self.eps or self.nu):
            raise ValueError("the polytropic ansatz is exact only for eps = nu = 0")

    @property
    def polytropic(self) -> bool:
        return self.gamma > 1


def _profile_exponent(gamma: float) -> float:
    return 1.0 / (gamma - 1)


def _support_ratio(gamma: float) -> float:
    # l^2 / beta for the profile (1 - s^2)^p
    return 2 * _profile_exponent(gamma) + 3


def _profile_constant(gamma: float) -> float:
    # int_{-1}^{1} (1 - s^2)^p ds
    return beta_fn(0.5, _profile_exponent(gamma) + 1)


def _polytropic_force(init: FluidGaussianState) -> float:
    g = init.gamma
    c = init.mass / _profile_constant(g)
    return 2 * g / (g - 1) * c ** (g - 1)


def ansatz_rhs(t, z, init: FluidGaussianState):
    beta, omega = z
    if init.polytropic:
        ell = math.sqrt(_support_ratio(init.gamma) * beta)
        accel = _polytropic_force(init) * ell ** (-init.gamma - 1)
    else:
        accel = 1 / beta + init.eps**2 / (4 * beta**2) - init.nu * omega / beta
    return [2 * omega * beta, accel - omega**2]


@dataclass
class FluidTrajectory:
    init: FluidGaussianState
    t_end: float
    sol: object = field(repr=False)

    def __call__(self, t):
        return self.sol(t)

    def beta(self, t):
        return self.sol(t)[0]

    def omega(self, t):
        return self.sol(t)[1]

    def rates(self, t) -> tuple[float, float]:
        return tuple(ansatz_rhs(t, self.sol(t), self.init))

    def _profile(self, beta: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """density and d(density)/d(beta) at fixed x."""
        m = self.init.mass
        if not self.init.polytropic:
            rho = m / math.sqrt(2 * math.pi * beta) * np.exp(-x**2 / (2 * beta))
            return rho, rho * (x**2 / (2 * beta**2) - 1 / (2 * beta))
        p = _profile_exponent(self.init.gamma)
        ell2 = _support_ratio(self.init.gamma) * beta
        s2 = x**2 / ell2
        inside = s2 < 1
        base = np.where(inside, 1 - s2, 0.0)
        amp = m / (_profile_constant(self.init.gamma) * math.sqrt(ell2))
        rho = amp * base**p
        # d/dbeta: amp ~ beta^{-1/2}, s2 ~ 1/beta
        # base ** (p - 1) only inside the support, where base > 0
        edge = np.where(inside, base, 1.0) ** (p - 1)
        drho = -rho / (2 * beta) + np.where(inside, amp * p * edge * s2 / beta, 0.0)
        return rho, drho

    def state(self, t: float, grid: Grid) -> FluidState:
        if grid.dim != 1:
            raise ValueError("the ansatz is one dimensional")
        beta, omega = self.sol(t)
        x = grid.axis
        rho, _ = self._profile(beta, x)
        return FluidState(Density(grid, rho), (rho * omega * x)[None], self.init.eps,
                          self.init.nu, self.init.gamma)

    def pde_residual(self, t: float, grid: Grid) -> tuple[float, float]:
        """Max pointwise residuals of the continuity and momentum equations.

        Time derivatives come from the ODE right-hand side through the exact
        profile, space derivatives are spectral (Gaussian case) or exact
        (compact polytropic profile, interior points only).
        """
        beta, omega = self.sol(t)
        bdot, wdot = self.rates(t)
        x = grid.axis
        rho, drho_db = self._profile(beta, x)
        rho_t = drho_db * bdot
        eps, nu = self.init.eps, self.init.nu
        if self.init.polytropic:
            g = self.init.gamma
            p = _profile_exponent(g)
            ell2 = _support_ratio(g) * beta
            inside = x**2 < (1 - 1e-3) * ell2
            base = np.where(inside, 1 - x**2 / ell2, 1.0)
            rho_x = np.where(inside, rho * p / base * (-2 * x / ell2), 0.0)
            mass_res = rho_t + omega * rho + omega * x * rho_x
            press_x = g * rho ** (g - 1) * rho_x
            # d/dx(rho u^2) = omega^2 (2 x rho + x^2 rho_x)
            mom_res = rho_t * omega * x + rho * wdot * x + omega**2 * (2 * x * rho + x**2 * rho_x) + press_x
            return float(np.max(np.abs(mass_res[inside]))), float(np.max(np.abs(mom_res[inside])))

        def dx(f):
            return spectral_derivative(grid, f, 0)

        j = rho * omega * x
        mass_res = rho_t + dx(j)
        s = np.sqrt(rho)
        s1 = dx(s)
        s2 = dx(s1)
        s3 = dx(s2)
        korteweg = 0.5 * eps**2 * (s * s3 - s1 * s2)
        viscous = nu * dx(rho * omega)
        mom_res = rho_t * omega * x + rho * wdot * x + dx(j * omega * x) + dx(rho) - korteweg - viscous
        return float(np.max(np.abs(mass_res))), float(np.max(np.abs(mom_res)))

    def energy(self, t) -> float:
        """Physical energy (isothermal): kinetic + capillary + int rho ln rho."""
        if self.init.polytropic:
            raise FluidError("energy is defined for the isothermal ansatz")
        beta, omega = self.sol(t)
        m, eps = self.init.mass, self.init.eps
        ent = m * math.log(m) - 0.5 * m * (math.log(2 * math.pi * beta) + 1)
        return 0.5 * m * omega**2 * beta + eps**2 * m / (8 * beta) + ent

    def dissipation(self, t) -> float:
        """nu int rho |D u|^2 for u = omega x."""
        return self.init.nu * self.init.mass * float(self.omega(t)) ** 2


def fluid_gaussian_ode(init: FluidGaussianState, t_end: float, tol: float = 1e-12) -> FluidTrajectory:
    if not t_end > 0:
        raise ValueError("t_end must be positive")

    def collapse(t, z, *_):
        return z[0] - 1e-12 * init.beta

    collapse.terminal = True
    sol = solve_ivp(ansatz_rhs, (0.0, t_end), [init.beta, init.omega], method="DOP853",
                    rtol=tol, atol=tol * 1e-3 * init.beta, dense_output=True,
                    events=collapse, args=(init,))
    if sol.status == 1 or not sol.success:
        raise FluidError(f"variance collapsed near t = {sol.t[-1]:.6g}")
    return FluidTrajectory(init, t_end, sol.sol)


# -- rescaled frame --------------------------------------------------------

def _gamma_mass(dim: int) -> float:
    return math.pi ** (dim / 2)


def rescale_fluid(state: FluidState, scaler: TauScaler, t: float, mass_ref: float,
                  y_grid: Grid | None = None, check_alias: bool = True) -> FluidState:
    """(rho, J) -> (R, R U) with rho = tau^{-d} R(x/tau) |rho0|/|Gamma| and
    u = U(x/tau)/tau + (taudot/tau) x."""
    xg = state.grid
    yg = xg if y_grid is None else y_grid
    d = xg.dim
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    c = _gamma_mass(d) / mass_ref
    rho_s = _resample_scaled(xg, state.rho.values, yg, tau, check_alias).real
    big_r = c * tau**d * rho_s
    big_j = []
    for ax in range(d):
        j_s = _resample_scaled(xg, state.momentum[ax], yg, tau, check_alias).real
        big_j.append(c * tau ** (d + 1) * (j_s - taud * yg.coords[ax] * rho_s))
    big_r = np.maximum(big_r, 0.0)
    big_j = np.where(big_r > 0, np.array(big_j), 0.0)
    return FluidState(Density(yg, big_r), big_j, state.eps, state.nu, state.gamma)


def unrescale_fluid(state: FluidState, scaler: TauScaler, t: float, mass_ref: float,
                    x_grid: Grid | None = None, check_alias: bool = True) -> FluidState:
    yg = state.grid
    xg = yg if x_grid is None else x_grid
    d = yg.dim
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    c = mass_ref / _gamma_mass(d)
    r_s = _resample_scaled(yg, state.rho.values, xg, 1.0 / tau, check_alias).real
    rho = np.maximum(c * tau ** (-d) * r_s, 0.0)
    j = []
    for ax in range(d):
        rj = _resample_scaled(yg, state.momentum[ax], xg, 1.0 / tau, check_alias).real
        j.append(c * tau ** (-d - 1) * rj + taud / tau * xg.coords[ax] * rho)
    j = np.where(rho > 0, np.array(j), 0.0)
    return FluidState(Density(xg, rho), j, state.eps, state.nu, state.gamma)


# -- functionals -----------------------------------------------------------

@dataclass
class FluidEnergies:
    energy: float
    dissipation: float
    bd_energy: float
    bd_dissipation: float
    div_term: float  # int R div U
    mass: float


@dataclass
class _Pieces:
    kinetic: float  # int R |U|^2
    capillary: float  # int |grad sqrt R|^2
    potential: float  # int R |y|^2 + R ln R
    strain: float  # int R |D U|^2
    spin: float  # int R |A U|^2
    hessian: float  # int R |grad^2 log R|^2
    bd_kinetic: float  # int R |U + nu grad log R|^2
    div_term: float
    mass: float


def _pieces(state: FluidState, nu: float) -> _Pieces:
    g = state.grid
    d = g.dim
    r = state.rho.values
    j = state.momentum
    mask = r > VACUUM_FLOOR * r.max()
    rs = np.where(mask, r, 1.0)

    def dd(f, ax):
        return spectral_derivative(g, f, ax)

    u = np.where(mask, j / rs, 0.0)
    grad_r = [dd(r, ax) for ax in range(d)]
    # R dU_j/dx_i = dJ_j/dx_i - U_j dR/dx_i
    rdu = [[dd(j[jj], ii) - u[jj] * grad_r[ii] for jj in range(d)] for ii in range(d)]
    strain = spin = 0.0
    for ii in range(d):
        for jj in range(d):
            sym = 0.5 * (rdu[ii][jj] + rdu[jj][ii])
            skew = 0.5 * (rdu[ii][jj] - rdu[jj][ii])
            strain += np.where(mask, sym**2 / rs, 0.0)
            spin += np.where(mask, skew**2 / rs, 0.0)
    hess = 0.0
    for ii in range(d):
        for jj in range(ii, d):
            h = dd(grad_r[jj], ii) - np.where(mask, grad_r[ii] * grad_r[jj] / rs, 0.0)
            w = 1 if ii == jj else 2
            hess = hess + w * np.where(mask, h**2 / rs, 0.0)
    bd = sum(np.where(mask, (j[ax] + nu * grad_r[ax]) ** 2 / rs, 0.0) for ax in range(d))
    sqrt_r = np.sqrt(r)
    cap = sum(dd(sqrt_r, ax) ** 2 for ax in range(d))
    div = sum(rdu[ax][ax] for ax in range(d))
    return _Pieces(
        kinetic=float(g.integrate(np.where(mask, np.sum(j**2, axis=0) / rs, 0.0))),
        capillary=float(g.integrate(cap)),
        potential=float(g.integrate(g.r2 * r + xlogx(r))),
        strain=float(g.integrate(strain)),
        spin=float(g.integrate(spin)),
        hessian=float(g.integrate(hess)),
        bd_kinetic=float(g.integrate(bd)),
        div_term=float(g.integrate(div)),
        mass=float(g.integrate(r)),
    )


def _assemble(p: _Pieces, tau: float, taud: float, eps: float, nu: float) -> FluidEnergies:
    e = p.kinetic / (2 * tau**2) + eps**2 * p.capillary / (2 * tau**2) + p.potential
    dis = taud / tau**3 * (p.kinetic + eps**2 * p.capillary) + nu / tau**4 * p.strain
    ebd = (p.bd_kinetic + eps**2 * p.capillary) / (2 * tau**2) + p.potential
    dbd = (taud / tau**3 * (p.kinetic + eps**2 * p.capillary) + nu / tau**4 * p.spin
           + nu * eps**2 / (4 * tau**4) * p.hessian + 4 * nu / tau**2 * p.capillary)
    return FluidEnergies(e, dis, ebd, dbd, p.div_term, p.mass)


def fluid_energies(state: FluidState, scaler: TauScaler, t: float,
                   eps: float | None = None, nu: float | None = None) -> FluidEnergies:
    """Pseudo-energy, its dissipation, BD entropy and BD dissipation of a
    rescaled state (R, R U)."""
    eps = state.eps if eps is None else eps
    nu = state.nu if nu is None else nu
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    return _assemble(_pieces(state, nu), tau, taud, eps, nu)


def ansatz_energies(traj: FluidTrajectory, scaler: TauScaler, t: float) -> FluidEnergies:
    """Closed-form functionals of the isothermal ansatz in the rescaled
    frame (d = 1, R normalized to the mass of Gamma)."""
    if traj.init.polytropic:
        raise FluidError("closed forms are for the isothermal ansatz")
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    beta, omega = traj.sol(t)
    b = beta / tau**2
    k = tau**2 * omega - tau * taud  # U = k y
    nu = traj.init.nu
    sp = math.sqrt(math.pi)
    p = _Pieces(
        kinetic=sp * k**2 * b,
        capillary=sp / (4 * b),
        potential=sp * b - sp * (0.5 * math.log(2 * b) + 0.5),
        strain=sp * k**2,
        spin=0.0,
        hessian=sp / b**2,
        bd_kinetic=sp * b * (k - nu / b) ** 2,
        div_term=sp * k,
        mass=sp,
    )
    return _assemble(p, tau, taud, traj.init.eps, nu)


def ansatz_rescaled_state(traj: FluidTrajectory, scaler: TauScaler, t: float, grid: Grid) -> FluidState:
    """The ansatz in (R, R U) variables, built in closed form."""
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    beta, omega = traj.sol(t)
    b = beta / tau**2
    y = grid.axis
    r = np.exp(-y**2 / (2 * b)) / math.sqrt(2 * b)
    k = tau**2 * omega - tau * taud
    return FluidState(Density(grid, r), (r * k * y)[None], traj.init.eps, traj.init.nu)


# -- records and rigidity --------------------------------------------------

@dataclass
class FluidRecord:
    t: float
    beta: float
    omega: float
    energy: float
    dissipation: float
    bd_energy: float
    bd_dissipation: float
    moment1: float
    moment2: float

    def row(self) -> list[float]:
        return [self.t, self.beta, self.omega, self.energy, self.dissipation,
                self.bd_energy, self.bd_dissipation, self.moment1, self.moment2]


def ansatz_records(traj: FluidTrajectory, scaler: TauScaler, times) -> list[FluidRecord]:
    out = []
    for t in times:
        e = ansatz_energies(traj, scaler, t)
        beta, omega = traj.sol(t)
        # normalized moments of R: centred Gaussian with variance beta/tau^2
        out.append(FluidRecord(float(t), float(beta), float(omega), e.energy, e.dissipation,
                               e.bd_energy, e.bd_dissipation, 0.0, float(beta / scaler.tau(t) ** 2)))
    return out


def write_fluid_csv(records, stream=None) -> str:
    lines = [",".join(FLUID_COLUMNS)]
    lines += [",".join(fmt(x) for x in r.row()) for r in records]
    text = "\n".join(lines) + "\n"
    if stream is not None:
        stream.write(text)
    return text


@dataclass
class RigidityReport:
    dissipation_integral: float
    sup_energy: float
    energy_audit: float  # max over the run of E(t) + int_0^t D
    max_moment1: float
    moment2_gap: list = field(repr=False)
    monotone: bool = False
    final_density_gap: float = math.nan


def rigidity_checks(records, dim: int = 1, trend_from: float = 0.0) -> RigidityReport:
    """Finiteness of the dissipation integral and energy, and the trend of
    the first and second normalized moments of R toward those of Gamma.

    Monotonicity of the second-moment gap is judged on records with
    ``t >= trend_from``, which skips the initial transient.
    """
    if len(records) < 2:
        raise ValueError("need at least two records")
    t = np.array([r.t for r in records])
    dis = np.array([r.dissipation for r in records])
    en = np.array([r.energy for r in records])
    run = np.concatenate([[0.0], np.cumsum(0.5 * (dis[1:] + dis[:-1]) * np.diff(t))])
    gap = [abs(r.moment2 - dim / 2) for r in records]
    late = [gp for gp, r in zip(gap, records) if r.t >= trend_from]
    monotone = len(late) >= 2 and all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(late, late[1:]))
    # sup |R/|R| - Gamma/|Gamma|| for a centred Gaussian of variance m2
    y = np.linspace(-8, 8, 4001)
    m2 = records[-1].moment2
    dens = np.exp(-y**2 / (2 * m2)) / math.sqrt(2 * math.pi * m2)
    target = np.exp(-y**2) / math.sqrt(math.pi)
    return RigidityReport(
        dissipation_integral=float(run[-1]),
        sup_energy=float(en.max()),
        energy_audit=float(np.max(en + run)),
        max_moment1=float(max(abs(r.moment1) for r in records)),
        moment2_gap=gap,
        monotone=monotone,
        final_density_gap=float(np.max(np.abs(dens - target))),
    )
