"""Split-step Fourier integration of power and logarithmic NLS.

Three problem kinds are supported:

``power``         i u_t + (1/2) Lap u = lam |u|^{2 sigma} u
``logarithmic``   i u_t + (1/2) Lap u = lam ln(eps + |u|^2) u
``rescaled_log``  i v_t + 1/(2 tau^2) Lap v = lam v (ln(eps + |v|^2) + |y|^2)

The nonlinear flows only rotate the phase, so they are applied exactly.
The kinetic flow is diagonal in Fourier space; for the rescaled equation
its coefficient is integrated exactly through the tau scaler.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gaussian import TauScaler
from .grid import Field, Grid, gaussian_profile, high_frequency_fraction, l2_norm, resample

logger = logging.getLogger(__name__)

KINDS = ("power", "logarithmic", "rescaled_log")
DEFAULT_REG = 1e-10


class SolverError(RuntimeError):
    pass


class AliasingError(RuntimeError):
    pass


@dataclass
class NlsProblem:
    kind: str
    grid: Grid
    lam: float
    sigma: float = 1.0
    reg_eps: float = DEFAULT_REG
    scaler: TauScaler | None = None
    dt: float = 1e-3
    adaptive: bool = False
    dt_max: float = 0.05

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind != "power" and not self.reg_eps > 0:
            raise ValueError("logarithmic kinds need a positive regularization eps")
        if self.kind == "power":
            d = self.grid.dim
            upper = math.inf if d <= 2 else 2.0 / (d - 2)
            if not 0 < self.sigma < upper:
                raise ValueError(f"sigma must lie in (0, {upper}) in dimension {d}")
        if self.kind == "rescaled_log":
            if self.scaler is None or self.scaler.mode != "logarithmic":
                raise ValueError("rescaled_log needs a logarithmic tau scaler")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


class SplitStepSolver:
    """Strang splitting: half kinetic, exact nonlinear phase, half kinetic.

    An instance keeps its own precomputed symbols and is meant for use by a
    single thread.  Inputs are never modified.
    """

    def __init__(self, problem: NlsProblem):
        self.problem = problem
        g = problem.grid
        self._half_k2 = 0.5 * g.k2
        self._r2 = g.r2

    def _kinetic(self, vh: np.ndarray, coeff: float) -> np.ndarray:
        # vh is multiplied in place; callers own it
        vh *= np.exp(-1j * coeff * self._half_k2)
        return vh

    def _phase(self, v: np.ndarray, dt: float) -> np.ndarray:
        p = self.problem
        dens = np.abs(v) ** 2
        if p.kind == "power":
            pot = dens**p.sigma
        elif p.kind == "logarithmic":
            pot = np.log(p.reg_eps + dens)
        else:
            pot = np.log(p.reg_eps + dens) + self._r2
        return v * np.exp(-1j * dt * p.lam * pot)

    def kinetic_coefficients(self, t0: float, t1: float) -> tuple[float, float]:
        """Kinetic weights of the two half steps over [t0, t1]."""
        p = self.problem
        if p.kind != "rescaled_log":
            half = 0.5 * (t1 - t0)
            return half, half
        tm = 0.5 * (t0 + t1)
        k0, km, k1 = p.scaler.kinetic_integral(np.array([t0, tm, t1]))
        return km - k0, k1 - km

    def step(self, v: np.ndarray, t: float, dt: float, coeffs=None) -> np.ndarray:
        if not dt > 0:
            raise ValueError("dt must be positive")
        c1, c2 = self.kinetic_coefficients(t, t + dt) if coeffs is None else coeffs
        w = np.fft.ifftn(self._kinetic(np.fft.fftn(v), c1))
        w = self._phase(w, dt)
        w = np.fft.ifftn(self._kinetic(np.fft.fftn(w), c2))
        if not np.all(np.isfinite(w)):
            raise SolverError(f"non-finite values after step at t={t:.6g}, dt={dt:.3g}")
        return w

    def time_grid(self, t0: float, t_end: float) -> np.ndarray:
        p = self.problem
        if not p.adaptive:
            n = max(1, int(round((t_end - t0) / p.dt)))
            return np.linspace(t0, t_end, n + 1)
        # rescaled frame: splitting error per unit time scales like dt^2/tau^2
        ts = [t0]
        t = t0
        while t < t_end - 1e-14:
            scale = float(p.scaler.tau(t)) if p.kind == "rescaled_log" else 1.0
            dt = min(p.dt * scale, p.dt_max, t_end - t)
            t = t + dt
            ts.append(t)
        ts[-1] = t_end
        return np.asarray(ts)


def step_strang(p: NlsProblem, f: Field, t: float, dt: float) -> Field:
    return Field(p.grid, SplitStepSolver(p).step(f.values, t, dt))


def boundary_fraction(grid: Grid, values: np.ndarray, cells: int = 3) -> float:
    """Share of the mass carried by samples within ``cells`` of the box edge."""
    dens = np.abs(values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    mask = np.zeros(grid.shape, dtype=bool)
    idx = np.r_[0:cells, grid.n - cells:grid.n]
    for ax in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[ax] = idx
        mask[tuple(sl)] = True
    return float(dens[mask].sum() / total)


@dataclass
class EvolveResult:
    times: list[float] = field(default_factory=list)
    snapshots: list[Field] = field(default_factory=list)
    records: list = field(default_factory=list)
    breach: bool = False
    breach_time: float | None = None
    final: Field | None = None
    steps: int = 0


def evolve(p: NlsProblem, f0: Field, t_end: float, every: int | None = None,
           sample_times=None, observer: Callable | None = None, keep_snapshots: bool = True,
           breach_threshold: float = 1e-8, t0: float = 0.0) -> EvolveResult:
    """Repeated Strang steps from ``t0`` to ``t_end``.

    Samples are taken every ``every`` steps, or at the first step reaching
    each of ``sample_times``.  ``observer(field, t)`` may return a record
    stored in ``result.records``.  A boundary-mass share above
    ``breach_threshold`` sets ``result.breach``.
    """
    if f0.grid != p.grid:
        raise ValueError("initial field is not on the problem grid")
    solver = SplitStepSolver(p)
    ts = solver.time_grid(t0, t_end)
    if sample_times is not None:
        targets = np.asarray(sorted(sample_times), dtype=float)
        ts = np.union1d(ts, targets[(targets > t0) & (targets < t_end)])
    if p.kind == "rescaled_log":
        mids = 0.5 * (ts[:-1] + ts[1:])
        kin = p.scaler.kinetic_integral(np.concatenate([ts, mids]))
        kt, km = kin[: len(ts)], kin[len(ts):]
        coeffs = np.stack([km - kt[:-1], kt[1:] - km], axis=1)
    else:
        half = 0.5 * np.diff(ts)
        coeffs = np.stack([half, half], axis=1)

    res = EvolveResult()

    def sample(v, t):
        fld = Field(p.grid, v)
        res.times.append(float(t))
        if keep_snapshots:
            res.snapshots.append(fld)
        if observer is not None:
            res.records.append(observer(fld, float(t)))
        if not res.breach and boundary_fraction(p.grid, v) > breach_threshold:
            res.breach = True
            res.breach_time = float(t)
            logger.warning("boundary mass above %.1e at t=%.6g", breach_threshold, t)

    target_set = set(np.round(np.asarray(sample_times, dtype=float), 12)) if sample_times is not None else None
    v = f0.values
    sample(v, ts[0])
    for i in range(len(ts) - 1):
        v = solver.step(v, ts[i], ts[i + 1] - ts[i], coeffs[i])
        last = i == len(ts) - 2
        if target_set is not None:
            take = round(float(ts[i + 1]), 12) in target_set or last
        else:
            take = (every is not None and (i + 1) % every == 0) or last
        if take:
            sample(v, ts[i + 1])
    res.steps = len(ts) - 1
    res.final = Field(p.grid, v)
    return res


def apply_galilean(f: Field, velocity, t: float = 0.0) -> Field:
    """Boost ``u(t, x - v t) e^{i v.x - i |v|^2 t / 2}``; only ``t = 0`` data
    are transformed here (the shift is left to the flow)."""
    g = f.grid
    vel = np.broadcast_to(np.asarray(velocity, dtype=float), (g.dim,))
    for vj in vel:
        if not g.admissible(vj):
            raise ValueError(f"velocity component {vj} is not a multiple of 2*pi/L")
    if t != 0.0:
        shifted = resample_shift(f, vel * t)
        vals = shifted.values
    else:
        vals = f.values
    phase = sum(vj * xj for vj, xj in zip(vel, g.coords)) - 0.5 * float(vel @ vel) * t
    return Field(g, vals * np.exp(1j * phase))


def resample_shift(f: Field, shift) -> Field:
    """f(x - shift) by a spectral phase ramp (periodic translation)."""
    g = f.grid
    fh = np.fft.fftn(f.values)
    ramp = sum(kj * sj for kj, sj in zip(g.k_odd, np.broadcast_to(shift, (g.dim,))))
    return Field(g, np.fft.ifftn(fh * np.exp(-1j * ramp)))


def apply_scaling(f: Field, k: complex, t: float, lam: float) -> Field:
    """u_k(t, x) = k u(t, x) exp(-i t lam ln|k|^2)."""
    if k == 0:
        raise ValueError("k must be nonzero")
    return Field(f.grid, k * f.values * np.exp(-1j * t * lam * math.log(abs(k) ** 2)))


def _mapped_points(src: Grid, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = src.axis[0], src.axis[0] + src.length
    inside = (pts >= lo - 1e-12) & (pts < hi - 1e-12)
    return np.where(inside, pts, lo), inside


def _resample_scaled(src: Grid, values: np.ndarray, dst: Grid, factor: float,
                     check_alias: bool = True, alias_tol: float = 1e-10) -> np.ndarray:
    """Samples of ``values(factor * y)`` on ``dst``; zero outside ``src``."""
    if check_alias:
        frac = high_frequency_fraction(src, values)
        if frac > alias_tol:
            raise AliasingError(f"spectral energy above 90% Nyquist is {frac:.2e}")
    pts, inside = _mapped_points(src, factor * dst.axis)
    out = resample(src, values, pts)
    mask = np.ones(dst.shape, dtype=bool)
    for ax in range(dst.dim):
        shape = [1] * dst.dim
        shape[ax] = -1
        mask = mask & inside.reshape(shape)
    return np.where(mask, out, 0.0)


def to_rescaled_frame(u: Field, scaler: TauScaler, t: float, mass_ref: float,
                      y_grid: Grid | None = None, check_alias: bool = True) -> Field:
    """v(t, y) = tau^{d/2} (|gamma|/|u0|) u(t, tau y) e^{-i taudot tau |y|^2/2} e^{-i theta}.

    ``mass_ref`` is the conserved mass |u0|^2.
    """
    xg = u.grid
    yg = xg if y_grid is None else y_grid
    d = xg.dim
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    gamma_norm2 = math.pi ** (d / 2)
    ratio = math.sqrt(mass_ref / gamma_norm2)
    theta = float(scaler.theta(t, d, ratio))
    vals = _resample_scaled(xg, u.values, yg, tau, check_alias)
    chirp = np.exp(-0.5j * taud * tau * yg.r2 - 1j * theta)
    return Field(yg, tau ** (d / 2) / ratio * vals * chirp)


def from_rescaled_frame(v: Field, scaler: TauScaler, t: float, mass_ref: float,
                        x_grid: Grid | None = None, check_alias: bool = True) -> Field:
    yg = v.grid
    xg = yg if x_grid is None else x_grid
    d = yg.dim
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    ratio = math.sqrt(mass_ref / math.pi ** (d / 2))
    theta = float(scaler.theta(t, d, ratio))
    vals = _resample_scaled(yg, v.values, xg, 1.0 / tau, check_alias)
    chirp = np.exp(0.5j * taud / tau * xg.r2 + 1j * theta)
    return Field(xg, ratio * tau ** (-d / 2) * vals * chirp)


def gamma_field(grid: Grid) -> Field:
    return Field(grid, gaussian_profile(grid))


def l2_distance(a: Field, b: Field) -> float:
    return l2_norm(a.values - b.values, a.grid)
