"""Conserved quantities, pseudo-energy, entropy/distance functionals and
the Fokker-Planck reference dynamics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import TauScaler
from .grid import Density, Field, Grid, gaussian_profile, gradient_spectral, hs_norm, moments

DENSITY_FLOOR = 1e-300


def xlogx(x: np.ndarray) -> np.ndarray:
    """x ln x with the continuous extension 0 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > DENSITY_FLOOR
    out[pos] = x[pos] * np.log(x[pos])
    return out


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    momentum: np.ndarray
    center: np.ndarray
    variance: float
    a: float
    kinetic: float = math.nan
    entropy: float = math.nan
    pseudo_energy: float = math.nan
    pseudo_kin: float = math.nan
    pseudo_ent: float = math.nan
    energy: float = math.nan
    hs05: float = math.nan
    hs1: float = math.nan
    l1_dist: float = math.nan
    w1_dist: float = math.nan
    extra: dict = field(default_factory=dict)

    def row(self) -> list[float]:
        return [self.t, self.mass, *self.momentum, *self.center, self.variance, self.a,
                self.kinetic, self.entropy, self.pseudo_energy, self.energy, self.hs05,
                self.hs1, self.l1_dist, self.w1_dist]


def csv_header(dim: int) -> list[str]:
    return (["t", "M"] + [f"I1_{j + 1}" for j in range(dim)] + [f"I2_{j + 1}" for j in range(dim)]
            + ["V", "A", "Ekin", "Sent", "PseudoE", "E", "Hs05", "Hs1", "L1dist", "W1dist"])


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(records, dim: int, stream=None) -> str:
    """Serialize records with the fixed column order, 17 significant digits."""
    buf = io.StringIO() if stream is None else stream
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(dim))
    for rec in records:
        w.writerow([fmt(x) for x in rec.row()])
    return buf.getvalue() if stream is None else ""


def entropy_integral(f: Field) -> float:
    """int |f|^2 ln |f|^2."""
    return float(f.grid.integrate(xlogx(np.abs(f.values) ** 2)))


def physical_energy(u: Field, lam: float) -> float:
    """E(u) = |grad u|^2 / 2 + lam int |u|^2 ln |u|^2."""
    return 0.5 * hs_norm(u, 1.0) ** 2 + lam * entropy_integral(u)


def pseudo_energy(v: Field, scaler: TauScaler, t: float, lam: float) -> tuple[float, float, float]:
    """(E, E_kin, E_ent) of the rescaled unknown, E = E_kin + lam E_ent."""
    tau = float(scaler.tau(t))
    e_kin = hs_norm(v, 1.0) ** 2 / (2 * tau**2)
    rho = np.abs(v.values) ** 2
    e_ent = float(v.grid.integrate(xlogx(rho) + v.grid.r2 * rho))
    return e_kin + lam * e_ent, e_kin, e_ent


def physical_hs1_from_rescaled(v: Field, scaler: TauScaler, t: float, mass: float) -> float:
    """|grad u(t)|_{L2} reconstructed from v through the rescaling.

    grad u corresponds to (1/tau) grad_y v + i taudot y v, up to the mass
    factor |u0|/|gamma|.
    """
    g = v.grid
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    ratio2 = mass / math.pi ** (g.dim / 2)
    grads = gradient_spectral(v)
    total = sum(g.integrate(np.abs(dj.values / tau + 1j * taud * xj * v.values) ** 2)
                for dj, xj in zip(grads, g.coords))
    return math.sqrt(ratio2 * total)


def physical_energy_from_rescaled(v: Field, scaler: TauScaler, t: float, lam: float,
                                  mass: float) -> float:
    g = v.grid
    d = g.dim
    tau = float(scaler.tau(t))
    ratio2 = mass / math.pi ** (d / 2)
    hs1 = physical_hs1_from_rescaled(v, scaler, t, mass)
    mv = float(g.integrate(np.abs(v.values) ** 2))
    ent = ratio2 * (entropy_integral(v) + (math.log(ratio2) - d * math.log(tau)) * mv)
    return 0.5 * hs1**2 + lam * ent


def normalized_gamma_density(grid: Grid) -> np.ndarray:
    g2 = gaussian_profile(grid) ** 2
    return g2 / grid.integrate(g2)


def l1_distance(rho: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """L1 distance between the unit-mass normalizations of two densities."""
    return float(grid.integrate(np.abs(rho / grid.integrate(rho) - g / grid.integrate(g))))


def record(f: Field, t: float, lam: float = 0.0, scaler: TauScaler | None = None,
           mass_ref: float | None = None) -> DiagnosticsRecord:
    """Full diagnostics of a snapshot.  With a scaler the field is read as
    the rescaled unknown and physical quantities are reconstructed."""
    g = f.grid
    m = moments(f)
    rec = DiagnosticsRecord(t=t, mass=m.mass, momentum=m.momentum, center=m.center,
                            variance=m.variance, a=m.a)
    rec.entropy = entropy_integral(f)
    rho = np.abs(f.values) ** 2
    gam = normalized_gamma_density(g)
    if scaler is None:
        rec.kinetic = 0.5 * hs_norm(f, 1.0) ** 2
        rec.energy = rec.kinetic + lam * rec.entropy
        rec.hs05, rec.hs1 = hs_norm(f, 0.5), hs_norm(f, 1.0)
    else:
        mass_ref = m.mass if mass_ref is None else mass_ref
        rec.pseudo_energy, rec.pseudo_kin, rec.pseudo_ent = pseudo_energy(f, scaler, t, lam)
        rec.kinetic = rec.pseudo_kin
        rec.energy = physical_energy_from_rescaled(f, scaler, t, lam, mass_ref)
        rec.hs1 = physical_hs1_from_rescaled(f, scaler, t, mass_ref)
        rec.hs05 = math.nan
    if m.mass > 0:
        rec.l1_dist = l1_distance(rho, gam, g)
        if g.dim == 1:
            rec.w1_dist = w1_distance_1d(Density(g, rho), Density(g, gam))
    return rec


def center_of_mass_check(records, scaler: TauScaler, lam: float) -> float:
    """max_t |tau(t) I2(t) - (I2(0) + I1(0) t)| (componentwise max).

    tau I2 has zero second derivative and initial slope I1(0)."""
    r0 = records[0]
    worst = 0.0
    for rec in records:
        tau = float(scaler.tau(rec.t))
        dev = np.abs(tau * rec.center - (r0.center + r0.momentum * rec.t))
        worst = max(worst, float(dev.max()))
    return worst


def ck_bound_check(rho: Density, g: Density, mass_tol: float = 1e-8) -> tuple[float, float, bool]:
    """Csiszar-Kullback: |f - g|_1^2 <= 2 |f|_1 int f ln(f/g)."""
    grid = rho.grid
    mf, mg = rho.mass, g.mass
    if abs(mf - mg) > mass_tol * max(1.0, abs(mg)):
        raise ValueError(f"densities must have equal mass ({mf} vs {mg})")
    f, gv = rho.values, g.values
    lhs = float(grid.integrate(np.abs(f - gv))) ** 2
    pos = f > DENSITY_FLOOR
    if np.any(pos & (gv <= DENSITY_FLOOR)):
        return lhs, math.inf, True
    rel = float(grid.integrate(np.where(pos, f * np.log(np.where(pos, f, 1.0) / np.where(pos, gv, 1.0)), 0.0)))
    rhs = 2 * mf * rel
    return lhs, rhs, lhs <= rhs * (1 + 1e-9) + 1e-300


def cumulative(rho: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectrally accurate cumulative integral from the left box edge."""
    n = grid.n
    rh = np.fft.fft(rho)
    mean = rh[0].real / n
    k = grid.wavenumbers.copy()
    k[0] = 1.0
    anti = rh / (1j * k)
    anti[0] = 0.0
    anti[n // 2] = 0.0
    periodic = np.fft.ifft(anti).real
    x = grid.axis
    return mean * (x - x[0]) + periodic - periodic[0]


def w1_distance_1d(rho: Density, g: Density, upsample: int = 16) -> float:
    """Wasserstein-1 distance of the unit-mass normalizations, computed as
    the L1 distance between cumulative distribution functions.

    With equal masses the CDF difference is a trigonometric polynomial.
    Its modulus has kinks at sign changes, where the Riemann sum is only
    second order, so the difference is first refined by zero padding.
    """
    grid = rho.grid
    if grid.dim != 1:
        raise ValueError("w1_distance_1d only supports d = 1")
    diff = cumulative(rho.values / rho.mass, grid) - cumulative(g.values / g.mass, grid)
    n = grid.n
    spec = np.fft.fft(diff)
    fine = np.zeros(n * upsample, dtype=complex)
    fine[: n // 2] = spec[: n // 2]
    fine[-(n // 2) + 1:] = spec[n // 2 + 1:]
    # split the Nyquist mode so the refined samples stay real
    fine[n // 2] = fine[-(n // 2)] = 0.5 * spec[n // 2]
    vals = np.fft.ifft(fine).real * upsample
    return float(np.mean(np.abs(vals)) * grid.length)


@dataclass
class FokkerPlanckRun:
    s: np.ndarray
    l1: np.ndarray
    mass: np.ndarray
    final: np.ndarray
    min_value: float
    overshoot: bool


def fokker_planck_reference(rho0: Density, s_end: float, ds: float = 1e-3,
                            overshoot_tol: float = 1e-10) -> FokkerPlanckRun:
    """Integrate d_s rho = div(grad rho + 2 y rho).

    Diffusion is implicit through its Fourier symbol, the drift explicit;
    both act in divergence form so the mass is exact up to rounding.
    """
    if ds > 1e-3:
        raise ValueError("ds must not exceed 1e-3")
    grid = rho0.grid
    rho = rho0.values.astype(float).copy()
    denom = 1.0 + ds * grid.k2
    ks = grid.k_odd
    gam = normalized_gamma_density(grid)
    nsteps = int(round(s_end / ds))
    s_vals = np.arange(nsteps + 1) * ds
    l1 = np.empty(nsteps + 1)
    mass = np.empty(nsteps + 1)
    m0 = grid.integrate(rho)
    l1[0] = grid.integrate(np.abs(rho / m0 - gam))
    mass[0] = m0
    low = float(rho.min())
    for i in range(1, nsteps + 1):
        rh = np.fft.fftn(rho)
        drift = sum(1j * kj * np.fft.fftn(2 * xj * rho) for kj, xj in zip(ks, grid.coords))
        rho = np.fft.ifftn((rh + ds * drift) / denom).real
        low = min(low, float(rho.min()))
        mi = grid.integrate(rho)
        mass[i] = mi
        l1[i] = grid.integrate(np.abs(rho / mi - gam))
    return FokkerPlanckRun(s_vals, l1, mass, rho, low, low < -overshoot_tol * float(rho0.values.max()))


def fit_decay_exponent(s: np.ndarray, dist: np.ndarray, lo: float = 1e-8, hi: float = 1e-2) -> float:
    """Least-squares rate C in dist ~ exp(-C s), over samples with dist in [lo, hi]."""
    sel = (dist >= lo) & (dist <= hi)
    if sel.sum() < 3:
        raise ValueError("not enough samples inside the fitting window")
    slope, _ = np.polyfit(s[sel], np.log(dist[sel]), 1)
    return float(-slope)


def growth_fit(times, norms, s: float) -> tuple[float, float]:
    """min and max of |u(t)|_{H^s} / (ln t)^{s/2} over the series."""
    t = np.asarray(times, dtype=float)
    if t.min() <= 1.0:
        raise ValueError("growth_fit needs t > 1")
    ratio = np.asarray(norms, dtype=float) / np.log(t) ** (s / 2)
    return float(ratio.min()), float(ratio.max())


def gn_dual_rhs_constant(dim: int, eta: float, alpha: float) -> float:
    """Constant K with int |u|^{2-eta} <= K |u|^{2-eta-d eta/(2 alpha)} |x^alpha u|^{d eta/(2 alpha)}.

    Holder on |x| < R gives |B_R|^{eta/2} |u|^{2-eta}; on |x| > R, with
    beta = alpha (2-eta), it gives (S_d R^{d - 2 beta/eta}/(2 beta/eta - d))^{eta/2}
    |x^alpha u|^{2-eta}.  At R^alpha = |x^alpha u|/|u| both terms carry
    the same power of R.
    """
    if not 0 < eta < 4 * alpha / (dim + 2 * alpha):
        raise ValueError("eta outside (0, 4 alpha/(d + 2 alpha))")
    ball = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
    sphere = dim * ball
    beta = alpha * (2 - eta)
    pp = 2.0 / eta
    tail = sphere / (pp * beta - dim)
    return ball ** (eta / 2) + tail ** (eta / 2)


def gn_dual_check(f: Field, eta: float, alpha: float) -> tuple[float, float, bool]:
    g = f.grid
    d = g.dim
    const = gn_dual_rhs_constant(d, eta, alpha)
    absu = np.abs(f.values)
    lhs = float(g.integrate(absu ** (2 - eta)))
    l2 = math.sqrt(g.integrate(absu**2))
    mom = math.sqrt(g.integrate(g.r2**alpha * absu**2))
    if l2 == 0:
        return 0.0, 0.0, True
    q = d * eta / (2 * alpha)
    rhs = const * l2 ** (2 - eta - q) * mom**q
    return lhs, rhs, lhs <= rhs
