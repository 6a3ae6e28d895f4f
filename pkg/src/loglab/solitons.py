"""Gaussons, orbital distances, superpositions and the pointwise estimates
on the logarithmic nonlinearity (focusing case lam < 0)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid


@dataclass(frozen=True)
class GaussonSpec:
    omega: float
    lam: float
    velocity: tuple = field(default=None)
    center: tuple = field(default=None)

    def __post_init__(self):
        if not self.lam < 0:
            raise ValueError("Gaussons need lam < 0")

    def vectors(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        v = np.zeros(dim) if self.velocity is None else np.broadcast_to(np.asarray(self.velocity, float), (dim,))
        c = np.zeros(dim) if self.center is None else np.broadcast_to(np.asarray(self.center, float), (dim,))
        return v, c

    def amplitude(self, dim: int) -> float:
        return math.exp(dim / 2 - self.omega / (2 * self.lam))

    def mass(self, dim: int) -> float:
        return self.amplitude(dim) ** 2 * (math.pi / (2 * abs(self.lam))) ** (dim / 2)


def omega_for_mass(mass: float, lam: float, dim: int) -> float:
    """Unique frequency whose Gausson carries ``mass``."""
    if mass <= 0 or lam >= 0:
        raise ValueError("need mass > 0 and lam < 0")
    return lam * (dim - math.log(mass) + (dim / 2) * math.log(math.pi / (2 * abs(lam))))


def gausson_profile(spec: GaussonSpec, grid: Grid, shift=None) -> np.ndarray:
    """phi_omega(x - shift) sampled on the grid."""
    _, c = spec.vectors(grid.dim)
    s = c if shift is None else np.broadcast_to(shift, (grid.dim,))
    r2 = sum((xj - sj) ** 2 for xj, sj in zip(grid.coords, s))
    return spec.amplitude(grid.dim) * np.exp(spec.lam * r2) * np.ones(grid.shape)


def gausson(spec: GaussonSpec, t: float, grid: Grid) -> Field:
    """Standing or Galilean-boosted Gausson at time t."""
    v, c = spec.vectors(grid.dim)
    for vj in v:
        if not grid.admissible(vj):
            raise ValueError(f"velocity component {vj} breaks periodicity")
    pos = c + v * t
    # periodic image of the moving centre
    pos = (pos + 0.5 * grid.length) % grid.length - 0.5 * grid.length
    prof = _periodic_profile(spec, grid, pos)
    phase = spec.omega * t + sum(vj * xj for vj, xj in zip(v, grid.coords)) - 0.5 * float(v @ v) * t
    return Field(grid, prof * np.exp(1j * phase))


def _periodic_profile(spec: GaussonSpec, grid: Grid, pos) -> np.ndarray:
    r2 = 0.0
    for xj, pj in zip(grid.coords, pos):
        dx = (xj - pj + 0.5 * grid.length) % grid.length - 0.5 * grid.length
        r2 = r2 + dx**2
    return spec.amplitude(grid.dim) * np.exp(spec.lam * r2) * np.ones(grid.shape)


def multi_gausson(specs, grid: Grid, t: float = 0.0) -> Field:
    specs = list(specs)
    keys = set()
    for s in specs:
        v, c = s.vectors(grid.dim)
        key = (tuple(v), tuple(c))
        if key in keys:
            raise ValueError("Gaussons must differ in velocity or centre")
        keys.add(key)
    total = np.zeros(grid.shape, dtype=complex)
    for s in specs:
        total += gausson(s, t, grid).values
    return Field(grid, total)


@dataclass
class ModulatedDistance:
    distance: float
    theta: float
    shift: np.ndarray
    converged: bool


def _h1_weight(grid: Grid) -> np.ndarray:
    return 1.0 + grid.k2


def modulated_distance(u: Field, spec: GaussonSpec, max_iter: int = 50) -> ModulatedDistance:
    """min over theta, y of |u - e^{i theta} phi_omega(. - y)|_{H1}.

    For fixed y the optimal phase is the argument of the H1 pairing.  The
    pairing C(y) is a trigonometric sum in y: a grid search over all
    periodic shifts (one FFT) initializes a Newton iteration on |C|^2.
    """
    g = u.grid
    phi = gausson_profile(spec, g, shift=np.zeros(g.dim))
    uh = np.fft.fftn(u.values)
    ph = np.fft.fftn(phi)
    w = np.conj(ph) * uh * _h1_weight(g)
    # C(y) = sum_k w_k e^{i k y} / N^2 * cell volume (up to a constant factor)
    corr = np.fft.ifftn(w)  # value at y = grid offset j*h
    j = np.unravel_index(np.argmax(np.abs(corr)), g.shape)
    y = np.array([g.h * jj for jj in j], dtype=float)
    y = (y + 0.5 * g.length) % g.length - 0.5 * g.length
    ks = [kj * np.ones(g.shape) for kj in g.k_odd]
    converged = False
    for _ in range(max_iter):
        e = np.exp(1j * sum(kj * yj for kj, yj in zip(ks, y)))
        c = np.sum(w * e)
        dc = np.array([np.sum(1j * kj * w * e) for kj in ks])
        ddc = np.array([[np.sum(-ki * kj * w * e) for kj in ks] for ki in ks])
        # f = |C|^2, grad and Hessian in y
        grad = 2 * np.real(np.conj(c) * dc)
        hess = 2 * np.real(np.outer(np.conj(dc), dc) + np.conj(c) * ddc)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        y = y - step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, g.length):
            converged = True
            break
    e = np.exp(1j * sum(kj * yj for kj, yj in zip(ks, y)))
    theta = float(np.angle(np.sum(w * e)))
    shifted = np.fft.ifftn(ph * np.exp(-1j * sum(kj * yj for kj, yj in zip(ks, y))))
    diff = u.values - np.exp(1j * theta) * shifted
    dist = math.sqrt(float(np.sum(_h1_weight(g) * np.abs(np.fft.fftn(diff)) ** 2)) * g.cell_volume / g.size)
    y = (y + 0.5 * g.length) % g.length - 0.5 * g.length
    return ModulatedDistance(dist, theta, y, converged)


def h1_norm(values: np.ndarray, grid: Grid) -> float:
    return math.sqrt(float(np.sum(_h1_weight(grid) * np.abs(np.fft.fftn(values)) ** 2))
                     * grid.cell_volume / grid.size)


def _xlog_abs2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    mod = np.abs(z)
    out = np.zeros_like(z)
    nz = mod > 0
    # 2 ln|z| rather than ln|z|^2: the square underflows for |z| < 1e-154
    out[nz] = z[nz] * 2 * np.log(mod[nz])
    return out


def nonlinearity_estimate_check(z, zp):
    """|F(z) - F(z')| <= |z - z'| (6 - ln|z|^2), F(z) = z ln|z|^2, for
    |z|, |z'| <= 1 and z != 0.  Vectorized; returns (lhs, rhs, ok)."""
    z = np.asarray(z, dtype=complex)
    zp = np.asarray(zp, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z must be nonzero")
    if np.any(np.abs(z) > 1) or np.any(np.abs(zp) > 1):
        raise ValueError("arguments must lie in the closed unit disk")
    lhs = np.abs(_xlog_abs2(z) - _xlog_abs2(zp))
    rhs = np.abs(z - zp) * (6 - 2 * np.log(np.abs(z)))
    return lhs, rhs, lhs <= rhs


def uniqueness_estimate_check(z1, z2):
    """|Im((F(z2) - F(z1)) conj(z2 - z1))| <= 4 |z2 - z1|^2."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    lhs = np.abs(np.imag((_xlog_abs2(z2) - _xlog_abs2(z1)) * np.conj(z2 - z1)))
    rhs = 4 * np.abs(z2 - z1) ** 2
    return lhs, rhs, lhs <= rhs
