"""Experiment runners behind the command line.

Each runner takes a validated :class:`Scenario` and returns an
:class:`Outcome`: CSV text, declared checks and optional snapshots.
Nothing here depends on wall-clock time or global random state, so a
scenario and its seed fully determine the CSV bytes.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import fluids as fl
from .config import Scenario, render_params
from .diagnostics import center_of_mass_check, fmt, gn_dual_check, record, write_csv
from .gaussian import GaussianState, breather_period, evolve_width, gaussian_field, solve_tau
from .grid import Field, Grid, gaussian_profile, l2_norm
from .snapshots import write_snapshot
from .solitons import (GaussonSpec, gausson, modulated_distance, multi_gausson,
                       nonlinearity_estimate_check, uniqueness_estimate_check)
from .solver import NlsProblem, evolve, to_rescaled_frame

logger = logging.getLogger(__name__)


@dataclass
class Check:
    value: float
    limit: float
    passed: bool
    note: str = ""


@dataclass
class Outcome:
    csv_name: str
    csv_text: str
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)  # (t, Field, meta)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def upper(value: float, limit: float, note: str = "") -> Check:
    return Check(float(value), float(limit), bool(value <= limit), note)


def lower(value: float, limit: float, note: str = "") -> Check:
    return Check(float(value), float(limit), bool(value >= limit), note)


def _csv(header, rows) -> str:
    lines = [",".join(header)] + [",".join(fmt(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def rng_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators spawned from one 64-bit seed key."""
    seq = np.random.SeedSequence(int(seed) & (2**64 - 1))
    return [np.random.default_rng(s) for s in seq.spawn(count)]


# -- tau --------------------------------------------------------------------

def run_tau(s: Scenario) -> Outcome:
    p = s.params
    param = p["lambda"] if p["mode"] == "logarithmic" else p["alpha"]
    sc = solve_tau(p["mode"], param, p["t_end"], p["tol"])
    ts = np.linspace(0.0, p["t_end"], p["samples"])
    tau, taud = sc.tau(ts), sc.taudot(ts)
    res = sc.first_integral_residual(ts)
    text = _csv(("t", "tau", "taudot", "first_integral_residual"), zip(ts, tau, taud, res))
    checks = {"first_integral": upper(np.max(np.abs(sc.first_integral_residual())), p["residual_tol"])}
    return Outcome("tau.csv", text, checks, {"tau_end": float(tau[-1]), "taudot_end": float(taud[-1])})


# -- gaussian ---------------------------------------------------------------

def run_gaussian(s: Scenario) -> Outcome:
    p = s.params
    tr = evolve_width(p["alpha0"], p["beta0"], p["lambda"], p["t_end"], p["tol"])
    st = GaussianState.build(p["alpha0"], p["beta0"], p["b0"], p["lambda"], p["t_end"], tol=p["tol"])
    ts = np.linspace(0.0, p["t_end"], p["samples"])
    r, rdot = tr.width(ts)
    a = tr.a(ts)
    b = st.amplitude(ts)
    res = tr.energy_residual(ts)
    text = _csv(("t", "r", "rdot", "re_a", "im_a", "abs_b", "energy_residual"),
                zip(ts, r, rdot, a.real, a.imag, np.abs(b), res))
    checks = {"first_integral": upper(np.max(np.abs(tr.energy_residual())), p["residual_tol"])}
    info = {}
    if p["lambda"] < 0:
        bp = breather_period(p["alpha0"], p["beta0"], p["lambda"])
        info["stationary"] = bp.stationary
        if bp.stationary:
            checks["stationary_width"] = upper(np.max(np.abs(tr.r - 1.0)), 1e-9)
        elif len(tr.rdot_zeros) >= 3:
            info["period"] = bp.period
            rel = abs(tr.period() - bp.period) / bp.period
            checks["period"] = upper(rel, p["period_tol"])
    return Outcome("gaussian.csv", text, checks, info)


# -- evolve (physical frame) ------------------------------------------------

def bump_datum(grid: Grid, amp: float, center: float, width: float) -> np.ndarray:
    x0 = grid.coords[0]
    return gaussian_profile(grid) + amp * np.exp(-(x0 - center) ** 2 / (2 * width**2)) * np.ones(grid.shape)


def run_evolve(s: Scenario) -> Outcome:
    p = s.params
    g = Grid(p["dim"], p["n"], p["length"])
    kind = "logarithmic" if p["nonlinearity"] == "logarithmic" else "power"
    prob = NlsProblem(kind, g, p["lambda"], sigma=p["sigma"], reg_eps=p["reg_eps"], dt=p["dt"])
    oracle = None
    if p["datum"] == "gaussian":
        if kind == "logarithmic":
            oracle = GaussianState.build(p["alpha0"], p["beta0"], p["b0"], p["lambda"], p["t_end"], dim=g.dim)
            u0 = gaussian_field(oracle, 0.0, g).values
        else:
            a0 = complex(p["alpha0"], p["beta0"])
            u0 = p["b0"] * np.exp(-0.5 * a0 * g.r2)
    elif p["datum"] == "gausson":
        u0 = gausson(GaussonSpec(p["omega"], p["lambda"]), 0.0, g).values
    else:
        u0 = bump_datum(g, p["bump_amp"], p["bump_center"], p["bump_width"])
    if p["noise"] > 0:
        (rng,) = rng_streams(s.seed, 1)
        pert = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        # smooth the perturbation so it stays resolved
        pert = np.fft.ifftn(np.fft.fftn(pert) * np.exp(-g.k2))
        u0 = u0 + p["noise"] * pert / np.max(np.abs(pert)) * np.exp(-0.5 * g.r2)
    f0 = Field(g, u0)
    res = evolve(prob, f0, p["t_end"], every=p["every"],
                 observer=lambda f, t: record(f, t, p["lambda"]), keep_snapshots=p["snapshots"])
    text = write_csv(res.records, g.dim)
    masses = np.array([r.mass for r in res.records])
    drift = np.max(np.abs(np.diff(masses))) / max(1, p["every"]) if len(masses) > 1 else 0.0
    checks = {
        "boundary": Check(float(res.breach), 0.0, not res.breach, "boundary mass share above 1e-8"),
        "mass_drift_per_step": upper(drift, p["mass_tol"]),
    }
    if oracle is not None:
        err = l2_norm(res.final.values - gaussian_field(oracle, p["t_end"], g).values, g)
        checks["gaussian_oracle_l2"] = upper(err, p["oracle_tol"])
    meta = {"kind": kind, "lambda": p["lambda"], "sigma": p["sigma"], "reg_eps": p["reg_eps"], "dt": p["dt"]}
    snaps = [(t, f, meta) for t, f in zip(res.times, res.snapshots)]
    return Outcome("diagnostics.csv", text, checks, {"steps": res.steps}, snaps)


# -- rescaled ---------------------------------------------------------------

def rescaled_sample_times(t_end: float, samples: int) -> np.ndarray:
    pts = np.geomspace(1.0, t_end, samples) if t_end > 1 else np.linspace(0, t_end, samples)
    return np.unique(np.round(np.concatenate([[0.0], pts, [t_end]]), 12))


def run_rescaled(s: Scenario) -> Outcome:
    p = s.params
    if not p["lambda"] > 0:
        raise ValueError("rescaled runs need lambda > 0")
    g = Grid(p["dim"], p["n"], p["length"])
    if p["datum"] == "bump":
        if g.dim != 1:
            raise ValueError("the bump datum is one dimensional")
        u0 = Field(g, bump_datum(g, p["bump_amp"], p["bump_center"], p["bump_width"]))
    else:
        st = GaussianState.build(p["alpha0"], p["beta0"], 1.0, p["lambda"], 1.0, dim=g.dim)
        u0 = gaussian_field(st, 0.0, g)
    mass = l2_norm(u0) ** 2
    sc = solve_tau("logarithmic", p["lambda"], p["t_end"])
    v0 = to_rescaled_frame(u0, sc, 0.0, mass)
    prob = NlsProblem("rescaled_log", g, p["lambda"], reg_eps=p["reg_eps"], dt=p["dt"],
                      adaptive=True, dt_max=p["dt_max"], scaler=sc)
    ts = rescaled_sample_times(p["t_end"], p["samples"])
    res = evolve(prob, v0, p["t_end"], sample_times=ts, keep_snapshots=p["snapshots"],
                 observer=lambda f, t: record(f, t, p["lambda"], sc, mass))
    recs = res.records
    text = write_csv(recs, g.dim)
    m = np.array([r.mass for r in recs])
    pe = np.array([r.pseudo_energy for r in recs])
    rise = float(np.max(np.diff(pe))) if len(pe) > 1 else 0.0
    worst = 0.0
    for r in recs:
        tau = float(sc.tau(r.t))
        dev = np.abs(tau * r.center - (recs[0].center + recs[0].momentum * r.t))
        worst = max(worst, float(dev.max()) / (1 + r.t))
    checks = {
        "boundary": Check(float(res.breach), 0.0, not res.breach, "boundary mass share above 1e-8"),
        "mass": upper(np.max(np.abs(m - m[0])), p["mass_tol"]),
        "center_closed_form": upper(worst, p["center_tol"], "max |tau I2 - (I2(0) + I1(0) t)| / (1 + t)"),
        "pseudo_energy_nonincrease": upper(rise, 1e-10 * max(1.0, abs(pe[0]))),
    }
    target = g.dim / 2 * m[0]
    gaps = [(r.t, abs(r.variance - target)) for r in recs]
    window = [gp for t, gp in gaps if t >= 10.0]
    info = {"steps": res.steps, "center_max_abs": center_of_mass_check(recs, sc, p["lambda"])}
    if p["t_end"] >= 100.0 and len(window) >= 2:
        checks["variance_gap_ratio"] = lower(window[0] / window[-1], 2.0, "gap(10) / gap(t_end)")
    meta = {"kind": "rescaled_log", "lambda": p["lambda"], "reg_eps": p["reg_eps"], "mass": repr(mass)}
    snaps = [(t, f, meta) for t, f in zip(res.times, res.snapshots)]
    return Outcome("diagnostics.csv", text, checks, info, snaps)


# -- solitons ---------------------------------------------------------------

def superposition_deviation(lam: float, omega: float, radius: float, grid: Grid, dt: float,
                            t_end: float, reg_eps: float, every: int = 100) -> float:
    """sup over samples of |u(t) - frozen sum of the two Gaussons at +-radius|."""
    specs = [GaussonSpec(omega, lam, center=(radius,)), GaussonSpec(omega, lam, center=(-radius,))]
    f0 = multi_gausson(specs, grid)
    prob = NlsProblem("logarithmic", grid, lam, reg_eps=reg_eps, dt=dt)

    def obs(f, t):
        return l2_norm(f.values - multi_gausson(specs, grid, t).values, grid)

    res = evolve(prob, f0, t_end, every=every, observer=obs, keep_snapshots=False)
    return float(max(res.records))


def run_solitons(s: Scenario) -> Outcome:
    p = s.params
    g = Grid(1, p["n"], p["length"])
    if p["mode"] == "stationary":
        spec = GaussonSpec(p["omega"], p["lambda"])
        prob = NlsProblem("logarithmic", g, p["lambda"], reg_eps=p["reg_eps"], dt=p["dt"])
        every = max(1, int(round(0.1 / p["dt"])))
        res = evolve(prob, gausson(spec, 0.0, g), p["t_end"], every=every, keep_snapshots=False,
                     observer=lambda f, t: modulated_distance(f, spec))
        rows = [(t, d.distance, d.theta, d.shift[0]) for t, d in zip(res.times, res.records)]
        text = _csv(("t", "distance", "theta", "shift"), rows)
        worst = max(d.distance for d in res.records)
        return Outcome("solitons.csv", text, {"modulated_distance": upper(worst, p["distance_tol"])})
    rows = []
    for radius in p["radii"]:
        dev = superposition_deviation(p["lambda"], p["omega"], radius, g, p["dt"], p["t_end"], p["reg_eps"])
        rows.append((radius, 2 * radius, dev))
    text = _csv(("radius", "separation", "sup_deviation"), rows)
    devs = [r[2] for r in rows]
    strict = all(b < a for a, b in zip(devs, devs[1:]))
    return Outcome("solitons.csv", text, {"monotone_in_separation": Check(float(strict), 1.0, strict)})


# -- fluids -----------------------------------------------------------------

def _residual_grid(traj: fl.FluidTrajectory, t: float, n: int) -> Grid:
    beta = float(traj.beta(t))
    span = 30 * math.sqrt(beta) if not traj.init.polytropic else 4 * math.sqrt(
        fl._support_ratio(traj.init.gamma) * beta)
    return Grid(1, n, float(2 ** math.ceil(math.log2(span))))


def run_fluids(s: Scenario) -> Outcome:
    p = s.params
    init = fl.FluidGaussianState(p["beta0"], p["omega0"], p["mass"], p["eps"], p["nu"], p["gamma"])
    traj = fl.fluid_gaussian_ode(init, p["t_end"])
    t_end = p["t_end"]
    ts = np.unique(np.concatenate([np.linspace(0, t_end, p["samples"]),
                                   np.geomspace(min(1.0, t_end), t_end, p["samples"])]))
    check_ts = ts[:: max(1, len(ts) // 20)]
    pde = max(max(traj.pde_residual(t, _residual_grid(traj, t, p["n"]))) for t in check_ts)
    checks = {"pde_residual": upper(pde, p["residual_tol"])}
    info = {}
    if init.polytropic:
        rows = [(t, traj.beta(t), traj.omega(t), math.nan, math.nan, math.nan, math.nan, 0.0, math.nan)
                for t in ts]
        return Outcome("fluids.csv", _csv(fl.FLUID_COLUMNS, rows), checks, info)

    sc = solve_tau("logarithmic", 1.0, t_end + 1e-6)
    recs = fl.ansatz_records(traj, sc, ts)
    text = fl.write_fluid_csv(recs)
    h = 1e-5
    probe = [t for t in check_ts if h < t < t_end - h]
    diss = bal = 0.0
    for t in probe:
        de = (traj.energy(t + h) - traj.energy(t - h)) / (2 * h)
        diss = max(diss, abs(de + traj.dissipation(t)))
        e = fl.ansatz_energies(traj, sc, t)
        dpe = (fl.ansatz_energies(traj, sc, t + h).energy - fl.ansatz_energies(traj, sc, t - h).energy) / (2 * h)
        bal = max(bal, abs(dpe + e.dissipation + p["nu"] * sc.taudot(t) / sc.tau(t) ** 3 * e.div_term))
    checks["dissipation_identity"] = upper(diss, 1e-5)
    checks["pseudo_energy_balance"] = upper(bal, 1e-5)
    checks["bd_balance"] = upper(bd_residual(traj, sc, min(t_end, 10.0)), 1e-4)
    rep = fl.rigidity_checks(recs, trend_from=p["trend_from"])
    info.update(dissipation_integral=rep.dissipation_integral, sup_energy=rep.sup_energy,
                energy_audit=rep.energy_audit, final_density_gap=rep.final_density_gap)
    if t_end > p["trend_from"]:
        checks["rigidity_trend"] = Check(float(rep.monotone), 1.0, rep.monotone,
                                         "second-moment gap nonincreasing after trend_from")
    checks["centred_first_moment"] = upper(rep.max_moment1, 0.0)
    return Outcome("fluids.csv", text, checks, info)


def bd_residual(traj: fl.FluidTrajectory, sc, t: float) -> float:
    """|E_BD(t) + int D_BD - E_BD(0) - nu int (2d/tau^2 int R + taudot/tau^3 int R div U)|."""
    nu = traj.init.nu

    def e(s):
        return fl.ansatz_energies(traj, sc, s)

    def source(s):
        es = e(s)
        return 2 / sc.tau(s) ** 2 * es.mass + sc.taudot(s) / sc.tau(s) ** 3 * es.div_term

    lhs = e(t).bd_energy + quad(lambda s: e(s).bd_dissipation, 0, t, epsabs=1e-13, limit=400)[0]
    rhs = e(0).bd_energy + nu * quad(source, 0, t, epsabs=1e-13, limit=400)[0]
    return abs(lhs - rhs)


# -- verify -----------------------------------------------------------------

def _unit_disk(rng, size):
    # half uniform on the disk, half with log-uniform modulus down to 1e-12
    r = np.sqrt(rng.uniform(0, 1, size))
    small = rng.uniform(0, 1, size) < 0.5
    r = np.where(small, 10.0 ** rng.uniform(-12, 0, size), r)
    r = np.maximum(r, 1e-300)
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, size))


def _complex_pairs(rng, size):
    mag = 10.0 ** rng.uniform(-8, 4, size)
    z1 = mag * np.exp(2j * np.pi * rng.uniform(0, 1, size))
    near = rng.uniform(0, 1, size) < 0.5
    step = mag * 10.0 ** rng.uniform(-8, 1, size) * np.exp(2j * np.pi * rng.uniform(0, 1, size))
    z2 = np.where(near, z1 + step, 10.0 ** rng.uniform(-8, 4, size) * np.exp(2j * np.pi * rng.uniform(0, 1, size)))
    return z1, z2


def random_packets(rng, grid: Grid, count: int = 4) -> Field:
    """Sum of a few random Gaussian wave packets, resolved on the grid."""
    vals = np.zeros(grid.shape, dtype=complex)
    for _ in range(rng.integers(1, count + 1)):
        c = rng.uniform(-grid.length / 4, grid.length / 4, grid.dim)
        w = rng.uniform(0.5, 3.0)
        k = rng.uniform(-3, 3, grid.dim)
        r2 = sum((xj - cj) ** 2 for xj, cj in zip(grid.coords, c))
        ph = sum(kj * xj for kj, xj in zip(k, grid.coords))
        amp = rng.standard_normal() + 1j * rng.standard_normal()
        vals = vals + amp * np.exp(-r2 / (2 * w * w) + 1j * ph)
    return Field(grid, vals)


def run_verify(s: Scenario) -> Outcome:
    p = s.params
    rng_a, rng_b, rng_c = rng_streams(s.seed, 3)
    total = p["pairs"]
    batch = 200_000
    viol_a = viol_b = 0
    ratio_a = ratio_b = 0.0
    done = 0
    while done < total:
        m = min(batch, total - done)
        z, zp = _unit_disk(rng_a, m), _unit_disk(rng_a, m)
        lhs, rhs, ok = nonlinearity_estimate_check(z, zp)
        viol_a += int(np.count_nonzero(~ok))
        ratio_a = max(ratio_a, float(np.max(lhs / np.maximum(rhs, 1e-300))))
        z1, z2 = _complex_pairs(rng_b, m)
        lhs, rhs, ok = uniqueness_estimate_check(z1, z2)
        viol_b += int(np.count_nonzero(~ok))
        ratio_b = max(ratio_b, float(np.max(lhs / np.maximum(rhs, 1e-300))))
        done += m
    g = Grid(1, p["n"], p["length"])
    viol_c = 0
    ratio_c = 0.0
    for _ in range(p["fields"]):
        lhs, rhs, ok = gn_dual_check(random_packets(rng_c, g), p["eta"], p["alpha"])
        viol_c += 0 if ok else 1
        ratio_c = max(ratio_c, lhs / rhs if rhs > 0 else 0.0)
    rows = [("nonlinearity_estimate", total, viol_a, ratio_a),
            ("uniqueness_estimate", total, viol_b, ratio_b),
            ("gn_dual", p["fields"], viol_c, ratio_c)]
    text = "check,samples,violations,max_ratio\n" + "".join(
        f"{name},{n},{v},{fmt(r)}\n" for name, n, v, r in rows)
    checks = {name: Check(float(v), 0.0, v == 0, f"max lhs/rhs {r:.6g}") for name, _, v, r in rows}
    return Outcome("verify.csv", text, checks)


RUNNERS = {
    "tau": run_tau,
    "gaussian": run_gaussian,
    "evolve": run_evolve,
    "rescaled": run_rescaled,
    "solitons": run_solitons,
    "fluids": run_fluids,
    "verify": run_verify,
}


def run_scenario(s: Scenario, out_dir=None) -> tuple[int, Outcome | None]:
    """Run, then write the CSV, snapshots and ``summary.txt``.

    Returns the exit status: 0 when every declared check passed, 1 when
    a check failed, 2 when the run raised.
    """
    out = Path(out_dir if out_dir is not None else (s.out_dir or Path("runs") / s.name))
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    outcome = None
    error = ""
    try:
        outcome = RUNNERS[s.kind](s)
    except Exception as exc:  # reported in the summary, status 2
        logger.exception("scenario %s failed", s.name)
        error = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start

    lines = [f"name = {s.name}", f"source = {s.source}"] + render_params(s.params)
    if outcome is None:
        status = 2
        lines += ["status = error", f"error = {error}"]
    else:
        (out / outcome.csv_name).write_bytes(outcome.csv_text.encode("utf-8"))
        for i, (t, f, meta) in enumerate(outcome.snapshots):
            write_snapshot(out / f"snapshot_{i:04d}", f, t, meta)
        status = 0 if outcome.passed else 1
        lines.append(f"status = {'pass' if status == 0 else 'fail'}")
        lines.append(f"csv = {outcome.csv_name}")
        lines.append(f"snapshots = {len(outcome.snapshots)}")
        for key, c in outcome.checks.items():
            lines.append(f"check.{key} = {'pass' if c.passed else 'fail'}")
            lines.append(f"check.{key}.value = {fmt(c.value)}")
            lines.append(f"check.{key}.limit = {fmt(c.limit)}")
            if c.note:
                lines.append(f"check.{key}.note = {c.note}")
        for key, v in outcome.info.items():
            lines.append(f"info.{key} = {v}")
    lines.append(f"wall_time = {wall:.3f}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return status, outcome
