import math

import numpy as np
import pytest

from loglab import fluids as fl
from loglab.gaussian import solve_tau
from loglab.grid import Density, Field, Grid, spectral_derivative
from loglab.solver import gamma_field


def _grid_for(traj, t, n=512):
    beta = float(traj.beta(t))
    return Grid(1, n, float(2 ** math.ceil(math.log2(30 * math.sqrt(beta)))))


def test_power_correspondence():
    assert fl.correspondence(2.0) == (2.0, 0.5)
    lam, sigma = fl.correspondence(5 / 3)
    assert lam == pytest.approx(2.5) and sigma == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        fl.correspondence(1.0)


def test_madelung_real_field_has_no_momentum():
    g = Grid(1, 128, 16.0)
    st = fl.madelung(Field(g, np.exp(-g.axis**2)))
    assert np.max(np.abs(st.momentum)) < 1e-14
    assert np.allclose(st.rho.values, np.exp(-2 * g.axis**2), rtol=1e-15)


def test_madelung_plane_wave_momentum():
    g = Grid(2, 64, 16.0)
    v0 = 2 * np.pi * 2 / g.length
    u = Field(g, np.exp(1j * v0 * g.coords[1]) * gamma_field(g).values)
    st = fl.madelung(u)
    rho = np.abs(u.values) ** 2
    assert np.max(np.abs(st.momentum[1] - v0 * rho)) < 1e-12
    assert np.max(np.abs(st.momentum[0])) < 1e-12
    assert np.max(np.abs(st.velocity()[1][rho > 1e-10] - v0)) < 1e-8


def test_madelung_continuity_residual():
    # rho_t + div J = 0 along the free flow of a moving Gaussian
    g = Grid(1, 256, 40.0)
    x = g.axis

    def u(t):
        return (1 + 1j * t) ** -0.5 * np.exp(-((x - 0.5 * t) ** 2) / (2 * (1 + 1j * t)) + 0.5j * x - 0.125j * t)

    h = 1e-5
    rho_t = (np.abs(u(1 + h)) ** 2 - np.abs(u(1 - h)) ** 2) / (2 * h)
    j = fl.madelung(Field(g, u(1.0))).momentum[0]
    assert np.max(np.abs(rho_t + spectral_derivative(g, j, 0))) < 1e-8


def test_state_validation():
    g = Grid(1, 8, 4.0)
    rho = np.ones(8)
    rho[3] = 0.0
    j = np.zeros(8)
    j[3] = 1.0
    with pytest.raises(ValueError):
        fl.FluidState(Density(g, rho), j[None])
    with pytest.raises(ValueError):
        fl.FluidState(Density(g, np.ones(8)), np.zeros((1, 8)), eps=-1.0)
    with pytest.raises(ValueError):
        fl.FluidGaussianState(0.0)
    with pytest.raises(ValueError):
        fl.FluidGaussianState(1.0, gamma=2.0, nu=0.1)
    with pytest.raises(ValueError):
        fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0), 0.0)


@pytest.mark.parametrize("eps,nu", [(0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (1.0, 0.5)])
def test_gaussian_ansatz_solves_the_system(eps, nu):
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0, 0.3, 1.0, eps, nu), 100.0)
    for t in (0.0, 1.0, 10.0, 100.0):
        assert max(traj.pde_residual(t, _grid_for(traj, t))) < 1e-8


@pytest.mark.parametrize("gamma", [5 / 3, 2.0, 3.0])
def test_polytropic_ansatz_solves_the_system(gamma):
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0, -0.2, 1.3, gamma=gamma), 50.0)
    ell = math.sqrt(fl._support_ratio(gamma))
    for t in (0.0, 1.0, 50.0):
        g = Grid(1, 1024, 4 * ell * math.sqrt(float(traj.beta(t))))
        assert max(traj.pde_residual(t, g)) < 1e-8
        st = traj.state(t, g)
        assert g.integrate(st.rho.values) == pytest.approx(1.3, rel=1e-3)
        assert g.integrate(g.axis**2 * st.rho.values) / 1.3 == pytest.approx(float(traj.beta(t)), rel=1e-3)
    with pytest.raises(fl.FluidError):
        traj.energy(1.0)


@pytest.mark.parametrize("eps,nu", [(0.0, 0.0), (0.5, 0.0), (0.0, 0.7), (0.5, 0.7)])
def test_energy_dissipation_identity(eps, nu):
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(0.8, 0.4, 1.5, eps, nu), 20.0)
    h = 1e-5
    ts = np.linspace(0.5, 19.5, 12)
    for t in ts:
        de = (traj.energy(t + h) - traj.energy(t - h)) / (2 * h)
        assert abs(de + traj.dissipation(t)) < 1e-6
    es = [traj.energy(t) for t in ts]
    assert all(b <= a + 1e-10 for a, b in zip(es, es[1:]))


def test_capillarity_fades_at_late_times():
    with_eps = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0, eps=1.0), 1e6)
    plain = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0), 1e6)
    ts = 10.0 ** np.arange(1, 7)
    ratio = np.sqrt(with_eps.beta(ts) / plain.beta(ts))
    assert np.all(np.diff(ratio) < 0) and np.all(ratio > 1) and ratio[-1] < 1.005


def test_rescale_at_time_zero():
    g = Grid(1, 256, 24.0)
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.2, 0.3, 2.0), 5.0)
    sc = solve_tau("logarithmic", 1.0, 5.0)
    st = traj.state(0.0, g)
    r = fl.rescale_fluid(st, sc, 0.0, 2.0)
    assert np.max(np.abs(r.rho.values - st.rho.values * math.sqrt(math.pi) / 2.0)) < 1e-14
    assert np.max(np.abs(r.momentum - st.momentum * math.sqrt(math.pi) / 2.0)) < 1e-14


def test_rescale_round_trip_and_closed_form():
    xg = Grid(1, 1024, 64.0)
    yg = Grid(1, 512, 16.0)
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0, 0.3, 1.0, 0.5, 0.2), 4.0)
    sc = solve_tau("logarithmic", 1.0, 4.0)
    t = 2.0
    st = traj.state(t, xg)
    r = fl.rescale_fluid(st, sc, t, 1.0, y_grid=yg)
    want = fl.ansatz_rescaled_state(traj, sc, t, yg)
    assert np.max(np.abs(r.rho.values - want.rho.values)) < 1e-10
    assert np.max(np.abs(r.momentum - want.momentum)) < 1e-10
    back = fl.unrescale_fluid(r, sc, t, 1.0, x_grid=xg)
    assert np.max(np.abs(back.rho.values - st.rho.values)) < 1e-10
    assert np.max(np.abs(back.momentum - st.momentum)) < 1e-10


def test_energies_vanish_at_gamma():
    g = Grid(1, 256, 20.0)
    sc = solve_tau("logarithmic", 1.0, 1.0)
    big_r = np.exp(-g.axis**2)
    st = fl.FluidState(Density(g, big_r), np.zeros((1, 256)))
    e = fl.fluid_energies(st, sc, 0.0)
    assert abs(e.energy) < 1e-13 and abs(e.dissipation) < 1e-13
    assert e.mass == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    # capillary part: int |d sqrt Gamma|^2 = sqrt(pi)/2
    assert fl.fluid_energies(st, sc, 0.0, eps=1.0).energy == pytest.approx(math.sqrt(math.pi) / 4, rel=1e-12)


def test_strain_and_spin_split():
    g = Grid(2, 64, 14.0)
    sc = solve_tau("logarithmic", 1.0, 1.0)
    y1, y2 = g.coords
    big_r = np.exp(-g.r2)
    mass = math.pi
    c = 0.7
    rot = fl.FluidState(Density(g, big_r), np.array([-c * y2 * big_r, c * y1 * big_r]))
    p = fl._pieces(rot, 0.0)
    assert p.spin == pytest.approx(2 * c**2 * mass, rel=1e-10)
    assert abs(p.strain) < 1e-10 and abs(p.div_term) < 1e-10
    dil = fl.FluidState(Density(g, big_r), np.array([c * y1 * big_r, c * y2 * big_r]))
    p = fl._pieces(dil, 0.0)
    assert p.strain == pytest.approx(2 * c**2 * mass, rel=1e-10)
    assert abs(p.spin) < 1e-10
    assert p.div_term == pytest.approx(2 * c * mass, rel=1e-10)
    assert fl.fluid_energies(dil, sc, 0.0, nu=1.0).dissipation == pytest.approx(2 * c**2 * mass, rel=1e-10)


@pytest.mark.parametrize("t", [0.0, 0.7, 5.0])
def test_grid_energies_match_closed_forms(t):
    g = Grid(1, 512, 24.0)
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(0.6, -0.3, 1.0, 0.8, 0.4), 5.0)
    sc = solve_tau("logarithmic", 1.0, 5.0)
    num = fl.fluid_energies(fl.ansatz_rescaled_state(traj, sc, t, g), sc, t)
    ref = fl.ansatz_energies(traj, sc, t)
    for name in ("energy", "dissipation", "bd_energy", "bd_dissipation", "div_term", "mass"):
        assert getattr(num, name) == pytest.approx(getattr(ref, name), rel=1e-9, abs=1e-12), name


def test_rigidity_report():
    sc = solve_tau("logarithmic", 1.0, 101.0)
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0, 0.3, 1.0, 0.5, 0.5), 100.0)
    recs = fl.ansatz_records(traj, sc, np.linspace(0, 100, 201))
    rep = fl.rigidity_checks(recs, trend_from=10.0)
    assert rep.max_moment1 == 0.0 and rep.monotone
    assert math.isfinite(rep.dissipation_integral) and rep.dissipation_integral > 0
    assert rep.sup_energy == pytest.approx(recs[0].energy)
    # the early transient is not monotone
    assert not fl.rigidity_checks(recs, trend_from=0.0).monotone
    with pytest.raises(ValueError):
        fl.rigidity_checks(recs[:1])


def test_inviscid_energy_audit_is_conserved():
    # with nu = 0 the pseudo-energy loses exactly what it dissipates
    sc = solve_tau("logarithmic", 1.0, 21.0)
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0, 0.3, 1.0, 0.5, 0.0), 20.0)
    recs = fl.ansatz_records(traj, sc, np.linspace(0, 20, 4001))
    rep = fl.rigidity_checks(recs)
    assert rep.energy_audit == pytest.approx(recs[0].energy, abs=1e-5)


def test_fluid_csv_layout():
    sc = solve_tau("logarithmic", 1.0, 2.0)
    traj = fl.fluid_gaussian_ode(fl.FluidGaussianState(1.0), 1.0)
    text = fl.write_fluid_csv(fl.ansatz_records(traj, sc, [0.0, 1.0]))
    lines = text.splitlines()
    assert lines[0] == "t,beta,omega,E,D,EBD,DBD,moment1,moment2"
    assert len(lines) == 3 and all(len(line.split(",")) == 9 for line in lines)
