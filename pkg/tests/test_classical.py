import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings, strategies as st

from anharmonic_lmg.analysis import dominant_peaks
from anharmonic_lmg.classical import (PhasePoint, classical_hamiltonian, critical_energies, equations_of_motion,
                                      find_fixed_points, hessian, integrate_trajectory, maximum_energy,
                                      minimum_energy, semiclassical_dos)
from anharmonic_lmg.errors import DomainError, ParameterError, SingularParameterError

G, A = 0.7, 0.5


def grid_disk(n=401):
    x = np.linspace(-2, 2, n)
    p, q = np.meshgrid(x, x, indexing="ij")
    inside = p**2 + q**2 <= 4
    return p, q, inside


def _newton(gamma, alpha, v, iters=60):
    """Newton iteration on grad H = (qdot, -pdot); None if it leaves the disk."""
    for _ in range(iters):
        if v @ v >= 4:
            return None
        qd, pd = equations_of_motion(gamma, alpha, *v)
        grad = np.array([qd, -pd])
        try:
            v = v - np.linalg.solve(hessian(gamma, alpha, *v), grad)
        except np.linalg.LinAlgError:
            return None
    if v @ v >= 4 - 1e-6:
        return None
    qd, pd = equations_of_motion(gamma, alpha, *v)
    return v if math.hypot(qd, pd) < 1e-12 else None


def scan_roots(gamma, alpha, n=400):
    """Stationary points from a dense grid scan of |EOM|^2 and Newton polish."""
    x = np.linspace(-2, 2, n)
    p, q = np.meshgrid(x, x, indexing="ij")
    inside = p**2 + q**2 < 4
    qd, pd = equations_of_motion(gamma, alpha, np.where(inside, p, 0), np.where(inside, q, 0))
    f = np.where(inside, qd**2 + pd**2, np.inf)
    roots = []
    for i in range(1, n - 1):
        for j in range(1, n - 1):
            if np.isfinite(f[i, j]) and f[i, j] <= f[i - 1:i + 2, j - 1:j + 2].min():
                r = _newton(gamma, alpha, np.array([p[i, j], q[i, j]]))
                if r is not None and all(np.hypot(*(r - s)) > 1e-6 for s in roots):
                    roots.append(r)
    return roots


# -- Hamiltonian and equations of motion --------------------------------------

def test_origin_energy():
    assert classical_hamiltonian(G, A, 0.0, 0.0) == pytest.approx(0.35)


def test_double_well_minimum_energy():
    q1 = math.sqrt(2 * (3 * G - 1) / (2 * G - A))
    assert q1 == pytest.approx(1.56347, abs=1e-5)
    e1 = classical_hamiltonian(G, A, 0.0, q1)
    assert e1 == pytest.approx(0.35 - 1.21 / 3.6, abs=1e-12)
    # oracle: numerical minimization over the disk
    def objective(v):
        return classical_hamiltonian(G, A, *v) if v @ v <= 4 else 10.0

    best = min((scipy.optimize.minimize(objective, np.array(x0), method="Nelder-Mead",
                                        options={"xatol": 1e-10, "fatol": 1e-14})
                for x0 in ([0.1, 1.0], [-0.2, -1.3], [0.5, 0.5])), key=lambda r: r.fun)
    assert best.fun == pytest.approx(e1, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 2), st.floats(0, 1.99), st.floats(0, 2 * math.pi))
def test_inversion_symmetry(gamma, alpha, r, theta):
    p, q = r * math.cos(theta), r * math.sin(theta)
    assert classical_hamiltonian(gamma, alpha, p, q) == pytest.approx(classical_hamiltonian(gamma, alpha, -p, -q),
                                                                      abs=1e-15)


def test_out_of_domain():
    with pytest.raises(DomainError):
        classical_hamiltonian(G, A, 2.0, 0.5)
    with pytest.raises(DomainError):
        equations_of_motion(G, A, 1.9, 1.9)
    with pytest.raises(DomainError):
        PhasePoint(3.0, 0.0)


def test_origin_is_stationary():
    assert equations_of_motion(0.3, 0.2, 0.0, 0.0) == (0.0, 0.0)


def test_double_well_points_are_stationary():
    for s in (1, -1):
        qd, pd = equations_of_motion(G, A, 0.0, s * 1.5634719199411429)
        assert abs(qd) < 1e-9 and abs(pd) < 1e-9


def test_gradient_matches_finite_differences(rng):
    h = 1e-6
    for _ in range(100):
        r, th = 1.9 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
        p, q = r * math.cos(th), r * math.sin(th)
        gamma, alpha = rng.random(), 2 * rng.random()
        dhdp = (classical_hamiltonian(gamma, alpha, p + h, q) - classical_hamiltonian(gamma, alpha, p - h, q)) / (2 * h)
        dhdq = (classical_hamiltonian(gamma, alpha, p, q + h) - classical_hamiltonian(gamma, alpha, p, q - h)) / (2 * h)
        qd, pd = equations_of_motion(gamma, alpha, p, q)
        scale = max(math.hypot(dhdp, dhdq), 1e-3)
        assert abs(qd - dhdp) / scale <= 1e-6
        assert abs(pd + dhdq) / scale <= 1e-6


def test_hessian_matches_finite_differences(rng):
    h = 1e-6
    for _ in range(30):
        p, q = rng.uniform(-1.3, 1.3, 2)
        gamma, alpha = rng.random(), rng.random()
        hess = hessian(gamma, alpha, p, q)
        qd_p, pd_p = equations_of_motion(gamma, alpha, p + h, q)
        qd_m, pd_m = equations_of_motion(gamma, alpha, p - h, q)
        qd_qp, pd_qp = equations_of_motion(gamma, alpha, p, q + h)
        qd_qm, pd_qm = equations_of_motion(gamma, alpha, p, q - h)
        fd = np.array([[(qd_p - qd_m) / (2 * h), (qd_qp - qd_qm) / (2 * h)],
                       [-(pd_p - pd_m) / (2 * h), -(pd_qp - pd_qm) / (2 * h)]])
        np.testing.assert_allclose(hess, fd, atol=1e-7)


# -- trajectories ---------------------------------------------------------------

def test_rk4_energy_drift():
    traj = integrate_trajectory(G, A, (0.3, 0.5), dt=1e-3, steps=100_000)
    assert not traj.exited
    assert traj.energy_drift <= 1e-8


def test_fixed_point_is_stationary_under_integration():
    q1 = math.sqrt(2 * (3 * G - 1) / (2 * G - A))
    traj = integrate_trajectory(G, A, PhasePoint(0.0, q1), dt=1e-2, steps=2000)
    assert np.abs(traj.p).max() < 1e-10 and np.abs(traj.q - q1).max() < 1e-10


def test_below_boundary_energy_stays_in_one_well():
    start = (0.0, 1.2)
    assert classical_hamiltonian(G, A, *start) < 1 - G / 2 - A
    traj = integrate_trajectory(G, A, start, dt=1e-2, steps=20_000)
    assert np.all(traj.q > 0)


def test_above_saddle_crosses_between_wells():
    start = (0.05, 0.0)
    assert classical_hamiltonian(G, A, *start) > G / 2
    traj = integrate_trajectory(G, A, start, dt=1e-2, steps=20_000)
    assert traj.q.min() < -0.4 and traj.q.max() > 0.4


def test_disk_is_invariant_and_exit_is_flagged():
    traj = integrate_trajectory(G, A, (1.0, 1.7), dt=0.1, steps=2000)
    assert not traj.exited and np.all(traj.p**2 + traj.q**2 < 4)
    # an absurd step overshoots the boundary and stops the run
    traj = integrate_trajectory(G, A, (1.0, 1.7), dt=5.0, steps=50)
    assert traj.exited and len(traj.t) == 1


def test_integrator_arguments():
    with pytest.raises(ParameterError):
        integrate_trajectory(G, A, (0, 0.1), dt=0.0, steps=10)


# -- fixed points ---------------------------------------------------------------

def _report_interior(rep):
    return [np.array([pt.p, pt.q]) for pt in rep.points if pt.p**2 + pt.q**2 < 4 - 1e-9]


@pytest.mark.parametrize("gamma, alpha", [(0.2, 0.5), (0.7, 0.5), (0.6, 0.4), (0.9, 0.1)])
def test_fixed_points_match_grid_scan(gamma, alpha):
    rep = find_fixed_points(gamma, alpha)
    interior = _report_interior(rep)
    scanned = scan_roots(gamma, alpha)
    assert len(scanned) == len(interior)
    for r in scanned:
        assert min(np.hypot(*(r - x)) for x in interior) < 1e-8
    for pt in rep.points:
        qd, pd = equations_of_motion(gamma, alpha, pt.p, pt.q)
        assert abs(qd) < 1e-10 and abs(pd) < 1e-10


def test_low_gamma_has_no_double_well():
    rep = find_fixed_points(0.2, 0.5)
    assert rep.family("q-axis") == []
    assert len(rep.family("boundary")) == 4
    assert rep.family("origin")[0].stability == "minimum"


def test_broken_phase_stability():
    rep = find_fixed_points(G, A)
    assert rep.family("origin")[0].stability == "saddle"
    wells = rep.family("q-axis")
    assert len(wells) == 2 and all(pt.stability == "minimum" for pt in wells)
    for pt in wells:
        assert np.all(np.linalg.eigvalsh(hessian(G, A, pt.p, pt.q)) > 0)
    assert all(pt.stability == "maximum" for pt in rep.family("p-axis"))


def test_closed_form_energies():
    rep = find_fixed_points(G, A)
    assert rep.family("origin")[0].energy == pytest.approx(G / 2, abs=1e-12)
    assert rep.family("q-axis")[0].energy == pytest.approx(G / 2 - (3 * G - 1) ** 2 / (8 * G - 4 * A), abs=1e-12)
    assert rep.family("boundary")[0].energy == pytest.approx(1 - G / 2 - A, abs=1e-12)


def test_bifurcation_at_gamma_c():
    rep = find_fixed_points(1 / 3, 0.5)
    well = rep.family("q-axis")
    assert len(well) == 1 and well[0].q == 0.0
    assert well[0].stability == "bifurcation point"
    assert find_fixed_points(1 / 3 + 1e-6, 0.5).family("q-axis")[0].q < 0.01


@pytest.mark.parametrize("gamma, alpha", [(0.7, 0.5), (0.2, 0.5), (0.5, 0.9), (0.4, 0.05)])
def test_extreme_energies_match_grid(gamma, alpha):
    p, q, inside = grid_disk(1201)
    h = classical_hamiltonian(gamma, alpha, p[inside], q[inside])
    assert minimum_energy(gamma, alpha) == pytest.approx(h.min(), abs=1e-5)
    assert maximum_energy(gamma, alpha) == pytest.approx(h.max(), abs=1e-5)


# -- critical energies ----------------------------------------------------------

def test_critical_energies_reference_point():
    ce = critical_energies(G, A)
    assert round(ce.eps_c1, 4) == 0.3361
    assert round(ce.eps_c2, 4) == 0.1361
    assert ce.eps_c2 == pytest.approx(0.49 / 3.6, abs=1e-15)


def test_second_critical_energy_below_gamma_c():
    ce = critical_energies(0.2, 0.5)
    assert ce.eps_c1 is None
    assert ce.eps_c2 == pytest.approx(0.3, abs=1e-15)
    # oracle: stationary point on the boundary circle minus the grid minimum
    th = np.linspace(0, 2 * np.pi, 20001)
    qd, pd = equations_of_motion(0.2, 0.5, 2 * np.cos(th), 2 * np.sin(th))
    k = np.argmin(qd**2 + pd**2)
    e_stat = classical_hamiltonian(0.2, 0.5, 2 * np.cos(th[k]), 2 * np.sin(th[k]))
    p, q, inside = grid_disk(801)
    e_min = classical_hamiltonian(0.2, 0.5, p[inside], q[inside]).min()
    assert e_stat - e_min == pytest.approx(0.3, abs=1e-6)


def test_critical_energy_matches_fixed_point_gaps():
    for gamma in (0.4, 0.7, 1.0):
        rep = find_fixed_points(gamma, A)
        ce = critical_energies(gamma, A)
        e0 = rep.family("origin")[0].energy
        e1 = rep.family("q-axis")[0].energy
        e2 = rep.family("boundary")[0].energy
        assert ce.eps_c1 == pytest.approx(e0 - e1, abs=1e-12)
        assert ce.eps_c2 == pytest.approx(e2 - e1, abs=1e-12)


def test_singular_denominator():
    with pytest.raises(SingularParameterError):
        critical_energies(0.4, 0.8)


# -- semiclassical density of states ---------------------------------------------

def test_sc_dos_normalization_and_empty_tail():
    eps_max = maximum_energy(G, A) - minimum_energy(G, A)
    edges = np.linspace(0, eps_max + 0.05, 201)
    sc = semiclassical_dos(G, A, eps_grid=edges, samples=400_000, seed=1)
    total = np.sum(sc.rho * np.diff(edges))
    sigma = math.sqrt(np.sum((sc.stderr * np.diff(edges)) ** 2))
    assert abs(total - 1) <= 3 * max(sigma, 1e-12)
    beyond = sc.centers > eps_max + 1e-3
    assert np.all(sc.rho[beyond] == 0) and np.all(np.isinf(sc.relative_error[beyond]))
    assert np.all(sc.empty[beyond])


def test_sc_dos_peaks_at_critical_energies():
    sc = semiclassical_dos(G, A, samples=4_000_000, seed=7)
    ce = critical_energies(G, A)
    for k in dominant_peaks(sc.rho, 2):
        lo, hi = sc.edges[k], sc.edges[k + 1]
        assert lo <= ce.eps_c1 <= hi or lo <= ce.eps_c2 <= hi


def test_sc_dos_deterministic_across_workers():
    a = semiclassical_dos(G, A, samples=300_000, seed=5, bins=40, chunk=50_000, workers=1)
    b = semiclassical_dos(G, A, samples=300_000, seed=5, bins=40, chunk=50_000, workers=3)
    c = semiclassical_dos(G, A, samples=300_000, seed=6, bins=40, chunk=50_000)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)
    assert a.counts.sum() == 300_000


def test_sc_dos_argument_checks():
    with pytest.raises(ParameterError):
        semiclassical_dos(G, A, samples=0)
    with pytest.raises(ParameterError):
        semiclassical_dos(G, A, eps_grid=[0.3, 0.1])
