"""Classical limit on the phase-space disk ``p**2 + q**2 <= 4``.

The mean-field energy per particle is

    Hc(p, q) = (1-gamma)/4 (p^2+q^2) - gamma/8 q^2 (4-p^2-q^2)
               - alpha/16 (p^2+q^2)^2 + gamma/2

with ``dq/dt = dHc/dp`` and ``dp/dt = -dHc/dq``.  The whole circle
``p^2 + q^2 = 4`` is a single point of the Bloch sphere (``m = +j``).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, SingularParameterError

GAMMA_C = 1.0 / 3.0
DISK_R2 = 4.0
DEGENERATE_HESSIAN = 1e-10


def _check_params(gamma: float, alpha: float) -> None:
    if not (0.0 <= gamma <= 1.0):
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma}")
    if not (alpha >= 0.0) or not math.isfinite(alpha):
        raise ParameterError(f"alpha must be finite and >= 0, got {alpha}")


def _check_point(p, q) -> None:
    if np.any(np.asarray(p) ** 2 + np.asarray(q) ** 2 > DISK_R2 * (1 + 1e-12)):
        raise DomainError("phase-space point outside the disk p^2 + q^2 <= 4")


@dataclass(frozen=True)
class PhasePoint:
    p: float
    q: float

    def __post_init__(self):
        _check_point(self.p, self.q)


def classical_hamiltonian(gamma: float, alpha: float, p, q):
    """Energy per particle. Vectorized over ``p`` and ``q``."""
    _check_point(p, q)
    return _hc(gamma, alpha, np.asarray(p, dtype=float), np.asarray(q, dtype=float))


def _hc(gamma, alpha, p, q):
    r2 = p * p + q * q
    return (1 - gamma) / 4 * r2 - gamma / 8 * q * q * (4 - r2) - alpha / 16 * r2 * r2 + gamma / 2


def equations_of_motion(gamma: float, alpha: float, p, q):
    """Return ``(dq/dt, dp/dt)``."""
    _check_point(p, q)
    return _eom(gamma, alpha, p, q)


def _eom(gamma, alpha, p, q):
    r2 = p * p + q * q
    qdot = (1 - gamma) / 2 * p + gamma / 4 * q * q * p - alpha / 4 * p * r2
    pdot = -(1 - gamma) / 2 * q + gamma / 4 * q * (4 - p * p - 2 * q * q) + alpha / 4 * q * r2
    return qdot, pdot


def hessian(gamma: float, alpha: float, p: float, q: float) -> np.ndarray:
    """Hessian of Hc in the (p, q) ordering."""
    r2 = p * p + q * q
    two_a = (1 - gamma) / 2
    hpp = two_a + gamma * q * q / 4 - alpha / 4 * (r2 + 2 * p * p)
    hqq = two_a - gamma + gamma * p * p / 4 + 1.5 * gamma * q * q - alpha / 4 * (r2 + 2 * q * q)
    hpq = (gamma - alpha) / 2 * p * q
    return np.array([[hpp, hpq], [hpq, hqq]])


def classify(h: np.ndarray) -> str:
    det = float(np.linalg.det(h))
    if abs(det) < DEGENERATE_HESSIAN:
        return "bifurcation point"
    if det < 0:
        return "saddle"
    return "minimum" if np.trace(h) > 0 else "maximum"


# -- trajectories -------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    p: np.ndarray
    q: np.ndarray
    energy: np.ndarray
    exited: bool = False

    @property
    def energy_drift(self) -> float:
        return float(abs(self.energy[-1] - self.energy[0]))


def integrate_trajectory(gamma: float, alpha: float, start: PhasePoint | tuple[float, float],
                         dt: float, steps: int) -> Trajectory:
    """Classic fourth-order Runge-Kutta integration of the equations of motion.

    Stops early, with ``exited=True``, if a step leaves the open disk.
    """
    _check_params(gamma, alpha)
    if not dt > 0 or steps < 0:
        raise ParameterError("need dt > 0 and steps >= 0")
    p, q = (start.p, start.q) if isinstance(start, PhasePoint) else map(float, start)
    _check_point(p, q)
    ps = np.empty(steps + 1)
    qs = np.empty(steps + 1)
    ps[0], qs[0] = p, q
    g, a = gamma, alpha
    half = dt / 2
    exited = False
    n = steps
    for k in range(1, steps + 1):
        q1, p1 = _eom(g, a, p, q)
        q2, p2 = _eom(g, a, p + half * p1, q + half * q1)
        q3, p3 = _eom(g, a, p + half * p2, q + half * q2)
        q4, p4 = _eom(g, a, p + dt * p3, q + dt * q3)
        p += dt / 6 * (p1 + 2 * p2 + 2 * p3 + p4)
        q += dt / 6 * (q1 + 2 * q2 + 2 * q3 + q4)
        if p * p + q * q >= DISK_R2:
            exited = True
            n = k - 1
            break
        ps[k], qs[k] = p, q
    ps, qs = ps[: n + 1], qs[: n + 1]
    return Trajectory(t=dt * np.arange(n + 1), p=ps, q=qs, energy=_hc(g, a, ps, qs), exited=exited)


# -- fixed points and critical energies --------------------------------------

@dataclass(frozen=True)
class FixedPoint:
    p: float
    q: float
    energy: float
    stability: str
    family: str


@dataclass(frozen=True)
class FixedPointReport:
    gamma: float
    alpha: float
    points: tuple[FixedPoint, ...]

    def family(self, name: str) -> list[FixedPoint]:
        return [pt for pt in self.points if pt.family == name]


def _signed_pairs(a: float, b: float) -> list[tuple[float, float]]:
    pairs = []
    for sa in ((1, -1) if a else (1,)):
        for sb in ((1, -1) if b else (1,)):
            pairs.append((sa * a, sb * b))
    return pairs


def find_fixed_points(gamma: float, alpha: float) -> FixedPointReport:
    """All stationary points of the classical flow on the disk.

    Families: ``origin``; ``q-axis`` at ``(0, +/-sqrt(2(3g-1)/(2g-a)))`` for
    ``gamma >= 1/3``; ``boundary`` at ``(+/-sqrt((2g+2-4a)/g),
    +/-sqrt((4a-2+2g)/g))`` for ``gamma >= |1-2 alpha|``; ``p-axis`` at
    ``(+/-sqrt(2(1-g)/a), 0)`` when that lies inside the disk.
    """
    _check_params(gamma, alpha)
    g, a = gamma, alpha
    found: list[tuple[float, float, str]] = [(0.0, 0.0, "origin")]
    if g >= GAMMA_C and 2 * g != a:
        q1sq = 2 * (3 * g - 1) / (2 * g - a)
        if 0.0 <= q1sq <= DISK_R2:
            found += [(0.0, s * math.sqrt(q1sq), "q-axis") for s in ((1, -1) if q1sq else (1,))]
    if g > 0 and g >= abs(1 - 2 * a):
        p2 = math.sqrt(max((2 * g + 2 - 4 * a) / g, 0.0))
        q2 = math.sqrt(max((4 * a - 2 + 2 * g) / g, 0.0))
        found += [(pp, qq, "boundary") for pp, qq in _signed_pairs(p2, q2)]
    if a > 0:
        p3sq = 2 * (1 - g) / a
        if 0.0 < p3sq < DISK_R2:
            found += [(s * math.sqrt(p3sq), 0.0, "p-axis") for s in (1, -1)]
    points = tuple(
        FixedPoint(p, q, float(_hc(g, a, p, q)), classify(hessian(g, a, p, q)), fam) for p, q, fam in found
    )
    return FixedPointReport(gamma=g, alpha=a, points=points)


@dataclass(frozen=True)
class CriticalEnergies:
    gamma: float
    alpha: float
    eps_c1: float | None
    eps_c2: float
    second_fixed_points_exist: bool = True


def critical_energies(gamma: float, alpha: float) -> CriticalEnergies:
    """Excitation energies (above the classical minimum) of both separatrices."""
    _check_params(gamma, alpha)
    g, a = gamma, alpha
    if g < GAMMA_C:
        eps_c1 = None
        eps_c2 = 1 - g - a
    else:
        if abs(2 * g - a) < 1e-12:
            raise SingularParameterError("2*gamma == alpha: critical energies are singular")
        eps_c1 = (3 * g - 1) ** 2 / (4 * (2 * g - a))
        eps_c2 = (1 + g - 2 * a) ** 2 / (4 * (2 * g - a))
    return CriticalEnergies(g, a, eps_c1, eps_c2, second_fixed_points_exist=g >= abs(1 - 2 * a))


def boundary_energy(gamma: float, alpha: float) -> float:
    """Hc on the circle p^2 + q^2 = 4 (the single sphere point m = +j)."""
    return 1 - gamma / 2 - alpha


def minimum_energy(gamma: float, alpha: float) -> float:
    """Classical ground energy per particle.

    gamma/2 below gamma_c and the q-axis minimum above it, unless the
    anharmonic term is strong enough to push the minimum onto the boundary.
    """
    _check_params(gamma, alpha)
    energies = [pt.energy for pt in find_fixed_points(gamma, alpha).points]
    return min(energies + [boundary_energy(gamma, alpha)])


def maximum_energy(gamma: float, alpha: float) -> float:
    """Largest Hc on the closed disk."""
    _check_params(gamma, alpha)
    energies = [pt.energy for pt in find_fixed_points(gamma, alpha).points]
    return max(energies + [boundary_energy(gamma, alpha)])


# -- semiclassical density of states ----------------------------------------

@dataclass(frozen=True)
class SemiclassicalDOS:
    gamma: float
    alpha: float
    edges: np.ndarray
    counts: np.ndarray
    samples: int
    seed: int
    rho: np.ndarray = field(init=False)
    stderr: np.ndarray = field(init=False)

    def __post_init__(self):
        width = np.diff(self.edges)
        frac = self.counts / self.samples
        object.__setattr__(self, "rho", frac / width)
        object.__setattr__(self, "stderr", np.sqrt(frac * (1 - frac) / self.samples) / width)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def empty(self) -> np.ndarray:
        """Bins with no samples; their relative error is unbounded."""
        return self.counts == 0

    @property
    def relative_error(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.empty, np.inf, self.stderr / self.rho)


def default_workers() -> int:
    return max(1, int(os.environ.get("ALMG_WORKERS", "1")))


def _sample_chunk(args):
    gamma, alpha, seed_seq, n, edges, shift = args
    rng = np.random.Generator(np.random.Philox(seed_seq))
    u = rng.random((2, n))
    r = 2.0 * np.sqrt(u[0])
    theta = 2.0 * np.pi * u[1]
    h = _hc(gamma, alpha, r * np.cos(theta), r * np.sin(theta)) - shift
    counts, _ = np.histogram(h, bins=edges)
    return counts


def semiclassical_dos(gamma: float, alpha: float, eps_grid=None, samples: int = 10**7, seed: int = 0,
                      bins: int = 400, chunk: int = 10**6, workers: int | None = None) -> SemiclassicalDOS:
    """Monte Carlo estimate of the available phase-space volume per unit energy.

    Points are drawn uniformly over the disk (area 4 pi) and binned by their
    excitation energy above the classical minimum, so
    ``rho = (count / samples) / bin_width``.  ``eps_grid`` gives bin edges;
    when omitted, ``bins`` equal bins span ``[0, eps_max]``.

    The sample budget is split into fixed-size chunks, each with its own
    Philox stream spawned from ``seed``; results do not depend on
    ``workers``.
    """
    _check_params(gamma, alpha)
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    shift = minimum_energy(gamma, alpha)
    if eps_grid is None:
        if bins < 1:
            raise ParameterError("bins must be >= 1")
        edges = np.linspace(0.0, maximum_energy(gamma, alpha) - shift, bins + 1)
    else:
        edges = np.asarray(eps_grid, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ParameterError("eps_grid must be strictly increasing bin edges")
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(gamma, alpha, ss, n, edges, shift) for ss, n in zip(children, sizes)]
    workers = workers or default_workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(_sample_chunk, tasks))
    else:
        parts = [_sample_chunk(t) for t in tasks]
    counts = np.sum(parts, axis=0).astype(np.int64)
    edges = edges.copy()
    edges.setflags(write=False)
    counts.setflags(write=False)
    return SemiclassicalDOS(gamma, alpha, edges, counts, samples, seed)
