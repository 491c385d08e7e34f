"""Quantum density of states, entropy sweeps and finite-size scaling."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.signal
import scipy.stats

from .classical import (GAMMA_C, critical_energies, default_workers, maximum_energy, minimum_energy,
                        semiclassical_dos)
from .eigensolve import Spectrum, excitation_energies, solve
from .errors import ParameterError
from .spinmodel import ModelParams, Parity, build_hamiltonian
from .workstats import critical_quench, work_entropy

DEFAULT_SIZES = (200, 400, 800, 1600, 3200)


# -- density of states --------------------------------------------------------

@dataclass(frozen=True)
class DosHistogram:
    """Histogram of rescaled excitation energies.

    ``rescaled`` is ``count / (bin_width * N)``.  One parity sector holds
    about half of the levels, so ``full_space`` rescales by
    ``(N + 1) / dim`` for comparison with the semiclassical density, which
    counts the whole multiplet.
    """

    edges: np.ndarray
    counts: np.ndarray
    N: int
    dim: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def rescaled(self) -> np.ndarray:
        return self.counts / (self.widths * self.N)

    @property
    def full_space(self) -> np.ndarray:
        return self.rescaled * (self.N + 1) / self.dim


def _spectrum_N(spec: Spectrum) -> int:
    if spec.params is None:
        raise ParameterError("spectrum carries no model parameters")
    return spec.params.N


def quantum_dos(spec: Spectrum, bins: int | None = None, edges=None) -> DosHistogram:
    """Histogram of ``eps_n`` with ``max(50, dim // 20)`` bins over ``[0, eps_max]`` by default."""
    eps = excitation_energies(spec)
    if edges is None:
        bins = max(50, spec.dim // 20) if bins is None else int(bins)
        if bins < 2:
            raise ParameterError(f"need at least 2 bins, got {bins}")
        edges = np.linspace(0.0, eps[-1], bins + 1)
    else:
        edges = np.asarray(edges, dtype=float)
        if len(edges) < 3 or np.any(np.diff(edges) <= 0):
            raise ParameterError("edges must be strictly increasing with at least 2 bins")
    counts, _ = np.histogram(eps, bins=edges)
    return DosHistogram(edges=edges, counts=counts, N=_spectrum_N(spec), dim=spec.dim)


def counting_dos(spec: Spectrum, edges) -> np.ndarray:
    """Bin-averaged density from the piecewise-linear level-counting function.

    The staircase through ``(eps_n, n + 1/2)`` is differentiated across each
    bin, which removes the +/-1 level quantization of a plain histogram.
    Normalized like :attr:`DosHistogram.full_space`.
    """
    eps = excitation_energies(spec)
    edges = np.asarray(edges, dtype=float)
    staircase = np.interp(edges, eps, np.arange(spec.dim) + 0.5, left=0.0, right=float(spec.dim))
    N = _spectrum_N(spec)
    return np.diff(staircase) / (np.diff(edges) * N) * (N + 1) / spec.dim


def dominant_peaks(values, count: int = 2) -> np.ndarray:
    """Indices of the ``count`` tallest distinct local maxima.

    Ties in height are broken by prominence.
    """
    v = np.asarray(values, dtype=float)
    padded = np.r_[-np.inf, v, -np.inf]
    idx, props = scipy.signal.find_peaks(padded, prominence=(None, None))
    idx = idx - 1
    order = np.lexsort((-props["prominences"], -v[idx]))
    return idx[order[:count]]


def critical_gammas(eps: float, alpha: float, num: int = 2001) -> dict[str, list[float]]:
    """Control-parameter values at which ``eps_c1(gamma)`` or ``eps_c2(gamma)`` equals ``eps``."""
    grid = np.linspace(0.0, 1.0, num)
    out: dict[str, list[float]] = {"first": [], "second": []}

    def f(which, g):
        try:
            ce = critical_energies(g, alpha)
        except ParameterError:
            return math.nan
        val = ce.eps_c1 if which == "first" else ce.eps_c2
        return math.nan if val is None else val - eps

    for which in out:
        vals = np.array([f(which, g) for g in grid])
        for k in range(len(grid) - 1):
            a, b = vals[k], vals[k + 1]
            if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
                continue
            # the branch switch at gamma_c is a jump, not a root
            if grid[k] < GAMMA_C <= grid[k + 1]:
                continue
            root = grid[k] if a == 0 else scipy.optimize.brentq(lambda g: f(which, g), grid[k], grid[k + 1])
            if not out[which] or abs(out[which][-1] - root) > 1e-9:
                out[which].append(float(root))
    return out


def dos_gamma_slice(N: int, alpha: float, eps: float, gammas, width: float = 0.005,
                    parity: Parity | str = Parity.EVEN) -> np.ndarray:
    """Full-space normalized quantum density at fixed ``eps`` along a gamma grid."""
    out = []
    for g in gammas:
        spec = solve(ModelParams(N, g, alpha), parity)
        out.append(counting_dos(spec, [eps - width / 2, eps + width / 2])[0])
    return np.array(out)


@dataclass(frozen=True)
class LogFit:
    intercept: float
    slope: float
    r2: float
    distance: np.ndarray
    rho: np.ndarray


def log_divergence_fit(gamma: float, alpha: float, eps_c: float, lo: float = 1e-3, hi: float = 1e-1,
                       bins_per_side: int = 20, samples: int = 10**7, seed: int = 0) -> LogFit:
    """Fit ``rho_sc = a - b ln|eps - eps_c|`` on log-spaced bins either side of ``eps_c``.

    Each side is clipped to the classical energy range; a side with less than
    a decade of room is skipped.
    """
    eps_max = maximum_energy(gamma, alpha) - minimum_energy(gamma, alpha)
    edges_all, dist_all, keep = [], [], []
    for side, room in ((-1, eps_c), (1, eps_max - eps_c)):
        top = min(hi, 0.9 * room)
        if top < 10 * lo:
            continue
        d = np.geomspace(lo, top, bins_per_side + 1)
        e = np.sort(eps_c + side * d)
        edges_all.append(e)
    if not edges_all:
        raise ParameterError("no room for a log fit around eps_c")
    rho, dist = [], []
    for e in edges_all:
        sc = semiclassical_dos(gamma, alpha, eps_grid=e, samples=samples, seed=seed)
        rho.append(sc.rho)
        dist.append(np.sqrt(np.abs(e[:-1] - eps_c) * np.abs(e[1:] - eps_c)))
    rho = np.concatenate(rho)
    dist = np.concatenate(dist)
    res = scipy.stats.linregress(-np.log(dist), rho)
    return LogFit(intercept=float(res.intercept), slope=float(res.slope), r2=float(res.rvalue**2),
                  distance=dist, rho=rho)


# -- entropy sweeps -----------------------------------------------------------

@dataclass(frozen=True)
class EntropySweep:
    which: int
    gamma_i: float
    alpha: float
    N: int
    grid: np.ndarray
    entropies: np.ndarray
    argmax: float
    max: float
    delta_gamma_c: float
    dropped: tuple[float, ...] = ()


def default_tilde_grid() -> np.ndarray:
    return np.linspace(0.2, 1.8, 161)


def _parabolic_vertex(x, y, k: int) -> float:
    if k == 0 or k == len(y) - 1:
        return float(x[k])
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(x[k])
    h = x[k + 1] - x[k]
    return float(x[k] + 0.5 * h * (y0 - y2) / denom)


def _pool_map(fn, items, workers):
    workers = workers or default_workers()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def entropy_sweep(which, gamma_i: float, alpha: float, N: int, grid=None,
                  parity: Parity | str = Parity.EVEN, workers: int | None = None) -> EntropySweep:
    """S_W against the rescaled quench strength ``delta_gamma / delta_gamma_c``.

    The first transition starts from the ground state, the second from the
    highest state of the sector.  The argmax is refined by a three-point
    parabola around the grid maximum and ``max`` is the entropy evaluated
    there.
    """
    cq = critical_quench(gamma_i, alpha, which)
    grid = default_tilde_grid() if grid is None else np.asarray(grid, dtype=float)
    params = ModelParams(N, gamma_i, alpha)
    spec_i = solve(params, parity, want_vectors=True)
    psi = spec_i.vector(0 if cq.which == 1 else spec_i.dim - 1)

    kept, dropped = [], []
    for t in grid:
        g_f = gamma_i + t * cq.value
        (kept if 0.0 <= g_f <= 1.0 else dropped).append(float(t))
    if dropped:
        warnings.warn(f"dropped {len(dropped)} grid points with gamma_f outside [0, 1]", stacklevel=2)
    if len(kept) < 3:
        raise ParameterError("fewer than 3 grid points keep gamma_f inside [0, 1]")

    def entropy_at(t):
        spec_f = solve(params.with_gamma(gamma_i + t * cq.value), parity, want_vectors=True)
        return work_entropy((spec_f.eigenvectors.T @ psi) ** 2)

    kept_arr = np.array(kept)
    entropies = np.array(_pool_map(entropy_at, kept, workers))
    k = int(np.argmax(entropies))
    argmax = _parabolic_vertex(kept_arr, entropies, k)
    s_max = entropy_at(argmax) if argmax != kept_arr[k] else float(entropies[k])
    return EntropySweep(cq.which, gamma_i, alpha, N, kept_arr, entropies, argmax, s_max, cq.value,
                        tuple(dropped))


# -- scaling ------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    sizes: np.ndarray
    distances: np.ndarray
    maxima: np.ndarray
    mu: float
    mu_stderr: float
    mu_r2: float
    nu: float
    nu_stderr: float
    nu_r2: float
    mu_residuals: np.ndarray = field(repr=False)
    nu_residuals: np.ndarray = field(repr=False)
    low_confidence: bool = False


def fit_scaling(sizes, argmaxes, maxima) -> ScalingFit:
    """OLS fits of ``ln|1 - x_m|`` and ``S_m`` against ``ln N``.

    ``mu`` is the negated first slope, ``nu`` the second.  A non-monotone
    distance sequence still yields a fit, flagged ``low_confidence``.
    """
    sizes = np.asarray(sizes, dtype=float)
    if len(sizes) < 3:
        raise ParameterError("scaling fits need at least 3 sizes")
    distances = np.abs(1.0 - np.asarray(argmaxes, dtype=float))
    maxima = np.asarray(maxima, dtype=float)
    if np.any(distances <= 0):
        raise ParameterError("argmax coincides with 1; ln|1 - x| undefined")
    lnN = np.log(sizes)
    a = scipy.stats.linregress(lnN, np.log(distances))
    b = scipy.stats.linregress(lnN, maxima)
    return ScalingFit(
        sizes=sizes, distances=distances, maxima=maxima,
        mu=float(-a.slope), mu_stderr=float(a.stderr), mu_r2=float(a.rvalue**2),
        nu=float(b.slope), nu_stderr=float(b.stderr), nu_r2=float(b.rvalue**2),
        mu_residuals=np.log(distances) - (a.intercept + a.slope * lnN),
        nu_residuals=maxima - (b.intercept + b.slope * lnN),
        low_confidence=bool(np.any(np.diff(distances) >= 0)),
    )


def scaling_fit(which, gamma_i: float, alpha: float, sizes=DEFAULT_SIZES, grid=None,
                workers: int | None = None) -> tuple[ScalingFit, list[EntropySweep]]:
    if len(sizes) < 4:
        raise ParameterError("scaling_fit needs at least 4 sizes")
    sweeps = [entropy_sweep(which, gamma_i, alpha, N, grid, workers=workers) for N in sizes]
    fit = fit_scaling(sizes, [s.argmax for s in sweeps], [s.max for s in sweeps])
    return fit, sweeps


# -- ground-state transition -------------------------------------------------

def ground_energy_density(N: int, gamma: float, alpha: float) -> float:
    op = build_hamiltonian(ModelParams(N, gamma, alpha), Parity.EVEN)
    if op.dim == 1:
        return float(op.diag[0]) / N
    w = scipy.linalg.eigh_tridiagonal(op.diag, op.offdiag, eigvals_only=True, select="i", select_range=(0, 0))
    return float(w[0]) / N


@dataclass(frozen=True)
class QPTMarker:
    gammas: np.ndarray
    second_derivative: np.ndarray
    peak_gamma: float
    peak_value: float


def gs_qpt_marker(alpha: float, N: int, gamma_grid) -> QPTMarker:
    """Second derivative of ``E_0 / N`` along gamma by three-point differences.

    The peak is where ``|d2|`` is largest.
    """
    g = np.asarray(gamma_grid, dtype=float)
    if len(g) < 3 or np.any(np.diff(g) <= 0):
        raise ParameterError("gamma_grid must be increasing with at least 3 points")
    e = np.array([ground_energy_density(N, x, alpha) for x in g])
    h0 = g[1:-1] - g[:-2]
    h1 = g[2:] - g[1:-1]
    d2 = 2 * (h0 * e[2:] - (h0 + h1) * e[1:-1] + h1 * e[:-2]) / (h0 * h1 * (h0 + h1))
    k = int(np.argmax(np.abs(d2)))
    return QPTMarker(g[1:-1], d2, float(g[1:-1][k]), float(d2[k]))
