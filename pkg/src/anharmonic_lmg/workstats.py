"""Two-point-measurement work statistics for sudden quenches of gamma.

A sudden quench ``gamma_i -> gamma_f = gamma_i + delta_gamma`` applied to
the eigenstate ``|psi_n^i>`` gives work ``W_k = E_k^f - E_n^i`` with
probability ``p_{k,n} = |<psi_k^f|psi_n^i>|^2``.  Only gamma changes, so
parity is conserved and everything happens inside one sector.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .classical import GAMMA_C
from .eigensolve import Spectrum, excitation_energies, solve
from .errors import ParameterError, SingularParameterError, ValidityError
from .spinmodel import ModelParams, Parity, build_hamiltonian

PROB_FLOOR = 1e-300
SUPPORT_THRESHOLD = 1e-8


def _initial_index(initial, dim: int) -> int:
    if isinstance(initial, str):
        if initial == "ground":
            return 0
        if initial == "highest":
            return dim - 1
        try:
            initial = int(initial)
        except ValueError:
            raise ParameterError(f"initial state must be 'ground', 'highest' or an index, got {initial!r}") from None
    n = int(initial)
    if not 0 <= n < dim:
        raise ParameterError(f"initial index {n} outside sector of dimension {dim}")
    return n


@dataclass(frozen=True)
class QuenchSpec:
    gamma_i: float
    delta_gamma: float
    alpha: float
    N: int
    initial: str | int = "ground"
    parity: Parity | str = Parity.EVEN

    def __post_init__(self):
        object.__setattr__(self, "parity", Parity.coerce(self.parity))
        if not 0.0 <= self.gamma_f <= 1.0:
            raise ParameterError(f"gamma_f = {self.gamma_f} leaves [0, 1]")
        ModelParams(self.N, self.gamma_i, self.alpha)

    @property
    def gamma_f(self) -> float:
        return self.gamma_i + self.delta_gamma

    @property
    def initial_params(self) -> ModelParams:
        return ModelParams(self.N, self.gamma_i, self.alpha)

    @property
    def final_params(self) -> ModelParams:
        return ModelParams(self.N, self.gamma_f, self.alpha)


def work_entropy(probs) -> float:
    """Shannon entropy ``-sum p ln p`` with ``0 ln 0 = 0``."""
    p = np.asarray(probs, dtype=float)
    p = p[p > PROB_FLOOR]
    return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True)
class WorkDistribution:
    works: np.ndarray
    probs: np.ndarray
    initial_index: int
    entropy: float = field(init=False)
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "entropy", work_entropy(self.probs))
        mean = float(np.dot(self.probs, self.works))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", float(np.dot(self.probs, (self.works - mean) ** 2)))

    @property
    def support(self) -> int:
        return int(np.count_nonzero(self.probs > SUPPORT_THRESHOLD))

    def merged(self, N: int | None = None, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """P(W) with coincident work values summed.

        The default tolerance is ``1e-12 * N``.  The entropy attribute is always
        the sum over final states, never over merged atoms.
        """
        if tol is None:
            tol = 1e-12 * (N if N is not None else 1)
        order = np.argsort(self.works, kind="stable")
        w = self.works[order]
        p = self.probs[order]
        starts = np.r_[0, np.nonzero(np.diff(w) > tol)[0] + 1]
        return w[starts], np.add.reduceat(p, starts)


def overlap_probabilities(spec_i: Spectrum, spec_f: Spectrum, columns=None) -> np.ndarray:
    """Matrix ``P[k, n] = |<psi_k^f|psi_n^i>|^2`` (optionally for selected n)."""
    vi = spec_i.eigenvectors if columns is None else spec_i.eigenvectors[:, columns]
    if vi is None or spec_f.eigenvectors is None:
        raise ParameterError("both spectra need eigenvectors")
    return (spec_f.eigenvectors.T @ vi) ** 2


def distribution_from_spectra(spec_i: Spectrum, spec_f: Spectrum, n: int) -> WorkDistribution:
    probs = overlap_probabilities(spec_i, spec_f, [n])[:, 0]
    works = spec_f.eigenvalues - spec_i.eigenvalues[n]
    return WorkDistribution(works=works, probs=probs, initial_index=n)


def quench_distribution(spec: QuenchSpec) -> WorkDistribution:
    spec_i = solve(spec.initial_params, spec.parity, want_vectors=True)
    n = _initial_index(spec.initial, spec_i.dim)
    if spec.delta_gamma == 0:
        works = spec_i.eigenvalues - spec_i.eigenvalues[n]
        probs = np.zeros(spec_i.dim)
        probs[n] = 1.0
        return WorkDistribution(works=works, probs=probs, initial_index=n)
    spec_f = solve(spec.final_params, spec.parity, want_vectors=True)
    return distribution_from_spectra(spec_i, spec_f, n)


# -- critical quench strengths -----------------------------------------------

@dataclass(frozen=True)
class CriticalQuench:
    which: int
    gamma_i: float
    alpha: float
    value: float
    out_of_range: bool = False

    @property
    def gamma_f(self) -> float:
        return self.gamma_i + self.value


def _which(which) -> int:
    key = str(which).lower()
    if key in ("1", "first"):
        return 1
    if key in ("2", "second"):
        return 2
    raise ParameterError(f"which must be 'first'/1 or 'second'/2, got {which!r}")


def critical_quench(gamma_i: float, alpha: float, which="first") -> CriticalQuench:
    """Mean-field quench strength that lands the post-quench energy on an ESQPT.

    ``first`` starts from the ground state, ``second`` from the highest
    eigenstate.  Valid for ``1/3 <= gamma_i <= 1``.
    """
    a_idx = _which(which)
    g, a = gamma_i, alpha
    if not (GAMMA_C - 1e-12 <= g <= 1.0):
        raise ValidityError(f"critical quenches require 1/3 <= gamma_i <= 1, got gamma_i = {g}")
    if a_idx == 1:
        num = -(3 * g - 1) * (2 * g - a)
        den = 2 * (3 * g - 3 * a + 1)
    else:
        num = 4 * a * (1 - g - a) - (1 - g) ** 2
        den = 2 * (2 * a + g - 1)
    if abs(den) < 1e-12:
        raise SingularParameterError(f"critical quench {a_idx} is singular at gamma_i={g}, alpha={a}")
    value = num / den
    return CriticalQuench(a_idx, g, a, value, out_of_range=not 0.0 <= g + value <= 1.0)


def resolve_delta_gamma(gamma_i: float, alpha: float, which, tilde: float) -> float:
    """Absolute quench strength for a rescaled strength ``delta_gamma / delta_gamma_c``."""
    return tilde * critical_quench(gamma_i, alpha, which).value


def mean_postquench_excitation(spec: QuenchSpec) -> float:
    """``(<psi_n^i|H_f|psi_n^i> - E_0^f) / N``.

    Uses only the initial eigenvector and the final ground energy.
    """
    spec_i = solve(spec.initial_params, spec.parity, want_vectors=True)
    n = _initial_index(spec.initial, spec_i.dim)
    h_f = build_hamiltonian(spec.final_params, spec.parity)
    e0_f = solve(spec.final_params, spec.parity).ground_energy
    return (h_f.quadratic_form(spec_i.vector(n)) - e0_f) / spec.N


def entropy_vs_energy(gamma_i: float, alpha: float, N: int, delta_gamma: float = 1e-3,
                      parity: Parity | str = Parity.EVEN) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entropy of P_n(W) for every initial eigenstate n of the sector.

    Returns ``(n, eps_n, S_W^(n))`` arrays.  Both spectra are solved once.
    """
    params_i = ModelParams(N, gamma_i, alpha)
    spec_i = solve(params_i, parity, want_vectors=True)
    if delta_gamma == 0:
        entropies = np.zeros(spec_i.dim)
    else:
        spec_f = solve(params_i.with_gamma(gamma_i + delta_gamma), parity, want_vectors=True)
        probs = overlap_probabilities(spec_i, spec_f)
        safe = np.where(probs > PROB_FLOOR, probs, 1.0)
        entropies = -np.sum(np.where(probs > PROB_FLOOR, probs * np.log(safe), 0.0), axis=0)
    return np.arange(spec_i.dim), excitation_energies(spec_i), entropies


def max_entropy(dim: int) -> float:
    return math.log(dim)


def warn_out_of_range(cq: CriticalQuench) -> None:
    if cq.out_of_range:
        warnings.warn(f"gamma_f = {cq.gamma_f:.6g} for critical quench {cq.which} lies outside [0, 1]",
                      stacklevel=2)
