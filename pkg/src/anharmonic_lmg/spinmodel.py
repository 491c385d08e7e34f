"""Anharmonic LMG Hamiltonian in parity-resolved Dicke bases.

Conventions: ``N = 2j`` spin-1/2 particles, collective spin ``j = N/2``,
energies extensive (divide by ``N`` for the classical scale), hbar = 1.

    H = (2 gamma / N) (J^2 - Jx^2) + (1 - gamma) (Jz + N/2)
        - (alpha / N) (Jz + N/2) (Jz + N/2 + 1)

Jx^2 only couples m to m +/- 2, so inside a parity sector with basis
m = -j, -j+2, ... (even) or -j+1, -j+3, ... (odd) the matrix is tridiagonal.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ParameterError


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"

    @classmethod
    def coerce(cls, value: "Parity | str") -> "Parity":
        try:
            return cls(value.value if isinstance(value, Parity) else str(value).lower())
        except ValueError:
            raise ParameterError(f"parity must be 'even' or 'odd', got {value!r}") from None


@dataclass(frozen=True)
class ModelParams:
    """Model parameters. ``alpha = 0`` gives the ordinary LMG model."""

    N: int
    gamma: float
    alpha: float

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise ParameterError(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 2 or self.N % 2:
            raise ParameterError(f"N must be even and >= 2, got {self.N}")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (0.0 <= self.gamma <= 1.0):
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not (self.alpha >= 0.0) or not math.isfinite(self.alpha):
            raise ParameterError(f"alpha must be finite and >= 0, got {self.alpha}")

    @property
    def j(self) -> float:
        return self.N / 2

    def with_gamma(self, gamma: float) -> "ModelParams":
        return ModelParams(self.N, gamma, self.alpha)


@dataclass(frozen=True)
class SpinSector:
    j: float
    parity: Parity
    basis: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def N(self) -> int:
        return int(round(2 * self.j))


def build_sector(params: ModelParams | int, parity: Parity | str = Parity.EVEN) -> SpinSector:
    """Parity sector of the ``j = N/2`` multiplet.

    Parity is ``exp(i pi (j + Jz))``: the even sector keeps ``j + m`` even.
    """
    if isinstance(params, ModelParams):
        n = params.N
    else:
        if isinstance(params, bool) or int(params) != params or params < 2 or params % 2:
            raise ParameterError(f"N must be even and >= 2, got {params!r}")
        n = int(params)
    parity = Parity.coerce(parity)
    j = n / 2
    start = -j if parity is Parity.EVEN else -j + 1
    basis = np.arange(start, j + 0.5, 2.0)
    basis.setflags(write=False)
    return SpinSector(j=j, parity=parity, basis=basis)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix; ``offdiag[i]`` couples rows i, i+1."""

    diag: np.ndarray
    offdiag: np.ndarray
    params: ModelParams | None = None
    sector: SpinSector | None = None

    def __post_init__(self):
        d = np.array(self.diag, dtype=float)
        e = np.array(self.offdiag, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or len(e) != max(len(d) - 1, 0):
            raise ParameterError("offdiag must have length len(diag) - 1")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        d, e = (self.diag, self.offdiag) if v.ndim == 1 else (self.diag[:, None], self.offdiag[:, None])
        out = d * v
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
        return out

    def quadratic_form(self, v: np.ndarray) -> float:
        """``<v|H|v>`` for a (possibly complex) vector."""
        v = np.asarray(v)
        diag_part = np.sum(self.diag * np.abs(v) ** 2)
        cross = np.sum(self.offdiag * np.conj(v[:-1]) * v[1:])
        return float(diag_part + 2.0 * cross.real)

    def norm_bound(self) -> float:
        """Row-sum bound on the spectral norm."""
        if self.dim == 1:
            return float(abs(self.diag[0]))
        rows = np.abs(self.diag).copy()
        rows[:-1] += np.abs(self.offdiag)
        rows[1:] += np.abs(self.offdiag)
        return float(rows.max())


def _jx2_diagonal(j: float, m: np.ndarray) -> np.ndarray:
    return (j * (j + 1) - m**2) / 2.0


def _jx2_step2(j: float, m: np.ndarray) -> np.ndarray:
    # <m+2|Jx^2|m> = J+^2 / 4
    jj = j * (j + 1)
    return 0.25 * np.sqrt(np.clip((jj - m * (m + 1)) * (jj - (m + 1) * (m + 2)), 0.0, None))


def build_hamiltonian(params: ModelParams, sector: SpinSector | Parity | str = Parity.EVEN) -> TridiagonalOperator:
    if not isinstance(sector, SpinSector):
        sector = build_sector(params, sector)
    if sector.N != params.N:
        raise ParameterError(f"sector built for N={sector.N}, params have N={params.N}")
    N, g, a, j = params.N, params.gamma, params.alpha, params.j
    m = sector.basis
    shifted = m + N / 2  # Jz + N/2, an exact non-negative integer
    diag = (
        (2 * g / N) * (j * (j + 1) - _jx2_diagonal(j, m))
        + (1 - g) * shifted
        - (a / N) * shifted * (shifted + 1)
    )
    offdiag = -(2 * g / N) * _jx2_step2(j, m[:-1])
    return TridiagonalOperator(diag, offdiag, params=params, sector=sector)


# -- dense reference operators (small N only) --------------------------------

def spin_matrices(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Dense ``(Jx, Jy, Jz, m)`` in the full ``|j, m>`` basis, m ascending."""
    m = np.arange(-j, j + 0.5, 1.0)
    jp = np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1)), -1).astype(complex)
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag(m).astype(complex)
    return jx, jy, jz, m


def dense_hamiltonian(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Full ``(N+1) x (N+1)`` Hamiltonian by explicit operator products.

    Returns the matrix and the ascending ``m`` labels.
    """
    if params.N > 400:
        raise ParameterError("dense construction is limited to N <= 400")
    jx, jy, jz, m = spin_matrices(params.j)
    N, g, a = params.N, params.gamma, params.alpha
    eye = np.eye(len(m))
    j2 = jx @ jx + jy @ jy + jz @ jz
    shifted = jz + (N / 2) * eye
    h = (2 * g / N) * (j2 - jx @ jx) + (1 - g) * shifted - (a / N) * shifted @ (shifted + eye)
    return h, m


def dump_dense_csv(params: ModelParams, path: str | Path) -> Path:
    """Write the dense matrix (rows labelled by m) for inspection; N <= 40."""
    if params.N > 40:
        raise ParameterError("dense dump is limited to N <= 40")
    h, m = dense_hamiltonian(params)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m"] + [f"{x:g}" for x in m])
        for mi, row in zip(m, h.real):
            w.writerow([f"{mi:g}"] + [format(x, ".12g") for x in row])
    return path


# -- coherent states ----------------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    """Amplitudes over ``m_values``; ``sector`` is None for the full multiplet."""

    amplitudes: np.ndarray
    m_values: np.ndarray
    sector: SpinSector | None = None

    def __post_init__(self):
        if len(self.amplitudes) != len(self.m_values):
            raise ParameterError("amplitudes and m_values differ in length")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            raise ParameterError(f"state is not normalized (norm = {norm!r})")

    def restrict(self, parity: Parity | str) -> np.ndarray:
        """Amplitudes on the given parity sector (not renormalized)."""
        parity = Parity.coerce(parity)
        j = (self.m_values[-1] - self.m_values[0]) / 2
        even = np.isclose(np.mod(j + self.m_values, 2), 0)
        return self.amplitudes[even if parity is Parity.EVEN else ~even]


def xi_from_phase_point(p: float, q: float) -> complex:
    r2 = p * p + q * q
    if not r2 < 4.0:
        raise DomainError(f"(p, q) = ({p}, {q}) lies outside the open disk p^2 + q^2 < 4")
    return complex(q, p) / math.sqrt(4.0 - r2)


def coherent_state(j: float, p: float, q: float) -> StateVector:
    """SU(2) coherent state ``exp(xi J+) |j, -j> / (1 + |xi|^2)^j``.

    With this orientation ``<Jz>/j = (|xi|^2 - 1) / (|xi|^2 + 1)`` and the
    origin ``p = q = 0`` maps to ``|j, -j>``, the bottom of the unperturbed
    ladder ``Jz + N/2 = 0``.
    """
    two_j = int(round(2 * j))
    if two_j < 1 or abs(two_j - 2 * j) > 1e-12:
        raise ParameterError(f"j must be a positive half-integer, got {j!r}")
    xi = xi_from_phase_point(p, q)
    m = np.arange(-j, j + 0.5, 1.0)
    k = np.arange(two_j + 1)  # j + m
    if xi == 0:
        amps = np.zeros(two_j + 1, dtype=complex)
        amps[0] = 1.0
        return StateVector(amps, m)
    lgam = np.vectorize(math.lgamma)
    log_binom = lgam(two_j + 1.0) - lgam(k + 1.0) - lgam(two_j - k + 1.0)
    r = abs(xi)
    log_mod = k * math.log(r) + 0.5 * log_binom - j * math.log1p(r * r)
    amps = np.exp(log_mod - log_mod.max()) * np.exp(1j * k * np.angle(xi))
    amps /= np.linalg.norm(amps)
    return StateVector(amps, m)


def hamiltonian_expectation(params: ModelParams, state: StateVector) -> float:
    """``<state|H|state>`` summed over both parity blocks."""
    total = 0.0
    for parity in Parity:
        op = build_hamiltonian(params, parity)
        total += op.quadratic_form(state.restrict(parity))
    return total
