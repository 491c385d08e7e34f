"""Full eigendecomposition of real symmetric tridiagonal operators.

Two independent routes are provided:

* ``method="ql"``: implicit-shift QL with Wilkinson shifts, written here.
  Pure Python/NumPy, fine for a few hundred rows.
* ``method="lapack"`` (default): LAPACK's tridiagonal driver through SciPy,
  used for production sizes.

:func:`bisect_eigenvalues` is a Sturm-sequence bisection oracle that shares
no code with either route.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import NumericalError, ParameterError
from .spinmodel import ModelParams, Parity, SpinSector, TridiagonalOperator, build_hamiltonian

MAX_SWEEPS = 50
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    params: ModelParams | None = None
    sector: SpinSector | None = None

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def vector(self, n: int) -> np.ndarray:
        if self.eigenvectors is None:
            raise ParameterError("spectrum was computed without eigenvectors")
        return self.eigenvectors[:, n]


def _tql(diag: np.ndarray, offdiag: np.ndarray, want_vectors: bool):
    n = len(diag)
    d = [float(x) for x in diag]
    e = [float(x) for x in offdiag] + [0.0]
    # rows of zt are eigenvector components; rotations act on row pairs
    zt = np.eye(n) if want_vectors else None
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= _EPS * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            if it == MAX_SWEEPS:
                raise NumericalError(f"QL iteration did not converge for eigenvalue {l}", index=l)
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if zt is not None:
                    upper = zt[i + 1].copy()
                    zt[i + 1] = s * zt[i] + c * upper
                    zt[i] = c * zt[i] - s * upper
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    w = np.array(d)
    order = np.argsort(w, kind="stable")
    return w[order], (zt.T[:, order] if zt is not None else None)


def eigh_tridiagonal(op: TridiagonalOperator, want_vectors: bool = False, method: str = "lapack") -> Spectrum:
    """Complete spectrum of ``op``, eigenvalues ascending.

    Raises NumericalError (carrying the failing index) when the QL route
    exceeds ``MAX_SWEEPS`` iterations on one eigenvalue.
    """
    if op.dim == 0:
        raise ParameterError("empty operator")
    if method == "ql":
        w, v = _tql(op.diag, op.offdiag, want_vectors)
    elif method == "lapack":
        if op.dim == 1:
            w, v = op.diag.copy(), np.ones((1, 1))
        else:
            try:
                res = scipy.linalg.eigh_tridiagonal(op.diag, op.offdiag, eigvals_only=not want_vectors)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"LAPACK tridiagonal solver failed: {exc}") from exc
            w, v = (res, None) if not want_vectors else res
        if not want_vectors:
            v = None
    else:
        raise ParameterError(f"unknown method {method!r}")
    w = np.asarray(w, dtype=float)
    w.setflags(write=False)
    if v is not None:
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
    return Spectrum(w, v, params=op.params, sector=op.sector)


def solve(params: ModelParams, parity: Parity | str = Parity.EVEN, want_vectors: bool = False,
          method: str = "lapack") -> Spectrum:
    """Build the sector Hamiltonian for ``params`` and diagonalize it."""
    return eigh_tridiagonal(build_hamiltonian(params, parity), want_vectors, method)


def excitation_energies(spec: Spectrum) -> np.ndarray:
    """Rescaled excitation energies ``(E_n - E_0) / N``; the first is exactly 0."""
    if spec.params is None:
        raise ParameterError("spectrum carries no model parameters (N unknown)")
    return (spec.eigenvalues - spec.eigenvalues[0]) / spec.params.N


def mean_level_spacing(spec: Spectrum) -> float:
    eps = excitation_energies(spec)
    return float(eps[-1] / (len(eps) - 1))


def sturm_count(diag, offdiag, x: float) -> int:
    """Number of eigenvalues strictly below ``x``."""
    count = 0
    q = 1.0
    for i, di in enumerate(diag):
        q = di - x - (offdiag[i - 1] ** 2 / q if i else 0.0)
        if q == 0.0:
            q = -_EPS * (abs(di) + 1.0)
        if q < 0:
            count += 1
    return count


def bisect_eigenvalues(diag, offdiag, tol: float = 1e-14) -> np.ndarray:
    """Every eigenvalue by bisection on the Sturm count (brute-force oracle)."""
    diag = [float(x) for x in diag]
    offdiag = [float(x) for x in offdiag]
    n = len(diag)
    radius = [abs(offdiag[i - 1]) if i else 0.0 for i in range(n)]
    for i in range(n - 1):
        radius[i] += abs(offdiag[i])
    lo0 = min(d - r for d, r in zip(diag, radius)) - 1e-12
    hi0 = max(d + r for d, r in zip(diag, radius)) + 1e-12
    out = []
    for k in range(n):
        lo, hi = lo0, hi0
        while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if sturm_count(diag, offdiag, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def check_spectrum(spec: Spectrum, op: TridiagonalOperator) -> dict[str, float]:
    """Residual, orthonormality and trace diagnostics for a solved operator."""
    report = {
        "trace_rel_error": abs(spec.eigenvalues.sum() - op.diag.sum()) / max(1.0, abs(op.diag).sum()),
        "sorted": float(np.all(np.diff(spec.eigenvalues) >= 0)),
    }
    if spec.eigenvectors is not None:
        v = spec.eigenvectors
        resid = op.matvec(v) - v * spec.eigenvalues
        report["max_residual_rel"] = float(np.linalg.norm(resid, axis=0).max() / max(op.norm_bound(), 1e-300))
        report["orthonormality_error"] = float(np.abs(v.T @ v - np.eye(spec.dim)).max())
    return report


def write_spectrum_csv(spec: Spectrum, path: str | Path) -> Path:
    eps = excitation_energies(spec)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "E_n", "epsilon_n"])
        for n, (en, epsn) in enumerate(zip(spec.eigenvalues, eps)):
            w.writerow([n, format(en, ".12g"), format(epsn, ".12g")])
    return path
