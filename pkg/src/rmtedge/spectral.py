"""Dense spectral computations for covariance matrices S(H) = H H^T."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConditioningError, DegenerateError, InputError, PoleError


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues of S(H) with the shape of H."""

    values: np.ndarray
    M: int
    N: int

    @property
    def c_N(self) -> float:
        return self.M / self.N

    @property
    def smallest(self) -> float:
        return float(self.values[0])

    @classmethod
    def from_values(cls, values, M=None, N=None, c_N=None):
        v = np.sort(np.asarray(values, dtype=float))
        M = len(v) if M is None else M
        if N is None:
            if c_N is None:
                raise InputError("need N or c_N")
            N = M / c_N
        return cls(values=v, M=int(M), N=N)


def covariance_spectrum(h) -> Spectrum:
    """Eigenvalues of h h^T from the singular values of h.

    Working with singular values keeps relative accuracy for the small
    eigenvalues near the left edge.  Values below ``1e-10 * max(1, lambda_max)``
    in magnitude are clamped to 0.
    """
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise InputError("matrix has non-finite entries")
    M, N = h.shape
    if M > N:
        raise InputError(f"covariance_spectrum expects M <= N, got {M}x{N}")
    if M == 0:
        return Spectrum(values=np.zeros(0), M=0, N=N)
    sv = linalg.svdvals(h, check_finite=False) if N > 0 else np.zeros(M)
    vals = np.sort(sv**2)
    tol = 1e-10 * max(1.0, float(vals[-1]))
    vals[np.abs(vals) < tol] = 0.0
    return Spectrum(values=vals, M=M, N=N)


def stieltjes(spec: Spectrum, z: complex, k: int = 0) -> complex:
    """k-th derivative of m(z) = (1/M) sum 1/(lambda_i - z)."""
    lam = spec.values
    d = lam - z
    if np.imag(z) == 0:
        i = int(np.argmin(np.abs(d)))
        if abs(d[i]) < 1e-14:
            raise PoleError(f"z={z} coincides with eigenvalue {lam[i]!r}")
    val = math.factorial(k) * np.mean(d ** (-(k + 1)))
    return val if np.iscomplexobj(val) or np.imag(z) != 0 else float(val)


def stieltjes_derivatives(values, z, kmax):
    """[m, m', ..., m^(kmax)] at real or complex z in one pass."""
    d = np.asarray(values) - z
    inv = 1.0 / d
    out = []
    p = inv.copy()
    for k in range(kmax + 1):
        out.append(math.factorial(k) * p.mean())
        p = p * inv
    return out


def resolvent_entry(h, z: complex, i: int, j: int) -> complex:
    """Entry (i, j) of (h h^T - z)^(-1) from a linear solve."""
    h = np.asarray(h, dtype=float)
    M = h.shape[0]
    s = h @ h.T
    spec = np.linalg.eigvalsh(s)
    dist = float(np.min(np.abs(spec - z)))
    if dist < 1e-12 * max(1.0, float(np.max(np.abs(spec)))):
        raise ConditioningError(f"shift z={z} is {dist:.3g} from the spectrum")
    a = s - z * np.eye(M)
    e = np.zeros(M, dtype=complex)
    e[j] = 1.0
    col = np.linalg.solve(a, e)
    resid = np.linalg.norm(a @ col - e)
    if resid > 1e-10:
        raise ConditioningError(f"resolvent solve residual {resid:.3g}, distance to spectrum {dist:.3g}")
    return complex(col[i])


def resolvent_matrix(h, z: complex) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    M = h.shape[0]
    return np.linalg.solve(h @ h.T - z * np.eye(M), np.eye(M, dtype=complex))


@dataclass(frozen=True)
class MinorSpectra:
    col_removed: Spectrum
    row_removed: Spectrum
    d_r: np.ndarray
    d_c: np.ndarray


def heavy_index_sets(psi_mask):
    psi_mask = np.asarray(psi_mask, dtype=bool)
    return np.flatnonzero(psi_mask.any(axis=1)), np.flatnonzero(psi_mask.any(axis=0))


def minor_spectra(decomp) -> MinorSpectra:
    """Spectra of B with the heavy columns removed and with the heavy rows removed."""
    d_r, d_c = heavy_index_sets(decomp.psi_mask)
    M, N = decomp.y.shape
    if len(d_r) >= M:
        raise DegenerateError("every row contains a heavy entry")
    b = decomp.b_part
    col = covariance_spectrum(np.delete(b, d_c, axis=1)) if N - len(d_c) >= M else _gram_spectrum(np.delete(b, d_c, axis=1))
    row = covariance_spectrum(np.delete(b, d_r, axis=0))
    return MinorSpectra(col_removed=col, row_removed=row, d_r=d_r, d_c=d_c)


def resolvent_profile(decomp, z: complex) -> dict:
    """Largest |G_ij| of S(X) at z, split by whether i, j are heavy rows.

    Reported only; no bound is asserted.
    """
    g = resolvent_matrix(decomp.x, z)
    d_r, _ = heavy_index_sets(decomp.psi_mask)
    heavy = np.zeros(g.shape[0], dtype=bool)
    heavy[d_r] = True
    a = np.abs(g)
    out = {}
    for name, rows, cols in (("light_light", ~heavy, ~heavy), ("light_heavy", ~heavy, heavy),
                             ("heavy_heavy", heavy, heavy)):
        block = a[np.ix_(rows, cols)]
        out[name] = float(block.max()) if block.size else math.nan
    out["n_heavy_rows"] = int(heavy.sum())
    return out


def _gram_spectrum(h) -> Spectrum:
    # more rows than columns: S(h) has M - N structural zeros
    M, N = h.shape
    sv = linalg.svdvals(h) if N > 0 else np.zeros(0)
    vals = np.sort(np.concatenate([np.zeros(M - len(sv)), sv**2]))
    return Spectrum(values=vals, M=M, N=N)


def goe_matrix(M: int, seed=None) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal((M, M))
    # off-diagonal variance 1/M, diagonal variance 2/M
    return (g + g.T) / math.sqrt(2.0 * M)


def goe_smallest(M: int, seed=None) -> float:
    """Smallest eigenvalue of one GOE(M) draw with edges at -2, 2."""
    if M < 2:
        raise InputError("GOE needs M >= 2")
    return float(linalg.eigvalsh(goe_matrix(M, seed), subset_by_index=[0, 0], check_finite=False)[0])
