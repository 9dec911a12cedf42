"""Distribution comparisons and per-spectrum diagnostics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import InputError
from .spectral import Spectrum, stieltjes


@dataclass(frozen=True)
class ComparisonReport:
    ks_distance: float
    sample_sizes: tuple
    mean_diff: float
    std_ratio: float
    threshold: float | None = None
    passed: bool | None = None
    label: str = ""

    def to_dict(self):
        d = asdict(self)
        d["sample_sizes"] = list(self.sample_sizes)
        return d


def _clean(a):
    a = np.asarray(a, dtype=float).ravel()
    a = a[np.isfinite(a)]
    if a.size == 0:
        raise InputError("sample is empty")
    return a


def ks_two_sample(a, b, threshold=None, label="") -> ComparisonReport:
    """Sup distance between the two empirical CDFs."""
    a, b = _clean(a), _clean(b)
    # only the statistic is used; the asymptotic p-value divides by zero at n = 1
    with np.errstate(divide="ignore"):
        d = float(stats.ks_2samp(a, b, method="asymp").statistic)
    sb = b.std(ddof=1) if b.size > 1 else math.nan
    ratio = a.std(ddof=1) / sb if a.size > 1 and sb > 0 else math.nan
    return ComparisonReport(
        ks_distance=d, sample_sizes=(a.size, b.size), mean_diff=float(a.mean() - b.mean()),
        std_ratio=float(ratio), threshold=threshold,
        passed=None if threshold is None else d <= threshold, label=label)


def ks_normal(z, threshold=None, label="") -> ComparisonReport:
    """KS distance of a standardized sample from N(0, 1)."""
    z = _clean(z)
    d = float(stats.kstest(z, "norm").statistic)
    return ComparisonReport(
        ks_distance=d, sample_sizes=(z.size,), mean_diff=float(z.mean()),
        std_ratio=float(z.std(ddof=1)) if z.size > 1 else math.nan, threshold=threshold,
        passed=None if threshold is None else d <= threshold, label=label)


BULK_QUANTILE = 0.95


@dataclass(frozen=True)
class RegularityReport:
    right_range: tuple
    left_range: tuple
    n_points: int
    n_out_of_domain: int
    c_h: float
    verdict: bool

    def to_dict(self):
        return asdict(self)


def regularity_check(spec: Spectrum, eta_star: float, window: float, c_h: float = 10.0,
                     n_e: int = 12, n_eta: int = 12, eta_max: float = 10.0) -> RegularityReport:
    """Ratios of Im m to the square-root profile around the smallest eigenvalue.

    Right of the edge the ratio is Im m / sqrt(|E - l| + eta), left of it
    Im m sqrt(|E - l| + eta) / eta.  Points with eta above the bulk width
    are counted but left out of the verdict.  The width runs from the
    smallest eigenvalue to the 95% quantile so that a few large heavy-tail
    eigenvalues do not stretch the domain.
    """
    lam0 = spec.smallest
    diam = float(np.quantile(spec.values, BULK_QUANTILE) - lam0)
    offsets = np.concatenate([[0.0], np.geomspace(eta_star, window, n_e)])
    right, left = [], []
    out = 0
    for side, store in ((1.0, right), (-1.0, left)):
        for d in offsets:
            e = lam0 + side * d
            lo = eta_star + (math.sqrt(eta_star * d) if side > 0 else 0.0)
            if lo > eta_max:
                continue
            for eta in np.geomspace(lo, eta_max, n_eta):
                if eta > diam:
                    out += 1
                    continue
                im = stieltjes(spec, complex(e, eta)).imag
                prof = math.sqrt(d + eta)
                store.append(im / prof if side > 0 else im * prof / eta)
    rr = (float(min(right)), float(max(right))) if right else (math.nan, math.nan)
    lr = (float(min(left)), float(max(left))) if left else (math.nan, math.nan)
    ok = all(1.0 / c_h <= v <= c_h for v in rr + lr)
    return RegularityReport(right_range=rr, left_range=lr, n_points=len(right) + len(left),
                            n_out_of_domain=out, c_h=c_h, verdict=bool(ok))


@dataclass(frozen=True)
class RigidityReport:
    fraction: float
    max_scaled: float
    threshold: float
    n: int

    def to_dict(self):
        return asdict(self)


def rigidity_check(records, N: int, exponent: float = -2.0 / 3.0 + 0.1) -> RigidityReport:
    """Share of replicates with |lambda_M - lambda_{-,t}| <= N^exponent."""
    rows = [r for r in records if np.isfinite(_get(r, "lambda_minus_t"))]
    if not rows:
        raise InputError("no usable records")
    dev = np.abs([_get(r, "lambda_M_Y") - _get(r, "lambda_minus_t") for r in rows])
    thr = float(N) ** exponent
    return RigidityReport(fraction=float(np.mean(dev <= thr)),
                          max_scaled=float(np.max(dev) * N ** (2.0 / 3.0)),
                          threshold=thr, n=len(rows))


def _get(r, key):
    return r[key] if isinstance(r, dict) else getattr(r, key)
