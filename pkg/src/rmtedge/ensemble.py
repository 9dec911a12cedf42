"""Seeded Monte-Carlo ensembles of the smallest eigenvalue and its edge prediction."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import DegenerateError, NumericError, RmtEdgeError, RunError
from .free_convolution import find_left_edge, solve_subordination, subordination_residuals
from .heavy_tail import build_theta, decompose, default_params, direct_params, is_good, sample_matrix
from .spectral import Spectrum, covariance_spectrum, goe_smallest, minor_spectra

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.10
MIN_GOOD_RATE = 0.99
# spawn-key prefix separating GOE reference draws from replicate seeds
GOE_KEY = 0xFFFFFFFF
INTERLACING_SLACK = 1e-9


@dataclass
class ReplicateRecord:
    index: int
    seed: int
    good_psi: bool
    t: float
    lambda_M_Y: float = math.nan
    lambda_M_X: float = math.nan
    zeta_minus: float = math.nan
    lambda_minus_t: float = math.nan
    gamma_N: float = math.nan
    phi_second: float = math.nan
    multiple_extrema: bool = False
    reconstruction_ok: bool = True
    interlacing_ok: bool | None = None
    herglotz_ok: bool | None = None
    fpe_residual: float = math.nan
    f_residual: float = math.nan
    f_zeta_residual: float = math.nan
    failed: bool = False
    error: str = ""
    spectrum: np.ndarray | None = field(default=None, repr=False)

    @property
    def M(self) -> int:
        return 0 if self.spectrum is None else len(self.spectrum)

    @property
    def edge_fluct(self) -> float:
        return self.lambda_minus_t

    def tw_stat(self, M: int) -> float:
        return self.gamma_N * M ** (2.0 / 3.0) * (self.lambda_M_Y - self.lambda_minus_t)


def replicate_seed(master_seed: int, index: int) -> int:
    """64-bit seed of replicate ``index``; depends only on its position."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def decomposition_params(cfg: ExperimentConfig, theta):
    if cfg.mode == "direct-t":
        return direct_params(theta, cfg.N, cfg.t_target, eps_b=cfg.eps_b)
    return default_params(cfg.alpha, eps_a=cfg.eps_a, eps_b=cfg.eps_b)


def replicate_matrices(cfg: ExperimentConfig, seed: int, arm: str | None = None):
    """(decomposition, X, matrix whose smallest eigenvalue is recorded)."""
    arm = arm or cfg.arm
    theta = build_theta(cfg.alpha, cfg.s0)
    rng = np.random.default_rng(seed)
    y = sample_matrix(theta, cfg.M, cfg.N, rng)
    dec = decompose(y, decomposition_params(cfg, theta), theta)
    x = np.zeros_like(y) if arm == "noise" else dec.x
    if arm == "heavy":
        target = y
    else:
        w = rng.standard_normal((cfg.M, cfg.N)) / math.sqrt(cfg.N)
        target = x + math.sqrt(dec.t) * w
    return dec, x, target


def interlacing_check(decomp) -> bool:
    """Both Cauchy interlacing bounds for S(X) against its heavy-free minors."""
    minors = minor_spectra(decomp)
    lam_x = covariance_spectrum(decomp.x).smallest
    lower = minors.col_removed.smallest
    upper = minors.row_removed.smallest
    scale = max(1.0, abs(lam_x))
    return bool(lower <= lam_x + INTERLACING_SLACK * scale and lam_x <= upper + INTERLACING_SLACK * scale)


def run_replicate(cfg: ExperimentConfig, index: int, arm: str | None = None) -> ReplicateRecord:
    arm = arm or cfg.arm
    seed = replicate_seed(cfg.master_seed, index)
    dec, x, target = replicate_matrices(cfg, seed, arm)
    good, _, _ = is_good(dec.psi_mask, cfg.alpha)
    rec = ReplicateRecord(index=index, seed=seed, good_psi=bool(good), t=dec.t)
    rec.reconstruction_ok = bool(np.array_equal(dec.a_part + dec.b_part + dec.c_part, dec.y))
    try:
        rec.interlacing_ok = interlacing_check(dec)
    except DegenerateError as e:
        log.info("replicate %d: interlacing skipped (%s)", index, e)
    spec_x = covariance_spectrum(x)
    rec.lambda_M_X = spec_x.smallest
    rec.lambda_M_Y = covariance_spectrum(target).smallest
    if cfg.save_spectra:
        rec.spectrum = spec_x.values
    try:
        edge = find_left_edge(spec_x, dec.t)
        rec.zeta_minus = edge.zeta_minus
        rec.lambda_minus_t = edge.lambda_minus_t
        rec.gamma_N = edge.gamma_N
        rec.phi_second = edge.phi_second
        rec.multiple_extrema = edge.multiple_extrema
        rec.f_residual, rec.f_zeta_residual = subordination_residuals(spec_x, dec.t, edge)
        st = solve_subordination(spec_x, dec.t, complex(edge.lambda_minus_t, dec.t**2))
        rec.fpe_residual = st.residual
        rec.herglotz_ok = st.m_t.imag > 0
    except NumericError as e:
        rec.failed = True
        rec.error = f"{type(e).__name__}: {e}"
    return rec


def _run_chunk(args):
    cfg, arm, indices = args
    return [run_replicate(cfg, i, arm) for i in indices]


def _dispatch(fn, cfg, arm, n, workers):
    buffer = [None] * n
    if workers <= 1 or n == 1:
        for i, rec in enumerate(fn((cfg, arm, range(n)))):
            buffer[i] = rec
        return buffer
    chunks = [list(range(i, n, workers * 4)) for i in range(min(n, workers * 4))]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for idx, out in zip(chunks, pool.map(fn, [(cfg, arm, c) for c in chunks])):
            for i, rec in zip(idx, out):
                buffer[i] = rec
    return buffer


def _run(cfg: ExperimentConfig, arm: str, workers=None):
    workers = cfg.workers if workers is None else workers
    records = _dispatch(_run_chunk, cfg, arm, cfg.replicates, workers)
    n_fail = sum(r.failed for r in records)
    if n_fail > MAX_FAILURE_RATE * len(records):
        errs = sorted({r.error for r in records if r.failed})[:3]
        raise RunError(f"{n_fail}/{len(records)} replicates failed: {'; '.join(errs)}")
    good_rate = sum(r.good_psi for r in records) / len(records)
    if good_rate < MIN_GOOD_RATE and len(records) >= 100:
        raise RunError(f"good-Psi rate {good_rate:.3f} < {MIN_GOOD_RATE}: sampling bug suspected")
    return records


def run_edge_ensemble(cfg: ExperimentConfig, workers=None) -> list[ReplicateRecord]:
    """Smallest eigenvalue of S(Y) against the edge of rho_t built from S(X)."""
    return _run(cfg, "heavy" if cfg.arm == "gdm" else cfg.arm, workers)


def run_gdm_ensemble(cfg: ExperimentConfig, workers=None) -> list[ReplicateRecord]:
    """Same as ``run_edge_ensemble`` with Y replaced by X + sqrt(t) W."""
    return _run(cfg, "noise" if cfg.arm == "noise" else "gdm", workers)


def run_configured(cfg: ExperimentConfig, workers=None) -> list[ReplicateRecord]:
    return _run(cfg, cfg.arm, workers)


def _goe_chunk(args):
    M, master, indices = args
    out = []
    for i in indices:
        ss = np.random.SeedSequence(master, spawn_key=(GOE_KEY, i))
        mu = goe_smallest(M, np.random.default_rng(ss))
        out.append(M ** (2.0 / 3.0) * (mu + 2.0))
    return out


def goe_reference(M: int, draws: int, master_seed: int = 0, workers: int = 1) -> np.ndarray:
    """Samples of M^(2/3) (mu_min + 2) for GOE(M)."""
    if draws < 1:
        raise RmtEdgeError("draws must be >= 1")
    if workers <= 1:
        return np.array(_goe_chunk((M, master_seed, range(draws))))
    buf = np.empty(draws)
    chunks = [list(range(i, draws, workers * 4)) for i in range(min(draws, workers * 4))]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for idx, out in zip(chunks, pool.map(_goe_chunk, [(M, master_seed, c) for c in chunks])):
            buf[idx] = out
    return buf


def spectrum_of(rec: ReplicateRecord, cfg: ExperimentConfig) -> Spectrum:
    if rec.spectrum is None:
        raise RmtEdgeError("record carries no spectrum; rerun with save_spectra")
    return Spectrum(values=rec.spectrum, M=cfg.M, N=cfg.N)
