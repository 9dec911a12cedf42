"""Ensemble summaries built only from record fields and the config."""
from __future__ import annotations

import math

import numpy as np

from .diagnostics import ks_normal, ks_two_sample, rigidity_check
from .ensemble import decomposition_params
from .heavy_tail import build_theta
from .theory import TheoryInputs, lambda_shift, sigma_alpha, theory_constants


def _field(records, key):
    return np.array([r[key] if isinstance(r, dict) else getattr(r, key) for r in records], dtype=float)


def usable(records):
    """Records that enter distributional comparisons: good Psi, edge solved."""
    out = []
    for r in records:
        get = r.get if isinstance(r, dict) else lambda k, r=r: getattr(r, k)
        if get("good_psi") and not (get("failed") if not isinstance(r, dict) else False) \
                and math.isfinite(get("lambda_minus_t")):
            out.append(r)
    return out


def tw_stats(records, M, center="edge", lam_shift=None):
    recs = usable(records)
    ly, g = _field(recs, "lambda_M_Y"), _field(recs, "gamma_N")
    ref = lam_shift if center == "shift" else _field(recs, "lambda_minus_t")
    return g * M ** (2.0 / 3.0) * (ly - ref)


def theory_inputs(cfg, t) -> TheoryInputs:
    theta = build_theta(cfg.alpha, cfg.s0)
    return TheoryInputs(alpha=cfg.alpha, c_N=cfg.c, c_const=theta.c_const, N=cfg.N, t=t)


def standardized_edge(records, cfg):
    """N^(alpha/4) (lambda_{-,t} - sample mean) / sigma_alpha, and sigma_alpha."""
    recs = usable(records)
    lam = _field(recs, "lambda_minus_t")
    t = float(np.median(_field(recs, "t")))
    sa = sigma_alpha(theory_inputs(cfg, t))
    return (lam - lam.mean()) * cfg.N ** (cfg.alpha / 4.0) / sa, sa


def audit(records) -> dict:
    def frac(key):
        vals = [getattr(r, key) for r in records if getattr(r, key) is not None]
        return float(np.mean(vals)) if vals else None

    ok = [r for r in records if not r.failed]
    return {
        "reconstruction_ok": frac("reconstruction_ok"),
        "interlacing_ok": frac("interlacing_ok"),
        "interlacing_skipped": sum(r.interlacing_ok is None for r in records),
        "herglotz_ok": frac("herglotz_ok"),
        "good_psi_rate": float(np.mean([r.good_psi for r in records])) if records else None,
        "max_fpe_residual": max((r.fpe_residual for r in ok), default=None),
        "max_f_residual": max((abs(r.f_residual) for r in ok), default=None),
        "max_f_zeta_residual": max((abs(r.f_zeta_residual) for r in ok), default=None),
        "phi_second_negative": all(r.phi_second < 0 for r in ok),
        "multiple_extrema": sum(r.multiple_extrema for r in ok),
    }


def summarize(cfg, records, goe=None, tw_threshold=None, normal_threshold=None) -> dict:
    recs = usable(records)
    t = float(np.median(_field(recs, "t"))) if recs else float("nan")
    inp = theory_inputs(cfg, t if 0 < t < 1 else 0.5)
    theory = theory_constants(inp)
    reports = {}
    if recs and goe is not None:
        reports["tw_vs_goe"] = ks_two_sample(tw_stats(recs, cfg.M), goe, tw_threshold, "centered at lambda_{-,t}")
        reports["tw_shift_vs_goe"] = ks_two_sample(
            tw_stats(recs, cfg.M, "shift", lambda_shift(inp)), goe, None, "centered at lambda_shift")
    if len(recs) > 1:
        z, _ = standardized_edge(recs, cfg)
        reports["edge_fluct_normal"] = ks_normal(z, normal_threshold, "N^(alpha/4)(lambda_{-,t} - mean)/sigma_alpha")
    out = {
        "config": cfg.to_dict(),
        "decomposition": decomposition_params(cfg, build_theta(cfg.alpha, cfg.s0)).to_dict(),
        "theory": theory,
        "reports": reports,
        "n_records": len(records) - sum(r.failed for r in records),
        "n_failed": sum(r.failed for r in records),
        "failures": [f"{r.index}: {r.error}" for r in records if r.failed],
        "audit": audit(records),
    }
    if recs:
        out["rigidity"] = rigidity_check(recs, cfg.N).to_dict()
    return out
