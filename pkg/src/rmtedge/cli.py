"""Command-line entry point ``rmtedge``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .analysis import standardized_edge, summarize, usable
from .config import MODES, load_config
from .diagnostics import regularity_check, rigidity_check
from .ensemble import goe_reference, interlacing_check, replicate_matrices, run_configured
from .errors import ConfigError, NumericError, RmtEdgeError, RunError
from .export import export, read_records
from .free_convolution import find_left_edge
from .heavy_tail import build_theta
from .spectral import Spectrum
from .theory import TheoryInputs, gamma_limit, lambda_shift, sigma_alpha, tilde_sigma_critical

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4

# thresholds applied by ``ensemble --assert``
TW_KS = {"gdm": 0.10, "heavy": 0.12, "noise": 0.10}
RIGIDITY = {"gdm": 0.95, "heavy": 0.90, "noise": 0.95}
NORMAL_KS = 0.15
STD_BAND = (0.7, 1.3)
CRITICAL_ALPHA = 8.0 / 3.0


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def cmd_theory(a):
    c_const = a.c_const if a.c_const is not None else build_theta(a.alpha, a.s0).c_const
    inp = TheoryInputs(alpha=a.alpha, c_N=a.c, c_const=c_const, N=a.N, t=a.t)
    out = {"alpha": a.alpha, "c_N": a.c, "c_const": c_const, "N": a.N,
           "sigma_alpha": sigma_alpha(inp), "lambda_shift": lambda_shift(inp),
           "tilde_sigma": tilde_sigma_critical(a.c, c_const), "gamma_limit": gamma_limit(a.c)}
    _dump(out)
    return EXIT_OK


def _load_values(path):
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, ndmin=1)


def cmd_edge(a):
    vals = _load_values(a.spectrum)
    spec = Spectrum.from_values(vals, N=a.N)
    edge = find_left_edge(spec, a.t)
    _dump({"M": spec.M, "N": spec.N, **edge.__dict__})
    return EXIT_OK


def _assert_verdicts(cfg, summary, records):
    arm = cfg.arm
    verdicts = {}
    if arm != "heavy" or cfg.alpha > CRITICAL_ALPHA:
        verdicts["tw_ks"] = summary["reports"]["tw_vs_goe"].ks_distance <= TW_KS[arm]
        verdicts["rigidity"] = summary["rigidity"]["fraction"] >= RIGIDITY[arm]
    else:
        z, _ = standardized_edge(records, cfg)
        verdicts["normal_ks"] = summary["reports"]["edge_fluct_normal"].ks_distance <= NORMAL_KS
        ratio = float(np.std(z, ddof=1))
        verdicts["std_ratio"] = STD_BAND[0] <= ratio <= STD_BAND[1]
    return verdicts


def cmd_ensemble(a):
    cfg = load_config(a.config)
    cfg = cfg.replace(master_seed=a.seed, workers=a.workers, output_path=a.out, mode=a.mode)
    records = run_configured(cfg)
    goe = goe_reference(cfg.M, cfg.replicates, cfg.master_seed, cfg.workers)
    arm = cfg.arm
    summary = summarize(cfg, records, goe, tw_threshold=TW_KS[arm], normal_threshold=NORMAL_KS)
    spectra = {r.seed: r.spectrum for r in records if r.spectrum is not None}
    if a.assert_:
        summary["verdicts"] = _assert_verdicts(cfg, summary, records)
    doc = export(records, summary, cfg.output_path, cfg.M, spectra)
    _dump({k: doc[k] for k in ("reports", "n_records", "n_failed") if k in doc}
          | {"rigidity": doc.get("rigidity"), "verdicts": doc.get("verdicts")})
    if a.assert_ and not all(summary["verdicts"].values()):
        return EXIT_ASSERT
    return EXIT_OK


def cmd_check(a):
    with open(os.path.join(a.out, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    from .config import config_from_dict
    cfg = config_from_dict(summary["config"])
    recs = read_records(os.path.join(a.out, "records.csv"))
    out = {"rigidity": rigidity_check(usable(recs), cfg.N).to_dict()}
    npz = os.path.join(a.out, "spectra.npz")
    if os.path.exists(npz):
        data = np.load(npz)
        eta_star = cfg.N ** (-(a.eta_exponent))
        verdicts = [regularity_check(Spectrum(values=data[k], M=cfg.M, N=cfg.N), eta_star, a.window).verdict
                    for k in data.files]
        out["regularity_rate"] = float(np.mean(verdicts)) if verdicts else None
    inter = [interlacing_check(replicate_matrices(cfg, r["seed"])[0]) for r in recs[: a.limit]]
    out["interlacing_ok"] = all(inter)
    out["interlacing_checked"] = len(inter)
    _dump(out)
    return EXIT_OK


def cmd_goe_ref(a):
    sample = goe_reference(a.M, a.draws, a.seed or 0, a.workers or 1)
    os.makedirs(a.out or ".", exist_ok=True)
    path = os.path.join(a.out or ".", "goe_ref.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "tw_stat"])
        for i, v in enumerate(sample):
            w.writerow([i, format(float(v), ".17g")])
    _dump({"path": path, "mean": float(sample.mean()), "std": float(sample.std(ddof=1)) if a.draws > 1 else None})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmtedge", description="Smallest-eigenvalue edge statistics for heavy-tailed covariance matrices")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("theory", help="print sigma_alpha, lambda_shift, tilde sigma and the gamma limit")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--N", type=int, default=1000)
    s.add_argument("--t", type=float, default=0.05)
    s.add_argument("--s0", type=float, default=1.0)
    s.add_argument("--c-const", type=float, default=None, help="tail constant; default from the two-piece law")
    s.set_defaults(func=cmd_theory)

    s = sub.add_parser("edge", help="edge of the free convolution for one spectrum file")
    s.add_argument("--spectrum", required=True, help="eigenvalues, .npy or whitespace text")
    s.add_argument("--N", type=float, required=True)
    s.add_argument("--t", type=float, required=True)
    s.set_defaults(func=cmd_edge)

    s = sub.add_parser("ensemble", help="run a Monte-Carlo ensemble from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--mode", choices=MODES, default=None)
    s.add_argument("--assert", dest="assert_", action="store_true", help="exit 4 if a threshold fails")
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("check", help="rigidity, regularity and interlacing on a finished run")
    s.add_argument("--out", required=True)
    s.add_argument("--window", type=float, default=0.5)
    s.add_argument("--eta-exponent", type=float, default=0.5, help="eta_* = N^(-exponent)")
    s.add_argument("--limit", type=int, default=20, help="replicates regenerated for interlacing")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("goe-ref", help="sample M^(2/3)(mu_min + 2) for GOE(M)")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--draws", type=int, default=400)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_goe_ref)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, RunError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except RmtEdgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
