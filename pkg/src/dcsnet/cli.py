"""Command-line front end: ``dcsnet <subcommand> --config FILE --out DIR``."""
import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__, kernels
from .config import ConfigError, ExperimentConfig, emit_config, parse_config, with_overrides
from .experiments import (
    compute_robustness_sweep,
    compute_tradeoff_region,
    default_queried,
    resolve_mu2,
    run_end_to_end,
    simulate_trial,
    validate_statistics,
)
from .network import build_line_network, consensus_weights, form_clusters
from .recovery import epsilon_clustering, epsilon_consensus, epsilon_reference

OUT_ENV = "DCSNET_OUT"

TRADEOFF_COLUMNS = ("p", "L", "C_tot", "I_min", "D_cons")
ROBUSTNESS_COLUMNS = ("mode", "I", "p", "zeta_norm")
EMPIRICAL_COLUMNS = ROBUSTNESS_COLUMNS + ("ci_low", "ci_high")
VALIDATE_COLUMNS = ("quantity", "formula", "estimate", "rel_gap", "pass")
E2E_COLUMNS = ("trial", "mode", "p", "epsilon", "recon_error", "coverage", "converged")
SOLVE_COLUMNS = ("index", "x_true", "x_star")


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # shortest text that round-trips: "5" for 5.0, repr otherwise
        if value.is_integer() and abs(value) < 2**53:
            return str(int(value))
        return repr(value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _p_label(p):
    return f"{p:g}"


def run_tradeoff(cfg, out_dir, args):
    if cfg.mode == "clustering":
        raise ConfigError(
            "tradeoff needs consensus: with clustering, cost and delay are both fixed by the "
            "radius, so there is no cost-delay tradeoff to sweep"
        )
    mu2 = resolve_mu2(cfg, "bound")
    files, summary = [], {"mu2": mu2}
    for p in cfg.p:
        region = compute_tradeoff_region(cfg, cfg.nu, p, mu2)
        rows = [(p, pt.queried, pt.cost, pt.iterations, pt.delay) for pt in region.points]
        files.append(write_csv(os.path.join(out_dir, f"tradeoff_p{_p_label(p)}.csv"), TRADEOFF_COLUMNS, rows))
    return files, summary


def run_robustness(cfg, out_dir, args):
    mu2 = resolve_mu2(cfg, "bound")
    curve = compute_robustness_sweep(cfg, mu2=mu2)
    rows = [(pt.mode, pt.iterations, pt.p, pt.zeta_norm) for pt in curve.points]
    files = [write_csv(os.path.join(out_dir, "robustness.csv"), ROBUSTNESS_COLUMNS, rows)]
    if args.empirical:
        emp = compute_robustness_sweep(cfg, empirical=True, mu2=resolve_mu2(cfg, "numeric"))
        rows = [(pt.mode, pt.iterations, pt.p, pt.zeta_norm, pt.ci_low, pt.ci_high) for pt in emp.points]
        files.append(write_csv(os.path.join(out_dir, "robustness_empirical.csv"), EMPIRICAL_COLUMNS, rows))
    return files, {"mu2": mu2}


def run_validate(cfg, out_dir, args):
    rows = validate_statistics(cfg)
    table = [(r.quantity, r.formula, r.estimate, r.rel_gap, r.status) for r in rows]
    path = write_csv(os.path.join(out_dir, "validate.csv"), VALIDATE_COLUMNS, table)
    return [path], {r.quantity: r.status for r in rows}


def run_e2e(cfg, out_dir, args):
    modes = [cfg.mode] if cfg.mode else ["clustering", "consensus"]
    files, summary = [], {}
    for mode in modes:
        sweeps = [0] if mode == "clustering" else list(cfg.iterations)
        mu2 = resolve_mu2(cfg, "numeric") if mode == "consensus" else None
        for it in sweeps:
            rows = []
            for p in cfg.p:
                run = run_end_to_end(cfg, mode, p, it, mu2=mu2)
                summary[f"{mode}_I{it}_p{_p_label(p)}_coverage"] = run.coverage
                rows += [(r.trial, mode, p, r.epsilon, r.recon_error, r.coverage, r.converged) for r in run.records]
            name = "e2e_clustering.csv" if mode == "clustering" else f"e2e_consensus_I{it}.csv"
            files.append(write_csv(os.path.join(out_dir, name), E2E_COLUMNS, rows))
    return files, summary


def run_solve(cfg, out_dir, args):
    """Reconstruct trial 0 of the configured scenario and dump x next to x*."""
    mode = cfg.mode or "clustering"
    p = cfg.p[0]
    it = cfg.iterations[-1] if mode == "consensus" else 0
    topo = build_line_network(cfg.n, cfg.radius)
    weights = consensus_weights(topo, cfg.step_size) if mode == "consensus" else None
    eps_ref = epsilon_reference(cfg.n, cfg.m, cfg.sigma_n, cfg.lam)
    if mode == "clustering":
        eps = epsilon_clustering(eps_ref, p, cfg.n, cfg.radius, cfg.snr)
    else:
        eps, _ = epsilon_consensus(eps_ref, resolve_mu2(cfg, "numeric"), it, cfg.n,
                                   default_queried(cfg), p, cfg.snr)
    rec, sol = simulate_trial(cfg, mode, p, it, 0, eps, form_clusters(topo), weights, default_queried(cfg))
    rows = [(i, a, b) for i, (a, b) in enumerate(zip(rec.x_true, sol.x_star))]
    path = write_csv(os.path.join(out_dir, "solve.csv"), SOLVE_COLUMNS, rows)
    summary = {
        "mode": mode,
        "p": p,
        "epsilon": eps,
        "recon_error": rec.recon_error,
        "zeta_empirical": rec.recon_error / eps_ref,
        "solver_iterations": sol.iterations_used,
        "converged": bool(sol.converged),
        "coverage": bool(rec.coverage),
    }
    return [path], summary


SUBCOMMANDS = {
    "tradeoff": run_tradeoff,
    "robustness": run_robustness,
    "validate": run_validate,
    "e2e": run_e2e,
    "solve": run_solve,
}


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def make_run_dir(base, seed):
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    path = os.path.join(base, f"{stamp}_seed{seed}")
    suffix = 1
    while os.path.exists(path):
        path = os.path.join(base, f"{stamp}_seed{seed}_{suffix}")
        suffix += 1
    os.makedirs(path)
    return path


def run_subcommand(name, cfg, output_dir, args=None):
    """Run one subcommand into a fresh run directory and write its manifest.json."""
    if name not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {name!r}")
    args = args or argparse.Namespace(empirical=False)
    run_dir = make_run_dir(output_dir, cfg.seed)
    with open(os.path.join(run_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(emit_config(cfg))
    start = time.perf_counter()
    files, summary = SUBCOMMANDS[name](cfg, run_dir, args)
    duration = time.perf_counter() - start
    manifest = {
        "tool": "dcsnet",
        "version": __version__,
        "subcommand": name,
        "kernel_backend": kernels.BACKEND,
        "seed": cfg.seed,
        "config": emit_config(cfg),
        "wall_clock_seconds": duration,
        "outputs": [{"path": os.path.basename(f), "sha256": _sha256(f)} for f in files],
        "summary": {k: _json_safe(v) for k, v in summary.items()},
    }
    manifest_path = os.path.join(run_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    manifest["run_dir"] = run_dir
    return manifest


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dcsnet",
        description="Distributed compressed sensing on a line sensor network with packet erasures.",
    )
    parser.add_argument("--version", action="version", version=f"dcsnet {__version__}")
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    parser.add_argument("--config", help="key = value config file (defaults if omitted)")
    parser.add_argument("--out", help=f"base output directory (default: ${OUT_ENV} or ./runs)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int, help="trial count (statistical trials for 'validate')")
    parser.add_argument("--mu2", choices=("numeric", "bound"))
    parser.add_argument("--empirical", action="store_true", help="robustness: also run the full pipeline")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else ExperimentConfig()
        trials_key = "stat_trials" if args.subcommand == "validate" else "trials"
        cfg = with_overrides(cfg, seed=args.seed, mu2=args.mu2, **{trials_key: args.trials})
        out = args.out or os.environ.get(OUT_ENV) or "runs"
        manifest = run_subcommand(args.subcommand, cfg, out, args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"dcsnet: error: {exc}", file=sys.stderr)
        return 1
    print(manifest["run_dir"])
    for key, value in manifest["summary"].items():
        print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
