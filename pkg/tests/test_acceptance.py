"""End-to-end acceptance checks for the reference scenario (N=100, M=20, R=10, SNR=3).

Each test records one PASS/FAIL line; they are listed together in the terminal summary.
"""
import filecmp
import time
from math import cos, pi, sqrt

import numpy as np
import pytest

from dcsnet import cli
from dcsnet.compression import consensus_disagreement, consensus_run
from dcsnet.config import ExperimentConfig
from dcsnet.experiments import (
    compute_robustness_sweep,
    compute_tradeoff_region,
    run_end_to_end,
    validate_statistics,
)
from dcsnet.network import build_line_network, consensus_weights
from dcsnet.recovery import BpdnProblem, epsilon_clustering, epsilon_consensus, epsilon_reference, solve_bpdn
from dcsnet.signal import synthesize_sparse_signal

CFG = ExperimentConfig()
MU2_BOUND = cos(pi / 20)


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def stats_rows():
    rows, elapsed = _timed(lambda: validate_statistics(CFG))
    return {r.quantity: r for r in rows}, elapsed


# ---- 1. formula reproduction


def test_c1_clustering_ratio(acceptance):
    ratio, dt = _timed(lambda: epsilon_clustering(1.0, 0.2, 100, 10, 3.0))
    ok = abs(ratio - 1.18300) <= 1e-4 and dt < 1
    assert acceptance("1a clustering eps ratio", ok, f"{ratio:.6f} vs 1.18300+-1e-4, {dt:.3g}s")


def test_c1_consensus_ratio(acceptance):
    (eps, _), dt = _timed(lambda: epsilon_consensus(1.0, MU2_BOUND, 400, 100, 5, 0.2, 3.0))
    ok = abs(eps - 1.0691) <= 1e-3 and dt < 1
    assert acceptance("1b consensus eps ratio", ok, f"{eps:.6f} vs 1.0691+-1e-3, {dt:.3g}s")


def test_c1_tradeoff_point(acceptance):
    region, dt = _timed(lambda: compute_tradeoff_region(CFG, 1.1, 0.0, mu2=MU2_BOUND))
    pt = region.at(5)
    ok = pt.iterations == 362 and pt.delay == 7240 and dt < 1
    assert acceptance("1c tradeoff I_min/D_cons", ok, f"I_min={pt.iterations} D_cons={pt.delay}, {dt:.3g}s")


def test_c1_p0_reduces_to_reference(acceptance):
    ref = epsilon_reference(100, 20, 0.1, 2.0)
    clus = epsilon_clustering(ref, 0.0, 100, 10, 3.0)
    # at p=0 the consensus sampling term vanishes only when every node is queried (L=N)
    cons, _ = epsilon_consensus(ref, MU2_BOUND, 400, 100, 100, 0.0, 3.0)
    ok = clus == ref and cons == ref
    assert acceptance("1d p=0 gives eps_ref", ok, f"clustering={clus!r} consensus(L=N)={cons!r} ref={ref!r}")


# ---- 2. curve shapes


def test_c2_shapes(acceptance):
    def shapes():
        bounds = [compute_tradeoff_region(CFG, 1.1, p) for p in (0.0, 0.05, 0.2, 0.5)]
        dominance = all(
            b.iterations >= a.iterations
            for lo, hi in zip(bounds, bounds[1:])
            for a, b in zip(lo.points, hi.points)
        )
        curve = compute_robustness_sweep(CFG, p_grid=(0.01, 0.2))
        _, zc = curve.curve("clustering")
        _, z400 = curve.curve("consensus", 400)
        return dominance, zc - z400

    (dominance, diff), dt = _timed(shapes)
    ok = dominance and diff[0] < 0 < diff[1] and dt < 10
    assert acceptance("2 boundary dominance + crossover", ok,
                      f"dominance={dominance} diff(p=.01)={diff[0]:.4f} diff(p=.2)={diff[1]:.4f}, {dt:.3g}s")


# ---- 3. statistical validation


def _stat_check(acceptance, stats_rows, name, label):
    rows, dt = stats_rows
    row = rows[name]
    ok = row.status == "PASS" and dt < 60
    gap = "" if np.isnan(row.rel_gap) else f" gap={row.rel_gap:+.4f}"
    acceptance(label, ok, f"formula={row.formula:.6g} estimate={row.estimate:.6g}{gap}, {dt:.3g}s")
    return ok


def test_c3_eobs_mean(acceptance, stats_rows):
    assert _stat_check(acceptance, stats_rows, "e_obs_mean", "3a mean ||e_obs|| within 2%")


def test_c3_eobs_variance(acceptance, stats_rows):
    # Known shortfall: the chi_M variance ignores the randomness of ||n||; see the project notes.
    assert _stat_check(acceptance, stats_rows, "e_obs_var", "3b var ||e_obs|| within 10%")


def test_c3_sigma_u2(acceptance, stats_rows):
    assert _stat_check(acceptance, stats_rows, "sigma_u2", "3c clustering sigma_u^2 within 5%")


def test_c3_inverse_delivered(acceptance, stats_rows):
    rows, _ = stats_rows
    l5 = rows["inv_delivered_L5"]
    ok = _stat_check(acceptance, stats_rows, "inv_delivered_L20", "3d E[1/L~] approx within 2% at L=20")
    acceptance("3e E[1/L~] approx gap at L=5 (reported)", True, f"gap={l5.rel_gap:+.4f}")
    assert ok


# ---- 4. consensus invariants


def test_c4_consensus_invariants(acceptance):
    def check():
        weights = consensus_weights(build_line_network(100, 10))
        rng = np.random.default_rng(CFG.seed)
        W0 = rng.normal(size=(100, 20))
        W = consensus_run(weights, W0, 100)
        mean_err = float(np.max(np.abs(W.mean(0) - W0.mean(0)) / np.abs(W0.mean(0))))
        worst_rel, violations = 0.0, 0
        for _ in range(100):
            X0 = rng.normal(size=(100, 1)) * rng.exponential()
            it = int(rng.integers(0, 400))
            d = consensus_disagreement(weights, consensus_run(weights, X0, it), X0, it)
            rel = np.abs(d.l2_disagreement - d.eigen_expansion) / np.maximum(d.eigen_expansion, 1e-300)
            worst_rel = max(worst_rel, float(rel.max()))
            violations += int(np.sum(d.l2_disagreement > d.mu2_bound_value * (1 + 1e-12)))
        return mean_err, worst_rel, violations

    (mean_err, worst_rel, violations), dt = _timed(check)
    ok = mean_err <= 1e-10 and worst_rel <= 1e-8 and violations == 0 and dt < 5
    assert acceptance("4 consensus invariants", ok,
                      f"mean_err={mean_err:.2e} expansion_rel={worst_rel:.2e} violations={violations}, {dt:.3g}s")


# ---- 5. solver quality


def test_c5_solver_quality(acceptance):
    def check():
        n, m, k, tol = 64, 32, 4, 1e-8
        hits, infeasible, over = 0, 0, 0
        for t in range(200):
            rng = np.random.default_rng(np.random.SeedSequence(CFG.seed, spawn_key=(5, t)))
            sig = synthesize_sparse_signal(n, k, 1.0, rng)
            A = rng.normal(0, 1 / sqrt(m), size=(m, n))
            sol = solve_bpdn(BpdnProblem(A, A @ sig.samples, 1e-6), tolerance=tol)
            hits += np.linalg.norm(sol.x_star - sig.samples) / np.linalg.norm(sig.samples) < 1e-4
            infeasible += sol.feasibility_gap > tol
            over += sol.objective > np.abs(sig.spectrum).sum() + tol
        return hits / 200, infeasible, over

    (rate, infeasible, over), dt = _timed(check)
    ok = rate >= 0.95 and infeasible == 0 and over == 0 and dt < 300
    assert acceptance("5 solver quality", ok,
                      f"exact={rate:.3f} infeasible={infeasible} over_l1={over}, {dt:.3g}s")


# ---- 6. end-to-end coverage


E2E_CFG = ExperimentConfig(trials=500)


@pytest.mark.slow
@pytest.mark.parametrize("mode,p,iterations", [
    ("clustering", 0.0, 0),
    ("clustering", 0.2, 0),
    ("consensus", 0.0, 400),
    ("consensus", 0.2, 400),
])
def test_c6_coverage(acceptance, mode, p, iterations):
    run, dt = _timed(lambda: run_end_to_end(E2E_CFG, mode, p, iterations))
    ok = run.coverage >= 0.95 and dt < 600
    label = f"6 coverage {mode} p={p:g}" + (f" I={iterations}" if iterations else "")
    assert acceptance(label, ok, f"{run.coverage:.3f} (need >= 0.95, 500 trials), {dt:.3g}s")


# ---- 7. determinism


def test_c7_determinism(acceptance, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("trials = 20\nstat_trials = 10000\np = 0, 0.2\niterations = 400\n", encoding="utf-8")
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        for sub in ("tradeoff", "robustness", "validate", "e2e", "solve"):
            assert cli.main([sub, "--config", str(cfg), "--out", str(out), "--seed", "11"]) == 0
        runs.append(out)
    csv_a = sorted(p.relative_to(runs[0]).parts[-1] for p in runs[0].rglob("*.csv"))
    csv_b = sorted(p.relative_to(runs[1]).parts[-1] for p in runs[1].rglob("*.csv"))
    same = csv_a == csv_b and len(csv_a) > 0
    for name in csv_a if same else []:
        (fa,) = runs[0].rglob(name)
        (fb,) = runs[1].rglob(name)
        same = same and filecmp.cmp(fa, fb, shallow=False)
    assert acceptance("7 byte-identical CSVs", same, f"{len(csv_a)} files compared")
