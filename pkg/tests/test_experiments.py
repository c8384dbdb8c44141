from math import comb, cos, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsnet.config import ExperimentConfig
from dcsnet.experiments import (
    analysis_zeta,
    compute_robustness_sweep,
    compute_tradeoff_region,
    inverse_delivered_exact,
    minimum_iterations,
    run_end_to_end,
    simulate_trial,
    trial_rng,
    truncated_binomial_pmf,
)
from dcsnet.recovery import mean_delivered, sampling_factor

CFG = ExperimentConfig()


def test_tradeoff_reference_point():
    region = compute_tradeoff_region(CFG, 1.1, 0.0)
    pt = region.at(5)
    assert pt.iterations == 362 and pt.delay == 7240 and pt.cost == 5
    assert region.mu2 == pytest.approx(cos(pi / 20))
    assert len(region.points) == 100
    assert region.at(100).iterations == 0


def test_tradeoff_minimality():
    mu2 = cos(pi / 20)
    for l in (1, 5, 37, 99):
        phi = sampling_factor(100, l, 0.2)
        it = minimum_iterations(phi, 3.0, 1.1, mu2)
        assert 1 + mu2**it * sqrt(4 * phi) <= 1.1
        assert it == 0 or 1 + mu2 ** (it - 1) * sqrt(4 * phi) > 1.1


def test_tradeoff_rejects_nu():
    with pytest.raises(ValueError):
        compute_tradeoff_region(CFG, 1.0, 0.0)


def test_tradeoff_dominance():
    bounds = [compute_tradeoff_region(CFG, 1.1, p) for p in (0, 0.05, 0.2, 0.5)]
    for lo, hi in zip(bounds, bounds[1:]):
        for a, b in zip(lo.points, hi.points):
            assert b.iterations >= a.iterations


def test_iterations_decrease_with_more_queries():
    its = [pt.iterations for pt in compute_tradeoff_region(CFG, 1.1, 0.2).points]
    assert all(b <= a for a, b in zip(its, its[1:]))


def test_robustness_crossover():
    curve = compute_robustness_sweep(CFG)
    p, zc = curve.curve("clustering")
    _, z400 = curve.curve("consensus", 400)
    diff = zc - z400
    assert diff[np.isclose(p, 0.01)][0] < 0
    assert diff[np.isclose(p, 0.2)][0] > 0
    assert zc[0] == pytest.approx(1.0)


def test_analysis_zeta_p0_is_one():
    assert analysis_zeta(CFG, "clustering", 0.0) == 1.0
    assert analysis_zeta(CFG, "consensus", 0.0, 400, mu2=0.9, queried=100) == 1.0


def test_truncated_pmf_and_inverse():
    pmf = truncated_binomial_pmf(5, 0.2)
    assert pmf.sum() == pytest.approx(1.0)
    direct = sum(comb(5, k) * 0.8**k * 0.2 ** (5 - k) / k for k in range(1, 6)) / (1 - 0.2**5)
    assert inverse_delivered_exact(5, 0.2) == pytest.approx(direct)
    assert inverse_delivered_exact(20, 0.2) == pytest.approx(0.063346, abs=1e-6)
    gap20 = abs(1 / mean_delivered(20, 0.2) - inverse_delivered_exact(20, 0.2)) / inverse_delivered_exact(20, 0.2)
    assert gap20 < 0.02


def test_trial_rng_independent_and_reproducible():
    a = trial_rng(3, 0).random(4)
    assert np.array_equal(a, trial_rng(3, 0).random(4))
    assert not np.array_equal(a, trial_rng(3, 1).random(4))
    assert not np.array_equal(a, trial_rng(4, 0).random(4))


def test_e2e_small_run_deterministic():
    cfg = ExperimentConfig(trials=5)
    r1 = run_end_to_end(cfg, "consensus", 0.2, 400)
    r2 = run_end_to_end(cfg, "consensus", 0.2, 400)
    assert [r.recon_error for r in r1.records] == [r.recon_error for r in r2.records]
    assert all(r.converged for r in r1.records)


def test_e2e_noise_free_perfect_delivery_has_zero_perturbation():
    cfg = ExperimentConfig(trials=3, noise_variance=0.0)
    run = run_end_to_end(cfg, "clustering", 0.0, solve=False, epsilon=1e-9)
    assert all(r.perturbation < 1e-12 for r in run.records)


def test_e2e_unknown_mode():
    with pytest.raises(ValueError):
        run_end_to_end(CFG, "gossip", 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 0.9), st.integers(1, 100))
def test_sampling_factor_nonnegative(p, l):
    assert sampling_factor(100, l, p) >= 0
