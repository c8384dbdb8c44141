import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcsnet.signal import (
    dft_forward,
    dft_inverse,
    dft_matrix,
    observe,
    spectral_support_size,
    synthesize_sparse_signal,
)


def test_dft_constant_is_dc_only():
    x = np.full(16, 2.5)
    theta = dft_forward(x)
    assert theta[0] == pytest.approx(2.5 * 4)
    np.testing.assert_allclose(theta[1:], 0, atol=1e-12)


def test_dft_matches_definition_entrywise():
    n = 7
    T = dft_matrix(n)
    m, l = 3, 5
    assert T[m, l] == pytest.approx(np.exp(-2j * np.pi * m * l / n) / np.sqrt(n))


def test_dft_empty_input_rejected():
    with pytest.raises(ValueError):
        dft_forward(np.array([]))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 64), elements=st.floats(-1e3, 1e3)))
def test_dft_is_unitary(x):
    assert np.linalg.norm(dft_forward(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12, abs=1e-12)


def test_dft_roundtrip_conjugate_symmetric(rng):
    n = 32
    theta = rng.normal(size=n) + 1j * rng.normal(size=n)
    theta[0] = theta[0].real
    theta[n // 2] = theta[n // 2].real
    theta[n // 2 + 1:] = np.conj(theta[1:n // 2][::-1])
    x = dft_inverse(theta)
    assert np.abs(x.imag).max() < 1e-10 * np.linalg.norm(x)
    np.testing.assert_allclose(dft_forward(x.real), theta, atol=1e-10)


def test_reference_scenario_signal(rng):
    sig = synthesize_sparse_signal(100, 4, 3.0, rng)
    assert np.sum(sig.samples**2) == pytest.approx(3.0, abs=1e-10)
    assert spectral_support_size(sig.spectrum) == 4
    assert sig.energy == 3.0


def test_dc_only_support_gives_constant():
    sig = synthesize_sparse_signal(8, 1, 2.0, np.random.default_rng(1), support=[0])
    np.testing.assert_allclose(np.abs(sig.samples), np.sqrt(2.0 / 8), rtol=1e-12)
    assert np.ptp(sig.samples) < 1e-12


def test_synthesis_is_deterministic():
    a = synthesize_sparse_signal(50, 5, 1.0, np.random.default_rng(9))
    b = synthesize_sparse_signal(50, 5, 1.0, np.random.default_rng(9))
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.spectrum, b.spectrum)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.data())
def test_synthesis_invariants(n, data):
    k = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    sig = synthesize_sparse_signal(n, k, 1.7, np.random.default_rng(seed))
    theta = sig.spectrum
    assert spectral_support_size(theta) == k
    idx = np.arange(1, n)
    np.testing.assert_allclose(theta[n - idx], np.conj(theta[idx]), atol=1e-12)
    assert np.sum(sig.samples**2) == pytest.approx(1.7, rel=1e-10)
    assert np.sum(np.abs(theta) ** 2) == pytest.approx(np.sum(sig.samples**2), rel=1e-10)
    x = dft_inverse(theta)
    assert np.abs(x.imag).max() < 1e-10 * np.linalg.norm(x)


@pytest.mark.parametrize("n,k", [(5, 0), (5, 6)])
def test_synthesis_rejects_bad_sparsity(n, k):
    with pytest.raises(ValueError):
        synthesize_sparse_signal(n, k, 1.0, np.random.default_rng(0))


def test_synthesis_rejects_asymmetric_forced_support():
    with pytest.raises(ValueError):
        synthesize_sparse_signal(8, 1, 1.0, np.random.default_rng(0), support=[1])


def test_observe_snr_matches_reference_scenario(rng):
    sig = synthesize_sparse_signal(100, 4, 3.0, rng)
    obs = observe(sig, 0.01, rng)
    assert obs.snr == pytest.approx(3.0)


def test_observe_noiseless(rng):
    sig = synthesize_sparse_signal(20, 2, 1.0, rng)
    obs = observe(sig, 0.0, rng)
    assert np.array_equal(obs.values, sig.samples)


def test_observe_negative_variance(rng):
    sig = synthesize_sparse_signal(20, 2, 1.0, rng)
    with pytest.raises(ValueError):
        observe(sig, -1.0, rng)


def test_observe_noise_moments(rng):
    sig = synthesize_sparse_signal(100, 4, 3.0, rng)
    diffs = np.concatenate([observe(sig, 0.01, rng).values - sig.samples for _ in range(10_000)])
    assert diffs.var() == pytest.approx(0.01, rel=0.05)
    assert abs(diffs.mean()) < 0.01 * 0.1
