"""Spatially sparse signals on an equispaced line and their noisy observations."""
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

ZERO_THRESHOLD = 1e-9


@lru_cache(maxsize=16)
def dft_matrix(n):
    """Unitary DFT matrix with entries exp(-2j*pi*m*l/n)/sqrt(n). Read-only."""
    idx = np.arange(n)
    T = np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)
    T.setflags(write=False)
    return T


def dft_forward(x):
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("dft_forward needs a non-empty 1-D vector")
    return dft_matrix(x.size) @ x


def dft_inverse(theta):
    theta = np.asarray(theta)
    if theta.ndim != 1 or theta.size == 0:
        raise ValueError("dft_inverse needs a non-empty 1-D vector")
    return dft_matrix(theta.size).conj().T @ theta


def spectral_support_size(theta, threshold=ZERO_THRESHOLD):
    mag = np.abs(theta)
    if mag.max() == 0:
        return 0
    return int(np.count_nonzero(mag > threshold * mag.max()))


@dataclass(frozen=True)
class SpatialSignal:
    n: int
    k_sparsity: int
    samples: np.ndarray
    spectrum: np.ndarray
    energy: float


@dataclass(frozen=True)
class Observation:
    values: np.ndarray
    noise_variance: float
    snr: float


def _self_conjugate_bins(n):
    return [0, n // 2] if n % 2 == 0 and n > 1 else [0]


def _pair_bins(n):
    # bins m with a distinct partner n - m
    return list(range(1, (n + 1) // 2))


def _draw_support(n, k, rng):
    selfs = _self_conjugate_bins(n)
    pairs = _pair_bins(n)
    options, weights = [], []
    for s in range(len(selfs) + 1):
        if (k - s) % 2 or (k - s) // 2 > len(pairs) or k < s:
            continue
        options.append(s)
        weights.append(comb(len(selfs), s) * comb(len(pairs), (k - s) // 2))
    if not options:
        raise ValueError(f"sparsity {k} is not realizable with a real signal on {n} points")
    w = np.array(weights, dtype=float)
    s = options[rng.choice(len(options), p=w / w.sum())]
    chosen_self = list(rng.choice(selfs, size=s, replace=False)) if s else []
    npairs = (k - s) // 2
    chosen_pairs = list(rng.choice(pairs, size=npairs, replace=False)) if npairs else []
    return sorted(int(b) for b in chosen_self), sorted(int(b) for b in chosen_pairs)


def synthesize_sparse_signal(n, k, energy, rng, support=None):
    """Draw a real signal whose DFT has exactly ``k`` nonzero bins and total energy ``energy``.

    Supports are uniform over conjugate-symmetric index sets of size ``k``. Magnitudes are
    uniform on [0.5, 1.5]; paired bins get a uniform phase, self-conjugate bins a random sign.
    ``support`` forces a particular (conjugate-symmetric) set of bins.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n], got k={k}, n={n}")
    if energy <= 0:
        raise ValueError("energy must be positive")

    if support is None:
        self_bins, pair_bins = _draw_support(n, k, rng)
    else:
        bins = sorted(set(int(b) % n for b in support))
        if len(bins) != k:
            raise ValueError("support size must equal k")
        if any((n - b) % n not in bins for b in bins):
            raise ValueError("support must be conjugate-symmetric")
        self_bins = [b for b in bins if (n - b) % n == b]
        pair_bins = [b for b in bins if b < (n - b) % n]

    theta = np.zeros(n, dtype=complex)
    for b in self_bins:
        theta[b] = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    for b in pair_bins:
        val = rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform())
        theta[b] = val
        theta[n - b] = np.conj(val)
    theta *= np.sqrt(energy / np.sum(np.abs(theta) ** 2))

    x = dft_inverse(theta)
    samples = x.real.copy()
    samples *= np.sqrt(energy / np.sum(samples**2))
    return SpatialSignal(n=n, k_sparsity=k, samples=samples, spectrum=theta, energy=float(energy))


def observe(signal, noise_variance, rng):
    """Add i.i.d. zero-mean Gaussian sensing noise of variance ``noise_variance``."""
    if noise_variance < 0:
        raise ValueError("noise_variance must be non-negative")
    if noise_variance == 0:
        values = signal.samples.copy()
        snr = np.inf
    else:
        values = signal.samples + rng.normal(0.0, np.sqrt(noise_variance), size=signal.n)
        snr = signal.energy / (signal.n * noise_variance)
    return Observation(values=values, noise_variance=float(noise_variance), snr=float(snr))
