"""NumPy implementations of the hot loops, used when the compiled module is unavailable."""
import numpy as np


def line_consensus(W, radius, xi, iterations):
    W = np.array(W, dtype=np.float64, copy=True)
    n = W.shape[1]
    k = np.arange(n)
    lo = np.maximum(k - radius, 0)
    hi = np.minimum(k + radius, n - 1)
    deg = (hi - lo).astype(np.float64)[None, :, None]
    zero = np.zeros((W.shape[0], 1, W.shape[2]))
    for _ in range(iterations):
        csum = np.concatenate([zero, np.cumsum(W, axis=1)], axis=1)
        window = csum[:, hi + 1, :] - csum[:, lo, :]
        W = W - xi * ((deg + 1.0) * W - window)
    return W


def soft_threshold(z, kappa):
    mag = np.abs(z)
    scale = np.zeros_like(mag)
    keep = mag > kappa
    scale[keep] = 1.0 - kappa / mag[keep]
    return z * scale
