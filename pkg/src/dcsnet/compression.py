"""Gaussian projections and the two sink-bound compression paths through an erasure channel."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class MeasurementEnsemble:
    matrix: np.ndarray
    m: int
    n: int


@dataclass(frozen=True)
class ErasurePattern:
    sent: tuple
    delivered: tuple
    erasure_prob: float

    @property
    def erased(self):
        got = set(self.delivered)
        return tuple(k for k in self.sent if k not in got)


@dataclass(frozen=True)
class CompressionOutcome:
    vector: np.ndarray
    mode: str
    erasures: ErasurePattern
    iterations: int = 0
    queried: tuple = field(default=())


def sample_ensemble(m, n, rng, allow_noncompressive=False):
    """M x N matrix with i.i.d. N(0, 1/M) entries.

    M > N/2 is rejected unless ``allow_noncompressive`` is set; M > N always is.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if m > n:
        raise ValueError(f"m={m} exceeds n={n}")
    if 2 * m > n and not allow_noncompressive:
        raise ValueError(f"m={m} > n/2 leaves the compressive regime; pass allow_noncompressive=True")
    A = rng.normal(0.0, 1.0 / np.sqrt(m), size=(m, n))
    return MeasurementEnsemble(matrix=A, m=m, n=n)


def local_projections(ensemble, observation):
    """Stack of per-node contributions w_k = a_k z_k, shape (n, m); rows sum to A z."""
    z = np.asarray(getattr(observation, "values", observation), dtype=np.float64)
    if z.shape != (ensemble.n,):
        raise ValueError(f"observation has shape {z.shape}, expected ({ensemble.n},)")
    return ensemble.matrix.T * z[:, None]


def erase_packets(senders, p, rng):
    """Erase each sender independently with probability p, redrawing if nothing gets through."""
    senders = tuple(int(s) for s in senders)
    if not senders:
        raise ValueError("no senders")
    if not 0 <= p < 1:
        raise ValueError("p must be in [0,1)")
    if p == 0:
        return ErasurePattern(sent=senders, delivered=senders, erasure_prob=0.0)
    while True:
        keep = rng.random(len(senders)) >= p
        if keep.any():
            break
    delivered = tuple(s for s, ok in zip(senders, keep) if ok)
    return ErasurePattern(sent=senders, delivered=delivered, erasure_prob=float(p))


def cluster_aggregates(plan, projections):
    """Partial sums y_C for every cluster, shape (len(plan), m)."""
    return np.stack([projections[list(c)].sum(axis=0) for c in plan.clusters])


def cluster_compress(plan, projections, erasures):
    """Sum of the delivered clusterheads' aggregates."""
    if tuple(erasures.sent) != tuple(plan.heads):
        raise ValueError("erasure pattern must be drawn over the clusterheads")
    if not erasures.delivered:
        raise ValueError("no clusterhead packet was delivered")
    head_pos = {h: i for i, h in enumerate(plan.heads)}
    agg = cluster_aggregates(plan, projections)
    vector = agg[[head_pos[h] for h in erasures.delivered]].sum(axis=0)
    return CompressionOutcome(vector=vector, mode="clustering", erasures=erasures)


def consensus_run(weights, initial, iterations):
    """W(I) = P^I W(0) by repeated application of P (never forming the power).

    ``initial`` is (n, m) or a batch (b, n, m).
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    initial = np.asarray(initial, dtype=np.float64)
    if initial.shape[-2] != weights.n:
        raise ValueError("initial stack does not match the network size")
    return kernels.line_consensus(initial, weights.radius, weights.step_size, iterations)


def choose_queried(n, l, rng):
    """L distinct node indices, uniform without replacement."""
    if not 1 <= l <= n:
        raise ValueError(f"queried count must be in [1, {n}]")
    return tuple(sorted(int(k) for k in rng.choice(n, size=l, replace=False)))


def consensus_sink_estimate(W, erasures, iterations=0):
    """N times the average of the delivered nodes' consensus states."""
    if not erasures.sent:
        raise ValueError("no queried nodes")
    if not erasures.delivered:
        raise ValueError("no queried packet was delivered")
    n = W.shape[0]
    vector = n * W[list(erasures.delivered)].mean(axis=0)
    return CompressionOutcome(
        vector=vector,
        mode="consensus",
        erasures=erasures,
        iterations=int(iterations),
        queried=tuple(erasures.sent),
    )


@dataclass(frozen=True)
class Disagreement:
    l2_disagreement: np.ndarray
    eigen_expansion: np.ndarray
    mu2_bound_value: np.ndarray


def consensus_disagreement(weights, W_final, W_initial, iterations):
    """Per-column squared disagreement after ``iterations`` steps, three ways.

    Direct ||w(I) - mean*1||^2, the eigen-expansion sum_{k>=2} mu_k^{2I} alpha_k^2 of the
    initial data, and the bound mu_2^{2I} ||w(0) - mean*1||^2.
    """
    W_final = np.asarray(W_final, dtype=np.float64).reshape(weights.n, -1)
    W_initial = np.asarray(W_initial, dtype=np.float64).reshape(weights.n, -1)
    direct = ((W_final - W_final.mean(axis=0)) ** 2).sum(axis=0)
    alpha = weights.eigenvectors.T @ W_initial
    mu = weights.eigenvalues
    expansion = ((mu[1:, None] ** (2 * iterations)) * alpha[1:] ** 2).sum(axis=0)
    initial = ((W_initial - W_initial.mean(axis=0)) ** 2).sum(axis=0)
    bound = weights.mu2_numeric ** (2 * iterations) * initial
    return Disagreement(l2_disagreement=direct, eigen_expansion=expansion, mu2_bound_value=bound)
