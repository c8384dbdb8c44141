"""Line topology with disc-model links, clusters, consensus weights, cost and S-TDMA delay."""
from dataclasses import dataclass
from math import ceil, cos, pi

import numpy as np

# relative tolerance on the Fiedler value below which a graph counts as disconnected
_CONNECTED_TOL = 1e-10


@dataclass(frozen=True)
class NetworkTopology:
    n: int
    radius: int
    adjacency: np.ndarray
    laplacian: np.ndarray

    @property
    def degrees(self):
        return np.diag(self.laplacian).copy()


@dataclass(frozen=True)
class ClusterPlan:
    heads: tuple
    clusters: tuple

    def __len__(self):
        return len(self.heads)


@dataclass(frozen=True)
class ConsensusWeights:
    matrix: np.ndarray
    step_size: float
    mu2_numeric: float
    mu2_bound: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    radius: int

    @property
    def n(self):
        return self.matrix.shape[0]


def build_line_network(n, radius):
    """Nodes at 0..n-1; i and j are linked iff 0 < |i - j| <= radius."""
    if n < 2:
        raise ValueError("a network needs at least 2 nodes")
    if radius < 1 or int(radius) != radius:
        raise ValueError("radius must be a positive integer")
    radius = int(radius)
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    adjacency = (dist > 0) & (dist <= radius)
    adjacency.setflags(write=False)
    laplacian = np.diag(adjacency.sum(axis=1)) - adjacency.astype(np.int64)
    laplacian.setflags(write=False)
    return NetworkTopology(n=n, radius=radius, adjacency=adjacency, laplacian=laplacian)


def cluster_count(n, radius):
    return ceil(n / (2 * radius + 1))


def form_clusters(topology):
    """Contiguous clusters of width 2R+1 from the left; the last one may be shorter.

    Each head sits at the centre of its cluster (lower median for a short even-sized one).
    """
    n, width = topology.n, 2 * topology.radius + 1
    clusters, heads = [], []
    for start in range(0, n, width):
        members = tuple(range(start, min(start + width, n)))
        clusters.append(members)
        heads.append(members[(len(members) - 1) // 2])
    return ClusterPlan(heads=tuple(heads), clusters=tuple(clusters))


def stdma_delay(n, radius):
    """TDMA slots needed for one round of local broadcasts (max clusterhead degree)."""
    return 2 * radius if 2 * radius < n else n - 1


def sink_cost(l, unit_cost):
    if l < 1:
        raise ValueError("at least one node must transmit to the sink")
    if unit_cost <= 0:
        raise ValueError("unit_cost must be positive")
    return l * unit_cost


def mu2_closed_form(n, radius):
    return cos(pi * radius / (2 * n))


def consensus_weights(topology, step_size=None):
    """P = I - xi*L. Without ``step_size`` the fastest constant step 2/(lam_2 + lam_n) is used."""
    lap = topology.laplacian.astype(np.float64)
    lam = np.linalg.eigvalsh(lap)
    lam_max = lam[-1]
    if lam[1] <= _CONNECTED_TOL * max(lam_max, 1.0):
        raise ValueError("consensus needs a connected graph")
    if step_size is None:
        step_size = 2.0 / (lam[1] + lam[-1])
    elif not 0 < step_size < 2.0 / lam_max:
        raise ValueError(f"step_size must lie in (0, {2.0 / lam_max:.6g})")

    P = np.eye(topology.n) - step_size * lap
    mu, Q = np.linalg.eigh(P)
    order = np.argsort(mu)[::-1]
    mu, Q = mu[order], Q[:, order]
    for arr in (P, mu, Q):
        arr.setflags(write=False)
    return ConsensusWeights(
        matrix=P,
        step_size=float(step_size),
        mu2_numeric=float(mu[1]),
        mu2_bound=mu2_closed_form(topology.n, topology.radius),
        eigenvalues=mu,
        eigenvectors=Q,
        radius=topology.radius,
    )
