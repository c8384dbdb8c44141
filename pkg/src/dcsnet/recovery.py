"""BPDN reconstruction of DFT-sparse signals and the constraint-radius (epsilon) rules."""
from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import kernels
from .signal import dft_matrix


@dataclass(frozen=True)
class BpdnProblem:
    sensing: np.ndarray
    target: np.ndarray
    epsilon: float

    def __post_init__(self):
        A = np.asarray(self.sensing)
        y = np.asarray(self.target)
        if A.ndim != 2 or y.shape != (A.shape[0],):
            raise ValueError(f"target of shape {y.shape} does not match sensing matrix {A.shape}")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")

    @property
    def operator(self):
        """A T^{-1} as a dense complex M x N matrix."""
        A = np.asarray(self.sensing, dtype=np.float64)
        return A @ dft_matrix(A.shape[1]).conj().T


@dataclass(frozen=True)
class BpdnSolution:
    theta_star: np.ndarray
    x_star: np.ndarray
    objective: float
    feasibility_gap: float
    iterations_used: int
    converged: bool
    imag_residue: float


def _project_ball(v, radius):
    nrm = np.linalg.norm(v)
    if nrm <= radius:
        return v
    return v * (radius / nrm)


def _pull_feasible(Phi, Phi_h, AAt_chol, theta, y, eps):
    """Minimum-norm correction moving the residual of ``theta`` onto the eps-ball."""
    resid = Phi @ theta - y
    if np.linalg.norm(resid) <= eps:
        return theta
    excess = resid - _project_ball(resid, eps)
    return theta - Phi_h @ cho_solve(AAt_chol, excess)


def _finish(problem, Phi, AAt_chol, theta, iterations, converged):
    """Pull ``theta`` onto the constraint set, then package it."""
    y = np.asarray(problem.target, dtype=np.float64)
    if AAt_chol is not None:
        theta = _pull_feasible(Phi, Phi.conj().T, AAt_chol, theta, y, problem.epsilon)
    nrm = np.linalg.norm(Phi @ theta - y)
    x = dft_matrix(theta.size).conj().T @ theta
    x_norm = np.linalg.norm(x)
    imag = float(np.linalg.norm(x.imag) / x_norm) if x_norm > 0 else 0.0
    return BpdnSolution(
        theta_star=theta,
        x_star=x.real.copy(),
        objective=float(np.abs(theta).sum()),
        feasibility_gap=float(nrm - problem.epsilon),
        iterations_used=iterations,
        converged=converged,
        imag_residue=imag,
    )


def _dual_value(Phi_h, y, eps, z):
    """Lower bound on the optimum from any z, after scaling it into ||Phi^H z||_inf <= 1."""
    peak = np.abs(Phi_h @ z).max()
    if peak > 1.0:
        z = z / peak
    return float(np.vdot(z, y).real - eps * np.linalg.norm(z))


def _support_candidate(Phi, y, eps, u, phase_sweeps=20):
    """Optimal point and matching dual point for the problem restricted to supp(u).

    With the phases s of u frozen, the l1 objective is the linear form Re<s, theta_S>, whose
    minimum over the ellipsoid ||Phi_S theta_S - y|| <= eps has a closed form. The dual point
    z = Phi_S H^{-1} s + b r_hat (r_hat the unit least-squares residual) reaches the same value,
    so a zero gap certifies optimality for the full problem once z is dual feasible.
    Returns (theta, z) or None if the restricted problem is degenerate or infeasible.
    """
    support = np.flatnonzero(u)
    m = Phi.shape[0]
    if support.size == 0 or support.size > m:
        return None
    Phi_s = Phi[:, support]
    H = Phi_s.conj().T @ Phi_s
    try:
        H_chol = cho_factor(H)
    except np.linalg.LinAlgError:
        return None
    theta_ls = cho_solve(H_chol, Phi_s.conj().T @ y)
    r_ls = Phi_s @ theta_ls - y
    r_norm = np.linalg.norm(r_ls)
    slack = eps * eps - r_norm * r_norm
    if slack < 0:
        return None
    radius = sqrt(slack)
    # refine the phases to a fixed point of s -> phase(theta_S(s))
    signs = u[support] / np.abs(u[support])
    for _ in range(phase_sweeps):
        h_inv_s = cho_solve(H_chol, signs)
        quad = sqrt(max(np.vdot(signs, h_inv_s).real, 0.0))
        theta_s = theta_ls - (radius / quad) * h_inv_s if quad > 0 else theta_ls
        mag = np.abs(theta_s)
        if np.any(mag == 0):
            break
        new_signs = theta_s / mag
        moved = np.abs(new_signs - signs).max()
        signs = new_signs
        if moved < 1e-14:
            break
    h_inv_s = cho_solve(H_chol, signs)
    quad = sqrt(max(np.vdot(signs, h_inv_s).real, 0.0))
    theta_s = theta_ls - (radius / quad) * h_inv_s if quad > 0 else theta_ls
    theta = np.zeros(Phi.shape[1], dtype=complex)
    theta[support] = theta_s
    z = Phi_s @ h_inv_s
    if radius > 0 and r_norm > 0:
        z = z - (r_norm * quad / radius) * (r_ls / r_norm)
    return theta, z


def solve_bpdn(problem, tolerance=1e-8, max_iterations=50_000, penalty=1.0, check_every=10,
               max_penalty_updates=30):
    """Minimize sum |theta_m| subject to ||A T^{-1} theta - y||_2 <= epsilon.

    ADMM on the split theta = u (l1 term, complex shrinkage) and A T^{-1} theta - y = v
    (ball constraint). The theta-step solves (I + Phi^H Phi) theta = b through the Woodbury
    identity with a Cholesky factor of I + A A^T, which does not depend on the penalty, so the
    penalty can be rebalanced cheaply (x2 or /2 when the residuals differ by more than 10x).
    Rebalancing stops after ``max_penalty_updates`` changes: a penalty that keeps flipping
    can trap the iterates in a cycle, while a fixed one carries the usual ADMM guarantee.

    Two exits count as converged: primal and dual residuals below ``tolerance`` times the
    problem scale, or a relative primal-dual gap below ``tolerance`` for a candidate
    re-solved on the current support (checked every ``check_every`` iterations).
    The returned point is always pulled onto the constraint ball.
    """
    A = np.asarray(problem.sensing, dtype=np.float64)
    y = np.asarray(problem.target, dtype=np.float64)
    eps = float(problem.epsilon)
    m, n = A.shape
    Phi = problem.operator
    Phi_h = Phi.conj().T

    y_norm = np.linalg.norm(y)
    if y_norm <= eps:
        # the origin is feasible and has the smallest possible l1 norm
        return _finish(problem, Phi, None, np.zeros(n, dtype=complex), 0, True)

    AAt = A @ A.T
    G_chol = cho_factor(np.eye(m) + AAt)
    AAt_chol = cho_factor(AAt)

    rho = float(penalty)
    updates_left = int(max_penalty_updates)
    u = np.zeros(n, dtype=complex)
    v = np.zeros(m, dtype=complex)
    d1 = np.zeros(n, dtype=complex)
    d2 = np.zeros(m, dtype=complex)
    it = 0
    for it in range(1, max_iterations + 1):
        g = y + v - d2
        c = cho_solve(G_chol, Phi @ (u - d1) + AAt @ g)  # equals Phi @ theta
        theta = (u - d1) + Phi_h @ (g - c)

        u_old, v_old = u, v
        u = kernels.soft_threshold(theta + d1, 1.0 / rho)
        v = _project_ball(c - y + d2, eps)

        r1 = theta - u
        r2 = c - y - v
        d1 = d1 + r1
        d2 = d2 + r2

        r_norm = sqrt(np.vdot(r1, r1).real + np.vdot(r2, r2).real)
        s_norm = rho * np.linalg.norm((u - u_old) + Phi_h @ (v - v_old))
        pri_tol = tolerance * max(np.linalg.norm(theta) + np.linalg.norm(c), y_norm)
        dual_tol = tolerance * max(rho * np.linalg.norm(d1 + Phi_h @ d2), y_norm)
        if r_norm <= pri_tol and s_norm <= dual_tol:
            return _finish(problem, Phi, AAt_chol, u, it, True)

        if it % check_every == 0:
            cand = _support_candidate(Phi, y, eps, u)
            if cand is not None:
                theta_c, z = cand
                primal = np.abs(theta_c).sum()
                if primal - _dual_value(Phi_h, y, eps, z) <= tolerance * primal:
                    return _finish(problem, Phi, AAt_chol, theta_c, it, True)
            # the ADMM multiplier of the ball constraint against the corrected iterate
            theta_f = _pull_feasible(Phi, Phi_h, AAt_chol, u, y, eps)
            primal = np.abs(theta_f).sum()
            if primal - _dual_value(Phi_h, y, eps, -rho * d2) <= tolerance * primal:
                return _finish(problem, Phi, AAt_chol, theta_f, it, True)

        if updates_left and r_norm > 10.0 * s_norm:
            rho *= 2.0
            d1 /= 2.0
            d2 /= 2.0
            updates_left -= 1
        elif updates_left and s_norm > 10.0 * r_norm:
            rho /= 2.0
            d1 *= 2.0
            d2 *= 2.0
            updates_left -= 1

    return _finish(problem, Phi, AAt_chol, u, it, False)


def epsilon_reference(n, m, sigma_n, lam):
    """Radius covering ||A n||_2 at mean + lam standard deviations (scaled chi_M moments)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    return sigma_n * sqrt(n) * ((1 - 1 / (4 * m)) + lam * sqrt(1 / (2 * m) - 1 / (8 * m * m)))


def erased_node_probability(p, clusters):
    """Probability that a given node's cluster is lost, given at least one cluster arrives."""
    if not 0 <= p < 1:
        raise ValueError("p must be in [0,1)")
    return 1 - (1 - p) / (1 - p**clusters)


def epsilon_clustering(eps_ref, p, n, radius, snr):
    p_h = erased_node_probability(p, ceil(n / (2 * radius + 1)))
    return eps_ref * sqrt(1 - p_h * (1 - snr))


def mean_delivered(l, p):
    """L(1-p)/(1-p^L): reciprocal of the approximate E[1/L~] for a zero-truncated binomial."""
    return l * (1 - p) / (1 - p**l)


def sampling_factor(n, l, p):
    """(N / Lbar) (N - Lbar) / (N - 1) with Lbar the mean number of delivered packets."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 1 <= l <= n:
        raise ValueError(f"queried count must be in [1, {n}]")
    if not 0 <= p < 1:
        raise ValueError("p must be in [0,1)")
    lbar = mean_delivered(l, p)
    return max(n / lbar * (n - lbar) / (n - 1), 0.0)


def epsilon_consensus(eps_ref, mu2, iterations, n, queried, p, snr):
    """Return (epsilon, Phi) for the consensus path after ``iterations`` steps."""
    if not 0 < mu2 < 1:
        raise ValueError("mu2 must lie in (0, 1)")
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    phi = sampling_factor(n, queried, p)
    return eps_ref * (1 + mu2**iterations * sqrt((1 + snr) * phi)), phi


def normalized_error_bound(epsilon, eps_ref):
    """Analysis-mode normalized error epsilon / eps_ref."""
    if eps_ref <= 0:
        raise ValueError("eps_ref must be positive")
    return epsilon / eps_ref


@dataclass(frozen=True)
class EpsilonPolicy:
    """Which epsilon rule to apply, with every parameter it needs.

    kind is "reference", "clustering" or "consensus"; unused parameters are ignored.
    """

    kind: str
    n: int
    m: int
    sigma_n: float
    lam: float = 2.0
    p: float = 0.0
    radius: int = 1
    snr: float = 1.0
    mu2: float = 0.5
    iterations: int = 0
    queried: int = 1

    def __post_init__(self):
        if self.kind not in ("reference", "clustering", "consensus"):
            raise ValueError(f"unknown epsilon rule {self.kind!r}")
        if not 0 <= self.p < 1:
            raise ValueError("p must be in [0,1)")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def reference(self):
        return epsilon_reference(self.n, self.m, self.sigma_n, self.lam)

    def epsilon(self):
        ref = self.reference
        if self.kind == "reference":
            return ref
        if self.kind == "clustering":
            return epsilon_clustering(ref, self.p, self.n, self.radius, self.snr)
        eps, _ = epsilon_consensus(ref, self.mu2, self.iterations, self.n, self.queried, self.p, self.snr)
        return eps
