"""Sum-MSE power control as a sum of quadratic ratios.

Substituting the adaptive denoiser into each cluster's conditional MSE
leaves, up to a constant, a sum of ratios in q = sqrt(p):

    maximize  sum_m (q^T b_m)^2 / (q^T diag(a_m) q + c_m)
    subject to 0 <= q_k <= sqrt(P_k),

with a_m[k] = |cluster m|^2 * h_{m,k}^2 * sigma_k^2,
b_m[k] = h_{m,k} * sigma_k^3 on cluster m's support (0 elsewhere), and
c_m = |cluster m|^2 * noise_var / 2. The problem is non-convex, so the
solver runs projected gradient ascent with Armijo backtracking from
several starts and keeps the best iterate. A dense grid search is
provided as an oracle for small K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import rng_from_seed
from .sysmodel import cluster_members


@dataclass(frozen=True)
class RatioProblem:
    """Data of the sum-of-ratios program in the q = sqrt(p) domain."""

    a_diag: np.ndarray  # (M, K) non-negative
    b: np.ndarray       # (M, K), row m supported on cluster m
    c: np.ndarray       # (M,) non-negative
    bounds: np.ndarray  # (K,) positive, upper box bounds on q

    def __post_init__(self):
        if (self.a_diag < 0).any():
            raise ValueError("ratio denominators need non-negative quadratic terms")
        if (self.c < 0).any():
            raise ValueError("ratio denominators need non-negative constants")
        if (self.bounds <= 0).any():
            raise ValueError("bounds must be positive")


@dataclass(frozen=True)
class AscentResult:
    q: np.ndarray
    objective: float
    converged: bool
    iterations: int


def assemble_ratio_problem(
    gains: np.ndarray,
    sigmas: np.ndarray,
    noise_var: float,
    cluster_of: np.ndarray,
    max_power: np.ndarray,
) -> RatioProblem:
    """Build the ratio program from realized gains and gradient stds."""
    gains = np.asarray(gains, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    max_power = np.asarray(max_power, dtype=float)
    M, K = gains.shape
    members = cluster_members(cluster_of, M)
    a_diag = np.empty((M, K))
    b = np.zeros((M, K))
    c = np.empty(M)
    for m, idx in enumerate(members):
        if idx.size == 0:
            raise ValueError(f"empty cluster {m}")
        size = idx.size
        a_diag[m] = size**2 * gains[m] ** 2 * sigmas**2
        b[m, idx] = gains[m, idx] * sigmas[idx] ** 3
        c[m] = size**2 * noise_var / 2.0
    return RatioProblem(a_diag=a_diag, b=b, c=c, bounds=np.sqrt(max_power))


def objective(prob: RatioProblem, q: np.ndarray) -> float:
    """Sum over clusters of (q^T b_m)^2 / (q^T diag(a_m) q + c_m)."""
    q = np.asarray(q, dtype=float)
    num = (prob.b @ q) ** 2
    den = prob.a_diag @ (q**2) + prob.c
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(terms.sum())


def objective_gradient(prob: RatioProblem, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    t = prob.b @ q
    den = prob.a_diag @ (q**2) + prob.c
    safe = den > 0
    r = np.zeros_like(t)
    r[safe] = t[safe] / den[safe]
    # d/dq [t^2/den] = 2 r b - 2 r^2 (a .* q)
    return 2.0 * (r @ prob.b) - 2.0 * ((r**2) @ prob.a_diag) * q


def solve_projected_ascent(
    prob: RatioProblem,
    max_iters: int = 300,
    restarts: int = 8,
    tol: float = 1e-9,
    armijo: float = 1e-4,
    backtrack: float = 0.5,
    seed: int = 0,
) -> AscentResult:
    """Multi-start projected gradient ascent over the power box.

    Starts from the all-bounds corner plus uniform-random feasible
    points. Steps are backtracked until the Armijo increase condition
    holds, so the objective never decreases along accepted iterates.
    A start is declared converged when the projected gradient norm
    drops below tol * (1 + |objective|); if no start converges the
    best iterate is still returned with converged=False.
    """
    rng = rng_from_seed(seed)
    starts = [prob.bounds.copy()]
    for _ in range(max(0, restarts - 1)):
        starts.append(rng.random(prob.bounds.shape[0]) * prob.bounds)

    best_q, best_f = starts[0], -np.inf
    best_converged = False
    total_iters = 0
    for q0 in starts:
        q = np.clip(q0, 0.0, prob.bounds)
        f = objective(prob, q)
        step = 1.0
        converged = False
        for _ in range(max_iters):
            total_iters += 1
            g = objective_gradient(prob, q)
            pg = np.clip(q + g, 0.0, prob.bounds) - q
            if np.linalg.norm(pg) <= tol * (1.0 + abs(f)):
                converged = True
                break
            accepted = False
            s = step
            for _ in range(60):
                cand = np.clip(q + s * g, 0.0, prob.bounds)
                move = cand - q
                fc = objective(prob, cand)
                if fc >= f + armijo * float(g @ move):
                    q, f = cand, fc
                    step = s * 2.0
                    accepted = True
                    break
                s *= backtrack
            if not accepted:
                converged = True  # no ascent direction at float precision
                break
        if f > best_f:
            best_q, best_f = q, f
            best_converged = converged
    return AscentResult(
        q=best_q, objective=best_f, converged=best_converged, iterations=total_iters
    )


def brute_force_oracle(prob: RatioProblem, grid_points: int = 60) -> AscentResult:
    """Exhaustive box-grid search; only viable for K <= 4.

    Evaluates the objective on a uniform grid (endpoints included) of
    grid_points values per device and returns the best grid point.
    """
    K = prob.bounds.shape[0]
    if K > 4:
        raise ValueError(f"grid search over {K} devices is too large (limit 4)")
    if grid_points < 2:
        raise ValueError("need at least 2 grid points per dimension")
    axes = [np.linspace(0.0, b, grid_points) for b in prob.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    qs = np.stack([g.reshape(-1) for g in mesh], axis=1)  # (grid_points**K, K)
    num = (qs @ prob.b.T) ** 2
    den = (qs**2) @ prob.a_diag.T + prob.c[None, :]
    vals = np.divide(num, den, out=np.zeros_like(num), where=den > 0).sum(axis=1)
    idx = int(np.argmax(vals))
    return AscentResult(
        q=qs[idx].copy(), objective=float(vals[idx]), converged=True, iterations=qs.shape[0]
    )
