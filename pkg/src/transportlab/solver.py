"""Exact solvers for the finite transport problem.

The production path is successive shortest paths with node potentials on the
bipartite supply/demand network; +inf cost entries are simply absent edges.
Ties between augmenting paths are broken by lowest node index, so results are
deterministic functions of the input. A permutation-enumeration oracle for
small uniform square instances provides an independent check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import CostMatrix, DiscreteMeasure, TransportPlan, _cost_entries
from .errors import (
    DimensionMismatchError,
    InputValidationError,
    UnsupportedInstanceError,
    VerificationError,
)
from .extreal import INF

#: residual supply below this is treated as routed
_RES_EPS = 1e-15


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solver outcome: status is 'optimal', 'infeasible' or 'stalled'."""

    status: str
    value: float
    plan: TransportPlan | None
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Values of the capped problems min(c, n) over increasing cutoffs n."""

    cutoffs: tuple[float, ...]
    values: tuple[float, ...]


def _validate_instance(mu: DiscreteMeasure, nu: DiscreteMeasure, c: np.ndarray) -> None:
    if c.shape != (len(mu), len(nu)):
        raise DimensionMismatchError(
            f"cost shape {c.shape} does not match measures ({len(mu)}, {len(nu)})"
        )
    if (c == -INF).any():
        raise InputValidationError("solver requires cost entries > -inf")


def solve_min_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, cost) -> SolveResult:
    """Minimize sum(plan * c) over plans with marginals (mu, nu).

    Returns the optimal plan and value, or status 'infeasible' with value
    +inf when no plan avoids every +inf entry. Entries may be negative
    (shifted costs); -inf is rejected.
    """
    c = _cost_entries(cost)
    _validate_instance(mu, nu, c)
    n, m = c.shape
    supply = mu.weights.copy()
    demand = nu.weights.copy()
    flow = np.zeros((n, m))

    # Node potentials keep reduced arc costs nonnegative. Seeding the demand
    # side with column minima makes the initial reduced costs c - colmin >= 0
    # even when some entries are negative.
    pi_x = np.zeros(n)
    col_min = np.min(np.where(np.isfinite(c), c, INF), axis=0)
    pi_y = np.where(np.isfinite(col_min), np.minimum(col_min, 0.0), 0.0)

    nodes = n + m
    max_aug = 10 * (n * m + nodes) + 100
    iterations = 0
    while (supply > _RES_EPS).any():
        if iterations > max_aug:
            raise VerificationError("augmentation cap exceeded; solver failed to converge")
        dist = np.full(nodes, INF)
        parent = np.full(nodes, -1, dtype=np.int64)
        done = np.zeros(nodes, dtype=bool)
        dist[:n][supply > _RES_EPS] = 0.0
        sink = -1
        while True:
            cand = np.where(done, INF, dist)
            u = int(np.argmin(cand))
            du = float(cand[u])
            if du == INF:
                break
            done[u] = True
            if u >= n and demand[u - n] > 0:
                sink = u - n
                break
            if u < n:
                red = c[u, :] + (pi_x[u] - pi_y)
                nd = du + red
                upd = ~done[n:] & (nd < dist[n:])
                dist[n:][upd] = nd[upd]
                parent[n:][upd] = u
            else:
                j = u - n
                red = np.where(flow[:, j] > 0, (pi_y[j] - pi_x) - c[:, j], INF)
                nd = du + red
                upd = ~done[:n] & (nd < dist[:n])
                dist[:n][upd] = nd[upd]
                parent[:n][upd] = u
        if sink < 0:
            return SolveResult(status="infeasible", value=INF, plan=None,
                               iterations=iterations)
        d_t = dist[n + sink]
        # Walk the path back to its source, collecting arcs.
        path: list[tuple[int, int, bool]] = []  # (i, j, forward)
        node = n + sink
        while parent[node] >= 0:
            prev = int(parent[node])
            if node >= n:
                path.append((prev, node - n, True))
            else:
                path.append((node, prev - n, False))
            node = prev
        source = node
        delta = min(
            float(supply[source]),
            float(demand[sink]),
            min((float(flow[i, j]) for i, j, fwd in path if not fwd), default=INF),
        )
        for i, j, fwd in path:
            flow[i, j] = flow[i, j] + delta if fwd else flow[i, j] - delta
        supply[source] -= delta
        demand[sink] -= delta
        pi_x += np.minimum(dist[:n], d_t)
        pi_y += np.minimum(dist[n:], d_t)
        iterations += 1

    np.clip(flow, 0.0, None, out=flow)
    plan = TransportPlan(mass=flow, mu=mu, nu=nu)
    from .core import plan_cost

    return SolveResult(status="optimal", value=plan_cost(plan, c), plan=plan,
                       iterations=iterations)


def truncation_sweep(mu: DiscreteMeasure, nu: DiscreteMeasure, cost,
                     cutoffs) -> SweepResult:
    """Solve the capped problems min(c, n) for each cutoff n.

    Cutoffs must be strictly increasing and positive. Capped costs are
    finite, so every capped problem is feasible and the values are
    nondecreasing in n, rising toward the uncapped value.
    """
    c = _cost_entries(cost)
    cuts = [float(t) for t in cutoffs]
    if not cuts:
        raise InputValidationError("cutoffs must be nonempty")
    if any(t <= 0 for t in cuts):
        raise InputValidationError("cutoffs must be positive")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise InputValidationError("cutoffs must be strictly increasing")
    values = []
    for t in cuts:
        res = solve_min_cost(mu, nu, np.minimum(c, t))
        values.append(res.value)
    return SweepResult(cutoffs=tuple(cuts), values=tuple(values))


def brute_force_value(mu: DiscreteMeasure, nu: DiscreteMeasure, cost) -> float:
    """Exact optimum by enumerating permutation plans.

    Only supports square instances with both marginals uniform and n <= 8,
    where the optimum is attained at a permutation plan (the extreme points
    of the polytope are the scaled permutation matrices). Returns +inf when
    every permutation hits a +inf entry.
    """
    c = _cost_entries(cost)
    n, m = c.shape
    if c.shape != (len(mu), len(nu)):
        raise DimensionMismatchError("cost shape does not match measures")
    if n != m or n > 8:
        raise UnsupportedInstanceError(f"unsupported shape: need square n <= 8, got {n}x{m}")
    u = np.full(n, 1.0 / n)
    if not (np.allclose(mu.weights, u, atol=1e-12) and np.allclose(nu.weights, u, atol=1e-12)):
        raise UnsupportedInstanceError("unsupported shape: both marginals must be uniform")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    vals = c[np.arange(n)[None, :], perms]
    has_pinf = (vals == INF).any(axis=1)
    has_minf = (vals == -INF).any(axis=1)
    finite_sums = np.where(np.isfinite(vals), vals, 0.0).sum(axis=1) / n
    totals = np.where(has_pinf, INF, np.where(has_minf, -INF, finite_sums))
    return float(totals.min())
