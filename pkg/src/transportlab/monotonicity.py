"""Cyclical monotonicity of plan supports, with machine-checkable certificates.

A support is monotone when rerouting mass around any cycle of its pairs
cannot lower the total cost: for pairs (x_1,y_1),...,(x_k,y_k) and x_{k+1} =
x_1 the chain sum

    sum_i  c(x_{i+1}, y_i) - c(x_i, y_i)

is nonnegative. Violations are negative cycles of the digraph on support
pairs with edge weight w(p -> q) = c(x_q, y_p) - c(x_p, y_p); a
:class:`CycleCertificate` records such a cycle and its total, recomputable
directly from the cost matrix.

Monotone supports characterize optimal plans on finite instances, which is
what :func:`solve_by_cycle_canceling` exploits: keep canceling the
most-negative mean-weight cycle until none is left.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import DiscreteMeasure, TransportPlan, _cost_entries, plan_cost
from .errors import InputValidationError, UnsupportedInstanceError
from .extreal import INF, ext_sub, ext_sub_array
from .solver import SolveResult, _RES_EPS

#: a cycle counts as violating only below this
CYCLE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SupportSet:
    """An ordered set of (xIndex, yIndex) pairs, usually a plan's support."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.pairs:
            raise InputValidationError("a support needs at least one pair")
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if len(set(pairs)) != len(pairs):
            raise InputValidationError("support pairs must be distinct")
        if any(i < 0 or j < 0 for i, j in pairs):
            raise InputValidationError("support indices must be nonnegative")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_plan(cls, plan: TransportPlan) -> "SupportSet":
        return cls(pairs=plan.support_pairs())

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class CycleCertificate:
    """A violating cycle: cyclically ordered pairs plus the chain sum."""

    pairs: tuple[tuple[int, int], ...]
    total_weight: float


def cycle_chain_sum(pairs, upper, lower=None) -> float:
    """Recompute a certificate's chain sum from cost sheets.

    For pairs (x_1,y_1),...,(x_k,y_k) returns
    sum_i upper(x_{i+1}, y_i) - lower(x_i, y_i) with x_{k+1} = x_1,
    using extended subtraction. ``lower`` defaults to ``upper``, which is the
    plain monotonicity chain.
    """
    u = _cost_entries(upper)
    low = u if lower is None else _cost_entries(lower)
    pts = [(int(i), int(j)) for i, j in pairs]
    total = 0.0
    for t, (x, y) in enumerate(pts):
        x_next = pts[(t + 1) % len(pts)][0]
        term = ext_sub(float(u[x_next, y]), float(low[x, y]))
        if term == INF:
            return INF
        if term == -INF:
            return -INF
        total += term
    return total


def pair_rerouting_weights(cost, pairs, lower=None) -> np.ndarray:
    """Edge weight matrix of the rerouting digraph on ``pairs``.

    W[p, q] = upper(x_q, y_p) - lower(x_p, y_p), extended subtraction.
    ``lower`` defaults to the cost itself (plain monotonicity).
    """
    u = _cost_entries(cost)
    low = u if lower is None else _cost_entries(lower)
    xs = np.array([p[0] for p in pairs], dtype=np.int64)
    ys = np.array([p[1] for p in pairs], dtype=np.int64)
    base = low[xs, ys]
    cross = u[np.ix_(xs, ys)].T        # cross[p, q] = upper(x_q, y_p)
    return ext_sub_array(cross, base[:, None])


def _has_negative_cycle(W: np.ndarray) -> bool:
    """Bellman-Ford from a virtual source with zero edges to every node."""
    k = W.shape[0]
    dist = np.zeros(k)
    for _ in range(k):
        nd = np.minimum(dist, (dist[:, None] + W).min(axis=0))
        if (nd >= dist - 1e-15).all():
            return False
        dist = nd
    nd = (dist[:, None] + W).min(axis=0)
    return bool((nd < dist - 1e-15).any())


def _shortest_negative_cycle(W: np.ndarray, tol: float):
    """Minimal-length cycle with total weight < -tol, or None.

    Walk weights with exactly L edges via min-plus powers; the first L whose
    diagonal dips below -tol yields a closed L-walk that must itself be a
    simple cycle (a shorter negative cycle would have fired earlier).
    """
    k = W.shape[0]
    D = W.copy()
    parents = [None, None]             # parents[L][i, j]: predecessor of j on the walk
    for L in range(2, k + 1):
        M = D[:, :, None] + W[None, :, :]
        parents.append(np.argmin(M, axis=1))
        D = np.min(M, axis=1)
        diag = np.diagonal(D)
        if diag.min() < -tol:
            i = int(np.argmin(diag))
            nodes = [i]
            cur = i
            for level in range(L, 1, -1):
                cur = int(parents[level][i, cur])
                nodes.append(cur)
            nodes.reverse()            # i -> nodes[1] -> ... -> i, L edges
            if len(set(nodes)) != len(nodes):
                raise AssertionError("extracted walk is not a simple cycle")
            return nodes, float(diag[i])
    return None


def check_cyclical_monotonicity(support: SupportSet, cost,
                                tol: float = CYCLE_TOL) -> CycleCertificate | None:
    """Return None when the support is monotone, else a violating cycle.

    The cost must be finite on every support pair. Cycles of length 1 have
    weight 0 by construction and never violate; the certificate returned is
    of minimal length among cycles with total weight < -tol.
    """
    c = _cost_entries(cost)
    for i, j in support.pairs:
        if i >= c.shape[0] or j >= c.shape[1]:
            raise InputValidationError(f"support pair ({i}, {j}) outside cost shape")
        if np.isinf(c[i, j]):
            raise InputValidationError(
                f"cost must be finite on support pairs; c({i}, {j}) = {c[i, j]}"
            )
    if len(support) == 1:
        return None
    W = pair_rerouting_weights(c, support.pairs)
    if not _has_negative_cycle(W):
        return None
    found = _shortest_negative_cycle(W, tol)
    if found is None:
        return None
    nodes, total = found
    pairs = tuple(support.pairs[t] for t in nodes)
    return CycleCertificate(pairs=pairs, total_weight=total)


def improve_plan(plan: TransportPlan, certificate: CycleCertificate,
                 cost) -> TransportPlan:
    """Reroute plan mass around a violating cycle.

    Moves delta = min cycle mass from each (x_i, y_i) to (x_{i+1}, y_i),
    which preserves both marginals and lowers the cost by exactly
    delta * |total weight|. The certificate's weight is recomputed from the
    cost matrix and must agree within 1e-9.
    """
    c = _cost_entries(cost)
    pts = [(int(i), int(j)) for i, j in certificate.pairs]
    if len(set(pts)) != len(pts):
        raise InputValidationError("certificate pairs must be distinct")
    recomputed = cycle_chain_sum(pts, c)
    if not abs(recomputed - certificate.total_weight) <= 1e-9:
        raise InputValidationError(
            f"certificate weight {certificate.total_weight} does not match "
            f"the cost matrix (recomputed {recomputed})"
        )
    masses = [float(plan.mass[x, y]) for x, y in pts]
    if min(masses) <= 0:
        x, y = pts[int(np.argmin(masses))]
        raise InputValidationError(f"certificate pair ({x}, {y}) carries no plan mass")
    delta = min(masses)
    mass = plan.mass.copy()
    for t, (x, y) in enumerate(pts):
        x_next = pts[(t + 1) % len(pts)][0]
        mass[x, y] -= delta
        mass[x_next, y] += delta
    np.clip(mass, 0.0, None, out=mass)
    return TransportPlan(mass=mass, mu=plan.mu, nu=plan.nu)


def _initial_finite_plan(mu: DiscreteMeasure, nu: DiscreteMeasure,
                         c: np.ndarray) -> np.ndarray | None:
    """Feasible plan on finite-cost cells, or None when none exists.

    Northwest-corner greedy over the finite cells first, then breadth-first
    augmenting paths to route whatever the greedy pass stranded.
    """
    n, m = c.shape
    finite = np.isfinite(c)
    a = mu.weights.copy()
    b = nu.weights.copy()
    F = np.zeros((n, m))
    for i in range(n):
        if a[i] <= 0:
            continue
        for j in range(m):
            if a[i] <= 0:
                break
            if not finite[i, j] or b[j] <= 0:
                continue
            d = min(a[i], b[j])
            F[i, j] += d
            a[i] -= d
            b[j] -= d
    while (a > _RES_EPS).any():
        s = int(np.argmax(a > _RES_EPS))
        # BFS over the residual graph: rows reach columns through finite
        # cells, columns reach rows back through positive flow.
        seen_x = np.zeros(n, dtype=bool)
        seen_y = np.zeros(m, dtype=bool)
        par_y = np.full(m, -1, dtype=np.int64)
        par_x = np.full(n, -1, dtype=np.int64)
        seen_x[s] = True
        queue = deque([("x", s)])
        target = -1
        while queue and target < 0:
            side, u = queue.popleft()
            if side == "x":
                for j in np.flatnonzero(finite[u, :] & ~seen_y):
                    seen_y[j] = True
                    par_y[j] = u
                    if b[j] > 0:
                        target = int(j)
                        break
                    queue.append(("y", int(j)))
            else:
                for i in np.flatnonzero((F[:, u] > 0) & ~seen_x):
                    seen_x[i] = True
                    par_x[i] = u
                    queue.append(("x", int(i)))
        if target < 0:
            return None
        path = []                      # (i, j, forward)
        j = target
        while True:
            i = int(par_y[j])
            path.append((i, j, True))
            if i == s:
                break
            j = int(par_x[i])
            path.append((i, j, False))
        delta = min(
            float(a[s]),
            float(b[target]),
            min((float(F[i, j]) for i, j, fwd in path if not fwd), default=INF),
        )
        for i, j, fwd in path:
            F[i, j] = F[i, j] + delta if fwd else F[i, j] - delta
        a[s] -= delta
        b[target] -= delta
    np.clip(F, 0.0, None, out=F)
    return F


def _min_mean_cycle(W: np.ndarray):
    """Most-negative mean-weight cycle via Karp's recurrence, or None.

    Assumes a zero diagonal (always true for rerouting digraphs on support
    pairs), so L-edge walks exist for every L and every endpoint.
    """
    k = W.shape[0]
    D = np.full((k + 1, k), INF)
    D[0] = 0.0
    P = np.zeros((k + 1, k), dtype=np.int64)
    for L in range(1, k + 1):
        M = D[L - 1][:, None] + W
        D[L] = M.min(axis=0)
        P[L] = M.argmin(axis=0)
    means = np.full(k, INF)
    for v in range(k):
        if not np.isfinite(D[k, v]):
            continue
        vals = [(D[k, v] - D[L, v]) / (k - L)
                for L in range(k) if np.isfinite(D[L, v])]
        if vals:
            means[v] = max(vals)
    v_star = int(np.argmin(means))
    if not np.isfinite(means[v_star]) or means[v_star] >= 0:
        return None
    walk = [v_star]
    cur = v_star
    for L in range(k, 0, -1):
        cur = int(P[L, cur])
        walk.append(cur)
    walk.reverse()                     # p_0 -> ... -> p_k
    best = None
    last_seen: dict[int, int] = {}
    for idx, node in enumerate(walk):
        if node in last_seen:
            cyc = walk[last_seen[node]:idx]
            total = float(sum(W[cyc[t], cyc[(t + 1) % len(cyc)]] for t in range(len(cyc))))
            mean = total / len(cyc)
            if best is None or mean < best[1]:
                best = (cyc, mean, total)
        last_seen[node] = idx
    if best is None or best[2] >= 0:
        return None
    return best[0], best[2]


def solve_by_cycle_canceling(mu: DiscreteMeasure, nu: DiscreteMeasure, cost,
                             max_iterations: int = 100_000,
                             tol: float = CYCLE_TOL) -> SolveResult:
    """Solve by repeated cycle canceling; pedagogical, not the fast path.

    Starts from a feasible plan on finite cells and cancels the
    most-negative mean-weight cycle until the support is monotone at ``tol``.
    Hitting the iteration cap returns status 'stalled' (callers should fall
    back to solve_min_cost); in-tolerance termination returns 'optimal'.
    """
    c = _cost_entries(cost)
    if c.shape != (len(mu), len(nu)):
        raise InputValidationError("cost shape does not match measures")
    if (c == -INF).any():
        raise InputValidationError("solver requires cost entries > -inf")
    F = _initial_finite_plan(mu, nu, c)
    if F is None:
        return SolveResult(status="infeasible", value=INF, plan=None)
    plan = TransportPlan(mass=F, mu=mu, nu=nu)
    for it in range(max_iterations):
        support = SupportSet.from_plan(plan)
        W = pair_rerouting_weights(c, support.pairs)
        found = _min_mean_cycle(W)
        if found is not None and found[1] < -1e-12:
            nodes, total = found
            cert = CycleCertificate(
                pairs=tuple(support.pairs[t] for t in nodes), total_weight=total
            )
            plan = improve_plan(plan, cert, c)
            continue
        cert = check_cyclical_monotonicity(support, c, tol=tol)
        if cert is None:
            return SolveResult(status="optimal", value=plan_cost(plan, c),
                               plan=plan, iterations=it)
        plan = improve_plan(plan, cert, c)
    return SolveResult(status="stalled", value=plan_cost(plan, c), plan=plan,
                       iterations=max_iterations)
