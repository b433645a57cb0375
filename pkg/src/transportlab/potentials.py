"""Constructing potentials between two cost sheets.

Given an upper sheet U with entries in (-inf, +inf] and a lower sheet L with
entries in [-inf, +inf), we look for potentials with

    L(x, y)  <=  phi(x) + psi(y)  <=  U(x, y)      for all (x, y).

Existence is governed by a chain condition: for every cycle
x_1, ..., x_k, x_1 of source points and every choice of witnesses y_i,

    sum_i  U(x_{i+1}, y_i) - L(x_i, y_i)  >=  0.

Equivalently, the digraph on X with edge weight
w(x -> x') = min_y (U(x', y) - L(x, y)) has no negative cycle; note the
length-1 cycles w(x -> x) >= 0 are real constraints here. When the condition
holds, shortest-path distances from a virtual source with zero-weight edges
into every node solve the difference constraints

    phi(x') <= phi(x) + w(x -> x'),

giving finite phi <= 0, and psi(y) = min_x U(x, y) - phi(x) completes the
pair. Both bounds are re-verified numerically before anything is returned.

Setting U = c and L = c on a plan's support (-inf elsewhere) specializes the
machinery to dual potentials that are tight exactly on the support, which is
how optimal plans hand out their certificates of optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    FEASIBILITY_TOL,
    SUPPORT_EQUALITY_TOL,
    CostMatrix,
    FeasibilityVerdict,
    PotentialPair,
    TransportPlan,
    _cost_entries,
    check_feasible_potentials,
)
from .errors import (
    DimensionMismatchError,
    InputValidationError,
    NonMonotoneSupportError,
    SandwichConditionError,
    VerificationError,
)
from .extreal import INF, ext_sub_array
from .monotonicity import (
    CYCLE_TOL,
    CycleCertificate,
    SupportSet,
    _has_negative_cycle,
    _shortest_negative_cycle,
)


@dataclass(frozen=True, eq=False)
class SandwichInput:
    """Two cost sheets: upper in (-inf, +inf], lower in [-inf, +inf)."""

    upper: CostMatrix
    lower: CostMatrix

    def __post_init__(self):
        u, low = self.upper.entries, self.lower.entries
        if u.shape != low.shape:
            raise DimensionMismatchError(
                f"sheet shapes differ: {u.shape} vs {low.shape}"
            )
        if (u == -INF).any():
            i, j = (int(t) for t in np.argwhere(u == -INF)[0])
            raise InputValidationError(f"upper sheet has -inf at ({i}, {j})")
        if (low == INF).any():
            i, j = (int(t) for t in np.argwhere(low == INF)[0])
            raise InputValidationError(f"lower sheet has +inf at ({i}, {j})")


@dataclass(frozen=True, eq=False)
class RectangleCertificate:
    """A 2x2 witness that a matrix is not a sum phi(x) + psi(y).

    residual = d(x, y) + d(x2, y2) - d(x, y2) - d(x2, y), nonzero.
    """

    x: int
    y: int
    x2: int
    y2: int
    residual: float


def _chain_graph(s: SandwichInput) -> tuple[np.ndarray, np.ndarray]:
    """Edge weights and their witness columns for the X-node digraph.

    W[x, x'] = min over y of U(x', y) - L(x, y); AY[x, x'] is an argmin y.
    W stays > -inf because the sheet domains exclude the -inf outcomes.
    """
    u, low = s.upper.entries, s.lower.entries
    n, m = u.shape
    cube = ext_sub_array(
        np.broadcast_to(u[None, :, :], (n, n, m)),
        np.broadcast_to(low[:, None, :], (n, n, m)),
    )
    W = cube.min(axis=2)
    AY = cube.argmin(axis=2)
    return W, AY


def _negative_cycle_from(W: np.ndarray, AY: np.ndarray,
                         tol: float) -> CycleCertificate | None:
    """Detect a cycle with total weight < -tol; expand to (x, y) pairs.

    Length-1 cycles (negative diagonal) are caught first. Longer ones go
    through the same existence-then-minimal-length machinery as the support
    graphs; sub-tolerance diagonal noise is clamped to zero beforehand since
    simple cycles of length >= 2 never traverse self-loops.
    """
    diag = np.diagonal(W)
    if diag.min() < -tol:
        x = int(np.argmin(diag))
        y = int(AY[x, x])
        return CycleCertificate(pairs=((x, y),), total_weight=float(diag[x]))
    W = W.copy()
    np.fill_diagonal(W, np.maximum(diag, 0.0))
    if not _has_negative_cycle(W):
        return None
    found = _shortest_negative_cycle(W, tol)
    if found is None:
        return None
    nodes, total = found
    pairs = tuple(
        (nodes[t], int(AY[nodes[t], nodes[(t + 1) % len(nodes)]]))
        for t in range(len(nodes))
    )
    return CycleCertificate(pairs=pairs, total_weight=total)


def check_sandwich_condition(s: SandwichInput,
                             tol: float = CYCLE_TOL) -> CycleCertificate | None:
    """Return None when the chain condition holds at ``tol``, else a cycle.

    The certificate pairs (x_i, y_i) expand each digraph edge back to the
    witness column realizing its minimum, so the chain sum
    sum_i U(x_{i+1}, y_i) - L(x_i, y_i) is recomputable from the sheets and
    equals the certificate's total weight.
    """
    W, AY = _chain_graph(s)
    return _negative_cycle_from(W, AY, tol)


def sandwich_potentials(s: SandwichInput, tol: float = CYCLE_TOL) -> PotentialPair:
    """Build potentials squeezed between the two sheets.

    phi is the shortest-path distance from the virtual source (so finite and
    <= 0; no -inf variant is needed on finite node sets), psi the best value
    the upper sheet still allows. Columns with U identically +inf fall back
    to the least psi the lower sheet demands, which may be -inf. Raises
    :class:`SandwichConditionError` with the violating cycle when the chain
    condition fails, and :class:`VerificationError` if the result were ever
    to miss a bound by more than 1e-9 (it cannot, short of a bug).
    """
    u, low = s.upper.entries, s.lower.entries
    n = u.shape[0]
    W, AY = _chain_graph(s)
    cert = _negative_cycle_from(W, AY, tol)
    if cert is not None:
        raise SandwichConditionError(
            f"chain condition fails: cycle of weight {cert.total_weight}",
            certificate=cert,
        )
    # Sub-tolerance self-loop noise must not erode the distances.
    np.fill_diagonal(W, np.maximum(np.diagonal(W), 0.0))
    dist = np.zeros(n)
    for _ in range(n):
        nd = np.minimum(dist, (dist[:, None] + W).min(axis=0))
        if (nd >= dist - 1e-15).all():
            break
        dist = nd
    phi = dist
    psi = (u - phi[:, None]).min(axis=0)
    dead_cols = (u == INF).all(axis=0)
    if dead_cols.any():
        fallback = (low - phi[:, None]).max(axis=0)
        psi = np.where(dead_cols, fallback, psi)
    pair = PotentialPair(phi=phi, psi=psi)
    spread = pair.sum_matrix()
    bad_upper = ~(spread <= u + 1e-9)
    bad_lower = ~(low <= spread + 1e-9)
    if bad_upper.any() or bad_lower.any():
        i, j = (int(t) for t in np.argwhere(bad_upper | bad_lower)[0])
        raise VerificationError(
            f"constructed potentials miss a sheet bound at ({i}, {j}): "
            f"L={low[i, j]}, phi+psi={spread[i, j]}, U={u[i, j]}"
        )
    return pair


def potentials_from_support(support: SupportSet, cost,
                            tol: float = CYCLE_TOL) -> PotentialPair:
    """Potentials feasible everywhere and tight on the given support.

    The support must be cyclically monotone for the cost (otherwise
    :class:`NonMonotoneSupportError` carries the violating cycle) and the
    cost must be finite on every support pair and > -inf everywhere.
    Equality phi + psi = c on the support is re-verified within 1e-9.
    """
    c = _cost_entries(cost)
    if (c == -INF).any():
        raise InputValidationError("cost entries must be > -inf")
    for i, j in support.pairs:
        if i >= c.shape[0] or j >= c.shape[1]:
            raise InputValidationError(f"support pair ({i}, {j}) outside cost shape")
        if np.isinf(c[i, j]):
            raise InputValidationError(
                f"cost must be finite on support pairs; c({i}, {j}) = {c[i, j]}"
            )
    lower = np.full(c.shape, -INF)
    xs = [p[0] for p in support.pairs]
    ys = [p[1] for p in support.pairs]
    lower[xs, ys] = c[xs, ys]
    s = SandwichInput(upper=CostMatrix(entries=c), lower=CostMatrix(entries=lower))
    try:
        pair = sandwich_potentials(s, tol=tol)
    except SandwichConditionError as err:
        raise NonMonotoneSupportError(
            "support is not cyclically monotone; rerouting its cycle lowers cost",
            certificate=err.certificate,
        ) from err
    spread = pair.sum_matrix()
    gap = max(abs(float(spread[i, j]) - float(c[i, j])) for i, j in support.pairs)
    if gap > 1e-9:
        raise VerificationError(f"support equality off by {gap}")
    return pair


def decompose_exact(d, tol: float = 1e-9):
    """Split d(x, y) = phi(x) + psi(y) exactly, or exhibit a 2x2 obstruction.

    Requires finite entries. Uses the first row and column as the anchor:
    psi = d(x_0, .), phi = d(., y_0) - psi(y_0). Returns a
    :class:`PotentialPair` when every entry is reproduced within ``tol``,
    else the first offending :class:`RectangleCertificate` in row-major
    order. Any valid decomposition differs from the returned one by a single
    additive constant moved between phi and psi.
    """
    m = _cost_entries(d)
    if np.isinf(m).any():
        i, j = (int(t) for t in np.argwhere(np.isinf(m))[0])
        raise InputValidationError(f"decomposition needs finite entries; d({i}, {j}) = {m[i, j]}")
    psi = m[0, :].copy()
    phi = m[:, 0] - psi[0]
    resid = phi[:, None] + psi[None, :] - m
    bad = np.abs(resid) > tol
    if bad.any():
        i, j = (int(t) for t in np.argwhere(bad)[0])
        residual = float(m[0, 0] + m[i, j] - m[0, j] - m[i, 0])
        return RectangleCertificate(x=0, y=0, x2=i, y2=j, residual=residual)
    return PotentialPair(phi=phi, psi=psi)


def verify_strong_monotonicity(plan: TransportPlan, cost, pp: PotentialPair,
                               feas_tol: float = FEASIBILITY_TOL,
                               eq_tol: float = SUPPORT_EQUALITY_TOL) -> FeasibilityVerdict:
    """Check that (plan, potentials) witness optimality.

    Requires phi + psi <= c everywhere (within ``feas_tol``) and
    phi + psi = c on the plan's support (within ``eq_tol``). The verdict's
    violations merge both kinds, each as (x, y, c - (phi + psi)).
    """
    c = _cost_entries(cost)
    everywhere = check_feasible_potentials(pp, c, tol=feas_tol)
    violations = list(everywhere.violations)
    spread = pp.sum_matrix()
    on = plan.mass > 0
    slack = ext_sub_array(c, spread)
    for i, j in zip(*np.nonzero(on & (np.abs(slack) > eq_tol))):
        entry = (int(i), int(j), float(slack[i, j]))
        if entry not in violations:
            violations.append(entry)
    return FeasibilityVerdict(feasible=not violations, violations=tuple(violations))
