"""Subsidies that make a prescribed plan incentive-compatible.

A planner wants participants to follow a given plan pi even when pi is not
cost-optimal. Paying a subsidy f(x, y) on each cell changes the effective
cost to c - f; the plan becomes stable once no rerouting cycle profits.
There are four natural levels of stability, ordered by strength:

  W1  no support cycle profits when the subsidy is only kept at the cell a
      participant departs from: chains c(x_{i+1}, y_i) + f(x_i, y_i) -
      c(x_i, y_i) over support pairs are >= 0.
  S1  no support cycle profits on the subsidized cost c - f itself.
  W2  like W1 but chains may pass through any cell, not just the support.
  S2  the subsidized cost c - f globally admits potentials, i.e. passes the
      two-sheet chain condition against itself; every cycle sum is then
      exactly zero, so participants are indifferent, not merely deterred.

S2 implies S1 and W2, and each of those implies W1.

The canonical subsidy comes from duality: solve the instance, extract
potentials tight on an optimal support, and pay f = c - (phi + psi). That
choice is nonnegative, satisfies S2, and its total under pi equals
alpha = cost(pi) - optimalCost, the minimum any stabilizing subsidy must pay.

Convention for infinite entries: wherever c = +inf the cell is unusable, so
no lower-sheet constraint applies there (it is masked to -inf) and the
canonical subsidy is +inf. Chains through such cells can never profit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    SUBSIDY_TOL,
    CostMatrix,
    TransportPlan,
    FeasibilityVerdict,
    _cost_entries,
    plan_cost,
)
from .errors import InputValidationError, UnsupportedInstanceError, VerificationError
from .extreal import INF, ext_sub_array
from .monotonicity import (
    CYCLE_TOL,
    CycleCertificate,
    SupportSet,
    _has_negative_cycle,
    _shortest_negative_cycle,
    pair_rerouting_weights,
)
from .potentials import SandwichInput, check_sandwich_condition, potentials_from_support
from .solver import solve_min_cost


class ConstraintTag(str, enum.Enum):
    """The four stability levels, weakest to strongest: W1, S1/W2, S2."""

    W1 = "W1"
    S1 = "S1"
    S2 = "S2"
    W2 = "W2"


@dataclass(frozen=True, eq=False)
class SubsidyFunction:
    """A subsidy schedule plus its audit numbers.

    ``total_under_plan`` is the integral of the entries against the plan it
    was built for; ``alpha`` is that plan's cost excess over the optimum.
    The construction guarantees the two agree within 1e-8. ``max_clamp``
    records the largest negative rounding residue that was clamped to 0.
    """

    entries: CostMatrix
    total_under_plan: float
    alpha: float
    max_clamp: float = 0.0

    def __post_init__(self):
        e = self.entries.entries
        if (e < 0).any():
            i, j = (int(t) for t in np.argwhere(e < 0)[0])
            raise InputValidationError(f"subsidy entry ({i}, {j}) = {e[i, j]} is negative")


def _masked_lower(c: np.ndarray, f: np.ndarray) -> np.ndarray:
    """The subsidized cost c - f as a lower sheet: -inf where c = +inf."""
    low = ext_sub_array(c, f)
    return np.where(c == INF, -INF, low)


def _support_cycle(W: np.ndarray, pairs, tol: float) -> CycleCertificate | None:
    """Negative cycle of a support-pair digraph, mapped back to (x, y) pairs.

    Unlike the plain monotonicity graph the diagonal here need not vanish,
    so length-1 cycles are checked first; sub-tolerance diagonal noise is
    then clamped away exactly as in the two-sheet check.
    """
    diag = np.diagonal(W)
    if diag.min() < -tol:
        p = int(np.argmin(diag))
        return CycleCertificate(pairs=(pairs[p],), total_weight=float(diag[p]))
    if len(pairs) == 1:
        return None
    W = W.copy()
    np.fill_diagonal(W, np.maximum(diag, 0.0))
    if not _has_negative_cycle(W):
        return None
    found = _shortest_negative_cycle(W, tol)
    if found is None:
        return None
    nodes, total = found
    return CycleCertificate(pairs=tuple(pairs[t] for t in nodes), total_weight=total)


def compute_subsidy(pi: TransportPlan, cost) -> SubsidyFunction:
    """The cheapest stabilizing subsidy for ``pi``: f = c - (phi + psi).

    Solves the instance, extracts potentials tight on an optimal support,
    and pays exactly the duality gap on each cell (+inf where c = +inf,
    negative rounding dust clamped to 0). The result satisfies the strongest
    constraint S2, and its total under ``pi`` equals
    alpha = cost(pi) - optimalCost, verified within 1e-8 before returning.

    Requires ``pi`` to have finite cost; the instance is then automatically
    solvable.
    """
    c = _cost_entries(cost)
    pi_cost = plan_cost(pi, c)
    if not np.isfinite(pi_cost):
        raise InputValidationError(f"plan cost is {pi_cost}; subsidy needs a finite plan")
    result = solve_min_cost(pi.mu, pi.nu, c)
    if result.status != "optimal":
        raise UnsupportedInstanceError(f"solver returned status {result.status!r}")
    pp = potentials_from_support(SupportSet.from_plan(result.plan), c)
    raw = ext_sub_array(c, pp.sum_matrix())
    finite = np.isfinite(raw)
    max_clamp = float(max(0.0, -raw[finite].min())) if finite.any() else 0.0
    if max_clamp > 1e-9:
        raise VerificationError(f"subsidy clamp {max_clamp} exceeds feasibility slack")
    entries = np.where(finite, np.maximum(raw, 0.0), raw)
    alpha = float(pi_cost - result.value)
    total = plan_cost(pi, entries)
    if not abs(total - alpha) <= SUBSIDY_TOL:
        raise VerificationError(
            f"subsidy total {total} does not match cost excess {alpha}"
        )
    return SubsidyFunction(
        entries=CostMatrix(entries=entries),
        total_under_plan=total,
        alpha=alpha,
        max_clamp=max_clamp,
    )


def verify_subsidy_constraint(f, pi: TransportPlan, cost,
                              tag: ConstraintTag,
                              tol: float = CYCLE_TOL) -> CycleCertificate | None:
    """Check one stability level; None means it holds at ``tol``.

    W1 and S1 examine cycles over the support pairs of ``pi``; W2 and S2
    reduce to the two-sheet chain condition over all cells. For S1, W2 and
    S2 the subsidy must be finite wherever the cost is (an infinite subsidy
    on a usable cell makes the subsidized cost meaningless there).
    """
    c = _cost_entries(cost)
    fe = _cost_entries(f)
    if fe.shape != c.shape:
        raise InputValidationError(f"subsidy shape {fe.shape} does not match cost {c.shape}")
    tag = ConstraintTag(tag)
    if tag is not ConstraintTag.W1 and ((fe == INF) & (c < INF)).any():
        raise InputValidationError(
            f"subsidy is +inf on a finite-cost cell; {tag.value} is undefined"
        )
    lower = _masked_lower(c, fe)
    if tag in (ConstraintTag.W1, ConstraintTag.S1):
        pairs = SupportSet.from_plan(pi).pairs
        upper = c if tag is ConstraintTag.W1 else ext_sub_array(c, fe)
        W = pair_rerouting_weights(upper, pairs, lower=lower)
        return _support_cycle(W, pairs, tol)
    upper = c if tag is ConstraintTag.W2 else ext_sub_array(c, fe)
    s = SandwichInput(upper=CostMatrix(entries=upper), lower=CostMatrix(entries=lower))
    return check_sandwich_condition(s, tol=tol)


def verify_lower_bound(f, pi: TransportPlan, cost, optimal_value: float,
                       tol: float = SUBSIDY_TOL) -> FeasibilityVerdict:
    """Check the payment floor: the subsidy total must cover the cost excess.

    Feasible iff sum(pi * f) >= cost(pi) - optimal_value - tol. An
    infeasible verdict carries one aggregate violation (-1, -1, shortfall).
    """
    c = _cost_entries(cost)
    pi_cost = plan_cost(pi, c)
    if not np.isfinite(pi_cost):
        raise InputValidationError(f"plan cost is {pi_cost}; the bound needs a finite plan")
    total = plan_cost(pi, _cost_entries(f))
    alpha = pi_cost - float(optimal_value)
    if total >= alpha - tol:
        return FeasibilityVerdict(feasible=True)
    return FeasibilityVerdict(feasible=False,
                              violations=((-1, -1, float(total - alpha)),))
