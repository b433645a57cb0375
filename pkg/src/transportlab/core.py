"""Core types and operations for finite transport problems.

A problem instance is a pair of finite discrete probability measures (mu on
the source points X, nu on the target points Y) and a cost matrix c over
X x Y with entries in [-inf, +inf] (NaN excluded everywhere).

Conventions, fixed once and used by every module:

* Measures carry strictly positive weights summing to 1 within 1e-12.
  Zero-weight points are dropped at ingestion, never stored.
* A primal cost has entries in [0, +inf]. Shifted costs (see
  :func:`shift_cost`) may be anything in [-inf, +inf] and carry a flag plus
  the shift record so dual quantities can be mapped back.
* Integrals against a plan use 0 * (+-inf) = 0: zero-mass cells never
  contribute. A plan's cost is finite iff it places no mass on +inf entries.
* Potentials take values in [-inf, +inf); +inf is rejected at construction.
  The pointwise sum phi(x) + psi(y) is therefore always defined.
* Subtractions of extended reals follow the table in :mod:`.extreal`,
  in particular inf - inf = +inf.

All numeric tolerances are absolute and centralized in the constants below;
operations take a ``tol`` override where the contract allows one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InputValidationError
from .extreal import INF, ext_sub, ext_sub_array, require_no_nan

#: weights of a measure must sum to 1 within this
MEASURE_TOL = 1e-12
#: plan marginals must match the measures within this
MARGINAL_TOL = 1e-9
#: dual feasibility phi + psi <= c is enforced up to this slack
FEASIBILITY_TOL = 1e-9
#: equality of phi + psi and c on a support is asserted within this
SUPPORT_EQUALITY_TOL = 1e-8
#: subsidy totals and related aggregates are compared within this
SUBSIDY_TOL = 1e-8
#: the two solvers must agree within this
SOLVER_AGREEMENT_TOL = 1e-7


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """A finite discrete probability measure: labels plus positive weights."""

    labels: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise InputValidationError("weights must be a nonempty 1-D array")
        require_no_nan(w, "weights")
        if np.isinf(w).any():
            raise InputValidationError("weights must be finite")
        if (w <= 0).any():
            k = int(np.argmax(w <= 0))
            raise InputValidationError(
                f"weights must be strictly positive; weight[{k}] = {w[k]}"
            )
        if abs(float(w.sum()) - 1.0) > MEASURE_TOL:
            raise InputValidationError(
                f"weights must sum to 1 within {MEASURE_TOL}; got {float(w.sum())!r}"
            )
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != w.size:
            raise DimensionMismatchError(
                f"{len(labels)} labels for {w.size} weights"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights, labels=None, *, normalize: bool = False,
                     prefix: str = "p") -> "DiscreteMeasure":
        """Build a measure, dropping zero-weight points.

        With ``normalize=True`` the kept weights are rescaled to sum to 1;
        otherwise they must already. Negative weights are always an error.
        """
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1:
            raise InputValidationError("weights must be a 1-D array")
        require_no_nan(w, "weights")
        if (w < 0).any():
            k = int(np.argmax(w < 0))
            raise InputValidationError(f"weight[{k}] = {w[k]} is negative")
        keep = w > 0
        if not keep.any():
            raise InputValidationError("all weights are zero")
        w = w[keep]
        if labels is None:
            labels = [f"{prefix}{i}" for i in np.flatnonzero(keep)]
        else:
            labels = [labels[i] for i in np.flatnonzero(keep)]
        if normalize:
            w = w / w.sum()
        return cls(labels=tuple(labels), weights=w)

    @classmethod
    def uniform(cls, n: int, labels=None, *, prefix: str = "p") -> "DiscreteMeasure":
        if n < 1:
            raise InputValidationError("a measure needs at least one point")
        if labels is None:
            labels = [f"{prefix}{i}" for i in range(n)]
        return cls(labels=tuple(labels), weights=np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """A cost matrix over X x Y, entries in [-inf, +inf], NaN-free.

    ``shifted`` marks matrices produced by :func:`shift_cost`; ``shift``
    then records the cumulative (a, b) so duals can be mapped back.
    """

    entries: np.ndarray
    shifted: bool = False
    shift: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        e = _readonly(self.entries)
        if e.ndim != 2 or e.size == 0:
            raise InputValidationError("cost entries must form a nonempty 2-D array")
        require_no_nan(e, "cost entries")
        object.__setattr__(self, "entries", e)
        if self.shift is not None:
            a, b = (_readonly(v) for v in self.shift)
            if a.shape != (e.shape[0],) or b.shape != (e.shape[1],):
                raise DimensionMismatchError("shift vectors do not match cost shape")
            object.__setattr__(self, "shift", (a, b))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def is_primal(self) -> bool:
        """True when every entry is in [0, +inf]."""
        return bool((self.entries >= 0).all())


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """A nonnegative mass matrix whose marginals match (mu, nu).

    Construction validates; use :func:`check_marginals` directly on a raw
    array to diagnose a matrix that is not a plan.
    """

    mass: np.ndarray
    mu: DiscreteMeasure
    nu: DiscreteMeasure

    def __post_init__(self):
        m = _readonly(self.mass)
        object.__setattr__(self, "mass", m)
        verdict = check_marginals(m, self.mu, self.nu)
        if not verdict.feasible:
            i, j, slack = verdict.violations[0]
            raise InputValidationError(
                f"mass matrix is not a plan for (mu, nu); "
                f"first violation at ({i}, {j}) with slack {slack}"
            )

    @property
    def support_mask(self) -> np.ndarray:
        return self.mass > 0

    def support_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(i), int(j)) for i, j in zip(*np.nonzero(self.mass)))


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Dual potentials phi on X and psi on Y, values in [-inf, +inf)."""

    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        for name in ("phi", "psi"):
            v = _readonly(getattr(self, name))
            if v.ndim != 1 or v.size == 0:
                raise InputValidationError(f"{name} must be a nonempty 1-D array")
            require_no_nan(v, name)
            if (v == INF).any():
                k = int(np.argmax(v == INF))
                raise InputValidationError(f"{name}[{k}] = +inf is not a potential value")
            object.__setattr__(self, name, v)

    def sum_matrix(self) -> np.ndarray:
        """phi(x) + psi(y) as a matrix; -inf absorbs, +inf cannot occur."""
        return self.phi[:, None] + self.psi[None, :]


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Outcome of a feasibility check plus the offending cells.

    Violations are (xIndex, yIndex, slack) triples. Marginal checks encode a
    row-sum violation as (i, -1, rowsum - mu_i) and a column-sum violation as
    (-1, j, colsum - nu_j); entry-level violations carry both indices.
    """

    feasible: bool
    violations: tuple[tuple[int, int, float], ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.feasible


def check_marginals(mass, mu: DiscreteMeasure, nu: DiscreteMeasure,
                    tol: float = MARGINAL_TOL) -> FeasibilityVerdict:
    """Verify that ``mass`` is a plan for (mu, nu) within absolute ``tol``."""
    m = np.asarray(mass.mass if isinstance(mass, TransportPlan) else mass, dtype=float)
    if m.ndim != 2:
        raise InputValidationError("mass must be a 2-D array")
    require_no_nan(m, "mass")
    if m.shape != (len(mu), len(nu)):
        raise DimensionMismatchError(
            f"mass shape {m.shape} does not match measures ({len(mu)}, {len(nu)})"
        )
    violations: list[tuple[int, int, float]] = []
    for i, j in zip(*np.nonzero(m < 0)):
        violations.append((int(i), int(j), float(m[i, j])))
    if np.isinf(m).any():
        for i, j in zip(*np.nonzero(np.isinf(m))):
            violations.append((int(i), int(j), float(m[i, j])))
    else:
        row = m.sum(axis=1) - mu.weights
        col = m.sum(axis=0) - nu.weights
        for i in np.flatnonzero(np.abs(row) > tol):
            violations.append((int(i), -1, float(row[i])))
        for j in np.flatnonzero(np.abs(col) > tol):
            violations.append((-1, int(j), float(col[j])))
    return FeasibilityVerdict(feasible=not violations, violations=tuple(violations))


def _cost_entries(cost) -> np.ndarray:
    return cost.entries if isinstance(cost, CostMatrix) else np.asarray(cost, dtype=float)


def plan_cost(plan: TransportPlan, cost) -> float:
    """Total cost of a plan: sum of mass * cost over the support.

    Zero-mass cells never contribute (0 * inf = 0). If the support touches a
    +inf entry the total is +inf, regardless of any -inf entries elsewhere
    under the support (inf - inf = inf); if it touches -inf but no +inf the
    total is -inf.
    """
    c = _cost_entries(cost)
    mass = plan.mass if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    if mass.shape != c.shape:
        raise DimensionMismatchError(
            f"plan shape {mass.shape} does not match cost shape {c.shape}"
        )
    on = mass > 0
    vals = c[on]
    if (vals == INF).any():
        return INF
    if (vals == -INF).any():
        return -INF
    return float(np.dot(mass[on], vals))


def dual_value(pp: PotentialPair, plan: TransportPlan) -> float:
    """Value of the potentials integrated against the plan.

    Equals sum over support of mass * (phi(x) + psi(y)). Any support cell
    with phi + psi = -inf forces -inf (the positive part is always finite
    because +inf potential values do not exist). For a plan in the polytope
    of (mu, nu) and finite potentials this is sum(mu*phi) + sum(nu*psi) and
    does not depend on the plan at all.
    """
    mass = plan.mass
    if mass.shape != (pp.phi.size, pp.psi.size):
        raise DimensionMismatchError(
            f"plan shape {mass.shape} does not match potentials "
            f"({pp.phi.size}, {pp.psi.size})"
        )
    s = pp.sum_matrix()
    on = mass > 0
    vals = s[on]
    if (vals == -INF).any():
        return -INF
    return float(np.dot(mass[on], vals))


def check_feasible_potentials(pp: PotentialPair, cost, plan: TransportPlan | None = None,
                              tol: float = FEASIBILITY_TOL) -> FeasibilityVerdict:
    """Check phi(x) + psi(y) <= c(x, y) within ``tol``.

    With ``plan`` given, only the plan's support cells are checked;
    otherwise every cell is. Violations carry slack = c - (phi + psi),
    negative where infeasible.
    """
    c = _cost_entries(cost)
    if c.shape != (pp.phi.size, pp.psi.size):
        raise DimensionMismatchError(
            f"cost shape {c.shape} does not match potentials "
            f"({pp.phi.size}, {pp.psi.size})"
        )
    s = pp.sum_matrix()
    bad = s > c + tol          # c = +inf never violates; s = -inf never violates
    if plan is not None:
        bad &= plan.mass > 0
    violations = tuple(
        (int(i), int(j), ext_sub(float(c[i, j]), float(s[i, j])))
        for i, j in zip(*np.nonzero(bad))
    )
    return FeasibilityVerdict(feasible=not violations, violations=violations)


def truncate_potentials(pp: PotentialPair, cutoff: float) -> PotentialPair:
    """Clamp both potentials into [-cutoff, cutoff]; requires cutoff > 0."""
    if not cutoff > 0:
        raise InputValidationError(f"cutoff must be positive, got {cutoff}")
    return PotentialPair(
        phi=np.clip(pp.phi, -cutoff, cutoff),
        psi=np.clip(pp.psi, -cutoff, cutoff),
    )


def shift_cost(cost: CostMatrix, a, b, tol: float = FEASIBILITY_TOL) -> CostMatrix:
    """Subtract a separable lower bound: c'(x, y) = c(x, y) - a(x) - b(y).

    Requires a(x) + b(y) <= c(x, y) entrywise (within ``tol``), with a and b
    in [-inf, +inf). The result is flagged shifted and records the cumulative
    shift so duals of the shifted problem can be mapped back by adding (a, b).
    Subtractions follow the extended table, so +inf entries stay +inf and an
    x with a(x) = -inf makes row x identically +inf.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = cost.entries
    if a.shape != (cost.n,) or b.shape != (cost.m,):
        raise DimensionMismatchError(
            f"shift shapes {a.shape}, {b.shape} do not match cost ({cost.n}, {cost.m})"
        )
    for name, v in (("a", a), ("b", b)):
        require_no_nan(v, name)
        if (v == INF).any():
            raise InputValidationError(f"{name} must lie in [-inf, +inf)")
    low = a[:, None] + b[None, :]
    bad = low > c + tol
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        raise InputValidationError(
            f"a(x) + b(y) = {low[i, j]} exceeds c = {c[i, j]} at ({i}, {j})"
        )
    out = ext_sub_array(ext_sub_array(c, a[:, None]), b[None, :])
    if cost.shift is not None:
        a0, b0 = cost.shift
        a, b = a0 + a, b0 + b
    return CostMatrix(entries=out, shifted=True, shift=(a, b))
