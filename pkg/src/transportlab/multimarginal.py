"""Desk-scale checks of the cyclic-gain bound for near-optimal plans.

Take a plan pi whose cost exceeds the optimum by at most alpha, list its
support pairs z_1, ..., z_s, and measure how much a cyclic reroute through
n of them would gain:

    e(z_{p_1}, ..., z_{p_n}) = max(0, -sum_i [c(x_{p_{i+1}}, y_{p_i})
                                              - c(x_{p_i}, y_{p_i})]).

The bound under scrutiny: for every coupling kappa of n copies of pi
(viewed as a measure on support pairs), the expected gain satisfies

    integral of e dkappa  <=  n * alpha.

The supremum over all such couplings is a genuine multi-marginal transport
problem and is deliberately not solved here; instead the bound is certified
against a family of witness couplings (product, diagonal, rotations when
the weights allow, and seeded cyclically-averaged Markov chains), which is
enough to falsify it if it were wrong and to exhibit tight cases.

Everything enumerates s**n tuples, so a hard cap keeps this desk-scale.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .core import (
    MARGINAL_TOL,
    FeasibilityVerdict,
    TransportPlan,
    _cost_entries,
    _readonly,
)
from .errors import (
    DimensionMismatchError,
    InputValidationError,
    SizeCapError,
    VerificationError,
)
from .extreal import require_no_nan
from .monotonicity import SupportSet, pair_rerouting_weights

#: enumeration ceiling for s**n tuples
MAX_TUPLES = 10**6
#: cyclic-shift invariance of the gain tensor is asserted within this
CYCLIC_INVARIANCE_TOL = 1e-12
#: the n*alpha bound is enforced up to this slack
COUPLING_BOUND_TOL = 1e-8


def _check_cap(s: int, n: int) -> None:
    if s**n > MAX_TUPLES:
        raise SizeCapError(f"{s}**{n} = {s**n} tuples exceeds the cap {MAX_TUPLES}")


def _axis_view(matrix: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    """matrix[z_i, z_j] broadcast over an n-dimensional tuple grid."""
    s = matrix.shape[0]
    dims = [1] * n
    dims[i] = s
    dims[j] = s
    if i < j:
        return matrix.reshape(dims)
    return np.ascontiguousarray(matrix.T).reshape(dims)


@dataclass(frozen=True, eq=False)
class CyclicGain:
    """The nonnegative gain tensor e over n-tuples of support-pair indices."""

    pairs: tuple[tuple[int, int], ...]
    length: int
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        object.__setattr__(self, "values", v)
        if self.length < 2:
            raise InputValidationError("cycle length must be at least 2")
        s = len(self.pairs)
        if v.shape != (s,) * self.length:
            raise DimensionMismatchError(
                f"values shape {v.shape} is not ({s},) * {self.length}"
            )
        require_no_nan(v, "gain values")
        if (v < 0).any():
            raise InputValidationError("gain values must be nonnegative")
        shifted = np.transpose(v, axes=(*range(1, self.length), 0))
        drift = float(np.max(np.abs(v - shifted)))
        if drift > CYCLIC_INVARIANCE_TOL:
            raise VerificationError(f"gain tensor not cyclically invariant: drift {drift}")


@dataclass(frozen=True, eq=False)
class MultiCoupling:
    """A probability mass over n-tuples whose 1-D marginals all equal ``base``."""

    mass: np.ndarray
    base: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = _readonly(self.mass)
        b = _readonly(self.base)
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "base", b)
        require_no_nan(m, "coupling mass")
        if (m < 0).any():
            raise InputValidationError("coupling mass must be nonnegative")
        s = b.size
        if m.shape != (s,) * m.ndim or m.ndim < 2:
            raise DimensionMismatchError(
                f"coupling shape {m.shape} is not a power of the base size {s}"
            )
        for axis in range(m.ndim):
            others = tuple(a for a in range(m.ndim) if a != axis)
            marg = m.sum(axis=others)
            gap = float(np.max(np.abs(marg - b)))
            if gap > MARGINAL_TOL:
                raise VerificationError(
                    f"coupling {self.name!r}: marginal {axis} off by {gap}"
                )

    @property
    def length(self) -> int:
        return self.mass.ndim


def build_cyclic_gain(cost, support: SupportSet, length: int) -> CyclicGain:
    """Enumerate the gain e over all ``length``-tuples of support pairs.

    The chain sum telescopes to 0 on constant tuples and flips sign under
    orientation reversal, so e picks out exactly the profitable reroutes.
    The cost must be finite on every support pair.
    """
    if length < 2:
        raise InputValidationError("cycle length must be at least 2")
    c = _cost_entries(cost)
    s = len(support)
    _check_cap(s, length)
    for i, j in support.pairs:
        if np.isinf(c[i, j]):
            raise InputValidationError(
                f"cost must be finite on support pairs; c({i}, {j}) = {c[i, j]}"
            )
    W = pair_rerouting_weights(c, support.pairs)
    total = np.zeros((s,) * length)
    for i in range(length):
        total = total + _axis_view(W, i, (i + 1) % length, length)
    return CyclicGain(pairs=support.pairs, length=length,
                      values=np.maximum(0.0, -total))


def _support_weights(pi: TransportPlan) -> tuple[tuple[tuple[int, int], ...], np.ndarray]:
    pairs = pi.support_pairs()
    w = np.array([pi.mass[i, j] for i, j in pairs])
    return pairs, w


def _markov_coupling(w: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """A cyclically-averaged Markov-chain coupling with all marginals w.

    The transition kernel divides a vertex of the (w, w) transport polytope
    (northwest-corner rule on shuffled orders) by the row weights, so each
    step preserves w; averaging over cyclic shifts symmetrizes the result.
    """
    s = w.size
    rows = rng.permutation(s)
    cols = rng.permutation(s)
    T = np.zeros((s, s))
    a = w[rows].copy()
    b = w[cols].copy()
    i = j = 0
    while i < s and j < s:
        d = min(a[i], b[j])
        T[rows[i], cols[j]] += d
        a[i] -= d
        b[j] -= d
        if a[i] <= b[j]:
            i += 1
        else:
            j += 1
    K = T / w[:, None]
    mass = w.reshape((s,) + (1,) * (n - 1))
    for step in range(n - 1):
        mass = mass * _axis_view(K, step, step + 1, n)
    rot = (*range(1, n), 0)
    total = np.zeros_like(mass)
    cur = mass
    for _ in range(n):
        total = total + cur
        cur = np.transpose(cur, axes=rot)
    return total / n


def candidate_couplings(pi: TransportPlan, n: int, seed: int,
                        count: int) -> list[MultiCoupling]:
    """Deterministic witness couplings of n copies of the plan's support law.

    Always starts with the product and diagonal couplings, then rotation
    couplings when the support weights are uniform (shifts only preserve
    uniform marginals), then seeded Markov-chain couplings until ``count``
    couplings exist. Every coupling is marginal-checked at construction.
    """
    if n < 2:
        raise InputValidationError("coupling order must be at least 2")
    if count < 1:
        raise InputValidationError("count must be at least 1")
    pairs, w = _support_weights(pi)
    s = w.size
    _check_cap(s, n)
    out: list[MultiCoupling] = []

    product = functools.reduce(np.multiply.outer, [w] * n)
    out.append(MultiCoupling(mass=product, base=w, name="product"))

    diagonal = np.zeros((s,) * n)
    diagonal[(np.arange(s),) * n] = w
    out.append(MultiCoupling(mass=diagonal, base=w, name="diagonal"))

    if s > 1 and float(np.max(np.abs(w - w[0]))) <= 1e-12:
        for k in range(1, s):
            if len(out) >= count:
                break
            mass = np.zeros((s,) * n)
            idx = np.arange(s)
            mass[tuple((idx + t * k) % s for t in range(n))] = w
            out.append(MultiCoupling(mass=mass, base=w, name=f"rotation-{k}"))

    rng = np.random.default_rng(seed)
    t = 0
    while len(out) < count:
        mass = _markov_coupling(w, n, rng)
        out.append(MultiCoupling(mass=mass, base=w, name=f"markov-{t}"))
        t += 1
    return out[:count]


def check_coupling_bound(pi: TransportPlan, gain: CyclicGain, alpha: float,
                         candidates: list[MultiCoupling],
                         tol: float = COUPLING_BOUND_TOL):
    """Certify integral(e dkappa) <= n * alpha against every candidate.

    The caller is responsible for the hypothesis that ``pi`` is within
    ``alpha`` of optimal (compute alpha from the solver and it holds by
    construction). Violations are reported as (candidateIndex, -1, excess).
    """
    if alpha < -tol:
        raise InputValidationError(f"alpha must be nonnegative, got {alpha}")
    bound = gain.length * alpha
    violations = []
    for k, kappa in enumerate(candidates):
        if kappa.mass.shape != gain.values.shape:
            raise DimensionMismatchError(
                f"candidate {k} ({kappa.name!r}) shape {kappa.mass.shape} "
                f"does not match the gain tensor {gain.values.shape}"
            )
        val = float(np.sum(kappa.mass * gain.values))
        if val > bound + tol:
            violations.append((k, -1, val - bound))
    return FeasibilityVerdict(feasible=not violations, violations=tuple(violations))


def symmetrize(fs: list[np.ndarray], gain: CyclicGain | None = None) -> np.ndarray:
    """Average n cover functions into one that still covers the gain.

    With ``gain`` supplied, first verifies by full enumeration that
    e(z_1, ..., z_n) <= f_1(z_1) + ... + f_n(z_n), then that the averaged f
    covers in every slot the same way; the cyclic invariance of e is what
    makes the average work. Without ``gain`` it is a plain mean.
    """
    vecs = [np.asarray(v, dtype=float) for v in fs]
    if not vecs:
        raise InputValidationError("need at least one vector")
    s = vecs[0].size
    for v in vecs:
        if v.ndim != 1 or v.size != s:
            raise DimensionMismatchError("cover vectors must share one length")
        require_no_nan(v, "cover vector")
    f = np.mean(vecs, axis=0)
    if gain is not None:
        n = gain.length
        if len(vecs) != n:
            raise DimensionMismatchError(
                f"{len(vecs)} cover vectors for a gain tensor of length {n}"
            )
        if gain.values.shape != (s,) * n:
            raise DimensionMismatchError("cover vectors do not match the gain tensor")
        cover = np.zeros((s,) * n)
        avg_cover = np.zeros((s,) * n)
        for i in range(n):
            dims = [1] * n
            dims[i] = s
            cover = cover + vecs[i].reshape(dims)
            avg_cover = avg_cover + f.reshape(dims)
        worst = float(np.max(gain.values - cover))
        if worst > 1e-9:
            raise VerificationError(f"inputs do not cover the gain tensor (gap {worst})")
        worst = float(np.max(gain.values - avg_cover))
        if worst > 1e-9:
            raise VerificationError(f"averaged cover fails by {worst}")
    return f
