"""Extended-real arithmetic with a one-sided infinity convention.

Values live in [-inf, +inf] and are represented as ordinary floats (numpy
float64 in arrays). NaN is never a legal value: constructors reject it and
every operation here is total on the legal domain, so NaN cannot appear
downstream.

Subtraction follows a fixed table chosen so that "improvement" differences
c(x', y) - c(x, y) never under-report cost:

    a - b           result
    -----------------------------------------
    finite, finite  ordinary subtraction
    +inf,   any     +inf
    >-inf,  -inf    +inf
    -inf,   -inf    +inf   (rewritten as -inf + inf, same convention)
    -inf,   finite  -inf
    -inf,   +inf    -inf
    finite, +inf    -inf

In particular inf - inf = +inf, never NaN. Addition is only needed on
domains where it is unambiguous ([-inf, inf) + [-inf, inf) and
[0, inf] + [0, inf]) and is provided with that restriction checked.

Integrals use the convention 0 * (+-inf) = 0: a zero-mass point never
contributes, whatever the integrand does there.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputValidationError

INF = math.inf


def ext_sub(a: float, b: float) -> float:
    """Extended subtraction a - b per the module table. Total, never NaN."""
    if math.isnan(a) or math.isnan(b):
        raise InputValidationError("NaN is not an extended real")
    if a == INF or b == -INF:
        return INF
    if a == -INF or b == INF:
        return -INF
    return a - b


def ext_sub_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ext_sub` with numpy broadcasting.

    The only cases where naive subtraction produces NaN are inf - inf and
    (-inf) - (-inf); the table sends both to +inf.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a - b
    nan = np.isnan(out)
    if nan.any():
        out = np.where(nan, INF, out)
    return out


def ext_add(a: float, b: float) -> float:
    """Extended addition on domains where no inf + (-inf) clash can occur."""
    if math.isnan(a) or math.isnan(b):
        raise InputValidationError("NaN is not an extended real")
    if (a == INF and b == -INF) or (a == -INF and b == INF):
        raise InputValidationError("inf + (-inf) is not defined; subtract instead")
    return a + b


def is_extended(x: float) -> bool:
    """True when x is a legal extended real (anything but NaN)."""
    return not math.isnan(x)


def require_no_nan(arr: np.ndarray, name: str) -> None:
    if np.isnan(arr).any():
        raise InputValidationError(f"{name} contains NaN; extended reals exclude NaN")


def fmt_ext(x: float) -> float | str:
    """JSON-friendly form: infinities become the strings 'inf' / '-inf'."""
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return float(x)


def parse_ext(v, field: str = "value") -> float:
    """Inverse of :func:`fmt_ext` for problem-file entries."""
    if isinstance(v, str):
        if v == "inf":
            return INF
        if v == "-inf":
            return -INF
        raise InputValidationError(
            f"{field}: string entries must be 'inf' or '-inf', got {v!r}"
        )
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputValidationError(f"{field}: expected a number, got {type(v).__name__}")
    x = float(v)
    if math.isnan(x):
        raise InputValidationError(f"{field}: NaN is not allowed")
    return x
