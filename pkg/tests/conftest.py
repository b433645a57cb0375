import json
from pathlib import Path

import numpy as np
import pytest

from transportlab import CostMatrix, DiscreteMeasure, TransportPlan

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fix_a():
    """2x2 uniform, zero diagonal: identity optimal at cost 0."""
    mu = DiscreteMeasure.uniform(2)
    nu = DiscreteMeasure.uniform(2)
    c = np.array([[0.0, 1.0], [1.0, 0.0]])
    return mu, nu, c


@pytest.fixture
def fix_b():
    """2x2 uniform, zero anti-diagonal: the swap is optimal at cost 0."""
    mu = DiscreteMeasure.uniform(2)
    nu = DiscreteMeasure.uniform(2)
    c = np.array([[1.0, 0.0], [0.0, 1.0]])
    return mu, nu, c


@pytest.fixture
def fix_c():
    """3 points, +inf above the diagonal, 1 on it, 0 below, uniform 1/3."""
    mu = DiscreteMeasure.uniform(3)
    nu = DiscreteMeasure.uniform(3)
    c = np.array([
        [1.0, np.inf, np.inf],
        [0.0, 1.0, np.inf],
        [0.0, 0.0, 1.0],
    ])
    return mu, nu, c


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def diagonal_plan(mu, nu):
    n = len(mu)
    mass = np.zeros((n, n))
    np.fill_diagonal(mass, mu.weights)
    return TransportPlan(mass=mass, mu=mu, nu=nu)


def anti_diagonal_plan(mu, nu):
    n = len(mu)
    mass = np.zeros((n, n))
    for i in range(n):
        mass[i, n - 1 - i] = mu.weights[i]
    return TransportPlan(mass=mass, mu=mu, nu=nu)


def write_problem(path: Path, mu_w, nu_w, cost, plan=None, subsidy=None) -> Path:
    def cell(v):
        if v == np.inf:
            return "inf"
        if v == -np.inf:
            return "-inf"
        return float(v)

    doc = {
        "mu": [float(v) for v in mu_w],
        "nu": [float(v) for v in nu_w],
        "cost": [[cell(v) for v in row] for row in np.asarray(cost, dtype=float)],
    }
    if plan is not None:
        mass = np.asarray(plan, dtype=float)
        doc["plan"] = [[int(i), int(j), float(mass[i, j])]
                       for i, j in zip(*np.nonzero(mass))]
    if subsidy is not None:
        doc["subsidy"] = [[cell(v) for v in row]
                          for row in np.asarray(subsidy, dtype=float)]
    path.write_text(json.dumps(doc))
    return path
