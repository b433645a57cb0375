import numpy as np
import pytest

from oracles import nw_vertex_plan

from transportlab import (
    INF,
    ConstraintTag,
    CostMatrix,
    InputValidationError,
    SubsidyFunction,
    TransportPlan,
    compute_subsidy,
    ext_sub_array,
    plan_cost,
    solve_min_cost,
    verify_lower_bound,
    verify_subsidy_constraint,
)
from transportlab.cli import gen_random
from conftest import anti_diagonal_plan, diagonal_plan

ALL_TAGS = (ConstraintTag.W1, ConstraintTag.S1, ConstraintTag.S2, ConstraintTag.W2)


def _tag_results(f, plan, cost):
    return {t.value: verify_subsidy_constraint(f, plan, cost, t) is None
            for t in ALL_TAGS}


class TestComputeSubsidy:
    def test_anti_diagonal_pays_the_gap(self, fix_a):
        mu, nu, c = fix_a
        plan = anti_diagonal_plan(mu, nu)
        sf = compute_subsidy(plan, c)
        assert sf.alpha == pytest.approx(1.0, abs=1e-12)
        assert sf.total_under_plan == pytest.approx(1.0, abs=1e-8)
        assert sf.max_clamp <= 1e-9
        # optimal potentials vanish here, so the subsidy is the cost itself
        np.testing.assert_allclose(sf.entries.entries, c, atol=1e-12)

    def test_optimal_plan_needs_nothing(self, fix_a):
        mu, nu, c = fix_a
        sf = compute_subsidy(diagonal_plan(mu, nu), c)
        assert sf.alpha == pytest.approx(0.0, abs=1e-12)
        assert sf.total_under_plan == pytest.approx(0.0, abs=1e-8)

    def test_triangular_identity(self, fix_c):
        mu, nu, c = fix_c
        sf = compute_subsidy(diagonal_plan(mu, nu), c)
        assert sf.alpha == pytest.approx(0.0, abs=1e-12)
        assert sf.total_under_plan == pytest.approx(0.0, abs=1e-8)
        # forbidden cells stay forbidden in the subsidy
        assert np.isinf(sf.entries.entries[0, 1])

    def test_rejects_infinite_plan_cost(self, fix_c):
        mu, nu, c = fix_c
        mass = np.full((3, 3), 1 / 9)
        plan = TransportPlan(mass=mass, mu=mu, nu=nu)
        with pytest.raises(InputValidationError):
            compute_subsidy(plan, c)

    def test_satisfies_everything_it_claims(self, fix_a):
        mu, nu, c = fix_a
        plan = anti_diagonal_plan(mu, nu)
        sf = compute_subsidy(plan, c)
        results = _tag_results(sf.entries.entries, plan, c)
        assert all(results.values()), results
        value = solve_min_cost(mu, nu, c).value
        assert verify_lower_bound(sf.entries.entries, plan, c, value)


class TestSubsidyFunction:
    def test_rejects_negative_entries(self):
        with pytest.raises(InputValidationError):
            SubsidyFunction(entries=CostMatrix(entries=np.array([[-0.1, 0.0]])),
                            total_under_plan=0.0, alpha=0.0)


class TestConstraintTags:
    def test_full_cost_subsidy_passes_all(self, fix_a):
        mu, nu, c = fix_a
        plan = anti_diagonal_plan(mu, nu)
        results = _tag_results(c.copy(), plan, c)
        assert all(results.values())

    def test_zero_subsidy_fails_all_on_bad_plan(self, fix_a):
        mu, nu, c = fix_a
        plan = anti_diagonal_plan(mu, nu)
        f = np.zeros((2, 2))
        results = _tag_results(f, plan, c)
        assert not any(results.values())
        cert = verify_subsidy_constraint(f, plan, c, ConstraintTag.W1)
        assert cert.total_weight == pytest.approx(-2.0)
        assert set(cert.pairs) == {(0, 1), (1, 0)}

    def test_string_tags_accepted(self, fix_a):
        mu, nu, c = fix_a
        plan = diagonal_plan(mu, nu)
        assert verify_subsidy_constraint(np.zeros((2, 2)), plan, c, "W1") is None

    def test_infinite_subsidy_on_usable_cell(self, fix_a):
        mu, nu, c = fix_a
        plan = diagonal_plan(mu, nu)
        f = np.array([[0.0, INF], [0.0, 0.0]])
        # W1 never reads f off the support chain's upper sheet
        assert verify_subsidy_constraint(f, plan, c, ConstraintTag.W1) is None
        for tag in (ConstraintTag.S1, ConstraintTag.S2, ConstraintTag.W2):
            with pytest.raises(InputValidationError):
                verify_subsidy_constraint(f, plan, c, tag)

    def test_infinite_subsidy_on_forbidden_cell_is_fine(self, fix_c):
        mu, nu, c = fix_c
        plan = diagonal_plan(mu, nu)
        f = np.where(np.isinf(c), INF, 0.0)
        # accepted as input (unlike +inf on a usable cell), and the support
        # routes hold; the global routes legitimately fail with a zero
        # subsidy, since the tight lower sheet admits the descending chain
        # x0 -> x1 -> x2 -> x0 of weight -1
        results = _tag_results(f, plan, c)
        assert results["W1"] and results["S1"]
        assert not results["W2"] and not results["S2"]

    def test_shape_mismatch(self, fix_a):
        mu, nu, c = fix_a
        with pytest.raises(InputValidationError):
            verify_subsidy_constraint(np.zeros((3, 3)), diagonal_plan(mu, nu),
                                      c, ConstraintTag.W1)


class TestLadder:
    def test_implications_random(self):
        # S2 => S1 => W1 and S2 => W2 => W1 on a spread of (f, plan) pairs
        rng = np.random.default_rng(77)
        seen = set()
        for trial in range(120):
            inst = gen_random(int(rng.integers(2, 6)), int(rng.integers(2, 6)),
                              7000 + trial,
                              inf_density=0.2 if trial % 3 == 0 else 0.0)
            c = inst.cost.entries
            kind = trial % 4
            if kind == 0:
                plan = TransportPlan(
                    mass=nw_vertex_plan(inst.mu.weights, inst.nu.weights,
                                        row_order=rng.permutation(len(inst.mu)),
                                        col_order=rng.permutation(len(inst.nu))),
                    mu=inst.mu, nu=inst.nu)
            elif kind == 1:
                plan = TransportPlan(
                    mass=np.outer(inst.mu.weights, inst.nu.weights),
                    mu=inst.mu, nu=inst.nu)
            else:
                res = solve_min_cost(inst.mu, inst.nu, inst.cost)
                if res.status != "optimal":
                    continue
                plan = res.plan
            style = trial % 3
            if style == 0:
                f = np.zeros(c.shape)
            elif style == 1:
                f = rng.exponential(0.4, size=c.shape)
            else:
                f = np.where(np.isfinite(c), c, 0.0)
            f = np.where(np.isinf(c), INF, f)
            r = _tag_results(f, plan, c)
            seen.add(tuple(sorted(r.items())))
            assert not r["S2"] or r["S1"], r
            assert not r["S1"] or r["W1"], r
            assert not r["S2"] or r["W2"], r
            assert not r["W2"] or r["W1"], r
        assert len(seen) >= 3  # the sweep hits genuinely different outcomes


class TestLowerBound:
    def test_exact_payment_passes(self, fix_a):
        mu, nu, c = fix_a
        plan = anti_diagonal_plan(mu, nu)
        sf = compute_subsidy(plan, c)
        value = solve_min_cost(mu, nu, c).value
        assert verify_lower_bound(sf.entries.entries, plan, c, value)

    def test_underpayment_reports_shortfall(self, fix_a):
        mu, nu, c = fix_a
        plan = anti_diagonal_plan(mu, nu)
        verdict = verify_lower_bound(np.zeros((2, 2)), plan, c, 0.0)
        assert not verdict
        ((i, j, short),) = verdict.violations
        assert (i, j) == (-1, -1)
        assert short == pytest.approx(-1.0)

    def test_rejects_infinite_plan(self, fix_c):
        mu, nu, c = fix_c
        plan = TransportPlan(mass=np.full((3, 3), 1 / 9), mu=mu, nu=nu)
        with pytest.raises(InputValidationError):
            verify_lower_bound(np.zeros((3, 3)), plan, c, 1.0)


class TestIndifference:
    def test_every_plan_pays_the_optimum_after_subsidy(self):
        # subtracting the computed subsidy flattens the landscape: any plan's
        # subsidized cost equals the unsubsidized optimum
        rng = np.random.default_rng(31)
        checked = 0
        for trial in range(25):
            inst = gen_random(int(rng.integers(2, 6)), int(rng.integers(2, 6)),
                              9000 + trial)
            res = solve_min_cost(inst.mu, inst.nu, inst.cost)
            base = nw_vertex_plan(inst.mu.weights, inst.nu.weights,
                                  row_order=rng.permutation(len(inst.mu)),
                                  col_order=rng.permutation(len(inst.nu)))
            plan = TransportPlan(mass=base, mu=inst.mu, nu=inst.nu)
            sf = compute_subsidy(plan, inst.cost)
            subsidized = ext_sub_array(inst.cost.entries, sf.entries.entries)
            for other_mass in (
                res.plan.mass,
                np.outer(inst.mu.weights, inst.nu.weights),
                nw_vertex_plan(inst.mu.weights, inst.nu.weights),
            ):
                other = TransportPlan(mass=other_mass, mu=inst.mu, nu=inst.nu)
                got = plan_cost(other, subsidized)
                assert got == pytest.approx(res.value, abs=1e-8)
                checked += 1
        assert checked >= 60
