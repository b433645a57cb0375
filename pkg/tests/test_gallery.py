import numpy as np
import pytest

from oracles import harmonic_number

from transportlab import (
    GENERATOR_NAMES,
    INF,
    InputValidationError,
    SizeCapError,
    gen_instance,
    reciprocal_integrability_stat,
    run_gallery,
)

STANDARD = {
    "zero_one_infty": {"N": 40},
    "discrete_omega": {"N": 15, "r": 0.5},
    "rotation": {"p": 1, "q": 5},
    "quadratic_shift": {"N": 60},
    "reciprocal": {"N": 60},
    "no_optimizer": {"N": 7},
}


class TestGenerators:
    def test_names_registry(self):
        assert set(STANDARD) == set(GENERATOR_NAMES)

    def test_triangular_matches_fixture(self, fix_c):
        _, _, c = fix_c
        inst = gen_instance("zero_one_infty", {"N": 3})
        np.testing.assert_array_equal(inst.cost.entries, c)
        np.testing.assert_allclose(inst.mu.weights, 1 / 3)
        np.testing.assert_allclose(inst.nu.weights, 1 / 3)

    def test_omega_point_and_weights(self):
        inst = gen_instance("discrete_omega", {"N": 4, "r": 0.5})
        assert inst.mu.labels[-1] == "omega"
        assert len(inst.mu) == 5
        w = inst.mu.weights
        np.testing.assert_allclose(w[:-1] / w[1:], 2.0)

    def test_rotation_structure(self):
        inst = gen_instance("rotation", {"p": 1, "q": 5})
        c = inst.cost.entries
        ones = np.argwhere(c == 1.0)
        assert {(i, (i + 1) % 5) for i in range(5)} == {tuple(r) for r in ones}
        diag = np.diagonal(c)
        assert set(diag.tolist()) == {0.0, 2.0}
        assert np.isinf(c).sum() == 25 - 10

    def test_quadratic_shift_grids(self):
        inst = gen_instance("quadratic_shift", {"N": 4})
        np.testing.assert_allclose(inst.y, inst.x + 1.0)
        np.testing.assert_allclose(
            inst.cost.entries,
            (inst.x[:, None] - inst.y[None, :]) ** 2)

    def test_quadratic_shift_tail_weights(self):
        inst = gen_instance("quadratic_shift", {"N": 4, "tail": 0.5})
        w = inst.mu.weights
        np.testing.assert_allclose(w[:-1] / w[1:], 2.0)
        np.testing.assert_allclose(inst.nu.weights, w)

    def test_reciprocal_cost(self):
        inst = gen_instance("reciprocal", {"N": 2})
        # grid (0.5, 1.0): |1/x - 1/y + 1|
        np.testing.assert_allclose(inst.cost.entries, [[1.0, 2.0], [0.0, 1.0]])

    def test_no_optimizer_diagonal_penalty(self):
        inst = gen_instance("no_optimizer", {"N": 5})
        c = inst.cost.entries
        assert (np.diagonal(c) == 1.0).all()
        assert c[0, 1] == pytest.approx((1 / 5) ** 2)

    @pytest.mark.parametrize("name,params", [
        ("zero_one_infty", {}),
        ("zero_one_infty", {"N": 1}),
        ("zero_one_infty", {"N": 2.5}),
        ("discrete_omega", {"N": 10, "r": 1.0}),
        ("rotation", {"p": 2, "q": 4}),
        ("rotation", {"p": 5, "q": 3}),
        ("quadratic_shift", {"N": 10, "tail": 1.0}),
        ("nonesuch", {"N": 3}),
    ])
    def test_rejects_bad_params(self, name, params):
        with pytest.raises(InputValidationError):
            gen_instance(name, params)

    def test_size_cap(self):
        with pytest.raises(SizeCapError):
            gen_instance("reciprocal", {"N": 100_000})


class TestFactReports:
    @pytest.mark.parametrize("name", sorted(STANDARD))
    def test_all_facts_pass(self, name):
        report = run_gallery(name, STANDARD[name])
        for fact in report.facts:
            assert fact.passed, (name, fact.description, fact.expected,
                                 fact.observed)
        assert report.all_passed

    @pytest.mark.parametrize("name", sorted(STANDARD))
    def test_deterministic(self, name):
        a = run_gallery(name, STANDARD[name])
        b = run_gallery(name, STANDARD[name])
        assert a.params == b.params
        assert [f.observed for f in a.facts] == [f.observed for f in b.facts]

    def test_fact_fields_are_well_formed(self):
        report = run_gallery("zero_one_infty", {"N": 12})
        assert report.name == "zero_one_infty"
        assert report.params == {"N": 12}
        for fact in report.facts:
            assert fact.relation in ("eq", "le", "ge")
            assert fact.source in ("analytic", "construction", "brute-force",
                                   "structural", "solver")
            assert fact.tolerance >= 0

    def test_relation_semantics(self):
        report = run_gallery("zero_one_infty", {"N": 25})
        by_desc = {f.description: f for f in report.facts}
        exact = [f for f in report.facts if f.relation == "eq"]
        assert exact, by_desc.keys()
        for f in exact:
            assert abs(f.observed - f.expected) <= f.tolerance


class TestIntegrabilityStat:
    def test_matches_harmonic_number(self):
        for n in (1, 2, 10, 137):
            assert reciprocal_integrability_stat(n) == pytest.approx(
                harmonic_number(n), abs=1e-12)

    def test_matches_matrix_route(self):
        # the statistic equals integrating |1/x| against the uniform grid
        inst = gen_instance("reciprocal", {"N": 50})
        direct = float(np.sum(inst.mu.weights / inst.x))
        assert reciprocal_integrability_stat(50) == pytest.approx(direct, abs=1e-9)
