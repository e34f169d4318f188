import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jtprop.errors import (
    IndexOutOfRangeError,
    ScopeNotContainedError,
    StateOutOfRangeError,
    ZeroMassError,
)
from jtprop.potential import (
    PotentialTable,
    Scope,
    assignment_to_index,
    index_to_assignment,
    marginalize,
    multiply_into,
    normalize,
    projection_indices,
)

ABD = Scope((0, 1, 3), (2, 2, 2))


class TestIndexCodec:
    def test_zero_index_is_all_zero(self):
        assert index_to_assignment(ABD, 0) == (0, 0, 0)

    def test_last_variable_fastest(self):
        # index 5 decodes with the middle variable at 0: the codec that
        # groups clique (A,B,D) indices {0,1,4,5} under B=0
        assert index_to_assignment(ABD, 5) == (1, 0, 1)
        assert assignment_to_index(ABD, (1, 0, 1)) == 5

    def test_bijection_mixed_cards(self):
        scope = Scope((0, 1), (3, 2))
        seen = [index_to_assignment(scope, i) for i in range(scope.size)]
        assert seen == sorted(set(seen))  # lexicographic and distinct
        assert index_to_assignment(scope, 4) == (2, 0)
        for i, a in enumerate(seen):
            assert assignment_to_index(scope, a) == i

    def test_index_out_of_range(self):
        with pytest.raises(IndexOutOfRangeError):
            index_to_assignment(ABD, 8)
        with pytest.raises(IndexOutOfRangeError):
            index_to_assignment(ABD, -1)

    def test_state_out_of_range(self):
        with pytest.raises(StateOutOfRangeError):
            assignment_to_index(ABD, (0, 2, 0))

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_bijection_property(self, data):
        n = data.draw(st.integers(1, 4))
        cards = tuple(data.draw(st.integers(2, 4)) for _ in range(n))
        scope = Scope(tuple(range(n)), cards)
        index = data.draw(st.integers(0, scope.size - 1))
        assert assignment_to_index(scope, index_to_assignment(scope, index)) == index

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            Scope((1, 1), (2, 2))


class TestMultiplyInto:
    def test_all_ones_factor_is_identity(self):
        rng = np.random.default_rng(0)
        target = PotentialTable(ABD, rng.uniform(size=8))
        before = target.values.copy()
        multiply_into(target, PotentialTable.ones(Scope((1,), (2,))))
        assert np.array_equal(target.values, before)

    def test_expand_single_variable_factor(self):
        ab = Scope((0, 1), (2, 2))
        target = PotentialTable.ones(ab)
        factor = PotentialTable(Scope((0,), (2,)), [0.3, 0.7])
        multiply_into(target, factor)
        assert np.allclose(target.values, [0.3, 0.3, 0.7, 0.7])

    def test_same_scope_is_elementwise(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(size=8)
        b = rng.uniform(size=8)
        target = PotentialTable(ABD, a.copy())
        multiply_into(target, PotentialTable(ABD, b))
        assert np.array_equal(target.values, a * b)

    def test_scope_not_contained(self):
        target = PotentialTable.ones(Scope((0,), (2,)))
        factor = PotentialTable.ones(Scope((5,), (2,)))
        with pytest.raises(ScopeNotContainedError):
            multiply_into(target, factor)

    def test_agrees_with_assignment_level_definition(self):
        rng = np.random.default_rng(2)
        outer = Scope((0, 2, 5), (2, 3, 2))
        inner = Scope((5, 2), (2, 3))
        target = PotentialTable(outer, rng.uniform(size=outer.size))
        factor = PotentialTable(inner, rng.uniform(size=inner.size))
        expected = target.values.copy()
        for t in range(outer.size):
            a = dict(zip(outer.ids, index_to_assignment(outer, t)))
            f = assignment_to_index(inner, tuple(a[v] for v in inner.ids))
            expected[t] *= factor.values[f]
        multiply_into(target, factor)
        assert np.allclose(target.values, expected)


class TestMarginalize:
    def test_uniform_counts(self):
        table = PotentialTable.ones(ABD)
        out = marginalize(table, Scope((1,), (2,)))
        assert np.array_equal(out.values, [4.0, 4.0])

    def test_figure_grouping_sums(self):
        # indices {0,1,4,5} share B=0 and {2,3,6,7} share B=1
        table = PotentialTable(ABD, np.arange(8.0))
        out = marginalize(table, Scope((1,), (2,)))
        assert np.array_equal(out.values, [0 + 1 + 4 + 5, 2 + 3 + 6 + 7])

    def test_onto_same_scope_is_identity(self):
        rng = np.random.default_rng(3)
        table = PotentialTable(ABD, rng.uniform(size=8))
        out = marginalize(table, ABD)
        assert np.array_equal(out.values, table.values)

    def test_mass_conserved(self):
        rng = np.random.default_rng(4)
        scope = Scope((0, 1, 2, 3), (2, 3, 2, 4))
        table = PotentialTable(scope, rng.uniform(size=scope.size))
        for keep in ((0,), (1, 3), (0, 2, 3)):
            onto = Scope(keep, tuple(scope.cards[scope.position(v)] for v in keep))
            out = marginalize(table, onto)
            assert out.total() == pytest.approx(table.total(), rel=1e-9)

    def test_nested_marginalization_commutes(self):
        rng = np.random.default_rng(5)
        scope = Scope((0, 1, 2), (3, 2, 4))
        table = PotentialTable(scope, rng.uniform(size=scope.size))
        s12 = Scope((0, 1), (3, 2))
        s1 = Scope((0,), (3,))
        via = marginalize(marginalize(table, s12), s1)
        direct = marginalize(table, s1)
        assert np.allclose(via.values, direct.values, rtol=1e-12)


class TestNormalize:
    def test_basic(self):
        out = normalize(PotentialTable(Scope((0,), (2,)), [2.0, 2.0]))
        assert np.array_equal(out.values, [0.5, 0.5])
        out = normalize(PotentialTable(Scope((0,), (2,)), [1.0, 3.0]))
        assert np.array_equal(out.values, [0.25, 0.75])

    def test_zero_mass(self):
        with pytest.raises(ZeroMassError):
            normalize(PotentialTable(Scope((0,), (2,)), [0.0, 0.0]))

    def test_sums_to_one(self):
        rng = np.random.default_rng(6)
        table = PotentialTable(ABD, rng.uniform(size=8))
        assert normalize(table).total() == pytest.approx(1.0, abs=1e-12)


def test_projection_enumeration_agreement():
    outer = Scope((0, 1, 3), (2, 3, 2))
    inner = Scope((1, 3), (3, 2))
    proj = projection_indices(outer, inner)
    for r in range(outer.size):
        a = dict(zip(outer.ids, index_to_assignment(outer, r)))
        expected = assignment_to_index(inner, tuple(a[v] for v in inner.ids))
        assert proj[r] == expected


def test_table_rejects_negative_values():
    with pytest.raises(ValueError):
        PotentialTable(Scope((0,), (2,)), [-0.1, 1.1])


def test_table_rejects_wrong_length():
    with pytest.raises(ValueError):
        PotentialTable(ABD, np.ones(7))
