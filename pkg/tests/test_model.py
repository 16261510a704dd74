import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pottscert.builders import combined_example, random_grid
from pottscert.model import (
    FORBIDDEN,
    CostPerturbation,
    ModelError,
    PottsInstance,
    WeightPerturbation,
    apply_cost_perturbation,
    apply_weight_perturbation,
    boundary,
    dumps_instance,
    loads_instance,
    objective,
    objective_exact,
    replace_forbidden,
    restricted_instance,
)

from conftest import small_random_instance


def two_node(costs_u=(0.0, 1.0), costs_v=(0.0, 1.0), w=1.0):
    return PottsInstance(2, 2, (tuple(costs_u), tuple(costs_v)), ((0, 1, w),))


class TestConstruction:
    def test_edges_are_canonicalized_and_sorted(self):
        inst = PottsInstance(3, 2, ((0, 1), (0, 1), (0, 1)), ((2, 0, 1.0), (2, 1, 2.0)))
        assert inst.edges == ((0, 2, 1.0), (1, 2, 2.0))

    def test_rejects_self_loop(self):
        with pytest.raises(ModelError):
            PottsInstance(2, 2, ((0, 1), (0, 1)), ((0, 0, 1.0),))

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ModelError):
            PottsInstance(2, 2, ((0, 1), (0, 1)), ((0, 1, 1.0), (1, 0, 2.0)))

    def test_rejects_negative_weight(self):
        with pytest.raises(ModelError):
            PottsInstance(2, 2, ((0, 1), (0, 1)), ((0, 1, -0.5),))

    def test_rejects_all_forbidden_node(self):
        with pytest.raises(ModelError):
            PottsInstance(1, 2, ((FORBIDDEN, FORBIDDEN),), ())

    def test_rejects_out_of_range_edge(self):
        with pytest.raises(ModelError):
            PottsInstance(2, 2, ((0, 1), (0, 1)), ((0, 5, 1.0),))

    def test_rejects_bad_cost_shape(self):
        with pytest.raises(ModelError):
            PottsInstance(2, 2, ((0, 1, 2), (0, 1)), ())


class TestObjective:
    def test_triangle_paper_value(self, triangle):
        inst, g = triangle
        assert objective(inst, g) == 2.0

    def test_single_node_is_cost(self):
        inst = PottsInstance(1, 3, ((5.0, 3.0, 7.0),), ())
        assert objective(inst, (1,)) == 3.0

    def test_combined_paper_value(self, combined):
        inst, g, _ = combined
        assert objective(inst, g) == pytest.approx(1.02, abs=1e-12)

    def test_forbidden_label_gives_infinity(self, triangle):
        inst, _ = triangle
        assert math.isinf(objective(inst, (0, 0, 0)))
        assert objective_exact(inst, (0, 0, 0)) == FORBIDDEN

    def test_dimension_mismatch_rejected(self, triangle):
        inst, _ = triangle
        with pytest.raises(ModelError):
            objective(inst, (0, 1))

    def test_adding_cut_edge_adds_exactly_its_weight(self):
        base = PottsInstance(3, 2, ((0, 1), (0, 1), (0, 1)), ((0, 1, 1.0),))
        more = PottsInstance(3, 2, ((0, 1), (0, 1), (0, 1)), ((0, 1, 1.0), (1, 2, 0.7)))
        f = (0, 0, 1)
        assert objective(more, f) == pytest.approx(objective(base, f) + 0.7)
        same = (0, 0, 0)
        assert objective(more, same) == pytest.approx(objective(base, same))


class TestWeightPerturbation:
    def test_identity(self, triangle):
        inst, _ = triangle
        p = WeightPerturbation((1.0,) * 3, 1.0, 1.0)
        assert apply_weight_perturbation(inst, p).edges == inst.edges

    def test_uniform_halving(self, triangle):
        inst, _ = triangle
        p = WeightPerturbation((0.5,) * 3, 2.0, 1.0)
        out = apply_weight_perturbation(inst, p)
        assert all(w == 0.5 for _, _, w in out.edges)

    def test_out_of_range_rejected(self):
        with pytest.raises(ModelError):
            WeightPerturbation((0.4,), 2.0, 1.0)
        with pytest.raises(ModelError):
            WeightPerturbation((1.2,), 2.0, 1.0)

    def test_objective_changes_only_through_cut_edges(self):
        inst = random_grid(3, 3, 3, seed=11)
        rng = np.random.default_rng(5)
        factors = rng.uniform(0.5, 1.0, inst.num_edges)
        p = WeightPerturbation(tuple(factors), 2.0, 1.0)
        out = apply_weight_perturbation(inst, p)
        f = tuple(rng.integers(0, 3, inst.num_nodes))
        expected = objective(inst, f)
        for e, (u, v, w) in enumerate(inst.edges):
            if f[u] != f[v]:
                expected += (factors[e] - 1.0) * w
        assert objective(out, f) == pytest.approx(expected)

    def test_composition_is_multiplicative(self):
        inst = random_grid(2, 3, 2, seed=3)
        rng = np.random.default_rng(9)
        f1 = rng.uniform(0.5, 1.0, inst.num_edges)
        f2 = rng.uniform(2 / 3, 1.5, inst.num_edges)
        p1 = WeightPerturbation(tuple(f1), 2.0, 1.0)
        p2 = WeightPerturbation(tuple(f2), 1.5, 1.5)
        combined_p = WeightPerturbation(tuple(f1 * f2), 3.0, 1.5)
        once = apply_weight_perturbation(apply_weight_perturbation(inst, p1), p2)
        twice = apply_weight_perturbation(inst, combined_p)
        for (_, _, a), (_, _, b) in zip(once.edges, twice.edges):
            assert a == pytest.approx(b)


class TestCostPerturbation:
    def test_zero_shift_is_identity(self, combined):
        inst, _, _ = combined
        cp = CostPerturbation(
            frozenset({0, 1, 2}),
            {0: (0.0, 0.0, 0.0)},
            {0: (1.0, 1.0, 1.0)},
        )
        assert apply_cost_perturbation(inst, cp).node_costs == inst.node_costs

    def test_whole_graph_block_has_no_boundary(self, combined):
        inst, _, _ = combined
        cp = CostPerturbation(frozenset(range(6)), {}, {})
        assert apply_cost_perturbation(inst, cp).node_costs == inst.node_costs
        bad = CostPerturbation(frozenset(range(6)), {0: (0.1, 0, 0)}, {0: (1, 1, 1)})
        with pytest.raises(ModelError):
            apply_cost_perturbation(inst, bad)

    def test_combined_shifts_reproduce_updated_costs(self, combined):
        # Applying the hand dual's accumulated shifts on both block boundaries
        # lands on the updated cost table (labels 1 and 2; the published
        # label-3 entries are inconsistent with the update rule and skipped).
        inst, _, bd = combined
        eps = 0.01
        for block, nodes in ((frozenset({0, 1, 2}), (0, 2)), (frozenset({3, 4, 5}), (3, 4))):
            shifts = {}
            for u in nodes:
                row = [0.0, 0.0, 0.0]
                for (a, b), vec in bd.messages.items():
                    if a == u and b not in block:
                        for i in range(3):
                            row[i] += float(vec[i])
                shifts[u] = tuple(row)
            cp = CostPerturbation(block, shifts, {u: (eps, eps, eps) for u in nodes})
            inst = apply_cost_perturbation(inst, cp)
        assert inst.node_costs[0][:2] == (0.01, 0.0)
        assert inst.node_costs[2][:2] == (0.01, 0.0)
        assert inst.node_costs[3][:2] == (1.99, 0.0)
        assert inst.node_costs[4][:2] == (1.99, 0.0)

    def test_shift_exceeding_bound_rejected(self):
        with pytest.raises(ModelError):
            CostPerturbation(frozenset({0}), {0: (0.5,)}, {0: (0.2,)})


class TestBoundary:
    def test_whole_graph_has_empty_boundary(self, combined):
        inst, _, _ = combined
        border, crossing = boundary(inst, range(6))
        assert border == frozenset() and crossing == ()

    def test_combined_block_boundary(self, combined):
        inst, _, _ = combined
        border, crossing = boundary(inst, {0, 1, 2})
        assert border == frozenset({0, 2})
        assert set(crossing) == {(0, 3), (2, 4)}

    def test_grid_top_row(self):
        inst = random_grid(3, 3, 2, seed=0)
        border, crossing = boundary(inst, {0, 1, 2})
        assert border == frozenset({0, 1, 2})
        assert set(crossing) == {(0, 3), (1, 4), (2, 5)}

    def test_boundary_complement_symmetry(self):
        inst = small_random_instance(17)
        block = set(range(0, inst.num_nodes, 2))
        b1, c1 = boundary(inst, block)
        b2, c2 = boundary(inst, set(range(inst.num_nodes)) - block)
        assert set(c1) == set(c2)
        for u, v in c1:
            assert (u in b1) != (u in b2)
            assert (v in b1) != (v in b2)


class TestRestrictedInstance:
    def test_zero_messages_whole_graph(self, combined):
        inst, _, _ = combined
        out = restricted_instance(inst, range(6), {})
        assert out.node_costs == inst.node_costs
        assert out.edges == inst.edges

    def test_combined_block_with_hand_dual(self, combined):
        inst, _, bd = combined
        sub = restricted_instance(inst, [0, 1, 2], bd)
        assert sub.num_nodes == 3
        # Update rule applied to the original costs (labels 1 and 2).
        assert sub.node_costs[0][:2] == (0.01, 0.0)
        assert sub.node_costs[1][0] == 0.0
        assert sub.node_costs[2][:2] == (0.01, 0.0)
        # Internal edges of {u, v, w} survive with their weights.
        assert sub.edges == ((0, 1, 2.0), (0, 2, 2.0), (1, 2, 2.0))

    def test_interior_costs_copied_exactly(self):
        inst = random_grid(3, 3, 3, seed=23)
        block = [0, 1, 2, 3, 4, 5]
        _, crossing = boundary(inst, block)
        rng = np.random.default_rng(1)
        msgs = {}
        for u, v in crossing:
            msgs[(u, v)] = tuple(rng.normal(size=3))
            msgs[(v, u)] = tuple(rng.normal(size=3))
        sub = restricted_instance(inst, block, msgs)
        border, _ = boundary(inst, block)
        for local, u in enumerate(sorted(block)):
            if u not in border:
                assert sub.node_costs[local] == inst.node_costs[u]

    def test_restriction_objective_identity(self):
        inst = random_grid(3, 3, 3, seed=29)
        block = [0, 1, 3, 4, 6]
        _, crossing = boundary(inst, block)
        rng = np.random.default_rng(2)
        msgs = {}
        for u, v in crossing:
            msgs[(u, v)] = tuple(rng.normal(size=3))
            msgs[(v, u)] = tuple(rng.normal(size=3))
        sub = restricted_instance(inst, block, msgs)
        nodes = sorted(block)
        f = tuple(int(x) for x in rng.integers(0, 3, len(nodes)))
        expected = 0.0
        for local, u in enumerate(nodes):
            expected += float(inst.node_costs[u][f[local]])
            for (a, b), vec in msgs.items():
                if a == u:
                    expected += float(vec[f[local]])
        inside = set(block)
        index = {u: i for i, u in enumerate(nodes)}
        for u, v, w in inst.edges:
            if u in inside and v in inside and f[index[u]] != f[index[v]]:
                expected += float(w)
        assert objective(sub, f) == pytest.approx(expected)

    def test_rejects_wrong_keys(self, combined):
        inst, _, bd = combined
        with pytest.raises(ModelError):
            restricted_instance(inst, [0, 1, 2], {})
        bad = dict(bd.messages)
        bad[(1, 4)] = (0.0, 0.0, 0.0)
        with pytest.raises(ModelError):
            restricted_instance(inst, [0, 1, 2], bad)


class TestForbidden:
    def test_replace_forbidden_uses_scaled_default(self, triangle):
        inst, _ = triangle
        out = replace_forbidden(inst)
        big = max(1e6, 1e6 * inst.magnitude)
        assert out.node_costs[0][0] == big
        assert not out.has_forbidden

    def test_big_must_be_positive(self, triangle):
        inst, _ = triangle
        with pytest.raises(ModelError):
            replace_forbidden(inst, big=-1.0)

    def test_forbidden_outranks_any_finite_cost(self):
        assert FORBIDDEN > 1e300


class TestTextFormat:
    def test_roundtrip_with_infinities(self, triangle):
        inst, _ = triangle
        again = loads_instance(dumps_instance(inst))
        assert again == inst

    def test_roundtrip_is_byte_stable(self):
        inst = random_grid(3, 4, 3, seed=42)
        text = dumps_instance(inst)
        assert dumps_instance(loads_instance(text)) == text

    def test_exact_parse_reads_decimal_fractions(self):
        text = "POTTS 1 2 0\n0.1 2\n"
        inst = loads_instance(text, exact=True)
        assert inst.node_costs[0][0] == Fraction(1, 10)

    def test_header_and_token_errors(self):
        with pytest.raises(ModelError):
            loads_instance("SPIN 1 1 0\n0\n")
        with pytest.raises(ModelError):
            loads_instance("POTTS 2 2 0\n0 1\n")
        with pytest.raises(ModelError):
            loads_instance("POTTS 1 1 1\n0\n0 1 inf\n")

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            min_size=2,
            max_size=6,
        )
    )
    def test_seventeen_digit_floats_roundtrip_exactly(self, vals):
        k = len(vals)
        inst = PottsInstance(1, k, (tuple(vals),), ())
        again = loads_instance(dumps_instance(inst))
        assert again.node_costs == inst.node_costs
