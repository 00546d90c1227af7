import itertools
import random

import pytest

from phylocsp.splits import BooleanRelation
from phylocsp.synth import AffineHornClause, phi_b
from phylocsp.tree import Tree, parse_newick
from phylocsp.treeops import (FiniteBinaryOp, NViolation, OrderedLeafStructure,
                              TreeOpsError, build_finite_tx,
                              canonical_image_tree, check_perfect_dominance,
                              check_preserves_clause, check_semidominated,
                              check_swap_symmetry, n_violation_witness,
                              random_convex_structure)


def all_subsets(items):
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def clan_pairs(structure):
    """Ordered (A, B) clade pairs with A|B and A before B in the order."""
    tree = structure.tree
    clades = [tree.clade(n) for n in range(2 * structure.size - 1)]
    pos = {l: i for i, l in enumerate(structure.order)}
    for a, b in itertools.permutations(clades, 2):
        if not tree.clan_separated(a, b):
            continue
        if max(pos[l] for l in a) < min(pos[l] for l in b):
            yield a, b


class TestOrderedStructure:
    def test_convex_order_accepted(self):
        tree = parse_newick("((a,b),(c,d));")
        OrderedLeafStructure(tree, ("a", "b", "c", "d"))

    def test_non_convex_rejected(self):
        tree = parse_newick("((a,b),(c,d));")
        with pytest.raises(TreeOpsError):
            OrderedLeafStructure(tree, ("a", "c", "b", "d"))

    def test_random_structures_valid(self):
        rng = random.Random(16)
        for size in range(1, 8):
            random_convex_structure(size, rng)


class TestBuildFiniteTx:
    def test_singleton_base_case(self):
        s = OrderedLeafStructure(Tree.leaf("x"), ("x",))
        op = build_finite_tx(s)
        assert set(op.table) == {("x", "x")}
        assert op.codomain.size == 1

    def test_two_element_codomain_shape(self):
        s = OrderedLeafStructure(parse_newick("(u,v);"), ("u", "v"))
        op = build_finite_tx(s)
        f = op.table
        cod = op.codomain
        # the unique 4-leaf shape with f11|f22, f12|f21, {f11,f22}|{f12,f21}
        assert cod.clan_separated({f[("u", "u")]}, {f[("v", "v")]})
        assert cod.clan_separated({f[("u", "v")]}, {f[("v", "u")]})
        assert cod.clan_separated({f[("u", "u")], f[("v", "v")]},
                                  {f[("u", "v")], f[("v", "u")]})
        want = Tree((("d00", "d11"), ("d01", "d10")))
        relabel = {f[("u", "u")]: "d00", f[("v", "v")]: "d11",
                   f[("u", "v")]: "d01", f[("v", "u")]: "d10"}
        assert cod.relabel(relabel) == want

    def test_semidominated_everywhere(self):
        rng = random.Random(17)
        for size in (2, 3, 4, 5):
            s = random_convex_structure(size, rng)
            op = build_finite_tx(s, rng)
            for subset in all_subsets(s.order):
                assert check_semidominated(op, subset)

    def test_search_all_agrees_on_construction(self):
        rng = random.Random(18)
        s = random_convex_structure(4, rng)
        op = build_finite_tx(s, rng)
        for subset in all_subsets(s.order):
            assert check_semidominated(op, subset, search_all=True) == \
                check_semidominated(op, subset)

    def test_perfect_dominance_on_clan_pairs(self):
        rng = random.Random(19)
        for size in (3, 4, 5):
            s = random_convex_structure(size, rng)
            op = build_finite_tx(s, rng)
            for a, b in clan_pairs(s):
                assert check_perfect_dominance(op, a, b, "first")
                assert check_perfect_dominance(op, b, a, "second")

    def test_swap_symmetry(self):
        rng = random.Random(20)
        for size in (2, 3, 4, 5, 6):
            s = random_convex_structure(size, rng)
            assert check_swap_symmetry(build_finite_tx(s, rng))

    def test_unique_up_to_isomorphism(self):
        rng = random.Random(21)
        for size in (2, 3, 4, 5):
            s = random_convex_structure(size, rng)
            a = canonical_image_tree(build_finite_tx(s, random.Random(1)))
            b = canonical_image_tree(build_finite_tx(s, random.Random(2)))
            assert a == b

    def test_bound(self):
        rng = random.Random(22)
        s = random_convex_structure(9, rng)
        with pytest.raises(TreeOpsError):
            build_finite_tx(s)


class TestNegativeControls:
    def test_broken_cross_blocks_fail_semidomination(self):
        rng = random.Random(23)
        s = random_convex_structure(4, rng)
        op = build_finite_tx(s)
        # swap one f(x,y) with one f(y,x) value: the 01/10 blocks are no
        # longer clan separated as images
        x0, x1 = s.order[0], s.order[-1]
        table = dict(op.table)
        table[(x0, x1)], table[(x1, x0)] = table[(x1, x0)], table[(x0, x1)]
        broken = FiniteBinaryOp(s, op.codomain, table)
        assert not check_semidominated(broken, s.order)
        assert not check_semidominated(broken, s.order, search_all=True)

    def test_random_table_generally_not_dominated(self):
        rng = random.Random(24)
        tree = parse_newick("((a,b),(c,d));")
        s = OrderedLeafStructure(tree, ("a", "b", "c", "d"))
        op = build_finite_tx(s)
        failures = 0
        for _ in range(20):
            values = list(op.table.values())
            rng.shuffle(values)
            table = dict(zip(sorted(op.table), values))
            shuffled = FiniteBinaryOp(s, op.codomain, table)
            if not check_perfect_dominance(shuffled, ("a", "b"), ("c", "d"),
                                           "first"):
                failures += 1
        assert failures >= 15

    def test_swap_asymmetry_detected(self):
        rng = random.Random(25)
        s = random_convex_structure(3, rng)
        op = build_finite_tx(s)
        x0, x1 = s.order[0], s.order[1]
        table = dict(op.table)
        # break the gamma map by exchanging a diagonal with an off-diagonal
        table[(x0, x0)], table[(x0, x1)] = table[(x0, x1)], table[(x0, x0)]
        assert not check_swap_symmetry(FiniteBinaryOp(s, op.codomain, table))


class TestClausePreservation:
    def test_even_parity_split_vectors_xor(self):
        tree = parse_newick("((a,b),(c,d));")
        s = OrderedLeafStructure(tree, ("a", "b", "c", "d"))
        op = build_finite_tx(s)
        even = {v for v in itertools.product((0, 1), repeat=4)
                if sum(v) % 2 == 0}
        clause = phi_b(BooleanRelation.of(4, even), ("z1", "z2", "z3", "z4"))
        zvars = ("z1", "z2", "z3", "z4")
        ta = ("a", "b", "c", "d")   # split vector 0011
        tb = ("a", "c", "b", "d")   # split vector 0101
        assert check_preserves_clause(op, clause, zvars, [(ta, tb)]) == [True]
        image = tuple(op.table[(x, y)] for x, y in zip(ta, tb))
        # the image carries the xor split 0110
        assert op.codomain.clan_separated(
            {image[0], image[3]}, {image[1], image[2]})

    def test_diseq_clause_preserved_by_injectivity(self):
        rng = random.Random(26)
        s = random_convex_structure(4, rng)
        op = build_finite_tx(s)
        clause = AffineHornClause(frozenset({("u", "v")}), None)
        labs = s.order
        pairs = [((labs[0], labs[1]), (labs[2], labs[3])),
                 ((labs[0], labs[2]), (labs[0], labs[3]))]
        assert check_preserves_clause(op, clause, ("u", "v"), pairs) == \
            [True, True]

    def test_unsatisfying_tuple_rejected(self):
        rng = random.Random(27)
        s = random_convex_structure(3, rng)
        op = build_finite_tx(s)
        clause = AffineHornClause(frozenset({("u", "v")}), None)
        x = s.order[0]
        with pytest.raises(TreeOpsError):
            check_preserves_clause(op, clause, ("u", "v"), [((x, x), (x, x))])

    def test_n_violated(self):
        witness = n_violation_witness()
        assert witness.separated and not witness.in_n
        # both source triples satisfy N on the domain
        dom = witness.op.domain.tree
        assert dom.cone("z", "x", "y")      # xy|z
        assert dom.cone("x", "yp", "z")     # x|y'z
