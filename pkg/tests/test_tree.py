import itertools
import random

import pytest

from phylocsp.tree import (NewickError, Tree, TreeError, double_factorial,
                           enumerate_trees, parse_newick, random_tree)


def t(s):
    return parse_newick(s)


class TestYca:
    def test_sibling_pair(self):
        tree = t("((a,b),c);")
        node = tree.yca({"a", "b"})
        assert tree.clade(node) == {"a", "b"}

    def test_root(self):
        tree = t("((a,b),c);")
        assert tree.yca({"a", "c"}) == tree.root

    def test_three_of_four(self):
        # b, c, d spread across both root subtrees of (((a,b),c),d)
        tree = t("(((a,b),c),d);")
        assert tree.yca({"b", "c", "d"}) == tree.root

    def test_unknown_label(self):
        with pytest.raises(TreeError):
            t("(a,b);").yca({"a", "q"})


class TestClanSeparated:
    def test_sibling_subtrees(self):
        tree = t("((a,b),(c,d));")
        assert tree.clan_separated({"a", "b"}, {"c", "d"})

    def test_yca_at_root(self):
        tree = t("((a,b),c);")
        assert not tree.clan_separated({"a", "c"}, {"b"})

    def test_equal_singletons(self):
        tree = t("((a,b),c);")
        assert not tree.clan_separated({"a"}, {"a"})

    def test_symmetric(self):
        rng = random.Random(0)
        for _ in range(50):
            tree = random_tree([f"l{i}" for i in range(6)], rng)
            labs = sorted(tree.leaves)
            a = set(rng.sample(labs, rng.randint(1, 3)))
            b = set(rng.sample(labs, rng.randint(1, 3)))
            assert tree.clan_separated(a, b) == tree.clan_separated(b, a)


class TestCone:
    def test_outgroup(self):
        assert t("((a,b),c);").cone("c", "a", "b")

    def test_not_separated(self):
        # yca(b, c) is the root
        assert not t("((a,b),c);").cone("a", "b", "c")

    def test_repeated_pair(self):
        # u|vv holds for distinct leaves
        tree = t("((a,b),c);")
        assert tree.cone("a", "b", "b")
        assert not tree.cone("a", "a", "b")

    def test_trichotomy(self):
        rng = random.Random(1)
        for _ in range(30):
            tree = random_tree([f"l{i}" for i in range(7)], rng)
            for x, y, z in itertools.combinations(sorted(tree.leaves), 3):
                hits = [tree.cone(x, y, z), tree.cone(y, x, z), tree.cone(z, x, y)]
                assert sum(hits) == 1


def _cone_decomposition(tree, a, b):
    """A|B via the elementwise characterization (independent route)."""
    for x, x2 in itertools.product(a, repeat=2):
        for y in b:
            if not tree.cone(y, x, x2):
                return False
    for y, y2 in itertools.product(b, repeat=2):
        for x in a:
            if not tree.cone(x, y, y2):
                return False
    return True


def test_clan_separation_equals_cone_decomposition():
    for n in range(2, 6):
        labs = [f"l{i}" for i in range(n)]
        for tree in enumerate_trees(labs):
            for r in range(1, n):
                for a in itertools.combinations(labs, r):
                    rest = [l for l in labs if l not in a]
                    for s in range(1, len(rest) + 1):
                        for b in itertools.combinations(rest, s):
                            assert tree.clan_separated(a, b) == \
                                _cone_decomposition(tree, a, b)


def test_clan_separation_cone_decomposition_six_leaves_sampled():
    rng = random.Random(2)
    labs = [f"l{i}" for i in range(6)]
    trees = list(enumerate_trees(labs))
    assert len(trees) == 945
    for tree in rng.sample(trees, 120):
        for _ in range(12):
            a = tuple(rng.sample(labs, rng.randint(1, 3)))
            rest = [l for l in labs if l not in a]
            b = tuple(rng.sample(rest, rng.randint(1, len(rest))))
            assert tree.clan_separated(a, b) == _cone_decomposition(tree, a, b)


class TestEnumerate:
    def test_counts(self):
        assert sum(1 for _ in enumerate_trees(["a"])) == 1
        assert sum(1 for _ in enumerate_trees(["a", "b", "c"])) == 3
        assert sum(1 for _ in enumerate_trees(list("abcd"))) == 15
        assert sum(1 for _ in enumerate_trees(list("abcde"))) == 105

    def test_double_factorial_counts(self):
        for n in range(2, 8):
            labs = [f"l{i}" for i in range(n)]
            assert sum(1 for _ in enumerate_trees(labs)) == double_factorial(2 * n - 3)

    def test_pairwise_distinct(self):
        for n in range(2, 7):
            labs = [f"l{i}" for i in range(n)]
            trees = list(enumerate_trees(labs))
            assert len(set(trees)) == len(trees)

    def test_bound(self):
        with pytest.raises(TreeError):
            next(iter(enumerate_trees([f"l{i}" for i in range(9)])))


class TestNewick:
    def test_parse_example(self):
        assert t("((a,b),c);").cone("c", "a", "b")

    def test_round_trip_canonical(self):
        s = "((b,a),c);"
        tree = t(s)
        assert tree.newick() == "((a,b),c);"
        assert parse_newick(tree.newick()) == tree

    def test_unordered_children_equal(self):
        assert t("((a,b),c);") == t("(c,(b,a));")

    def test_quartet(self):
        tree = t("((a,b),(c,d));")
        assert tree.clan_separated({"a", "b"}, {"c", "d"})

    def test_optional_semicolon(self):
        assert t("(a,b)") == t("(a,b);")

    def test_malformed(self):
        for bad in ["((a,b)", "(a,b,c);", "a b", "(a,);", "", "(a,b));"]:
            with pytest.raises(NewickError):
                t(bad)

    def test_bad_label(self):
        with pytest.raises(TreeError):
            Tree.leaf("a-b")


class TestJoin:
    def test_outgroup(self):
        joined = Tree.join(t("(a,b);"), Tree.leaf("c"))
        assert joined.cone("c", "a", "b")

    def test_two_leaves(self):
        assert Tree.join(Tree.leaf("a"), Tree.leaf("b")) == t("(a,b);")

    def test_separation_by_construction(self):
        joined = Tree.join(t("((a,b),c);"), t("(d,e);"))
        assert joined.clan_separated({"a", "c"}, {"d", "e"})

    def test_overlap_rejected(self):
        with pytest.raises(TreeError):
            Tree.join(t("(a,b);"), t("(b,c);"))


class TestDerived:
    def test_restrict_suppresses_unary(self):
        tree = t("(((a,b),c),d);")
        assert tree.restrict({"a", "b", "d"}) == t("((a,b),d);")

    def test_restrict_single(self):
        assert t("(a,b);").restrict({"a"}) == Tree.leaf("a")

    def test_relabel(self):
        assert t("(a,b);").relabel({"a": "x", "b": "y"}) == t("(x,y);")

    def test_relabel_collision(self):
        with pytest.raises(TreeError):
            t("(a,b);").relabel({"a": "b"})

    def test_single_leaf_tree_legal(self):
        leaf = Tree.leaf("a")
        assert leaf.leaves == {"a"}
        assert leaf.yca({"a"}) == leaf.root


def test_random_tree_uniform_support():
    rng = random.Random(3)
    seen = {random_tree(list("abcd"), rng) for _ in range(600)}
    assert len(seen) == 15
