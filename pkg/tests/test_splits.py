import itertools
import random

import pytest

from phylocsp.formula import ConstraintLanguage, even_split_formula
from phylocsp.orbits import enumerate_orbits, orbit_of, relation_of_formula
from phylocsp.splits import (BooleanRelation, Gf2System,
                             InconsistentSystemError, affine_hull, is_affine,
                             nontrivial_solution, solution_count, solutions,
                             split_relation, split_vectors, system_rank)
from phylocsp.tree import parse_newick

LANG = ConstraintLanguage()


def vecs(*strings):
    return frozenset(tuple(int(c) for c in s) for s in strings)


def orbit_from(newick, tup):
    tree = parse_newick(newick)
    names = tuple(f"v{i}" for i in range(len(tup)))
    return orbit_of(tree.restrict(set(tup)), names, dict(zip(names, tup)))


def definitional_split_vectors(orbit):
    """Independent route: check the defining cone condition on all triples."""
    k = orbit.arity
    out = set()
    for s in itertools.product((0, 1), repeat=k):
        ok = True
        for p, q, r in itertools.product(range(k), repeat=3):
            if s[p] == s[q] != s[r]:
                # t_p t_q | t_r must hold
                if not orbit.cone_coords(r, p, q):
                    ok = False
                    break
        if ok:
            out.add(s)
    return frozenset(out)


class TestSplitVectors:
    def test_cone_orbit(self):
        orbit = orbit_from("((y,z),x);", ("x", "y", "z"))
        assert split_vectors(orbit) == vecs("000", "111", "011", "100")

    def test_all_equal_orbit(self):
        orbit = orbit_from("(a,b);", ("a", "a", "a"))
        assert split_vectors(orbit) == vecs("000", "111")

    def test_quartet_split_orbit(self):
        orbit = orbit_from("((a,b),(c,d));", ("a", "b", "c", "d"))
        assert split_vectors(orbit) == vecs("0000", "1111", "0011", "1100")

    def test_matches_definitional_route(self):
        for k in (2, 3, 4):
            for orbit in enumerate_orbits(k):
                assert split_vectors(orbit) == definitional_split_vectors(orbit)

    def test_complement_closure(self):
        for orbit in enumerate_orbits(4):
            sv = split_vectors(orbit)
            for s in sv:
                assert tuple(1 - b for b in s) in sv


class TestSplitRelation:
    def test_s_of_c(self):
        rel = split_relation(relation_of_formula(LANG["C"]))
        assert rel.vectors == vecs("000", "011", "100", "111")

    def test_s_of_n(self):
        rel = split_relation(relation_of_formula(LANG["N"]))
        assert rel.vectors == vecs("000", "111", "001", "011", "110", "100")

    def test_s_of_even_split(self):
        rel = split_relation(relation_of_formula(even_split_formula()))
        want = {v for v in itertools.product((0, 1), repeat=4)
                if sum(v) % 2 == 0}
        assert rel.vectors == frozenset(want)

    def test_empty_relation(self):
        from phylocsp.orbits import OrbitRelation

        rel = split_relation(OrbitRelation(3, frozenset()))
        assert rel.vectors == frozenset()


class TestIsAffine:
    def test_solution_set(self):
        assert is_affine(BooleanRelation.of(3, vecs("000", "011", "100", "111")))

    def test_s_of_n_not_affine(self):
        assert not is_affine(split_relation(relation_of_formula(LANG["N"])))

    def test_paper_example_relation(self):
        rel = BooleanRelation.of(4, vecs("0000", "1100", "0011", "1111"))
        assert is_affine(rel)

    def test_empty_affine(self):
        assert is_affine(BooleanRelation.of(3, []))

    def test_matches_triple_closure_bruteforce(self):
        rng = random.Random(7)
        for _ in range(60):
            n = rng.randint(1, 4)
            m = rng.randint(1, min(8, 2 ** n))
            rel = BooleanRelation.of(n, {
                tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(m)})
            brute = all(
                tuple(a ^ b ^ c for a, b, c in zip(x, y, z)) in rel.vectors
                for x in rel.vectors for y in rel.vectors for z in rel.vectors)
            assert is_affine(rel) == brute


class TestAffineHull:
    def test_cone_split_equation(self):
        sys = affine_hull(BooleanRelation.of(3, vecs("000", "011", "100", "111")))
        assert len(sys.rows) == 1
        mask, const = sys.rows[0]
        assert mask == 0b110 and const == 0

    def test_even_parity_equation(self):
        want = {v for v in itertools.product((0, 1), repeat=4)
                if sum(v) % 2 == 0}
        sys = affine_hull(BooleanRelation.of(4, want))
        assert len(sys.rows) == 1
        assert sys.rows[0] == (0b1111, 0)

    def test_two_point_hull(self):
        n = 5
        sys = affine_hull(BooleanRelation.of(n, {(0,) * n, (1,) * n}))
        assert len(sys.rows) == n - 1
        sols = set(solutions(sys))
        assert sols == {(0,) * n, (1,) * n}

    def test_hull_equals_set_iff_affine(self):
        rng = random.Random(8)
        for _ in range(100):
            n = rng.randint(1, 6)
            m = rng.randint(1, 2 ** n)
            rel = BooleanRelation.of(n, {
                tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(m)})
            sys = affine_hull(rel)
            count = solution_count(sys)
            assert (count == len(rel.vectors)) == is_affine(rel)
            # hull always contains the relation
            sols = set(solutions(sys))
            assert rel.vectors <= sols


class TestNontrivialSolution:
    def test_parity_four(self):
        sys = Gf2System(("s1", "s2", "s3", "s4"), ((0b1111, 0),))
        sol = nontrivial_solution(sys)
        assert sol == {"s1": 0, "s2": 0, "s3": 1, "s4": 1}

    def test_forced_pair(self):
        sys = Gf2System(("s1", "s2"), ((0b11, 0),))
        assert nontrivial_solution(sys) is None

    def test_empty_system(self):
        sys = Gf2System(("s1", "s2"), ())
        sol = nontrivial_solution(sys)
        assert sol == {"s1": 0, "s2": 1}

    def test_inconsistent_raises(self):
        sys = Gf2System(("s1",), ((0, 1),))
        with pytest.raises(InconsistentSystemError):
            nontrivial_solution(sys)

    def test_none_iff_corank_one(self):
        rng = random.Random(9)
        for _ in range(100):
            n = rng.randint(2, 8)
            rows = []
            for _ in range(rng.randint(0, n + 2)):
                # even-weight masks keep both constant vectors as solutions
                mask = 0
                for _ in range(2 * rng.randint(1, n // 2 if n >= 2 else 1)):
                    mask ^= 1 << rng.randrange(n)
                if bin(mask).count("1") % 2:
                    continue
                rows.append((mask, 0))
            sys = Gf2System(tuple(f"s{i}" for i in range(n)), tuple(rows))
            dim = n - system_rank(sys)
            sol = nontrivial_solution(sys, rng if rng.random() < 0.5 else None)
            assert (sol is None) == (dim <= 1)
            if sol is not None:
                bits = [sol[v] for v in sys.variables]
                assert 0 < sum(bits) < n
                for mask, const in rows:
                    acc = 0
                    for i, b in enumerate(bits):
                        if (mask >> i) & 1:
                            acc ^= b
                    assert acc == const
