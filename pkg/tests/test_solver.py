import itertools
import random

import pytest

from phylocsp.formula import (ConstraintLanguage, PhyloFormula, Eq,
                              make_instance, parse_triples, verify_solution)
from phylocsp.oracle import oracle_solve
from phylocsp.orbits import enumerate_orbits
from phylocsp.solver import (NotAffineHornError, Verdict, build_split_problem,
                             contract, instantiate_certificate, solve,
                             solve_instance, spec, substitute_clause)
from phylocsp.splits import BooleanRelation
from phylocsp.synth import (AffineHornClause, AffineHornFormula, AffinePart,
                            clause_holds_on_tree, formula_holds_on_tree, phi_b)
from phylocsp.tree import Tree

LANG = ConstraintLanguage()


def deq(*pairs):
    return frozenset(tuple(sorted(p)) for p in pairs)


def cone_part(x, y, z):
    """The split part of C: y and z on the same side, x on the other."""
    return phi_b(BooleanRelation.of(3, {(0, 1, 1)}), (x, y, z))


class TestContract:
    def test_duplicate_disjunct_collapses(self):
        formula = AffineHornFormula(
            ("x", "y", "z"),
            (AffineHornClause(deq(("x", "y"), ("x", "z"))),))
        out = contract(formula, {"y", "z"})
        assert out.clauses == (AffineHornClause(deq(("x", "y"))),)

    def test_affine_vector_filtering(self):
        formula = AffineHornFormula(("x", "y", "z"), (cone_part("x", "y", "z"),))
        out = contract(formula, {"x", "y"})
        # (0,1,1) is non-constant on the merged pair; remaining semantics x=z
        assert len(out.clauses) == 1
        part = out.clauses[0].affine
        assert part is not None
        assert part.vars == ("x", "z")
        assert part.splits == frozenset()

    def test_empty_clause(self):
        formula = AffineHornFormula(("x", "y"),
                                    (AffineHornClause(deq(("x", "y"))),))
        out = contract(formula, {"x", "y"})
        assert len(out.clauses) == 1 and out.clauses[0].is_empty

    def test_contract_semantics_vs_orbits(self):
        # contracted formula equals the original with an added equality,
        # checked by evaluation over all arity-2 orbits after merging x,y
        formula = AffineHornFormula(("x", "y", "z"), (cone_part("x", "y", "z"),))
        out = contract(formula, {"x", "y"})
        for orbit in enumerate_orbits(2):
            merged = {"x": 0, "z": 1}
            got = all(
                clause_holds_on_tree(cl, orbit.topology,
                                     {v: orbit.leaf_of(c) for v, c in merged.items()})
                for cl in out.clauses)
            want = all(
                clause_holds_on_tree(cl, orbit.topology,
                                     {"x": orbit.leaf_of(0), "y": orbit.leaf_of(0),
                                      "z": orbit.leaf_of(1)})
                for cl in formula.clauses)
            assert got == want


class TestBuildSplitProblem:
    def test_two_even_parts(self):
        even = BooleanRelation.of(4, {v for v in itertools.product((0, 1), repeat=4)
                                      if sum(v) % 2 == 0})
        f = AffineHornFormula(
            tuple(f"x{i}" for i in range(1, 7)),
            (phi_b(even, ("x1", "x2", "x3", "x4")),
             phi_b(even, ("x3", "x4", "x5", "x6"))))
        sys = build_split_problem(f)
        assert set(sys.rows) == {(0b001111, 0), (0b111100, 0)}

    def test_c_split_part(self):
        f = AffineHornFormula(("x", "y", "z"), (cone_part("x", "y", "z"),))
        sys = build_split_problem(f)
        assert sys.rows == ((0b110, 0),)

    def test_diseq_only_empty(self):
        f = AffineHornFormula(("x", "y"), (AffineHornClause(deq(("x", "y"))),))
        assert build_split_problem(f).rows == ()

    def test_mixed_clause_contributes_nothing(self):
        clause = AffineHornClause(deq(("x", "y")), cone_part("x", "y", "z").affine)
        f = AffineHornFormula(("x", "y", "z"), (clause,))
        assert build_split_problem(f).rows == ()


class TestSpec:
    def test_c_pair_witness(self):
        inst = parse_triples("a b | c\nc d | a\n")
        verdict = solve_instance(inst, LANG)
        assert verdict.sat
        assert verify_solution(inst, LANG, verdict.solution)
        assert verdict.solution.tree.leaves == {"a", "b", "c", "d"}

    def test_single_affine_clause_three_vars(self):
        f = AffineHornFormula(("x", "y", "z"), (cone_part("x", "y", "z"),))
        out = spec(f)
        assert isinstance(out, Tree)
        assert formula_holds_on_tree(f, out, {v: v for v in ("x", "y", "z")})

    def test_forced_equal(self):
        # two-variable system whose only solutions are the constants
        part = phi_b(BooleanRelation.of(2, set()), ("x", "y"))
        f = AffineHornFormula(("x", "y"), (part,))
        out = spec(f)
        assert out == frozenset({"x", "y"})

    def test_injectivity(self):
        inst = parse_triples("a b | c\nc d | b\n")
        verdict = solve_instance(inst, LANG)
        tree = verdict.solution.tree
        assert set(tree.leaves) == set(inst.variables)

    def test_forced_equal_confirmed_by_enumeration(self):
        # whenever spec forces X equal, every brute-force solution of the
        # formula assigns all of X one value
        rng = random.Random(11)
        from phylocsp.orbits import set_partitions
        from phylocsp.oracle import _topologies

        for _ in range(40):
            names = tuple(f"v{i}" for i in range(rng.randint(2, 4)))
            clauses = []
            for _ in range(rng.randint(1, 3)):
                xs = rng.sample(names, min(len(names), rng.randint(2, 3)))
                if rng.random() < 0.5 and len(xs) == 3:
                    clauses.append(cone_part(*xs))
                else:
                    clauses.append(phi_b(BooleanRelation.of(len(xs), set()),
                                         tuple(xs)))
            f = AffineHornFormula(names, tuple(clauses))
            out = spec(f)
            if isinstance(out, Tree):
                continue
            for partition in set_partitions(names):
                label_of = {v: str(i + 1) for i, b in enumerate(partition)
                            for v in b}
                for topo in _topologies(len(partition)):
                    if all(clause_holds_on_tree(cl, topo, label_of)
                           for cl in f.clauses):
                        assert len({label_of[v] for v in out}) == 1


class TestSolve:
    def test_sat_triples(self):
        inst = parse_triples("a b | c\nc d | a\n")
        verdict = solve_instance(inst, LANG)
        assert verdict.sat and verify_solution(inst, LANG, verdict.solution)

    def test_unsat_cycle(self):
        inst = parse_triples("a b | c\nb c | a\na c | b\n")
        verdict = solve_instance(inst, LANG)
        assert not verdict.sat
        assert verdict.reason

    def test_eq_and_neq_unsat(self):
        eq_clause = phi_b(BooleanRelation.of(2, set()), ("x", "y"))
        neq_clause = AffineHornClause(deq(("x", "y")))
        f = AffineHornFormula(("x", "y"), (eq_clause, neq_clause))
        verdict = solve(f)
        assert not verdict.sat

    def test_no_constraints_injective(self):
        f = AffineHornFormula(("x", "y", "z"), ())
        verdict = solve(f)
        assert verdict.sat
        assert verdict.solution.tree.leaves == {"x", "y", "z"}

    def test_empty_formula(self):
        assert solve(AffineHornFormula((), ())).sat


class TestSolveInstance:
    def test_exhaustive_triples_three_vars(self):
        variables = ("a", "b", "c")
        atoms = list(itertools.product(variables, repeat=3))
        for take in range(0, 3):
            for combo in itertools.combinations(atoms, take):
                inst = make_instance([("C", t) for t in combo], LANG,
                                     variables=variables)
                got = solve_instance(inst, LANG)
                want = oracle_solve(inst, LANG)
                assert got.sat == want.verdict.sat
                if got.sat:
                    assert verify_solution(inst, LANG, got.solution)

    def test_repeated_arguments(self):
        inst = make_instance([("C", ("a", "a", "b"))], LANG)
        assert not solve_instance(inst, LANG).sat
        inst2 = make_instance([("C", ("a", "b", "b"))], LANG)
        verdict = solve_instance(inst2, LANG)
        assert verdict.sat and verify_solution(inst2, LANG, verdict.solution)

    def test_npc_language_refused(self):
        inst = make_instance([("Q", ("a", "b", "c", "d"))], LANG)
        with pytest.raises(NotAffineHornError) as err:
            solve_instance(inst, LANG)
        assert "oracle" in str(err.value)

    def test_even_split_instances_vs_oracle(self):
        from phylocsp.formula import even_split_formula

        lang = ConstraintLanguage()
        lang.define("E", even_split_formula())
        rng = random.Random(12)
        names = ("a", "b", "c", "d", "e")
        for _ in range(40):
            constraints = [("E", tuple(rng.choice(names) for _ in range(4)))
                           for _ in range(rng.randint(1, 3))]
            inst = make_instance(constraints, lang, variables=names)
            got = solve_instance(inst, lang)
            want = oracle_solve(inst, lang)
            assert got.sat == want.verdict.sat
            if got.sat:
                assert verify_solution(inst, lang, got.solution)

    def test_empty_instance(self):
        inst = make_instance([], LANG)
        verdict = solve_instance(inst, LANG)
        assert verdict.sat and verdict.solution is None

    def test_deterministic(self):
        inst = parse_triples("a b | c\nc d | a\nb d | e\n")
        v1 = solve_instance(inst, LANG)
        v2 = solve_instance(inst, LANG)
        assert v1.solution.tree == v2.solution.tree

    def test_randomized_choice_keeps_verdicts(self):
        rng_all = random.Random(13)
        for seed in range(20):
            inst = parse_triples("a b | c\nc d | a\n")
            verdict = solve_instance(inst, LANG, rng=random.Random(seed))
            assert verdict.sat
            assert verify_solution(inst, LANG, verdict.solution)
        bad = parse_triples("a b | c\nb c | a\na c | b\n")
        for seed in range(20):
            assert not solve_instance(bad, LANG, rng=random.Random(seed)).sat

    def test_renaming_invariance(self):
        rng = random.Random(14)
        names = ("a", "b", "c", "d")
        for _ in range(60):
            constraints = [("C", tuple(rng.choice(names) for _ in range(3)))
                           for _ in range(rng.randint(1, 3))]
            inst = make_instance(constraints, LANG, variables=names)
            perm = dict(zip(names, rng.sample(names, len(names))))
            renamed = make_instance(
                [(n, tuple(perm[a] for a in args)) for n, args in constraints],
                LANG, variables=tuple(perm[v] for v in names))
            assert solve_instance(inst, LANG).sat == \
                solve_instance(renamed, LANG).sat


def test_instantiate_certificate_repeats():
    from phylocsp.synth import certificate_for

    cert = certificate_for(LANG["C"]).certificate
    clauses = instantiate_certificate(cert, ("a", "a", "b"))
    assert any(cl.is_empty for cl in clauses)
