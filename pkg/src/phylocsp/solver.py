"""Polynomial-time satisfiability of affine Horn formulas with witnesses.

The search alternates two phases.  `spec` looks for an injective solution:
it extracts the GF(2) split problem from the bare affine conjuncts, and
either certifies that all variables must coincide (no non-trivial split
solution) or splits the variable set along a non-trivial solution,
recurses on both sides, and joins the witness subtrees under a fresh
root.  `solve` drives the contraction loop: whenever `spec` forces a
variable set equal it is contracted to one variable, and an empty clause
after contraction means unsatisfiable.  At most n-1 contractions happen.

Clause conventions after simplification: no reflexive disequality
disjuncts, no affine part over a single distinct variable.  Clauses that
mix disequalities with an affine part never feed the split system; they
are discharged by the injectivity of spec's witnesses.
"""

from __future__ import annotations

import random
import sys as _sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .errors import PhylocspError
from .formula import ConstraintLanguage, Instance, Solution, verify_solution
from .orbits import DEFAULT_ORBIT_BOUND
from .splits import BooleanRelation, Gf2System, affine_hull, nontrivial_solution
from .synth import (AffineHornClause, AffineHornFormula, AffinePart,
                    canonical_splits, certificate_for)
from .tree import Tree

__all__ = [
    "Verdict", "SolverError", "NotAffineHornError",
    "contract", "build_split_problem", "spec", "solve", "solve_instance",
    "substitute_clause",
]


class SolverError(PhylocspError, RuntimeError):
    pass


class NotAffineHornError(PhylocspError, ValueError):
    """The instance language has no verified affine Horn certificates."""

    def __init__(self, names, verdicts=None):
        self.names = tuple(names)
        self.verdicts = verdicts
        super().__init__(
            f"relations {list(self.names)} are not affine Horn; "
            "the general solver refuses such languages -- use the brute-force "
            "oracle (phylocsp oracle) within its budget instead")


@dataclass(frozen=True)
class Verdict:
    sat: bool
    solution: Solution | None = None
    reason: str | None = None


def substitute_clause(clause: AffineHornClause,
                      rep: Callable[[str], str]) -> AffineHornClause | None:
    """Apply a variable substitution and simplify.

    Returns None when the clause becomes trivially true.  Reflexive
    disequalities are dropped; affine parts are deduplicated position-wise,
    split vectors that are non-constant on merged positions are removed,
    and a part collapsing to a single variable is true.  A clause losing
    all disjuncts and its affine part is the (false) empty clause.
    """
    diseqs = set()
    for a, b in clause.diseqs:
        ra, rb = rep(a), rep(b)
        if ra != rb:
            diseqs.add((ra, rb) if ra <= rb else (rb, ra))
    part = clause.affine
    new_part = None
    if part is not None:
        mapped = [rep(v) for v in part.vars]
        first_pos: dict = {}
        keep: list[int] = []
        for pos, v in enumerate(mapped):
            if v not in first_pos:
                first_pos[v] = pos
                keep.append(pos)
        if len(keep) == 1:
            return None
        if len(keep) == len(mapped):
            new_part = AffinePart(tuple(mapped), part.splits)
        else:
            vectors = set()
            for t in part.full_splits():
                if any(t[pos] != t[first_pos[mapped[pos]]]
                       for pos in range(len(mapped))):
                    continue
                vectors.add(tuple(t[pos] for pos in keep))
            new_part = AffinePart(tuple(mapped[pos] for pos in keep),
                                  canonical_splits(vectors, len(keep)))
    return AffineHornClause(frozenset(diseqs), new_part)


def contract(formula: AffineHornFormula, merge: Iterable[str]) -> AffineHornFormula:
    """Identify a variable set to its smallest member and simplify.

    Empty clauses are kept in the result; the caller decides whether their
    presence means unsatisfiability.
    """
    merge = set(merge)
    if not merge:
        raise SolverError("contract of an empty variable set")
    rep_name = min(merge)

    def rep(v: str) -> str:
        return rep_name if v in merge else v

    clauses = []
    for cl in formula.clauses:
        sub = substitute_clause(cl, rep)
        if sub is not None:
            clauses.append(sub)
    variables = tuple(v for v in formula.variables if v not in merge or v == rep_name)
    return AffineHornFormula(variables, tuple(clauses))


@lru_cache(maxsize=None)
def _hull_rows(arity: int, splits: frozenset) -> tuple:
    """Positional hull rows for B = splits (both orientations) + constants."""
    vectors = set()
    for t in splits:
        vectors.add(t)
        vectors.add(tuple(1 - b for b in t))
    vectors.add((0,) * arity)
    vectors.add((1,) * arity)
    system = affine_hull(BooleanRelation(arity, frozenset(vectors)))
    return system.rows


def build_split_problem(formula: AffineHornFormula) -> Gf2System:
    """The GF(2) system of the bare affine conjuncts (no disequality disjuncts)."""
    index = {v: i for i, v in enumerate(formula.variables)}
    rows = []
    for cl in formula.clauses:
        if cl.diseqs or cl.affine is None:
            continue
        part = cl.affine
        positions = [index[v] for v in part.vars]
        for mask, const in _hull_rows(part.arity, part.splits):
            gmask = 0
            for pos, col in enumerate(positions):
                if (mask >> pos) & 1:
                    gmask |= 1 << col
            rows.append((gmask, const))
    return Gf2System(formula.variables, tuple(rows))


def spec(formula: AffineHornFormula, rng: random.Random | None = None):
    """Search for an injective witness tree; returns a Tree or a variable set.

    A returned frozenset X certifies that every solution (if any) assigns
    all of X one value.  Precondition: the formula is simplified and has a
    non-empty variable set.
    """
    if not formula.variables:
        raise SolverError("spec on a formula without variables")
    pairs = [(cl, frozenset(cl.variables())) for cl in formula.clauses]
    return _spec(formula.variables, pairs, rng)


def _spec(variables: tuple, clause_pairs: list, rng):
    if len(variables) == 1:
        return Tree.leaf(variables[0])
    system = build_split_problem(
        AffineHornFormula(variables, tuple(cl for cl, _ in clause_pairs)))
    solution = nontrivial_solution(system, rng)
    if solution is None:
        return frozenset(variables)
    side0 = tuple(v for v in variables if solution[v] == 0)
    side1 = tuple(v for v in variables if solution[v] == 1)
    results = []
    for side in (side0, side1):
        sideset = frozenset(side)
        sub_pairs = [(cl, vs) for cl, vs in clause_pairs if vs <= sideset]
        out = _spec(side, sub_pairs, rng)
        if isinstance(out, frozenset):
            return out
        results.append(out)
    return Tree.join(results[0], results[1])


def _has_empty_clause(clauses) -> bool:
    return any(cl.is_empty for cl in clauses)


def solve(formula: AffineHornFormula, rng: random.Random | None = None) -> Verdict:
    """Decide satisfiability; SAT verdicts carry a witness Solution.

    Pure-equality clauses (an affine part whose split set is empty, with
    no disequality disjuncts) are preprocessed by union-find contraction;
    the main loop alternates spec with contraction of forced-equal sets.
    """
    if not formula.variables:
        return Verdict(True, None)

    parent = {v: v for v in formula.variables}

    def find(v: str) -> str:
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def union(vs: Iterable[str]):
        roots = sorted({find(v) for v in vs})
        for other in roots[1:]:
            parent[other] = roots[0]

    for cl in formula.clauses:
        if not cl.diseqs and cl.affine is not None and not cl.affine.splits:
            union(cl.affine.vars)

    old_limit = _sys.getrecursionlimit()
    _sys.setrecursionlimit(max(old_limit, 4 * len(formula.variables) + 2000))
    try:
        for _ in range(len(formula.variables) + 1):
            current_vars = tuple(dict.fromkeys(find(v) for v in formula.variables))
            clauses = []
            empty = False
            for cl in formula.clauses:
                sub = substitute_clause(cl, find)
                if sub is None:
                    continue
                if sub.is_empty:
                    empty = True
                    break
                clauses.append(sub)
            if empty:
                return Verdict(False, reason="contraction produced an empty clause")
            result = _spec(current_vars,
                           [(cl, frozenset(cl.variables())) for cl in clauses], rng)
            if isinstance(result, Tree):
                assignment = {v: find(v) for v in formula.variables}
                return Verdict(True, Solution(result, assignment))
            union(result)
        raise SolverError("contraction loop failed to terminate")
    finally:
        _sys.setrecursionlimit(old_limit)


def instantiate_certificate(certificate: AffineHornFormula,
                            args: Sequence[str]) -> list:
    """Instantiate a certificate on argument variables (repeats contracted).

    Returns the clause list; clauses that become true are dropped, clauses
    that become empty are kept (they witness unsatisfiability).
    """
    mapping = dict(zip(certificate.variables, args))
    out = []
    for cl in certificate.clauses:
        sub = substitute_clause(cl, lambda v: mapping[v])
        if sub is not None:
            out.append(sub)
    return out


def solve_instance(inst: Instance, language: ConstraintLanguage,
                   certificates: Mapping[str, AffineHornFormula] | None = None,
                   rng: random.Random | None = None,
                   bound: int = DEFAULT_ORBIT_BOUND) -> Verdict:
    """Solve an instance by conjoining instantiated relation certificates.

    Refuses languages whose used relations are not verified affine Horn
    (unless certificates are supplied).  SAT witnesses are re-verified
    against the original instance before being returned.
    """
    used = tuple(dict.fromkeys(name for name, _ in inst.constraints))
    if certificates is None:
        certificates = {}
        bad = []
        verdicts = {}
        for name in used:
            verdict = certificate_for(language[name], bound)
            verdicts[name] = verdict
            if not verdict.affine_horn:
                bad.append(name)
            else:
                certificates[name] = verdict.certificate
        if bad:
            raise NotAffineHornError(bad, verdicts)

    clauses = []
    for name, args in inst.constraints:
        clauses.extend(instantiate_certificate(certificates[name], args))
    formula = AffineHornFormula(tuple(inst.variables), tuple(clauses))
    verdict = solve(formula, rng)
    if verdict.sat and inst.variables:
        if not verify_solution(inst, language, verdict.solution):
            raise SolverError(
                "internal error: solver witness failed verification")
    return verdict
