"""Brute-force satisfiability by exhaustive semantic search, NAE hardness
gadgets, and random instance generation.

The oracle enumerates every candidate solution shape: each partition of
the variable set (the assignment kernel) combined with each binary
topology on the partition's blocks.  SAT is reported with the first
verifying candidate in canonical order; UNSAT only after exhausting the
space, which makes the oracle a ground-truth reference for the solver at
desk scale.
"""

from __future__ import annotations

import itertools
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import PhylocspError
from .formula import (ConstraintLanguage, Instance, Solution, compile_formula,
                      make_instance)
from .orbits import set_partitions
from .solver import Verdict
from .tree import Tree, enumerate_trees, random_tree

__all__ = [
    "OracleBudget", "OracleInconclusive", "OracleResult", "oracle_solve",
    "NaeInstance", "nae_satisfiable", "nae_identify", "nae_to_phylo",
    "gen_random_satisfiable_triples", "candidate_count",
]


class OracleInconclusive(PhylocspError, RuntimeError):
    """Budget exceeded before the search space was exhausted."""


@dataclass(frozen=True)
class OracleBudget:
    max_leaves: int = 7
    max_partitions: int = 1000
    timeout: float = 120.0

    def __post_init__(self):
        if self.max_leaves < 1 or self.max_partitions < 1 or self.timeout <= 0:
            raise ValueError("budget fields must be positive")


@dataclass(frozen=True)
class OracleResult:
    verdict: Verdict
    candidates: int


@lru_cache(maxsize=None)
def _topologies(m: int) -> tuple:
    return tuple(enumerate_trees([str(i + 1) for i in range(m)], bound=m))


def _bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[0]


def candidate_count(n_vars: int) -> int:
    """Closed form of the search-space size: Bell-partitioned topologies."""
    from .tree import double_factorial

    total = 0
    for part in set_partitions(range(n_vars)):
        m = len(part)
        total += 1 if m <= 1 else double_factorial(2 * m - 3)
    return total


def oracle_solve(inst: Instance, language: ConstraintLanguage,
                 budget: OracleBudget | None = None,
                 workers: int = 1) -> OracleResult:
    """Exhaustive search within budget; raises OracleInconclusive otherwise."""
    budget = budget or OracleBudget()
    variables = tuple(inst.variables)
    if not variables:
        return OracleResult(Verdict(True, None), 0)
    if len(variables) > budget.max_leaves:
        raise OracleInconclusive(
            f"{len(variables)} variables exceed the budget of "
            f"{budget.max_leaves} distinct leaves")
    if _bell(len(variables)) > budget.max_partitions:
        raise OracleInconclusive(
            f"Bell({len(variables)}) partitions exceed the budget of "
            f"{budget.max_partitions}")
    deadline = time.monotonic() + budget.timeout

    checks = []
    for name, args in inst.constraints:
        phi = language[name]
        checks.append((compile_formula(phi), phi.variables, args))

    def try_partition(partition) -> tuple[int, Solution | None]:
        blocks = partition
        label_of = {}
        for bi, block in enumerate(blocks):
            for v in block:
                label_of[v] = str(bi + 1)
        count = 0
        for tree in _topologies(len(blocks)):
            count += 1
            ok = True
            for fn, params, args in checks:
                a = {p: label_of[arg] for p, arg in zip(params, args)}
                if not fn(tree, a):
                    ok = False
                    break
            if ok:
                return count, Solution(tree, dict(label_of))
        return count, None

    total = 0
    partitions = set_partitions(variables)
    if workers > 1:
        # fan out in chunks; the first SAT in canonical order still wins
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for count, sol in pool.map(try_partition, partitions):
                total += count
                if sol is not None:
                    return OracleResult(Verdict(True, sol), total)
                if time.monotonic() > deadline:
                    raise OracleInconclusive("oracle timeout")
    else:
        for partition in partitions:
            count, sol = try_partition(partition)
            total += count
            if sol is not None:
                return OracleResult(Verdict(True, sol), total)
            if time.monotonic() > deadline:
                raise OracleInconclusive("oracle timeout")
    return OracleResult(
        Verdict(False, reason=f"exhausted {total} candidates"), total)


# -- NAE gadget ------------------------------------------------------------------

@dataclass(frozen=True)
class NaeInstance:
    """Positive not-all-equal 3SAT: clauses are variable triples."""

    variables: tuple
    clauses: tuple

    def __post_init__(self):
        vs = set(self.variables)
        for clause in self.clauses:
            if len(clause) != 3 or any(v not in vs for v in clause):
                raise ValueError(f"bad NAE clause {clause!r}")


def nae_satisfiable(nae: NaeInstance) -> bool:
    """Truth-table decision (the independent reference for the gadget)."""
    n = len(nae.variables)
    idx = {v: i for i, v in enumerate(nae.variables)}
    for bits in itertools.product((0, 1), repeat=n):
        if all(len({bits[idx[v]] for v in clause}) > 1 for clause in nae.clauses):
            return True
    return False


def nae_identify(nae: NaeInstance, pairs: Iterable[tuple]) -> NaeInstance:
    """Merge variable pairs (x = y identifications)."""
    parent = {v: v for v in nae.variables}

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb))
            parent[hi] = lo
    variables = tuple(dict.fromkeys(find(v) for v in nae.variables))
    clauses = tuple(tuple(find(v) for v in clause) for clause in nae.clauses)
    return NaeInstance(variables, clauses)


def _fresh(base: str, taken: set) -> str:
    name = base
    i = 0
    while name in taken:
        i += 1
        name = f"{base}{i}"
    taken.add(name)
    return name


def nae_to_phylo(nae: NaeInstance) -> Instance:
    """Reduce a NAE instance to constraints over Nd (plus one disequality).

    Two anchors a, b are forced distinct; every NAE variable v carries the
    domain constraint Nd(a, v, b) (v sits on a's side or on b's side), and
    each clause (x, y, z) contributes
    Nd(x,w1,y), Nd(w1,w2,z), Nd(w1,a,w2), Nd(w1,b,w2) with fresh w1, w2.
    The domain constraints are mandatory for the reduction's completeness.
    """
    taken = set(nae.variables)
    a = _fresh("a", taken)
    b = _fresh("b", taken)
    variables = list(nae.variables) + [a, b]
    constraints = [("Neq", (a, b))]
    for v in nae.variables:
        constraints.append(("Nd", (a, v, b)))
    for ci, clause in enumerate(nae.clauses):
        x, y, z = clause
        # clauses are unordered; a repeated variable must not fill both of
        # the first two positions or Nd(x, w1, x) is identically false
        if x == y and y != z:
            y, z = z, y
        w1 = _fresh(f"w1_{ci}", taken)
        w2 = _fresh(f"w2_{ci}", taken)
        variables += [w1, w2]
        constraints += [
            ("Nd", (x, w1, y)),
            ("Nd", (w1, w2, z)),
            ("Nd", (w1, a, w2)),
            ("Nd", (w1, b, w2)),
        ]
    return make_instance(constraints, ConstraintLanguage(), variables)


# -- generators -------------------------------------------------------------------

def gen_random_satisfiable_triples(n_vars: int, n_constraints: int,
                                   seed: int) -> Instance:
    """A random rooted-triple instance valid in a hidden random tree."""
    if n_vars < 3 and n_constraints > 0:
        raise ValueError("need at least 3 variables to emit triples")
    available = n_vars * (n_vars - 1) * (n_vars - 2) // 6
    if n_constraints > available:
        raise ValueError(
            f"{n_constraints} constraints exceed the {available} distinct triples")
    rng = random.Random(seed)
    names = [f"v{i+1}" for i in range(n_vars)]
    tree = random_tree(names, rng)
    chosen: set = set()
    constraints = []
    while len(constraints) < n_constraints:
        trio = tuple(sorted(rng.sample(names, 3)))
        if trio in chosen:
            continue
        chosen.add(trio)
        x, y, z = trio
        if tree.cone(x, y, z):
            out, pair = x, (y, z)
        elif tree.cone(y, x, z):
            out, pair = y, (x, z)
        else:
            out, pair = z, (x, y)
        constraints.append(("C", (out, pair[0], pair[1])))
    return make_instance(constraints, ConstraintLanguage(), names)
