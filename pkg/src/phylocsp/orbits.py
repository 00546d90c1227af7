"""Finite orbit representation of formula-defined relations.

A k-tuple of leaves is classified, up to automorphisms of the underlying
homogeneous leaf structure, by its equality pattern (which coordinates
coincide) together with the induced binary topology on the pattern's
blocks.  That pair is an `Orbit`; a quantifier-free formula of arity k
denotes a finite set of orbits, an `OrbitRelation`.

Blocks are labelled by their smallest coordinate (1-based, as a string),
which doubles as the leaf label of the block in the orbit topology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import PhylocspError
from .formula import ConstraintLanguage, PhyloFormula, compile_formula
from .tree import Tree, enumerate_trees

__all__ = [
    "EqualityPattern", "Orbit", "OrbitRelation", "OrbitError",
    "enumerate_orbits", "orbit_of", "relation_of_formula", "project",
    "eval_pp", "set_partitions", "all_patterns", "orbit_count",
    "DEFAULT_ORBIT_BOUND",
]

DEFAULT_ORBIT_BOUND = 6


class OrbitError(PhylocspError, ValueError):
    pass


def set_partitions(items: Sequence) -> Iterator[tuple]:
    """All partitions of `items`, in canonical (restricted-growth) order."""
    items = list(items)
    if not items:
        yield ()
        return

    def rec(i, blocks):
        if i == len(items):
            yield tuple(tuple(b) for b in blocks)
            return
        x = items[i]
        for b in blocks:
            b.append(x)
            yield from rec(i + 1, blocks)
            b.pop()
        blocks.append([x])
        yield from rec(i + 1, blocks)
        blocks.pop()

    yield from rec(1, [[items[0]]])


@dataclass(frozen=True)
class EqualityPattern:
    """A partition of coordinates 0..k-1 into equality blocks."""

    blocks: tuple

    @staticmethod
    def from_blocks(blocks: Iterable[Iterable[int]]) -> "EqualityPattern":
        canon = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))
        seen = [c for b in canon for c in b]
        if sorted(seen) != list(range(len(seen))) or not canon:
            raise OrbitError(f"blocks do not partition 0..k-1: {canon}")
        return EqualityPattern(canon)

    @staticmethod
    def from_values(values: Sequence) -> "EqualityPattern":
        groups: dict = {}
        for i, v in enumerate(values):
            groups.setdefault(v, []).append(i)
        return EqualityPattern.from_blocks(groups.values())

    @property
    def arity(self) -> int:
        return sum(len(b) for b in self.blocks)

    @cached_property
    def _index(self) -> dict:
        return {c: i for i, b in enumerate(self.blocks) for c in b}

    def block_index(self, coord: int) -> int:
        return self._index[coord]

    def same_block(self, i: int, j: int) -> bool:
        return self._index[i] == self._index[j]

    def block_label(self, coord: int) -> str:
        return str(self.blocks[self._index[coord]][0] + 1)

    def equal_pairs(self) -> Iterator[tuple]:
        for b in self.blocks:
            yield from itertools.combinations(b, 2)

    def meet(self, other: "EqualityPattern") -> "EqualityPattern":
        """Common refinement: blocks are the non-empty pairwise intersections."""
        groups: dict = {}
        for c in range(self.arity):
            groups.setdefault((self._index[c], other._index[c]), []).append(c)
        return EqualityPattern.from_blocks(groups.values())

    def coarsens(self, other: "EqualityPattern") -> bool:
        """True iff every block of `other` sits inside one block of self."""
        return all(len({self._index[c] for c in b}) == 1 for b in other.blocks)

    def restrict(self, indices: Sequence[int]) -> "EqualityPattern":
        """Pattern induced on a coordinate subsequence (renumbered 0..p-1)."""
        pos = {c: p for p, c in enumerate(indices)}
        groups: dict = {}
        for c in indices:
            groups.setdefault(self._index[c], []).append(pos[c])
        return EqualityPattern.from_blocks(groups.values())

    @property
    def is_single_block(self) -> bool:
        return len(self.blocks) == 1

    def __str__(self):
        return "|".join(",".join(str(c + 1) for c in b) for b in self.blocks)


@dataclass(frozen=True)
class Orbit:
    """Equality pattern plus binary topology on the pattern's blocks."""

    pattern: EqualityPattern
    topology: Tree

    def __post_init__(self):
        want = {str(b[0] + 1) for b in self.pattern.blocks}
        if set(self.topology.leaves) != want:
            raise OrbitError(
                f"topology leaves {sorted(self.topology.leaves)} do not match "
                f"blocks {sorted(want)}")

    @property
    def arity(self) -> int:
        return self.pattern.arity

    def leaf_of(self, coord: int) -> str:
        return self.pattern.block_label(coord)

    @cached_property
    def canonical_assignment(self) -> dict:
        return {f"x{c+1}": self.leaf_of(c) for c in range(self.arity)}

    def satisfies(self, phi: PhyloFormula) -> bool:
        if phi.arity != self.arity:
            raise OrbitError(f"arity mismatch: {phi.arity} vs {self.arity}")
        a = {v: self.leaf_of(c) for c, v in enumerate(phi.variables)}
        return compile_formula(phi)(self.topology, a)

    def cone_coords(self, i: int, j: int, l: int) -> bool:
        """Truth of t_i | t_j t_l for a representative tuple."""
        return self.topology.cone(self.leaf_of(i), self.leaf_of(j), self.leaf_of(l))

    def tuple_orbit(self, coords: Sequence[int]) -> "Orbit":
        """Orbit of the tuple obtained by picking these coordinates in order."""
        values = [self.leaf_of(c) for c in coords]
        return orbit_of(self.topology, tuple(range(len(coords))),
                        dict(enumerate(values)))

    def project(self, indices: Sequence[int]) -> "Orbit":
        indices = list(indices)
        if not indices:
            raise OrbitError("empty projection index list")
        pattern = self.pattern.restrict(indices)
        keep_labels = {self.leaf_of(c) for c in indices}
        sub = self.topology.restrict(keep_labels)
        pos = {c: p for p, c in enumerate(indices)}
        relabel: dict = {}
        for c in indices:
            old = self.leaf_of(c)
            new = str(min(pos[d] for d in indices
                          if self.pattern.same_block(c, d)) + 1)
            relabel[old] = new
        return Orbit(pattern, sub.relabel(relabel))

    def key(self) -> str:
        return f"{self.pattern} {self.topology.newick()}"

    def __repr__(self):
        return f"Orbit({self.key()!r})"


@dataclass(frozen=True)
class OrbitRelation:
    """A finite union of orbits of a fixed arity."""

    arity: int
    orbits: frozenset

    def __post_init__(self):
        for o in self.orbits:
            if o.arity != self.arity:
                raise OrbitError("orbit arity mismatch in relation")

    def __contains__(self, orbit: Orbit) -> bool:
        return orbit in self.orbits

    def sorted_orbits(self) -> list:
        return sorted(self.orbits, key=lambda o: o.key())


def all_patterns(k: int) -> tuple:
    return tuple(EqualityPattern.from_blocks(p) for p in set_partitions(range(k)))


@lru_cache(maxsize=None)
def _catalogue(k: int) -> tuple:
    out = []
    for pattern in all_patterns(k):
        labels = [str(b[0] + 1) for b in pattern.blocks]
        for topo in enumerate_trees(labels):
            out.append(Orbit(pattern, topo))
    return tuple(out)


def enumerate_orbits(k: int, bound: int = DEFAULT_ORBIT_BOUND) -> tuple:
    """The complete duplicate-free orbit catalogue for arity k."""
    if not 1 <= k <= bound:
        raise OrbitError(f"arity {k} outside 1..{bound}")
    return _catalogue(k)


def orbit_count(k: int) -> int:
    """Closed form: sum over partitions of (2m-3)!! topologies on m blocks."""
    from .tree import double_factorial

    total = 0
    for p in set_partitions(range(k)):
        m = len(p)
        total += 1 if m <= 1 else double_factorial(2 * m - 3)
    return total


def orbit_of(tree: Tree, variables: Sequence, assignment: Mapping) -> Orbit:
    """Orbit of the tuple (assignment[v] for v in variables) in the tree."""
    values = [assignment[v] for v in variables]
    pattern = EqualityPattern.from_values(values)
    sub = tree.restrict(set(values))
    relabel = {values[b[0]]: str(b[0] + 1) for b in pattern.blocks}
    return Orbit(pattern, sub.relabel(relabel))


def relation_of_formula(phi: PhyloFormula,
                        bound: int = DEFAULT_ORBIT_BOUND) -> OrbitRelation:
    """The set of orbits whose canonical tuple satisfies the formula."""
    orbits = frozenset(o for o in enumerate_orbits(phi.arity, bound)
                       if o.satisfies(phi))
    return OrbitRelation(phi.arity, orbits)


def project(rel: OrbitRelation, indices: Sequence[int]) -> OrbitRelation:
    """Coordinate projection, orbit-wise, with set deduplication."""
    indices = list(indices)
    if not indices:
        raise OrbitError("empty projection index list")
    if any(not 0 <= i < rel.arity for i in indices):
        raise OrbitError(f"projection indices {indices} outside arity {rel.arity}")
    return OrbitRelation(len(indices),
                         frozenset(o.project(indices) for o in rel.orbits))


def eval_pp(free: Sequence[str], exist: Sequence[str], atoms: Sequence[tuple],
            language: ConstraintLanguage, target: Orbit,
            bound: int = DEFAULT_ORBIT_BOUND) -> bool:
    """Evaluate a primitive positive body on a target orbit.

    `atoms` are ('rel', name, args) or ('eq', a, b) over free + existential
    variables; the target orbit interprets the free variables.  True iff
    some orbit on the extended coordinate set restricts to the target and
    satisfies every atom.
    """
    free = list(free)
    exist = list(exist)
    k = len(free)
    if target.arity != k:
        raise OrbitError(f"target arity {target.arity} != {k} free variables")
    n = k + len(exist)
    if n > bound:
        raise OrbitError(f"{n} total variables exceed bound {bound}")
    coord = {v: i for i, v in enumerate(free + exist)}

    checked_atoms = []
    for atom in atoms:
        if atom[0] == "eq":
            _, a, b = atom
            checked_atoms.append(("eq", coord[a], coord[b]))
        elif atom[0] == "rel":
            _, name, args = atom
            phi = language[name]
            if len(args) != phi.arity:
                raise OrbitError(f"arity mismatch in atom {name}{tuple(args)}")
            rel = _relation_cached(phi, bound)
            checked_atoms.append(("rel", rel, tuple(coord[a] for a in args)))
        else:
            raise OrbitError(f"unknown atom kind {atom[0]!r}")

    prefix = list(range(k))
    for ext in enumerate_orbits(n, bound):
        if k and ext.project(prefix) != target:
            continue
        ok = True
        for atom in checked_atoms:
            if atom[0] == "eq":
                if not ext.pattern.same_block(atom[1], atom[2]):
                    ok = False
                    break
            else:
                if ext.tuple_orbit(atom[2]) not in atom[1]:
                    ok = False
                    break
        if ok:
            return True
    return False


@lru_cache(maxsize=None)
def _relation_cached(phi: PhyloFormula, bound: int) -> OrbitRelation:
    return relation_of_formula(phi, bound)
