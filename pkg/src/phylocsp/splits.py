"""Split vectors, split relations, and GF(2) linear algebra.

A split vector of a k-tuple t is a 0/1 labelling s of the coordinates with
t_p t_q | t_r whenever s_p = s_q != s_r; the split relation S(R) collects
the split vectors of all tuples of R.  Boolean relations are affine iff
closed under coordinatewise x^y^z; affine hulls and non-trivial solutions
are computed by Gaussian elimination on bit-packed rows.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import PhylocspError
from .orbits import Orbit, OrbitRelation

__all__ = [
    "BooleanRelation", "Gf2System", "InconsistentSystemError",
    "split_vectors", "split_relation", "is_affine", "affine_hull",
    "nontrivial_solution", "solutions", "solution_count", "system_rank",
]


class InconsistentSystemError(PhylocspError, RuntimeError):
    """An inconsistent split system: impossible under the solver's invariants."""


@dataclass(frozen=True)
class BooleanRelation:
    """A set of {0,1}-vectors of uniform length."""

    arity: int
    vectors: frozenset

    @staticmethod
    def of(arity: int, vectors: Iterable) -> "BooleanRelation":
        vs = frozenset(tuple(int(b) for b in v) for v in vectors)
        for v in vs:
            if len(v) != arity or any(b not in (0, 1) for b in v):
                raise ValueError(f"bad vector {v} for arity {arity}")
        return BooleanRelation(arity, vs)

    def with_constants(self) -> "BooleanRelation":
        consts = {(0,) * self.arity, (1,) * self.arity}
        return BooleanRelation(self.arity, self.vectors | consts)

    def __len__(self):
        return len(self.vectors)


def split_vectors(orbit: Orbit) -> frozenset:
    """All split vectors of (any representative tuple of) the orbit.

    A vector must be constant on each equality block; it is a split vector
    iff it is constant overall or the 0-blocks and 1-blocks are clan
    separated in the orbit topology.
    """
    blocks = orbit.pattern.blocks
    labels = [str(b[0] + 1) for b in blocks]
    out = set()
    for bits in itertools.product((0, 1), repeat=len(blocks)):
        zeros = [lab for lab, s in zip(labels, bits) if s == 0]
        ones = [lab for lab, s in zip(labels, bits) if s == 1]
        if zeros and ones and not orbit.topology.clan_separated(zeros, ones):
            continue
        vec = [0] * orbit.arity
        for block, s in zip(blocks, bits):
            for c in block:
                vec[c] = s
        out.add(tuple(vec))
    return frozenset(out)


def split_relation(rel: OrbitRelation) -> BooleanRelation:
    """S(R): the union of the split vectors over all orbits of R."""
    vs: set = set()
    for orbit in rel.orbits:
        vs |= split_vectors(orbit)
    return BooleanRelation(rel.arity, frozenset(vs))


def _pack(vec: Sequence[int]) -> int:
    out = 0
    for i, b in enumerate(vec):
        if b:
            out |= 1 << i
    return out


def _unpack(x: int, n: int) -> tuple:
    return tuple((x >> i) & 1 for i in range(n))


def is_affine(rel: BooleanRelation) -> bool:
    """Closure under coordinatewise x^y^z over all triples (empty set passes)."""
    vecs = [_pack(v) for v in rel.vectors]
    if len(vecs) <= 2:
        return True
    b0 = vecs[0]
    shifted = {v ^ b0 for v in vecs}
    # closure under the ternary xor is closure of the translate under xor
    for x in shifted:
        for y in shifted:
            if x ^ y not in shifted:
                return False
    return True


@dataclass(frozen=True)
class Gf2System:
    """Linear equations over GF(2): rows of (coefficient mask, constant bit)."""

    variables: tuple
    rows: tuple

    @property
    def n(self) -> int:
        return len(self.variables)


def _echelon(rows: Iterable[tuple], n: int):
    """Reduced echelon form.  Returns (pivots: dict col -> packed row, consistent).

    Rows are packed as mask | const << n; pivot columns are the highest set
    mask bits.
    """
    const_bit = 1 << n
    mask_all = const_bit - 1
    pivots: dict = {}
    consistent = True
    for mask, const in rows:
        row = (mask & mask_all) | (const_bit if const else 0)
        while row & mask_all:
            top = (row & mask_all).bit_length() - 1
            if top in pivots:
                row ^= pivots[top]
            else:
                pivots[top] = row
                row = 0
        if row:
            consistent = False
    # back-substitute to make pivot columns unique
    for col in sorted(pivots):
        row = pivots[col]
        for other_col, other_row in pivots.items():
            if other_col != col and (other_row >> col) & 1:
                pivots[other_col] = other_row ^ row
    return pivots, consistent


def system_rank(sys: Gf2System) -> int:
    pivots, _ = _echelon(sys.rows, sys.n)
    return len(pivots)


def solution_count(sys: Gf2System) -> int:
    pivots, consistent = _echelon(sys.rows, sys.n)
    return 0 if not consistent else 1 << (sys.n - len(pivots))


def solutions(sys: Gf2System, limit: int = 1 << 16) -> Iterator[tuple]:
    """Enumerate all solutions as bit tuples (small systems only)."""
    n = sys.n
    pivots, consistent = _echelon(sys.rows, n)
    if not consistent:
        return
    free = [c for c in range(n) if c not in pivots]
    if 1 << len(free) > limit:
        raise PhylocspError(f"solution space too large to enumerate ({len(free)} free vars)")
    const_bit = 1 << n
    x0 = 0
    for col, row in pivots.items():
        if row & const_bit:
            x0 |= 1 << col
    kernel = []
    for f in free:
        k = 1 << f
        for col, row in pivots.items():
            if (row >> f) & 1:
                k |= 1 << col
        kernel.append(k)
    for combo in itertools.product((0, 1), repeat=len(kernel)):
        x = x0
        for bit, k in zip(combo, kernel):
            if bit:
                x ^= k
        yield _unpack(x, n)


def affine_hull(rel: BooleanRelation, variables: Sequence[str] | None = None) -> Gf2System:
    """A system whose solution set is the affine hull of the relation.

    Translate by one member, span the differences, and emit a basis of the
    orthogonal complement as equations (constants re-translated).  When the
    relation is affine this describes it exactly.
    """
    if not rel.vectors:
        raise ValueError("affine hull of an empty relation")
    n = rel.arity
    if variables is None:
        variables = tuple(f"s{i+1}" for i in range(n))
    if len(variables) != n:
        raise ValueError("variable count does not match arity")
    vecs = sorted(_pack(v) for v in rel.vectors)
    b0 = vecs[0]
    basis: dict = {}
    for v in vecs[1:]:
        row = v ^ b0
        while row:
            top = row.bit_length() - 1
            if top in basis:
                row ^= basis[top]
            else:
                basis[top] = row
                row = 0
    # reduced form so kernel extraction reads coefficients directly
    for col in sorted(basis):
        row = basis[col]
        for other_col, other_row in basis.items():
            if other_col != col and (other_row >> col) & 1:
                basis[other_col] = other_row ^ row
    free = [c for c in range(n) if c not in basis]
    rows = []
    for f in free:
        y = 1 << f
        for col, row in basis.items():
            if (row >> f) & 1:
                y |= 1 << col
        const = bin(y & b0).count("1") & 1
        rows.append((y, const))
    return Gf2System(tuple(variables), tuple(rows))


def nontrivial_solution(sys: Gf2System, rng: random.Random | None = None) -> dict | None:
    """A solution that is neither all-zero nor all-one, if one exists.

    Deterministic default: perturb the echelon form's particular solution
    by kernel basis vectors (free variables in descending index order).  An
    inconsistent system raises InconsistentSystemError.
    """
    n = sys.n
    pivots, consistent = _echelon(sys.rows, n)
    if not consistent:
        raise InconsistentSystemError(
            "split system inconsistent; constant assignments should solve it")
    const_bit = 1 << n
    ones = const_bit - 1
    x0 = 0
    for col, row in pivots.items():
        if row & const_bit:
            x0 |= 1 << col
    free = sorted((c for c in range(n) if c not in pivots), reverse=True)
    kernel = []
    for f in free:
        k = 1 << f
        for col, row in pivots.items():
            if (row >> f) & 1:
                k |= 1 << col
        kernel.append(k)

    def found(x):
        return {v: (x >> i) & 1 for i, v in enumerate(sys.variables)}

    candidates: list[int] = []
    if rng is not None and kernel:
        for _ in range(32):
            x = x0
            any_bit = False
            for k in kernel:
                if rng.random() < 0.5:
                    x ^= k
                    any_bit = True
            if any_bit and x not in (0, ones):
                return found(x)
    candidates.extend(x0 ^ k for k in kernel)
    candidates.append(x0)
    if len(kernel) >= 2:
        candidates.append(x0 ^ kernel[0] ^ kernel[1])
    for x in candidates:
        if x not in (0, ones):
            return found(x)
    return None
