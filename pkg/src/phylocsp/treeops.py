"""Finite affine tree operations: construction and structural checkers.

A finite binary operation maps pairs over a convexly ordered leaf
structure into a fresh codomain tree.  The recursive construction splits
the domain at its root into a prefix part X0 and suffix part X1, builds
the diagonal blocks recursively, realises the off-diagonal blocks as
product trees (outer shape = the dominating argument), and assembles the
four blocks so that

    f(X0^2) u f(X1^2)  |  f(X0 x X1) u f(X1 x X0),
    f(X0^2) | f(X1^2),   and   f(X0 x X1) | f(X1 x X0).

The result is semidominated on every subset square, perfectly dominated
by the first argument on U0 x U1 whenever U0|U1 with U0 before U1 in the
convex order, and symmetric modulo an isomorphism of the codomain; it
violates the forbidden-triple relation N.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import PhylocspError
from .synth import AffineHornClause, clause_holds_on_tree
from .tree import Tree, random_tree

__all__ = [
    "TreeOpsError", "OrderedLeafStructure", "FiniteBinaryOp",
    "random_convex_structure", "build_finite_tx",
    "check_perfect_dominance", "check_semidominated", "check_swap_symmetry",
    "check_preserves_clause", "canonical_image_tree", "NViolation",
    "n_violation_witness", "DEFAULT_TX_BOUND",
]

DEFAULT_TX_BOUND = 8


class TreeOpsError(PhylocspError, ValueError):
    pass


@dataclass(frozen=True)
class OrderedLeafStructure:
    """A tree plus a convex total order on its leaves.

    Convexity: for x < y < z in the order, never y | xz (the middle
    element is never the separated one).
    """

    tree: Tree
    order: tuple

    def __post_init__(self):
        if set(self.order) != set(self.tree.leaves) or \
                len(self.order) != len(self.tree.leaves):
            raise TreeOpsError("order must enumerate the tree leaves exactly")
        for x, y, z in itertools.combinations(self.order, 3):
            if self.tree.cone(y, x, z):
                raise TreeOpsError(
                    f"order is not convex: {y} | {x} {z} with {x} < {y} < {z}")

    @property
    def size(self) -> int:
        return len(self.order)

    def restrict(self, labels: Iterable[str]) -> "OrderedLeafStructure":
        keep = set(labels)
        return OrderedLeafStructure(
            self.tree.restrict(keep), tuple(l for l in self.order if l in keep))


def random_convex_structure(size: int, rng: random.Random,
                            prefix: str = "x") -> OrderedLeafStructure:
    """Random topology with a random compatible (planar) leaf order."""
    if size < 1:
        raise TreeOpsError("size must be positive")
    labels = [f"{prefix}{i+1}" for i in range(size)]
    tree = random_tree(labels, rng)

    def order_of(t: Tree) -> list:
        split = t.root_split()
        if split is None:
            return [next(iter(t.leaves))]
        a, b = split
        if rng.random() < 0.5:
            a, b = b, a
        return order_of(a) + order_of(b)

    return OrderedLeafStructure(tree, tuple(order_of(tree)))


@dataclass(frozen=True)
class FiniteBinaryOp:
    """An injective table X x X -> leaves of a codomain tree."""

    domain: OrderedLeafStructure
    codomain: Tree
    table: dict

    def __post_init__(self):
        cells = {(x, y) for x in self.domain.order for y in self.domain.order}
        if set(self.table) != cells:
            raise TreeOpsError("table must be total on the domain square")
        values = list(self.table.values())
        if len(set(values)) != len(values):
            raise TreeOpsError("affine tree operations must be injective")
        if not set(values) <= set(self.codomain.leaves):
            raise TreeOpsError("table values must be codomain leaves")

    def __call__(self, x: str, y: str) -> str:
        return self.table[(x, y)]

    def image(self, xs: Iterable[str], ys: Iterable[str]) -> set:
        return {self.table[(x, y)] for x in xs for y in ys}


def _replace_leaves(shape, fn):
    if isinstance(shape, str):
        return fn(shape)
    return (_replace_leaves(shape[0], fn), _replace_leaves(shape[1], fn))


def _shape_of(tree: Tree):
    split = tree.root_split()
    if split is None:
        return next(iter(tree.leaves))
    a, b = split
    return (_shape_of(a), _shape_of(b))


def build_finite_tx(structure: OrderedLeafStructure,
                    rng: random.Random | None = None,
                    bound: int = DEFAULT_TX_BOUND) -> FiniteBinaryOp:
    """Construct a finite affine tree operation on the given structure.

    The codomain is freshly built; clan constraints between the four
    blocks are realised positionally by attaching them as sibling
    subtrees.  An optional rng only shuffles fresh-label allocation, which
    must not affect the induced structure of the image.
    """
    if structure.size > bound:
        raise TreeOpsError(f"domain size {structure.size} exceeds bound {bound}")
    counter = itertools.count()
    salt = list(range(structure.size ** 2 + 4))
    if rng is not None:
        rng.shuffle(salt)

    def fresh() -> str:
        return f"t{salt[next(counter)]}"

    def rec(sub: OrderedLeafStructure):
        if sub.size == 1:
            x = sub.order[0]
            label = fresh()
            return label, {(x, x): label}
        left, right = sub.tree.root_split()
        x0 = sub.restrict(left.leaves if sub.order[0] in left.leaves
                          else right.leaves)
        x1 = sub.restrict(set(sub.order) - set(x0.order))
        s00, t00 = rec(x0)
        s11, t11 = rec(x1)
        table = dict(t00)
        table.update(t11)

        def product(outer: OrderedLeafStructure, inner: OrderedLeafStructure,
                    cell):
            entries = {}

            def expand(out_leaf):
                def inner_leaf(in_leaf):
                    label = fresh()
                    entries[cell(out_leaf, in_leaf)] = label
                    return label

                return _replace_leaves(_shape_of(inner.tree), inner_leaf)

            shape = _replace_leaves(_shape_of(outer.tree), expand)
            return shape, entries

        # first argument dominates on X0 x X1, second on X1 x X0
        s01, t01 = product(x0, x1, lambda o, i: (o, i))
        s10, t10 = product(x0, x1, lambda o, i: (i, o))
        table.update(t01)
        table.update(t10)
        return ((s00, s11), (s01, s10)), table

    shape, table = rec(structure)
    return FiniteBinaryOp(structure, Tree(shape), table)


def check_perfect_dominance(op: FiniteBinaryOp, u_set: Sequence[str],
                            v_set: Sequence[str], arg: str) -> bool:
    """Both bullet conditions of perfect dominance on U x V.

    arg="first": cones among first arguments transfer for any second
    arguments, and for a fixed first argument cones among the second
    arguments transfer.  arg="second" mirrors the roles.
    """
    if arg not in ("first", "second"):
        raise TreeOpsError("arg must be 'first' or 'second'")
    dom = op.domain.tree
    cod = op.codomain
    us = list(u_set)
    vs = list(v_set)

    def f(x, y):
        return op.table[(x, y)]

    if arg == "first":
        dominant, passive = us, vs

        def cell(d, p):
            return f(d, p)
    else:
        dominant, passive = vs, us

        def cell(d, p):
            return f(p, d)

    for d1, d2, d3 in itertools.product(dominant, repeat=3):
        if not dom.cone(d1, d2, d3):
            continue
        for p1, p2, p3 in itertools.product(passive, repeat=3):
            if not cod.cone(cell(d1, p1), cell(d2, p2), cell(d3, p3)):
                return False
    for d in dominant:
        for p1, p2, p3 in itertools.product(passive, repeat=3):
            if dom.cone(p1, p2, p3) and not cod.cone(
                    cell(d, p1), cell(d, p2), cell(d, p3)):
                return False
    return True


def check_semidominated(op: FiniteBinaryOp, u_set: Iterable[str],
                        search_all: bool = False) -> bool:
    """Recursive semidomination check on U x U.

    By default the partition is the one determined by the topology (the
    child clans of yca(U)); with search_all=True every clan-separated
    bipartition is tried at each level.
    """
    us = sorted(set(u_set))
    dom = op.domain.tree
    cod = op.codomain

    def partitions(u: tuple):
        if search_all:
            rest = list(u[1:])
            for r in range(len(rest) + 1):
                for pick in itertools.combinations(rest, r):
                    u1 = (u[0],) + pick
                    u2 = tuple(x for x in u if x not in u1)
                    if u2 and dom.clan_separated(u1, u2):
                        yield u1, u2
        else:
            node = dom.yca(u)
            kids = dom.node_children(node)
            if kids is None:
                return
            left = dom.clade(kids[0])
            u1 = tuple(x for x in u if x in left)
            u2 = tuple(x for x in u if x not in left)
            if u1 and u2:
                yield u1, u2

    def rec(u: tuple) -> bool:
        if len(u) <= 1:
            return True
        for u1, u2 in partitions(u):
            img11 = op.image(u1, u1)
            img22 = op.image(u2, u2)
            img12 = op.image(u1, u2)
            img21 = op.image(u2, u1)
            if not cod.clan_separated(img11, img22):
                continue
            if not cod.clan_separated(img12, img21):
                continue
            if not cod.clan_separated(img11 | img22, img12 | img21):
                continue
            if not check_perfect_dominance(op, u1, u2, "first"):
                continue
            if not check_perfect_dominance(op, u2, u1, "second"):
                continue
            if rec(u1) and rec(u2):
                return True
        return False

    return rec(tuple(us))


def check_swap_symmetry(op: FiniteBinaryOp) -> bool:
    """Is f(x,y) -> f(y,x) a partial isomorphism of the codomain leaf structure?"""
    cod = op.codomain
    gamma = {op.table[(x, y)]: op.table[(y, x)]
             for x, y in op.table}
    image = list(gamma)
    for a, b, c in itertools.permutations(image, 3):
        if cod.cone(a, b, c) != cod.cone(gamma[a], gamma[b], gamma[c]):
            return False
    return True


def check_preserves_clause(op: FiniteBinaryOp, clause: AffineHornClause,
                           clause_vars: Sequence[str],
                           pairs: Sequence[tuple]) -> list:
    """Apply the operation coordinatewise to satisfying tuple pairs.

    Each pair must satisfy the clause over the domain tree; the result
    records whether the image tuple satisfies it over the codomain.
    """
    dom = op.domain.tree
    cod = op.codomain
    out = []
    for ta, tb in pairs:
        if len(ta) != len(clause_vars) or len(tb) != len(clause_vars):
            raise TreeOpsError("tuple length does not match clause variables")
        for t in (ta, tb):
            if not clause_holds_on_tree(clause, dom, dict(zip(clause_vars, t))):
                raise TreeOpsError(f"tuple {t} does not satisfy the clause")
        image = tuple(op.table[(x, y)] for x, y in zip(ta, tb))
        out.append(clause_holds_on_tree(clause, cod, dict(zip(clause_vars, image))))
    return out


def canonical_image_tree(op: FiniteBinaryOp) -> Tree:
    """The codomain leaf structure relabelled by domain pairs.

    Two constructions on the same structure agree up to isomorphism iff
    these canonical forms are equal.
    """
    cells = sorted(op.table)
    names = {op.table[cell]: f"p{idx:03d}" for idx, cell in enumerate(cells)}
    return op.codomain.relabel(names)


@dataclass(frozen=True)
class NViolation:
    """The forbidden-triple violation produced by any affine tree operation."""

    op: FiniteBinaryOp
    image: tuple
    separated: bool
    in_n: bool


def n_violation_witness(rng: random.Random | None = None) -> NViolation:
    """Builds f on the domain ((x,y),(y',z)) and evaluates the N violation.

    Both (x,y,z) and (x,y',z) satisfy N (via xy|z and x|y'z); the image
    triple (f(x,x), f(y,y'), f(z,z)) satisfies f(x,x)f(z,z)|f(y,y'), hence
    neither cone pattern of N.
    """
    tree = Tree((("x", "y"), ("yp", "z")))
    structure = OrderedLeafStructure(tree, ("x", "y", "yp", "z"))
    op = build_finite_tx(structure, rng)
    fxx = op.table[("x", "x")]
    fyyp = op.table[("y", "yp")]
    fzz = op.table[("z", "z")]
    cod = op.codomain
    separated = cod.clan_separated({fxx, fzz}, {fyyp})
    in_n = cod.cone(fzz, fxx, fyyp) or cod.cone(fxx, fyyp, fzz)
    return NViolation(op, (fxx, fyyp, fzz), separated, in_n)
