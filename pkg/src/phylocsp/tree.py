"""Rooted binary trees with named leaves.

Trees are immutable and canonical: the two children of every internal node
are ordered by their smallest leaf label, so two trees that differ only in
child order compare (and hash) equal.  Leaf labels are non-empty strings
over ``[A-Za-z0-9_]``.

The separation primitives follow the usual semantics on leaf sets:
``clan_separated(A, B)`` holds iff neither the youngest common ancestor of
A nor that of B lies weakly below the other, and ``cone(x, y, z)`` is the
truth of ``x|yz`` (x distinct from y and z as leaves, and {x} separated
from {y, z}; y = z is allowed).
"""

from __future__ import annotations

import random
import re
from typing import Iterable, Iterator

from .errors import PhylocspError

__all__ = [
    "Tree",
    "TreeError",
    "NewickError",
    "parse_newick",
    "enumerate_trees",
    "random_tree",
    "double_factorial",
    "DEFAULT_TREE_BOUND",
]

_LABEL_RE = re.compile(r"[A-Za-z0-9_]+\Z")

DEFAULT_TREE_BOUND = 8


class TreeError(PhylocspError, ValueError):
    """Malformed tree, bad leaf label, or unknown label in a query."""


class NewickError(TreeError):
    def __init__(self, message: str, pos: int | None = None):
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos


def _canonical(shape):
    """Return (canonical shape, smallest leaf label)."""
    if isinstance(shape, str):
        return shape, shape
    left, right = shape
    cl, ml = _canonical(left)
    cr, mr = _canonical(right)
    if mr < ml:
        cl, cr = cr, cl
        ml, mr = mr, ml
    return (cl, cr), ml


def _collect_leaves(shape, out: list):
    stack = [shape]
    while stack:
        s = stack.pop()
        if isinstance(s, str):
            out.append(s)
        else:
            stack.append(s[1])
            stack.append(s[0])


class Tree:
    """A rooted binary tree over uniquely labelled leaves.

    A single leaf is a legal tree (its root is the leaf).  Instances are
    immutable and safe to share between threads; internal lookup tables
    are built lazily on first topological query.
    """

    __slots__ = ("_shape", "_leaves", "_hash", "_tables", "_lca_cache")

    def __init__(self, shape):
        shape, _ = _canonical(shape)
        leaves: list[str] = []
        _collect_leaves(shape, leaves)
        leafset = frozenset(leaves)
        if len(leafset) != len(leaves):
            raise TreeError("duplicate leaf labels in tree")
        for label in leaves:
            if not isinstance(label, str) or not _LABEL_RE.match(label):
                raise TreeError(f"invalid leaf label: {label!r}")
        self._shape = shape
        self._leaves = leafset
        self._hash = hash(shape)
        self._tables = None
        self._lca_cache: dict = {}

    # -- construction -------------------------------------------------

    @staticmethod
    def leaf(label: str) -> "Tree":
        return Tree(label)

    @staticmethod
    def join(t0: "Tree", t1: "Tree") -> "Tree":
        """New root with t0 and t1 as subtrees; label sets must be disjoint."""
        overlap = t0._leaves & t1._leaves
        if overlap:
            raise TreeError(f"overlapping leaf labels: {sorted(overlap)}")
        return Tree((t0._shape, t1._shape))

    # -- basic structure ----------------------------------------------

    @property
    def leaves(self) -> frozenset:
        return self._leaves

    @property
    def size(self) -> int:
        return len(self._leaves)

    @property
    def root(self) -> int:
        return 0

    def root_split(self) -> tuple["Tree", "Tree"] | None:
        """The two root subtrees, or None for a single leaf."""
        if isinstance(self._shape, str):
            return None
        return Tree(self._shape[0]), Tree(self._shape[1])

    # -- node tables ---------------------------------------------------

    def _ensure_tables(self):
        if self._tables is not None:
            return self._tables
        parent: list[int] = []
        depth: list[int] = []
        tin: list[int] = []
        tout: list[int] = []
        children: list[tuple[int, int] | None] = []
        leaf_node: dict[str, int] = {}
        leaf_tins: list[tuple[int, str]] = []
        t = 0
        stack: list[tuple] = [("enter", self._shape, -1)]
        while stack:
            item = stack.pop()
            if item[0] == "exit":
                tout[item[1]] = t
                continue
            _, shape, par = item
            nid = len(parent)
            parent.append(par)
            depth.append(0 if par < 0 else depth[par] + 1)
            tin.append(t)
            tout.append(-1)
            children.append(None)
            t += 1
            stack.append(("exit", nid))
            if isinstance(shape, str):
                leaf_node[shape] = nid
                leaf_tins.append((tin[nid], shape))
            else:
                stack.append(("enter", shape[1], nid))
                stack.append(("enter", shape[0], nid))
        # children ids follow from parents (two per internal node)
        kid_acc: dict[int, list[int]] = {}
        for nid, par in enumerate(parent):
            if par >= 0:
                kid_acc.setdefault(par, []).append(nid)
        for nid, kids in kid_acc.items():
            children[nid] = (kids[0], kids[1])
        leaf_tins.sort()
        self._tables = (parent, depth, tin, tout, children, leaf_node, leaf_tins)
        return self._tables

    def _leaf_id(self, label: str) -> int:
        tables = self._ensure_tables()
        try:
            return tables[5][label]
        except KeyError:
            raise TreeError(f"unknown leaf label: {label!r}") from None

    def _lca(self, a: int, b: int) -> int:
        if a == b:
            return a
        key = (a, b) if a < b else (b, a)
        cached = self._lca_cache.get(key)
        if cached is not None:
            return cached
        parent, depth = self._tables[0], self._tables[1]
        x, y = a, b
        while depth[x] > depth[y]:
            x = parent[x]
        while depth[y] > depth[x]:
            y = parent[y]
        while x != y:
            x = parent[x]
            y = parent[y]
        self._lca_cache[key] = x
        return x

    def _contains(self, anc: int, node: int) -> bool:
        tin, tout = self._tables[2], self._tables[3]
        return tin[anc] <= tin[node] < tout[anc]

    # -- queries --------------------------------------------------------

    def yca(self, labels: Iterable[str]) -> int:
        """Node id of the youngest common ancestor of a non-empty label set."""
        ids = [self._leaf_id(l) for l in labels]
        if not ids:
            raise TreeError("yca of an empty label set")
        node = ids[0]
        for other in ids[1:]:
            node = self._lca(node, other)
        return node

    def clade(self, node: int) -> frozenset:
        """Leaf labels below (and at) the given node id."""
        tables = self._ensure_tables()
        tin, tout, leaf_tins = tables[2], tables[3], tables[6]
        lo, hi = tin[node], tout[node]
        return frozenset(lab for t, lab in leaf_tins if lo <= t < hi)

    def node_children(self, node: int) -> tuple[int, int] | None:
        return self._ensure_tables()[4][node]

    def clan_separated(self, a: Iterable[str], b: Iterable[str]) -> bool:
        """Truth of A|B: neither yca lies weakly below the other."""
        na = self.yca(a)
        nb = self.yca(b)
        return not (self._contains(na, nb) or self._contains(nb, na))

    def cone(self, x: str, y: str, z: str) -> bool:
        """Truth of x|yz.  y = z is allowed; any coincidence with x is false."""
        xid = self._leaf_id(x)
        yid = self._leaf_id(y)
        zid = self._leaf_id(z)
        if x == y or x == z:
            return False
        if y == z:
            return True
        return not self._contains(self._lca(yid, zid), xid)

    # -- derived trees ---------------------------------------------------

    def restrict(self, keep: Iterable[str]) -> "Tree":
        """Induced subtree on a non-empty subset of leaves (unary nodes suppressed)."""
        keepset = frozenset(keep)
        unknown = keepset - self._leaves
        if unknown:
            raise TreeError(f"unknown leaf labels: {sorted(unknown)}")
        if not keepset:
            raise TreeError("cannot restrict to an empty leaf set")

        def rec(shape):
            if isinstance(shape, str):
                return shape if shape in keepset else None
            left = rec(shape[0])
            right = rec(shape[1])
            if left is None:
                return right
            if right is None:
                return left
            return (left, right)

        return Tree(rec(self._shape))

    def relabel(self, mapping: dict) -> "Tree":
        """Rename leaves; labels missing from the mapping are kept."""

        def rec(shape):
            if isinstance(shape, str):
                return mapping.get(shape, shape)
            return (rec(shape[0]), rec(shape[1]))

        return Tree(rec(self._shape))

    # -- serialization ----------------------------------------------------

    def newick(self) -> str:
        def rec(shape):
            if isinstance(shape, str):
                return shape
            return f"({rec(shape[0])},{rec(shape[1])})"

        return rec(self._shape) + ";"

    # -- dunder ------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return self._shape == other._shape

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Tree({self.newick()!r})"


# -- Newick parsing ---------------------------------------------------------

_NEWICK_TOKEN = re.compile(r"\s*([(),;]|[A-Za-z0-9_]+)")


def parse_newick(text: str) -> Tree:
    """Parse a binary Newick string; the trailing semicolon is optional."""
    tokens: list[tuple[str, int]] = []
    pos = 0
    while pos < len(text):
        m = _NEWICK_TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise NewickError(f"unexpected character {text[pos]!r}", pos)
            break
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    if not tokens:
        raise NewickError("empty input")

    idx = 0

    def peek():
        return tokens[idx][0] if idx < len(tokens) else None

    def take():
        nonlocal idx
        tok = tokens[idx]
        idx += 1
        return tok

    def subtree():
        tok, at = take()
        if tok == "(":
            left = subtree()
            tok2, at2 = take() if idx < len(tokens) else (None, len(text))
            if tok2 != ",":
                raise NewickError("expected ',' in internal node", at2)
            right = subtree()
            tok3, at3 = take() if idx < len(tokens) else (None, len(text))
            if tok3 == ",":
                raise NewickError("non-binary node (more than two children)", at3)
            if tok3 != ")":
                raise NewickError("expected ')'", at3)
            return (left, right)
        if tok in (")", ",", ";"):
            raise NewickError(f"unexpected {tok!r}", at)
        return tok

    shape = subtree()
    if peek() == ";":
        take()
    if idx != len(tokens):
        raise NewickError("trailing input after tree", tokens[idx][1])
    return Tree(shape)


# -- enumeration -------------------------------------------------------------

def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _grafts(shape, leaf):
    """All shapes obtained by attaching `leaf` onto `shape` (each once)."""
    yield (shape, leaf)
    if not isinstance(shape, str):
        left, right = shape
        for g in _grafts(left, leaf):
            yield (g, right)
        for g in _grafts(right, leaf):
            yield (left, g)


def enumerate_trees(labels: Iterable[str], bound: int = DEFAULT_TREE_BOUND) -> Iterator[Tree]:
    """Yield every rooted binary topology on the label set exactly once.

    The count is (2n-3)!! for n >= 2 labels.  Single-consumer stream;
    raises TreeError when the label count exceeds `bound`.
    """
    labs = sorted(set(labels))
    if not labs:
        raise TreeError("cannot enumerate trees on an empty label set")
    if len(labs) > bound:
        raise TreeError(f"label count {len(labs)} exceeds bound {bound}")

    def rec(n):
        if n == 1:
            yield labs[0]
            return
        for smaller in rec(n - 1):
            yield from _grafts(smaller, labs[n - 1])

    for shape in rec(len(labs)):
        yield Tree(shape)


def random_tree(labels: Iterable[str], rng: random.Random) -> Tree:
    """Uniformly random topology on the labels (random sequential grafting)."""
    labs = sorted(set(labels))
    if not labs:
        raise TreeError("cannot build a tree on an empty label set")
    # mutable arrays: node 0 is the root; entry is a label or a child pair
    node_val: list = [labs[0]]
    node_parent: list[int] = [-1]
    for lab in labs[1:]:
        at = rng.randrange(len(node_val))
        leaf_id = len(node_val)
        node_val.append(lab)
        node_parent.append(-2)  # fixed below
        new_int = len(node_val)
        node_val.append((at, leaf_id))
        par = node_parent[at]
        node_parent.append(par)
        node_parent[at] = new_int
        node_parent[leaf_id] = new_int
        if par >= 0:
            a, b = node_val[par]
            node_val[par] = (new_int, b) if a == at else (a, new_int)

    root = 0
    while node_parent[root] >= 0:
        root = node_parent[root]

    def build(i):
        v = node_val[i]
        if isinstance(v, str):
            return v
        return (build(v[0]), build(v[1]))

    return Tree(build(root))
