"""Quantifier-free phylogeny formulas, constraint languages, and instances.

Formulas are ASTs over the atoms ``cone(x, y, z)`` (meaning x|yz) and
``x = y``, closed under and/or/not.  A constraint language maps relation
names to defining formulas; the relations C, Cd, Q, Qd, N, Nd and the
disequality relation Neq are always available as builtins.

Three text formats are supported:

* ``.phl``  relation definitions:  ``rel R/3 := cone(x1,x2,x3) and x2 != x3``
* ``.phy``  instances: an optional ``language FILE`` header, then one
  constraint ``NAME(v1,...,vk)`` per line
* ``.triples``  rooted-triple instances: lines ``x y | z`` (z is the
  outgroup), each becoming the constraint C(z, x, y)
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Union

from .errors import PhylocspError
from .tree import Tree

__all__ = [
    "Cone", "Eq", "Not", "And", "Or", "Node",
    "PhyloFormula", "ConstraintLanguage", "Instance", "Solution",
    "FormulaError", "ParseError", "EvaluationError",
    "free_variables", "evaluate", "compile_formula", "verify_solution",
    "parse_language", "parse_instance", "parse_triples", "language_header",
    "emit_formula", "emit_language",
    "clan_separation", "even_split_formula", "make_instance",
    "BUILTIN_NAMES",
]


class FormulaError(PhylocspError, ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class EvaluationError(FormulaError):
    pass


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    x: str
    y: str
    z: str


@dataclass(frozen=True)
class Eq:
    a: str
    b: str


@dataclass(frozen=True)
class Not:
    body: "Node"


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


Node = Union[Cone, Eq, Not, And, Or]


def free_variables(node: Node) -> set:
    if isinstance(node, Cone):
        return {node.x, node.y, node.z}
    if isinstance(node, Eq):
        return {node.a, node.b}
    if isinstance(node, Not):
        return free_variables(node.body)
    return set().union(*(free_variables(p) for p in node.parts)) if node.parts else set()


@dataclass(frozen=True)
class PhyloFormula:
    """A quantifier-free formula with an explicit variable order."""

    variables: tuple
    body: Node

    def __post_init__(self):
        names = set(self.variables)
        if len(names) != len(self.variables):
            raise FormulaError("duplicate variables in declaration")
        loose = free_variables(self.body) - names
        if loose:
            raise FormulaError(f"undeclared variables in body: {sorted(loose)}")

    @property
    def arity(self) -> int:
        return len(self.variables)


# -- evaluation -----------------------------------------------------------------

def _eval(node: Node, tree: Tree, a: Mapping) -> bool:
    if isinstance(node, Cone):
        return tree.cone(a[node.x], a[node.y], a[node.z])
    if isinstance(node, Eq):
        return a[node.a] == a[node.b]
    if isinstance(node, Not):
        return not _eval(node.body, tree, a)
    if isinstance(node, And):
        return all(_eval(p, tree, a) for p in node.parts)
    if isinstance(node, Or):
        return any(_eval(p, tree, a) for p in node.parts)
    raise TypeError(f"not a formula node: {node!r}")


def evaluate(phi: PhyloFormula, tree: Tree, assignment: Mapping) -> bool:
    """Evaluate under an assignment of every declared variable to a leaf."""
    missing = [v for v in phi.variables if v not in assignment]
    if missing:
        raise EvaluationError(f"unbound variables: {missing}")
    return _eval(phi.body, tree, assignment)


@lru_cache(maxsize=None)
def compile_formula(phi: PhyloFormula):
    """Compile to a ``f(tree, assignment) -> bool`` closure (hot paths)."""

    def comp(node):
        if isinstance(node, Cone):
            x, y, z = node.x, node.y, node.z
            return lambda t, a: t.cone(a[x], a[y], a[z])
        if isinstance(node, Eq):
            p, q = node.a, node.b
            return lambda t, a: a[p] == a[q]
        if isinstance(node, Not):
            f = comp(node.body)
            return lambda t, a: not f(t, a)
        if isinstance(node, And):
            fns = tuple(comp(p) for p in node.parts)
            return lambda t, a: all(f(t, a) for f in fns)
        fns = tuple(comp(p) for p in node.parts)
        return lambda t, a: any(f(t, a) for f in fns)

    return comp(phi.body)


# -- builtins ---------------------------------------------------------------------

def clan_separation(xs: Iterable[str], ys: Iterable[str]) -> tuple:
    """Cone atoms whose conjunction expresses {xs}|{ys}."""
    xs = tuple(xs)
    ys = tuple(ys)
    xpairs = list(itertools.combinations(xs, 2)) or [(xs[0], xs[0])]
    ypairs = list(itertools.combinations(ys, 2)) or [(ys[0], ys[0])]
    atoms = [Cone(y, a, b) for y in ys for a, b in xpairs]
    atoms += [Cone(x, c, d) for x in xs for c, d in ypairs]
    return tuple(atoms)


def _mk_builtins() -> dict:
    x1, x2, x3, x4 = "x1", "x2", "x3", "x4"
    q_body = Or((
        And((Cone(x3, x1, x2), Cone(x4, x1, x2))),
        And((Cone(x1, x3, x4), Cone(x2, x3, x4))),
    ))
    n_body = Or((Cone(x3, x1, x2), Cone(x1, x2, x3)))
    return {
        "C": PhyloFormula((x1, x2, x3), Cone(x1, x2, x3)),
        "Cd": PhyloFormula((x1, x2, x3), And((Cone(x1, x2, x3), Not(Eq(x2, x3))))),
        "Q": PhyloFormula((x1, x2, x3, x4), q_body),
        "Qd": PhyloFormula((x1, x2, x3, x4),
                           And((q_body, Not(Eq(x1, x2)), Not(Eq(x3, x4))))),
        "N": PhyloFormula((x1, x2, x3), n_body),
        "Nd": PhyloFormula((x1, x2, x3),
                           And((n_body, Not(Eq(x1, x2)), Not(Eq(x2, x3))))),
        "Neq": PhyloFormula((x1, x2), Not(Eq(x1, x2))),
    }


_BUILTINS = _mk_builtins()
BUILTIN_NAMES = tuple(_BUILTINS)


def even_split_formula() -> PhyloFormula:
    """The 4-hypergraph even-split relation: some 2+2 split of the tuple."""
    v = ("x1", "x2", "x3", "x4")
    parts = []
    for pair in (("x1", "x2"), ("x1", "x3"), ("x1", "x4")):
        rest = tuple(x for x in v if x not in pair)
        parts.append(And(clan_separation(pair, rest)))
    return PhyloFormula(v, Or(tuple(parts)))


class ConstraintLanguage:
    """Named relations with formula definitions; builtins come first."""

    def __init__(self, include_builtins: bool = True):
        self._relations: dict = dict(_BUILTINS) if include_builtins else {}
        self._builtin = frozenset(self._relations)

    def define(self, name: str, formula: PhyloFormula) -> None:
        if not re.match(r"[A-Za-z_][A-Za-z0-9_]*\Z", name):
            raise FormulaError(f"invalid relation name: {name!r}")
        if name in self._relations:
            raise FormulaError(f"duplicate relation name: {name!r}")
        self._relations[name] = formula

    def is_builtin(self, name: str) -> bool:
        return name in self._builtin

    def arity(self, name: str) -> int:
        return self[name].arity

    def names(self) -> tuple:
        return tuple(self._relations)

    def items(self):
        return self._relations.items()

    def __getitem__(self, name: str) -> PhyloFormula:
        try:
            return self._relations[name]
        except KeyError:
            raise FormulaError(f"unknown relation symbol: {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._relations


# -- instances --------------------------------------------------------------------

@dataclass(frozen=True)
class Instance:
    """A set of constraints over named variables (declaration order kept)."""

    variables: tuple
    constraints: tuple

    def __post_init__(self):
        vs = set(self.variables)
        if len(vs) != len(self.variables):
            raise FormulaError("duplicate instance variables")
        for name, args in self.constraints:
            bad = [a for a in args if a not in vs]
            if bad:
                raise FormulaError(f"constraint {name} uses undeclared variables {bad}")


def make_instance(constraints, language: ConstraintLanguage,
                  variables: Iterable[str] | None = None) -> Instance:
    """Build an Instance, validating symbols and arities against a language."""
    cons = []
    seen: list[str] = []
    seenset = set()
    for name, args in constraints:
        phi = language[name]
        args = tuple(args)
        if len(args) != phi.arity:
            raise FormulaError(
                f"arity mismatch for {name}: got {len(args)}, want {phi.arity}")
        cons.append((name, args))
        for a in args:
            if a not in seenset:
                seenset.add(a)
                seen.append(a)
    if variables is not None:
        variables = tuple(variables)
        extra = seenset - set(variables)
        if extra:
            raise FormulaError(f"constraints use undeclared variables {sorted(extra)}")
    else:
        variables = tuple(seen)
    return Instance(variables, tuple(cons))


@dataclass
class Solution:
    """A witness: a tree plus a total assignment of variables to its leaves."""

    tree: Tree
    assignment: dict


def verify_solution(inst: Instance, language: ConstraintLanguage,
                    sol: Solution | None) -> bool:
    """Check shape validity and that every constraint evaluates to true."""
    if sol is None:
        return not inst.variables and not inst.constraints
    if set(sol.assignment) != set(inst.variables):
        return False
    image = set(sol.assignment.values())
    if image != set(sol.tree.leaves):
        return False
    for name, args in inst.constraints:
        phi = language[name]
        fn = compile_formula(phi)
        a = {v: sol.assignment[arg] for v, arg in zip(phi.variables, args)}
        if not fn(sol.tree, a):
            return False
    return True


# -- .phl parser --------------------------------------------------------------------

_PHL_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)|(?P<assign>:=)"
    r"|(?P<neq>!=)|(?P<eq>=)|(?P<lpar>\()|(?P<rpar>\))|(?P<comma>,)"
    r"|(?P<slash>/)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>\d+)"
)


def _tokenize_phl(text: str):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _PHL_TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        else:
            tokens.append((kind, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class _PhlParser:
    def __init__(self, text: str):
        self.tokens = _tokenize_phl(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1]!r}", tok[2], tok[3])
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", tok[2], tok[3])
        self.i += 1
        return tok

    def parse_language(self, include_builtins=True) -> ConstraintLanguage:
        lang = ConstraintLanguage(include_builtins=include_builtins)
        while True:
            tok = self.peek()
            if tok[0] == "eof":
                return lang
            if tok[0] != "name" or tok[1] != "rel":
                raise ParseError(f"expected 'rel', found {tok[1]!r}", tok[2], tok[3])
            self.take()
            name_tok = self.take("name")
            self.take("slash")
            arity_tok = self.take("int")
            arity = int(arity_tok[1])
            if arity < 1:
                raise ParseError("arity must be positive", arity_tok[2], arity_tok[3])
            self.take("assign")
            body = self.parse_formula(arity)
            try:
                lang.define(name_tok[1],
                            PhyloFormula(tuple(f"x{i+1}" for i in range(arity)), body))
            except FormulaError as exc:
                raise ParseError(str(exc), name_tok[2], name_tok[3]) from None

    def parse_formula(self, arity: int) -> Node:
        parts = [self.parse_conj(arity)]
        while self.peek()[:2] == ("name", "or"):
            self.take()
            parts.append(self.parse_conj(arity))
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_conj(self, arity: int) -> Node:
        parts = [self.parse_lit(arity)]
        while self.peek()[:2] == ("name", "and"):
            self.take()
            parts.append(self.parse_lit(arity))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_lit(self, arity: int) -> Node:
        if self.peek()[:2] == ("name", "not"):
            self.take()
            return Not(self.parse_lit(arity))
        if self.peek()[0] == "lpar":
            self.take()
            inner = self.parse_formula(arity)
            self.take("rpar")
            return inner
        return self.parse_atom(arity)

    def parse_var(self, arity: int) -> str:
        tok = self.take("name")
        m = re.match(r"x([1-9][0-9]*)\Z", tok[1])
        if not m or int(m.group(1)) > arity:
            raise ParseError(
                f"variable {tok[1]!r} outside x1..x{arity}", tok[2], tok[3])
        return tok[1]

    def parse_atom(self, arity: int) -> Node:
        tok = self.peek()
        if tok[:2] == ("name", "cone"):
            self.take()
            self.take("lpar")
            x = self.parse_var(arity)
            self.take("comma")
            y = self.parse_var(arity)
            self.take("comma")
            z = self.parse_var(arity)
            self.take("rpar")
            return Cone(x, y, z)
        a = self.parse_var(arity)
        op = self.take()
        if op[0] == "eq":
            return Eq(a, self.parse_var(arity))
        if op[0] == "neq":
            return Not(Eq(a, self.parse_var(arity)))
        raise ParseError(f"expected '=' or '!=', found {op[1]!r}", op[2], op[3])


def parse_language(text: str, include_builtins: bool = True) -> ConstraintLanguage:
    return _PhlParser(text).parse_language(include_builtins=include_builtins)


def parse_formula_text(text: str, arity: int) -> PhyloFormula:
    """Parse a bare .phl formula body over variables x1..x`arity`."""
    parser = _PhlParser(text)
    body = parser.parse_formula(arity)
    tok = parser.peek()
    if tok[0] != "eof":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2], tok[3])
    return PhyloFormula(tuple(f"x{i+1}" for i in range(arity)), body)


# -- .phy / .triples parsers --------------------------------------------------------

_VAR_RE = re.compile(r"[A-Za-z0-9_]+\Z")
_CONSTRAINT_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*\Z")
_TRIPLE_RE = re.compile(r"([A-Za-z0-9_]+)\s+([A-Za-z0-9_]+)\s*\|\s*([A-Za-z0-9_]+)\Z")


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def language_header(text: str) -> str | None:
    """The FILE of a leading ``language FILE`` line in a .phy text, if any."""
    for _, line in _content_lines(text):
        if line.startswith("language"):
            rest = line[len("language"):].strip()
            return rest or None
        return None
    return None


def parse_instance(text: str, language: ConstraintLanguage) -> Instance:
    """Parse a .phy instance; a leading ``language`` header line is skipped."""
    constraints = []
    first = True
    for lineno, line in _content_lines(text):
        if first and line.startswith("language"):
            first = False
            continue
        first = False
        m = _CONSTRAINT_RE.match(line)
        if m is None:
            raise ParseError("expected NAME(v1,...,vk)", lineno, 1)
        name = m.group(1)
        args = tuple(a.strip() for a in m.group(2).split(","))
        if name not in language:
            raise ParseError(f"unknown relation symbol {name!r}", lineno, 1)
        if any(not _VAR_RE.match(a) for a in args):
            raise ParseError(f"invalid variable in {line!r}", lineno, 1)
        if len(args) != language.arity(name):
            raise ParseError(
                f"arity mismatch for {name}: got {len(args)}, "
                f"want {language.arity(name)}", lineno, 1)
        constraints.append((name, args))
    return make_instance(constraints, language)


def parse_triples(text: str) -> Instance:
    """Parse lines ``x y | z`` into C(z, x, y) constraints (z is the outgroup)."""
    lang = ConstraintLanguage()
    constraints = []
    for lineno, line in _content_lines(text):
        m = _TRIPLE_RE.match(line)
        if m is None:
            raise ParseError("expected 'x y | z'", lineno, 1)
        x, y, z = m.groups()
        constraints.append(("C", (z, x, y)))
    return make_instance(constraints, lang)


# -- emission -------------------------------------------------------------------------

def emit_formula(node: Node) -> str:
    def rec(n, parent: str) -> str:
        if isinstance(n, Cone):
            return f"cone({n.x},{n.y},{n.z})"
        if isinstance(n, Eq):
            return f"{n.a} = {n.b}"
        if isinstance(n, Not):
            if isinstance(n.body, Eq):
                return f"{n.body.a} != {n.body.b}"
            inner = rec(n.body, "not")
            if isinstance(n.body, (And, Or)):
                inner = f"({inner})"
            return f"not {inner}"
        if isinstance(n, And):
            s = " and ".join(rec(p, "and") for p in n.parts)
            return f"({s})" if parent == "or" else s
        s = " or ".join(rec(p, "or") for p in n.parts)
        return f"({s})" if parent in ("and", "not") else s

    return rec(node, "top")


def emit_language(lang: ConstraintLanguage, include_builtins: bool = False) -> str:
    lines = []
    for name, phi in lang.items():
        if not include_builtins and lang.is_builtin(name):
            continue
        lines.append(f"rel {name}/{phi.arity} := {emit_formula(phi.body)}")
    return "\n".join(lines) + ("\n" if lines else "")
