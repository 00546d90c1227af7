"""Command-line interface: solve, classify, oracle, orbits, treeops, gen.

Exit codes: 0 success / SAT / tractable, 1 UNSAT / not affine Horn,
2 usage or internal error, 3 oracle inconclusive.  Reports on stdout are
byte-identical for identical inputs and seed; timing goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import re
import sys
import time
from pathlib import Path

from . import __version__
from .errors import PhylocspError
from .formula import (ConstraintLanguage, Instance, emit_formula, language_header,
                      parse_formula_text, parse_instance, parse_language,
                      parse_triples, verify_solution)
from .oracle import (NaeInstance, OracleBudget, OracleInconclusive, nae_identify,
                     nae_satisfiable, nae_to_phylo, oracle_solve,
                     gen_random_satisfiable_triples)
from .orbits import enumerate_orbits, relation_of_formula
from .solver import (NotAffineHornError, Verdict, solve, solve_instance)
from .splits import BooleanRelation
from .synth import (AffineHornClause, AffineHornFormula, AffinePart,
                    classify_language, formula_holds_on_tree)
from .treeops import (build_finite_tx, check_perfect_dominance,
                      check_semidominated, check_swap_symmetry,
                      n_violation_witness, random_convex_structure)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2
EXIT_INCONCLUSIVE = 3


def _report(args, payload: dict, lines: list) -> None:
    if args.machine:
        doc = {"command": args.command, "version": __version__}
        doc.update(payload)
        print(json.dumps(doc, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _load_language(path: str | None) -> ConstraintLanguage:
    if path is None:
        return ConstraintLanguage()
    return parse_language(Path(path).read_text())


def _load_instance(path: str, fmt: str | None) -> tuple[Instance, ConstraintLanguage]:
    text = Path(path).read_text()
    if fmt is None:
        suffix = Path(path).suffix.lower()
        fmt = {"": "triples", ".triples": "triples", ".phy": "phy",
               ".horn": "horn"}.get(suffix, "triples")
    if fmt == "triples":
        return parse_triples(text), ConstraintLanguage()
    if fmt == "phy":
        header = language_header(text)
        lang = ConstraintLanguage()
        if header:
            lang = parse_language((Path(path).parent / header).read_text())
        return parse_instance(text, lang), lang
    raise PhylocspError(f"unsupported instance format {fmt!r}")


# -- .horn format -------------------------------------------------------------------

_HORN_DISEQ = re.compile(r"([A-Za-z0-9_]+)\s*!=\s*([A-Za-z0-9_]+)\Z")
_HORN_SPLIT = re.compile(r"split\{([01,\s]*)on\s*\(([^)]*)\)\s*\}\Z")


def parse_horn(text: str) -> AffineHornFormula:
    """Parse the .horn clause format: a ``vars`` line plus clause lines."""
    variables: tuple = ()
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("vars"):
            variables = tuple(line.split()[1:])
            continue
        diseqs = set()
        part = None
        for piece in re.split(r"\s+or\s+", line):
            piece = piece.strip()
            m = _HORN_DISEQ.match(piece)
            if m:
                a, b = m.group(1), m.group(2)
                diseqs.add((a, b) if a <= b else (b, a))
                continue
            m = _HORN_SPLIT.match(piece)
            if m:
                if part is not None:
                    raise PhylocspError(
                        f"line {lineno}: at most one split part per clause")
                vs = tuple(v.strip() for v in m.group(2).split(","))
                bits = [b.strip() for b in m.group(1).split(",") if b.strip()]
                vectors = set()
                for b in bits:
                    if len(b) != len(vs) or any(c not in "01" for c in b):
                        raise PhylocspError(f"line {lineno}: bad split vector {b!r}")
                    vectors.add(tuple(int(c) for c in b))
                from .synth import canonical_splits

                part = AffinePart(vs, canonical_splits(vectors, len(vs)))
                continue
            raise PhylocspError(f"line {lineno}: cannot parse disjunct {piece!r}")
        clauses.append(AffineHornClause(frozenset(diseqs), part))
    if not variables:
        seen = []
        for cl in clauses:
            for v in sorted(cl.variables()):
                if v not in seen:
                    seen.append(v)
        variables = tuple(seen)
    return AffineHornFormula(variables, tuple(clauses))


def emit_horn_clause(clause: AffineHornClause) -> str:
    parts = [f"{a} != {b}" for a, b in sorted(clause.diseqs)]
    if clause.affine is not None:
        bits = ",".join("".join(map(str, t)) for t in sorted(clause.affine.splits))
        parts.append(f"split{{{bits} on ({','.join(clause.affine.vars)})}}")
    return " or ".join(parts) if parts else "empty"


# -- subcommands -----------------------------------------------------------------------

def _emit_witness(args, verdict: Verdict, lines: list, payload: dict) -> None:
    sol = verdict.solution
    if sol is None:
        lines.append("SAT (empty instance)")
        payload["verdict"] = "sat"
        return
    newick = sol.tree.newick()
    lines.append(newick)
    payload["verdict"] = "sat"
    payload["witness"] = newick
    payload["mapping"] = dict(sorted(sol.assignment.items()))
    if args.witness:
        Path(args.witness).write_text(newick + "\n")
    if getattr(args, "mapping", None):
        body = "".join(f"{v} -> {leaf}\n"
                       for v, leaf in sorted(sol.assignment.items()))
        Path(args.mapping).write_text(body)


def cmd_solve(args) -> int:
    fmt = args.format
    if fmt == "horn" or (fmt is None and Path(args.file).suffix == ".horn"):
        formula = parse_horn(Path(args.file).read_text())
        verdict = solve(formula, random.Random(args.seed) if args.randomize else None)
        if verdict.sat and verdict.solution is not None:
            leaf_of = verdict.solution.assignment
            if not formula_holds_on_tree(formula, verdict.solution.tree, leaf_of):
                raise PhylocspError("internal error: witness failed re-verification")
    else:
        inst, lang = _load_instance(args.file, fmt)
        verdict = solve_instance(
            inst, lang, rng=random.Random(args.seed) if args.randomize else None)
    lines: list = []
    payload: dict = {}
    if verdict.sat:
        _emit_witness(args, verdict, lines, payload)
    else:
        lines.append(f"UNSAT: {verdict.reason}")
        payload["verdict"] = "unsat"
        payload["reason"] = verdict.reason
    _report(args, payload, lines)
    return EXIT_OK if verdict.sat else EXIT_NEGATIVE


def cmd_classify(args) -> int:
    lang = _load_language(args.language)
    defined = [n for n in lang.names() if not lang.is_builtin(n)]
    if defined and not args.include_builtins:
        # classify only the file's relations; builtins stay available as symbols
        target = ConstraintLanguage(include_builtins=False)
        for name in defined:
            target.define(name, lang[name])
    else:
        target = lang
    bound = args.max_arity
    verdict = classify_language(target, bound=bound, workers=args.threads)
    lines = []
    payload: dict = {"relations": {}}
    for rv in verdict.relations:
        lines.append(rv.describe())
        payload["relations"][rv.name] = (
            "affine-horn" if rv.affine_horn else "not-affine-horn")
        if rv.failure is not None:
            lines.append(f"  {rv.failure.describe()}")
            payload.setdefault("witnesses", {})[rv.name] = rv.failure.describe()
    lines.append(f"language: {verdict.summary()}")
    payload["tractable"] = verdict.tractable
    if args.emit_horn:
        out = []
        for rv in verdict.relations:
            if rv.certificate is None:
                continue
            out.append(f"rel {rv.name}/{rv.arity}:")
            for cl in rv.certificate.clauses:
                out.append(f"  {emit_horn_clause(cl)}")
        Path(args.emit_horn).write_text("\n".join(out) + "\n")
    _report(args, payload, lines)
    return EXIT_OK if verdict.tractable else EXIT_NEGATIVE


def cmd_oracle(args) -> int:
    inst, lang = _load_instance(args.file, args.format)
    budget = OracleBudget(max_leaves=args.max_leaves,
                          max_partitions=args.max_partitions,
                          timeout=args.timeout)
    result = oracle_solve(inst, lang, budget, workers=args.threads)
    lines = [f"candidates: {result.candidates}"]
    payload: dict = {"candidates": result.candidates}
    if result.verdict.sat:
        _emit_witness(args, result.verdict, lines, payload)
    else:
        lines.append(f"UNSAT: {result.verdict.reason}")
        payload["verdict"] = "unsat"
    _report(args, payload, lines)
    return EXIT_OK if result.verdict.sat else EXIT_NEGATIVE


def cmd_orbits(args) -> int:
    lines = []
    payload: dict = {}
    if args.formula:
        phi = parse_formula_text(args.formula, args.arity)
        rel = relation_of_formula(phi, bound=max(args.arity, 6))
        keys = [o.key() for o in rel.sorted_orbits()]
    else:
        keys = sorted(o.key() for o in enumerate_orbits(args.arity,
                                                        bound=max(args.arity, 6)))
    lines.extend(keys)
    lines.append(f"count: {len(keys)}")
    payload["orbits"] = keys
    payload["count"] = len(keys)
    _report(args, payload, lines)
    return EXIT_OK


def cmd_treeops(args) -> int:
    rng = random.Random(args.seed)
    structure = random_convex_structure(args.size, rng)
    op = build_finite_tx(structure, rng)
    order = structure.order
    lines = [f"domain: {structure.tree.newick()} order: {','.join(order)}"]
    payload: dict = {"domain": structure.tree.newick(), "order": list(order)}

    import itertools as _it

    semi_ok = all(
        check_semidominated(op, subset)
        for r in range(1, len(order) + 1)
        for subset in _it.combinations(order, r))
    clans = [structure.tree.clade(node)
             for node in range(2 * len(order) - 1)]
    dom_ok = True
    for a, b in _it.permutations(range(len(clans)), 2):
        ca, cb = clans[a], clans[b]
        if not structure.tree.clan_separated(ca, cb):
            continue
        first = min(order.index(l) for l in ca) < min(order.index(l) for l in cb)
        if first:
            dom_ok = dom_ok and check_perfect_dominance(op, ca, cb, "first")
            dom_ok = dom_ok and check_perfect_dominance(op, cb, ca, "second")
    swap_ok = check_swap_symmetry(op)
    lines.append(f"semidominated[all subsets]: {'ok' if semi_ok else 'FAIL'}")
    lines.append(f"perfect-dominance[all clan pairs]: {'ok' if dom_ok else 'FAIL'}")
    lines.append(f"swap-symmetry: {'ok' if swap_ok else 'FAIL'}")
    witness = n_violation_witness(rng)
    lines.append(
        "n-violation: f(x,x)f(z,z)|f(y,y') = "
        f"{str(witness.separated).lower()}; image in N = "
        f"{str(witness.in_n).lower()}")
    payload.update({"semidominated": semi_ok, "perfect_dominance": dom_ok,
                    "swap_symmetry": swap_ok,
                    "n_violation_separated": witness.separated,
                    "n_violation_in_n": witness.in_n})
    _report(args, payload, lines)
    ok = semi_ok and dom_ok and swap_ok and witness.separated and not witness.in_n
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_gen(args) -> int:
    lines = []
    payload: dict = {}
    if args.kind == "triples":
        inst = gen_random_satisfiable_triples(args.vars, args.constraints, args.seed)
        for name, (z, x, y) in inst.constraints:
            lines.append(f"{x} {y} | {z}")
        payload["triples"] = lines[:]
    else:
        rng = random.Random(args.seed)
        variables = tuple(f"u{i+1}" for i in range(args.vars))
        clauses = tuple(tuple(rng.sample(variables, 3))
                        for _ in range(args.clauses))
        nae = NaeInstance(variables, clauses)
        if args.identify:
            pairs = []
            for item in args.identify:
                a, _, b = item.partition("=")
                if not a or not b:
                    raise PhylocspError(f"bad --identify argument {item!r}")
                pairs.append((a, b))
            nae = nae_identify(nae, pairs)
        gadget = nae_to_phylo(nae)
        lines.append(f"# NAE instance: vars={','.join(nae.variables)} "
                     f"clauses={';'.join(','.join(c) for c in nae.clauses)}")
        lines.append(f"# NAE satisfiable (truth table): {nae_satisfiable(nae)}")
        for name, cargs in gadget.constraints:
            lines.append(f"{name}({','.join(cargs)})")
        payload["nae_vars"] = list(nae.variables)
        payload["nae_clauses"] = [list(c) for c in nae.clauses]
        payload["constraints"] = [f"{n}({','.join(a)})"
                                  for n, a in gadget.constraints]
    _report(args, payload, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phylocsp",
        description="Phylogeny constraint satisfaction: solve, classify, verify.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--machine", action="store_true",
                       help="print a single machine-readable JSON document")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("solve", help="decide satisfiability with a witness")
    p.add_argument("file")
    p.add_argument("--format", choices=["triples", "phy", "horn"])
    p.add_argument("--witness", help="write the witness Newick here")
    p.add_argument("--mapping", help="write the var -> leaf mapping here")
    p.add_argument("--randomize", action="store_true",
                   help="randomize the split-solution choice (seeded)")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("classify", help="affine Horn / NP-complete dichotomy")
    p.add_argument("language", nargs="?",
                   help=".phl file; builtins when omitted or empty")
    p.add_argument("--max-arity", type=int,
                   default=int(os.environ.get("PHYLOCSP_MAX_ARITY", "6")))
    p.add_argument("--emit-horn", help="write certificates to this file")
    p.add_argument("--include-builtins", action="store_true",
                   help="also classify the builtin relations")
    common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("oracle", help="brute-force semantic search")
    p.add_argument("file")
    p.add_argument("--format", choices=["triples", "phy"])
    p.add_argument("--max-leaves", type=int, default=7)
    p.add_argument("--max-partitions", type=int, default=1000)
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--witness")
    p.add_argument("--mapping")
    common(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("orbits", help="orbit catalogue or a formula's orbits")
    p.add_argument("--arity", type=int, required=True)
    p.add_argument("--formula", help="a .phl formula body over x1..xk")
    common(p)
    p.set_defaults(fn=cmd_orbits)

    p = sub.add_parser("treeops", help="build and check a finite tree operation")
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--check", default="all", choices=["all"])
    common(p)
    p.set_defaults(fn=cmd_treeops)

    p = sub.add_parser("gen", help="generate instances")
    gsub = p.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("triples", help="satisfiable random triples")
    g.add_argument("--vars", type=int, required=True)
    g.add_argument("--constraints", type=int, required=True)
    common(g)
    g.set_defaults(fn=cmd_gen, kind="triples")
    g = gsub.add_parser("nae", help="NAE-3SAT reduction gadget over Nd")
    g.add_argument("--clauses", type=int, required=True)
    g.add_argument("--vars", type=int, required=True)
    g.add_argument("--identify", action="append", default=[],
                   metavar="x=y", help="identify NAE variables (repeatable)")
    common(g)
    g.set_defaults(fn=cmd_gen, kind="nae")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        code = args.fn(args)
    except OracleInconclusive as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except NotAffineHornError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (PhylocspError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        elapsed = time.monotonic() - start
        print(f"elapsed: {elapsed:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
