"""Phylogeny constraint satisfaction over rooted binary trees.

Decides satisfiability of affine Horn phylogeny formulas in polynomial
time with witness trees, classifies constraint languages as affine Horn
(tractable) or not (NP-complete modulo pp-definability of the rooted
triple relation), and cross-validates against a brute-force oracle.
"""

__version__ = "0.1.0"

from .errors import PhylocspError
from .tree import Tree, enumerate_trees, parse_newick, random_tree
from .formula import (ConstraintLanguage, Instance, PhyloFormula, Solution,
                      evaluate, even_split_formula, make_instance,
                      parse_instance, parse_language, parse_triples,
                      verify_solution)
from .orbits import (EqualityPattern, Orbit, OrbitRelation, enumerate_orbits,
                     eval_pp, orbit_of, project, relation_of_formula)
from .splits import (BooleanRelation, Gf2System, affine_hull, is_affine,
                     nontrivial_solution, split_relation, split_vectors)
from .synth import (AffineHornClause, AffineHornFormula, AffinePart,
                    check_free, check_separated, chi, classify_language,
                    phi_b, synth_psi, synth_psi0, verify_equivalence)
from .solver import (NotAffineHornError, Verdict, build_split_problem,
                     contract, solve, solve_instance, spec)
from .oracle import (NaeInstance, OracleBudget, OracleInconclusive,
                     OracleResult, gen_random_satisfiable_triples,
                     nae_satisfiable, nae_to_phylo, oracle_solve)
from .treeops import (FiniteBinaryOp, OrderedLeafStructure, build_finite_tx,
                      check_perfect_dominance, check_preserves_clause,
                      check_semidominated, check_swap_symmetry,
                      n_violation_witness, random_convex_structure)
