"""Hierarchical pi-calculus terms: normal forms, forests, typing and inference.

The most used entry points are re-exported here::

    from pihier import parse, infer, typecheck, explore, cover

Submodules hold the rest: ``terms`` and ``syntax`` (abstract and concrete
syntax), ``normal_form``, ``forest``, ``hierarchy``, ``tcompat``,
``typecheck``, ``inference``, ``reduction``, ``encodings`` and
``generators``.
"""
from .encodings import (
    CORPUS, MinskyMachine, ResetNet, corpus, corpus_entry, encode_minsky, encode_reset_net,
)
from .forest import depth, depth_exact, forest_of, nest_nu
from .hierarchy import Hierarchy, HierarchyError, p_safe, parse_env
from .inference import InferenceResult, infer, solve_order
from .normal_form import NF, Seq, canonical, nf, pretty_nf, prune
from .reduction import CoverResult, StateGraph, check_invariance, cover, embeds, explore, successors
from .syntax import ParseError, parse, pretty
from .tcompat import is_tcompat, is_tshaped, phi, reduction_witness
from .terms import Name, Term, Type, free_name, fresh
from .typecheck import typecheck, well_typed

__version__ = "0.1.0"

__all__ = [
    "CORPUS", "CoverResult", "Hierarchy", "HierarchyError", "InferenceResult", "MinskyMachine",
    "NF", "Name", "ParseError", "ResetNet", "Seq", "StateGraph", "Term", "Type", "canonical",
    "check_invariance", "corpus", "corpus_entry", "cover", "depth", "depth_exact", "embeds",
    "encode_minsky", "encode_reset_net", "explore", "forest_of", "free_name", "fresh", "infer",
    "is_tcompat", "is_tshaped", "nest_nu", "nf", "p_safe", "parse", "parse_env", "phi", "pretty",
    "pretty_nf", "prune", "reduction_witness", "solve_order", "successors", "typecheck",
    "well_typed",
]
