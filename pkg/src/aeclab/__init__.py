"""Finite-scale laboratory for abstract elementary classes with intersections."""
from .aec import AecClass, EmbeddingSystem, colimit, finite_character_witness, generic_closure
from .catalog import full_catalog, get_entry
from .galois import TypeLocator, canonical_certificate, is_eta_algebraic, realizations, type_equal
from .iso import canonical_form, find_isomorphisms
from .structures import FiniteStructure, PartialMap, Vocabulary

__version__ = "0.1.0"

__all__ = [
    "AecClass", "EmbeddingSystem", "FiniteStructure", "PartialMap", "TypeLocator", "Vocabulary",
    "canonical_certificate", "canonical_form", "colimit", "finite_character_witness", "find_isomorphisms",
    "full_catalog", "generic_closure", "get_entry", "is_eta_algebraic", "realizations", "type_equal",
]
