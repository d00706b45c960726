"""Decorated trees, BHZ-type renormalisation and power counting for a
generalised KPZ-type rule, with grid-based Monte Carlo checks."""

from .hopf import CharacterSymbol, character_vanishes, coaction, delta_r, prepare
from .malliavin import malliavin_expand, stroock_schedule
from .rules import Catalog, conforms_to_rule, derivative_catalog, enumerate_negative, enumerate_noises_inductive
from .trees import (
    FormalSum,
    Homogeneity,
    Tree,
    format_tree,
    homogeneity,
    noise_count,
    noise_derive,
    parse_tree,
    planted,
    poly_derive,
    tree_product,
)

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CharacterSymbol",
    "FormalSum",
    "Homogeneity",
    "Tree",
    "character_vanishes",
    "coaction",
    "conforms_to_rule",
    "delta_r",
    "derivative_catalog",
    "enumerate_negative",
    "enumerate_noises_inductive",
    "format_tree",
    "homogeneity",
    "malliavin_expand",
    "noise_count",
    "noise_derive",
    "parse_tree",
    "planted",
    "poly_derive",
    "prepare",
    "stroock_schedule",
    "tree_product",
]
