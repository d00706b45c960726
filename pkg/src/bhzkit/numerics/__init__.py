"""Periodic-grid numerics: kernels, mollified noise, characters, model
evaluation, graph quadrature and Monte Carlo estimators."""

from .characters import CharacterTable, UnsupportedSymbol, compute_character
from .experiments import EpsilonProbe, ModelEvaluator, ScalingFit, mollifier_difference_norm
from .graphint import graph_integral
from .grid import Grid, GridField, MollifierSpec, ResolutionError, SupportError, TestFunctionSpec
from .kernels import KernelSet, build_kernels
from .model import evaluate_model
from .noise import sample_mollified_noise, white_noise
from .twoscale import TwoScaleEngine, TwoScaleGrid

__all__ = [
    "CharacterTable",
    "EpsilonProbe",
    "Grid",
    "GridField",
    "KernelSet",
    "ModelEvaluator",
    "MollifierSpec",
    "ResolutionError",
    "ScalingFit",
    "SupportError",
    "TestFunctionSpec",
    "TwoScaleEngine",
    "TwoScaleGrid",
    "UnsupportedSymbol",
    "build_kernels",
    "compute_character",
    "evaluate_model",
    "graph_integral",
    "mollifier_difference_norm",
    "sample_mollified_noise",
    "white_noise",
]
