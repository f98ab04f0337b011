"""Genetic search for counterfactual prefixes."""

from .engine import CounterfactualSet, GAConfig, Individual, Mode, run
from .objectives import ObjectiveVector

__all__ = ["CounterfactualSet", "GAConfig", "Individual", "Mode", "ObjectiveVector", "run"]
