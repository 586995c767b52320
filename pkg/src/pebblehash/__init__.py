"""Pebbling games, hard graph families and a static memory-hard hash function."""

from .graph import Dag, GraphError, deserialize, make_dag, serialize, validate
from .engine import MagicConfig, PebblingStrategy, StrategyError, measure
from .solver import BudgetExceeded, SearchBudget, min_space_magic, min_space_standard

__all__ = ["Dag", "GraphError", "deserialize", "make_dag", "serialize", "validate",
           "MagicConfig", "PebblingStrategy", "StrategyError", "measure",
           "BudgetExceeded", "SearchBudget", "min_space_magic", "min_space_standard"]
__version__ = "0.1.0"
