"""Hierarchical semantic/geometric path planning over nested layered scene graphs."""

from .errors import SpadeError
from .lsg import LayeredSceneGraph, LayerId, RobotState, Status, load_lsg, save_lsg
from .planner import PlannerConfig, Query, plan_query
from .search import shortest_path
from .subsample import TaskMode, extract_domain_subgraph

__all__ = [
    "LayerId",
    "LayeredSceneGraph",
    "PlannerConfig",
    "Query",
    "RobotState",
    "SpadeError",
    "Status",
    "TaskMode",
    "extract_domain_subgraph",
    "load_lsg",
    "plan_query",
    "save_lsg",
    "shortest_path",
]

__version__ = "0.1.0"
