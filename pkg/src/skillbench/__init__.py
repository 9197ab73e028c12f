"""Instruction-driven pick-and-place workbench.

Commands are recorded as events in a skill-centric knowledge graph, executed
by a behaviour-tree task controller over a deterministic kinematic simulator,
and composable into new reusable, object-centric skills.
"""

from .session import Workbench

__all__ = ["Workbench"]
__version__ = "0.1.0"
