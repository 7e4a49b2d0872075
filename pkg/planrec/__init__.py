"""Probabilistic plan recognition for task-oriented consultations."""

from .agent import Agent, Session, State, create_workflow, finalize, process_statement
from .knowledge import KnowledgeBase, load_kb, validate_kb

__all__ = [
    "Agent",
    "KnowledgeBase",
    "Session",
    "State",
    "create_workflow",
    "finalize",
    "load_kb",
    "process_statement",
    "validate_kb",
]
