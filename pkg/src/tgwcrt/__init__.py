"""Worst-case response time analysis for task graphs on multiprocessors."""

from .model import (ModelError, Policy, ProcessingElement, SystemModel, Task, TaskGraph, Violation,
                    build, load_system, parse_system, serialize, validate)
from .state import AnalysisOptions, AnalysisResult, TimeBounds
from .hpa import analyze
from .yw import NonPreemptivePE, yw_analyze

__version__ = "0.1.0"

__all__ = [
    "ModelError", "Policy", "ProcessingElement", "SystemModel", "Task", "TaskGraph", "Violation",
    "build", "load_system", "parse_system", "serialize", "validate",
    "AnalysisOptions", "AnalysisResult", "TimeBounds", "analyze", "NonPreemptivePE", "yw_analyze",
]
