"""Thought generators: the synthetic world, scripted replay, and the base contract."""

from .base import Candidate, GeneratorMeta, ThoughtGenerator, seed_context
from .replay import CallRecord, RecordingGenerator, ScriptedGenerator
from .synthetic import SyntheticConfig, SyntheticWorld

__all__ = [
    "Candidate",
    "CallRecord",
    "GeneratorMeta",
    "RecordingGenerator",
    "ScriptedGenerator",
    "SyntheticConfig",
    "SyntheticWorld",
    "ThoughtGenerator",
    "seed_context",
]
